#include "facet/grid.hpp"

#include <json.hpp>

#include "facet/errors.hpp"
#include "facet/io.hpp"

namespace facet {

std::string StubGridComposer::compose(const std::vector<std::string>& sources,
                                      std::size_t grid_side,
                                      const std::filesystem::path& base_path) {
    if (grid_side == 0) throw ValidationError("grid side must be positive");
    if (sources.empty() || sources.size() > grid_side * grid_side)
        throw ValidationError("grid of side " + std::to_string(grid_side) + " cannot hold " +
                              std::to_string(sources.size()) + " tiles");
    auto path = base_path;
    path += ".grid.json";
    nlohmann::json doc{{"grid_side", grid_side},
                       {"tiles", sources},
                       {"blank_tiles", grid_side * grid_side - sources.size()}};
    write_file_atomic(path, doc.dump(2) + "\n");
    return path.string();
}

} // namespace facet
