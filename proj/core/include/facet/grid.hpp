#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace facet {

// Stitches image tiles row-major into one square grid image; short batches
// are padded with blank tiles. Returns the locator of the written grid.
class GridComposer {
public:
    virtual ~GridComposer() = default;
    // base_path carries no extension; the composer appends its own.
    virtual std::string compose(const std::vector<std::string>& sources, std::size_t grid_side,
                                const std::filesystem::path& base_path) = 0;
};

// Pixel-free composer: records the layout as a small JSON file. Suitable for
// tests and for backends that accept arbitrary locators.
class StubGridComposer : public GridComposer {
public:
    std::string compose(const std::vector<std::string>& sources, std::size_t grid_side,
                        const std::filesystem::path& base_path) override;
};

// Raster composer scaling each tile to a fixed square before stitching.
// Defined in the optional imaging component; link facet_imaging to use it.
std::unique_ptr<GridComposer> make_raster_composer(int tile_size = 256);

} // namespace facet
