#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "facet/errors.hpp"
#include "facet/grid.hpp"

namespace facet {
namespace {

class OpenCvGridComposer : public GridComposer {
public:
    explicit OpenCvGridComposer(int tile_size) : tile_size_(tile_size) {
        if (tile_size_ <= 0) throw ValidationError("tile size must be positive");
    }

    std::string compose(const std::vector<std::string>& sources, std::size_t grid_side,
                        const std::filesystem::path& base_path) override {
        if (grid_side == 0) throw ValidationError("grid side must be positive");
        if (sources.empty() || sources.size() > grid_side * grid_side)
            throw ValidationError("grid of side " + std::to_string(grid_side) +
                                  " cannot hold " + std::to_string(sources.size()) + " tiles");

        int side = static_cast<int>(grid_side);
        cv::Mat canvas(side * tile_size_, side * tile_size_, CV_8UC3,
                       cv::Scalar(255, 255, 255));
        for (std::size_t i = 0; i < sources.size(); ++i) {
            cv::Mat tile = cv::imread(sources[i], cv::IMREAD_COLOR);
            if (tile.empty())
                throw BackendError(FailureKind::fetch, "cannot decode image " + sources[i]);
            cv::Mat scaled;
            cv::resize(tile, scaled, cv::Size(tile_size_, tile_size_), 0, 0, cv::INTER_AREA);
            int row = static_cast<int>(i) / side;
            int col = static_cast<int>(i) % side;
            scaled.copyTo(canvas(cv::Rect(col * tile_size_, row * tile_size_, tile_size_,
                                          tile_size_)));
        }

        auto path = base_path;
        path += ".png";
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        if (!cv::imwrite(path.string(), canvas))
            throw ConfigError("cannot write grid image " + path.string());
        return path.string();
    }

private:
    int tile_size_;
};

} // namespace

std::unique_ptr<GridComposer> make_raster_composer(int tile_size) {
    return std::make_unique<OpenCvGridComposer>(tile_size);
}

} // namespace facet
