#include "evb/representation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace evb {

VoxelGrid::VoxelGrid(int b, int h, int w, double t0, double t1)
    : bins(b), height(h), width(w), t_start(t0), t_end(t1),
      data(static_cast<std::size_t>(b) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0) {}

double VoxelGrid::sum() const {
    return std::accumulate(data.begin(), data.end(), 0.0);
}

VoxelGrid build_voxel_grid(std::span<const Event> events, double t_start, double t_end, SensorGeometry geometry,
                           int bins) {
    if (bins < 2) throw ValidationError("voxel grid needs at least 2 bins, got " + std::to_string(bins));
    VoxelGrid grid(bins, geometry.height, geometry.width, t_start, t_end);
    const double duration = t_end - t_start;
    const double scale = duration > 0.0 ? static_cast<double>(bins - 1) / duration : 0.0;
    const std::size_t plane = grid.plane_size();
    const int last_bin = bins - 1;
    double* data = grid.data.data();

    for (const Event& e : events) {
        const double ts = (e.t - t_start) * scale;
        if (!(ts > -1.0 && ts < static_cast<double>(bins))) continue;
        const double lower = std::floor(ts);
        const double frac = ts - lower;
        const int b0 = static_cast<int>(lower);
        const double p = e.p;
        const std::size_t pixel = static_cast<std::size_t>(e.y) * static_cast<std::size_t>(geometry.width) + e.x;
        if (b0 >= 0 && b0 <= last_bin) data[static_cast<std::size_t>(b0) * plane + pixel] += p * (1.0 - frac);
        if (frac > 0.0 && b0 + 1 >= 0 && b0 + 1 <= last_bin) {
            data[static_cast<std::size_t>(b0 + 1) * plane + pixel] += p * frac;
        }
    }
    return grid;
}

VoxelGrid build_voxel_grid(const EventGroup& group, SensorGeometry geometry, int bins) {
    return build_voxel_grid(group.events, group.t_start, group.t_end, geometry, bins);
}

VoxelGrid normalize_tensor(VoxelGrid grid, const TensorNormSpec& spec) {
    if (spec.mode == TensorNorm::None) return grid;
    std::size_t count = 0;
    double sum = 0.0;
    for (double v : grid.data) {
        if (v != 0.0) {
            ++count;
            sum += v;
        }
    }
    if (count == 0) return grid;
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (double v : grid.data) {
        if (v != 0.0) sq += (v - mean) * (v - mean);
    }
    double stddev = std::sqrt(sq / static_cast<double>(count));
    if (stddev < 1e-6) stddev = 1.0;
    for (double& v : grid.data) {
        if (v != 0.0) v = (v - mean) / stddev;
    }
    return grid;
}

PadSpec::PadSpec(int m) : multiple(m) {
    if (m < 1) throw ValidationError("pad multiple must be >= 1");
}

PaddedGrid pad_to_multiple(const VoxelGrid& grid, const PadSpec& spec) {
    const auto round_up = [&](int v) { return (v + spec.multiple - 1) / spec.multiple * spec.multiple; };
    const int h = round_up(grid.height);
    const int w = round_up(grid.width);
    CropRecord crop{grid.height, grid.width};
    if (h == grid.height && w == grid.width) return {grid, crop};

    VoxelGrid padded(grid.bins, h, w, grid.t_start, grid.t_end);
    for (int b = 0; b < grid.bins; ++b) {
        for (int y = 0; y < grid.height; ++y) {
            const double* src = &grid.data[grid.offset(b, y, 0)];
            std::copy(src, src + grid.width, &padded.data[padded.offset(b, y, 0)]);
        }
    }
    return {std::move(padded), crop};
}

Image crop_image(const Image& image, const CropRecord& crop) {
    if (image.width == crop.width && image.height == crop.height) return image;
    if (image.width < crop.width || image.height < crop.height) {
        throw ValidationError("cannot crop a smaller image to its original size");
    }
    Image out(crop.width, crop.height);
    for (int y = 0; y < crop.height; ++y) {
        for (int x = 0; x < crop.width; ++x) out.at(x, y) = image.at(x, y);
    }
    return out;
}

}  // namespace evb
