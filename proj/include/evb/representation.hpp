#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evb/event_model.hpp"
#include "evb/grouping.hpp"

namespace evb {

inline constexpr int kDefaultBins = 5;

/// Dense (bins, height, width) tensor, bins-major and row-major within a bin.
struct VoxelGrid {
    int bins = 0;
    int height = 0;
    int width = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> data;

    VoxelGrid() = default;
    VoxelGrid(int bins, int height, int width, double t_start = 0.0, double t_end = 0.0);

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    std::size_t offset(int b, int y, int x) const {
        return static_cast<std::size_t>(b) * plane_size() + static_cast<std::size_t>(y) * width + x;
    }
    double& at(int b, int y, int x) { return data[offset(b, y, x)]; }
    double at(int b, int y, int x) const { return data[offset(b, y, x)]; }
    double sum() const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

/// Accumulates each event's polarity into its two temporally nearest bins:
///   t* = (B-1)(t - T_k) / dT,   V[b, y, x] += p * max(0, 1 - |b - t*|)
/// over the window [t_start, t_end]. A zero-width window puts every event at t* = 0.
VoxelGrid build_voxel_grid(std::span<const Event> events, double t_start, double t_end, SensorGeometry geometry,
                           int bins = kDefaultBins);
VoxelGrid build_voxel_grid(const EventGroup& group, SensorGeometry geometry, int bins = kDefaultBins);

enum class TensorNorm { None, NonzeroMeanStd };

struct TensorNormSpec {
    TensorNorm mode = TensorNorm::None;
};

/// NonzeroMeanStd standardises the nonzero entries with their own mean and
/// (population) standard deviation; zeros stay zero; std < 1e-6 counts as 1.
VoxelGrid normalize_tensor(VoxelGrid grid, const TensorNormSpec& spec);

struct PadSpec {
    int multiple = 1;

    PadSpec() = default;
    explicit PadSpec(int m);
};

struct CropRecord {
    int height = 0;
    int width = 0;
};

struct PaddedGrid {
    VoxelGrid grid;
    CropRecord crop;
};

/// Zero-pads height and width (bottom/right) up to the next multiple.
PaddedGrid pad_to_multiple(const VoxelGrid& grid, const PadSpec& spec);
/// Undoes pad_to_multiple on a reconstructor's output image.
Image crop_image(const Image& image, const CropRecord& crop);

}  // namespace evb
