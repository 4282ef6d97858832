#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evb/event_model.hpp"

namespace evb {

/// Percentile with linear interpolation between order statistics (numpy's default).
double percentile(std::span<const double> values, double pct);

/// Clamps to the [lo_pct, hi_pct] percentiles and maps that range onto [0,1].
/// A range narrower than 1e-6 yields a uniform 0.5 image.
Image robust_minmax_normalize(const Image& image, double lo_pct = 1.0, double hi_pct = 99.0);

/// Elementwise e^v with inputs clamped to <= 80.
Image apply_exponential(const Image& image);

/// Global equalisation over 256 levels: each level maps to its empirical CDF value.
Image histogram_equalize(const Image& image);

/// Clamps every pixel into [0,1] (non-finite pixels become 0). Returns the largest change.
double clamp_unit(Image& image);

struct Exponential {};
struct RobustMinMax {
    double lo_pct = 1.0;
    double hi_pct = 99.0;
};
struct HistogramEqualize {};

using PostStep = std::variant<Exponential, RobustMinMax, HistogramEqualize>;

/// Ordered post-processing chain applied to a raw reconstruction.
class PostProcSpec {
public:
    PostProcSpec() = default;
    explicit PostProcSpec(std::vector<PostStep> steps);

    const std::vector<PostStep>& steps() const { return steps_; }
    bool equalizes() const;
    /// Runs every step in order, then clamps the result into [0,1].
    Image apply(Image image) const;
    std::string describe() const;

private:
    std::vector<PostStep> steps_;
};

}  // namespace evb
