#include "evb/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace evb {

double percentile(std::span<const double> values, double pct) {
    if (values.empty()) throw ValidationError("percentile of an empty set");
    std::vector<double> v(values.begin(), values.end());
    const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (frac == 0.0 || lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + frac * (b - a);
}

Image robust_minmax_normalize(const Image& image, double lo_pct, double hi_pct) {
    if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0)) {
        throw ValidationError("robust min/max needs 0 <= lo < hi <= 100");
    }
    Image out = image;
    if (image.pixels.empty()) return out;
    const double lo = percentile(image.pixels, lo_pct);
    const double hi = percentile(image.pixels, hi_pct);
    const double range = hi - lo;
    if (!(range >= 1e-6)) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0.5);
        return out;
    }
    for (double& v : out.pixels) v = (std::clamp(v, lo, hi) - lo) / range;
    return out;
}

Image apply_exponential(const Image& image) {
    Image out = image;
    for (double& v : out.pixels) v = std::exp(std::min(v, 80.0));
    return out;
}

Image histogram_equalize(const Image& image) {
    Image out = image;
    if (image.pixels.empty()) return out;
    std::array<std::size_t, 256> hist{};
    std::vector<std::uint8_t> level(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = std::isfinite(image.pixels[i]) ? std::clamp(image.pixels[i], 0.0, 1.0) : 0.0;
        level[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        ++hist[level[i]];
    }
    std::array<double, 256> cdf{};
    std::size_t running = 0;
    const double n = static_cast<double>(image.size());
    for (std::size_t l = 0; l < 256; ++l) {
        running += hist[l];
        cdf[l] = static_cast<double>(running) / n;
    }
    for (std::size_t i = 0; i < image.size(); ++i) out.pixels[i] = cdf[level[i]];
    return out;
}

double clamp_unit(Image& image) {
    double moved = 0.0;
    for (double& v : image.pixels) {
        const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        moved = std::max(moved, std::isfinite(v) ? std::abs(c - v) : 1.0);
        v = c;
    }
    return moved;
}

PostProcSpec::PostProcSpec(std::vector<PostStep> steps) : steps_(std::move(steps)) {
    for (const auto& step : steps_) {
        if (auto* r = std::get_if<RobustMinMax>(&step)) {
            if (!(r->lo_pct >= 0.0 && r->lo_pct < r->hi_pct && r->hi_pct <= 100.0)) {
                throw ValidationError("robust min/max percentiles need 0 <= lo < hi <= 100");
            }
        }
    }
}

bool PostProcSpec::equalizes() const {
    return std::any_of(steps_.begin(), steps_.end(),
                       [](const PostStep& s) { return std::holds_alternative<HistogramEqualize>(s); });
}

Image PostProcSpec::apply(Image image) const {
    for (const auto& step : steps_) {
        if (std::holds_alternative<Exponential>(step)) {
            image = apply_exponential(image);
        } else if (auto* r = std::get_if<RobustMinMax>(&step)) {
            image = robust_minmax_normalize(image, r->lo_pct, r->hi_pct);
        } else {
            image = histogram_equalize(image);
        }
    }
    clamp_unit(image);
    return image;
}

std::string PostProcSpec::describe() const {
    std::string out;
    for (const auto& step : steps_) {
        if (!out.empty()) out += ",";
        if (std::holds_alternative<Exponential>(step)) {
            out += "exponential";
        } else if (auto* r = std::get_if<RobustMinMax>(&step)) {
            out += "robust_minmax(" + std::to_string(r->lo_pct) + "," + std::to_string(r->hi_pct) + ")";
        } else {
            out += "histogram_equalize";
        }
    }
    return out.empty() ? "none" : out;
}

}  // namespace evb
