#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evb/harness.hpp"

namespace evb {

enum class SweepAxis { EventCount, Duration, Discard, Rate };

std::string to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(const std::string& name);

inline constexpr std::size_t kRateBins = 10;

std::vector<double> default_event_counts();   // 5000, 10000, ..., 45000
std::vector<double> default_durations_ms();   // 10, 20, ..., 100
std::vector<double> default_discard_ratios(); // 0.0, 0.1, ..., 0.9

struct SweepPoint {
    double value = 0.0;
    std::string label;
    /// Reconstruction rate for duration sweeps, 1000 / T_G_ms.
    std::optional<double> fps;
    RunResult result;
};

struct RateSample {
    double rate = 0.0;
    double value = 0.0;
};

/// Per-bin count and mean for one reconstructor; empty bins have no mean.
struct RateBinSeries {
    std::string reconstructor;
    std::vector<std::size_t> counts;
    std::vector<std::optional<double>> means;
};

struct RateBinReport {
    std::string metric;
    /// bins + 1 ascending edges in events/s. A degenerate report has one bin [r, r].
    std::vector<double> edges;
    bool degenerate = false;
    std::vector<RateBinSeries> series;

    std::size_t bin_count() const { return edges.empty() ? 0 : edges.size() - 1; }
};

struct SweepReport {
    SweepAxis axis = SweepAxis::EventCount;
    std::vector<SweepPoint> points;
    std::optional<RateBinReport> rate;
};

/// Equal-width edges over [min, max] of `rates`; a single [r, r] bin when fewer
/// than two distinct rates are present. Throws ValidationError on an empty input.
std::vector<double> rate_bin_edges(std::span<const double> rates, std::size_t bins = kRateBins);

/// Index of the bin holding `rate`; the last bin is closed on the right.
std::size_t rate_bin_index(std::span<const double> edges, double rate);

/// Counts and means of `samples` over the given edges.
RateBinSeries bin_samples(std::span<const double> edges, std::span<const RateSample> samples);

/// Bins `metric` (default: the run's first full-reference metric) by group event
/// rate. Edges come from every in-window group of the run, independent of the
/// reconstructor, so all methods share them.
RateBinReport bin_by_event_rate(const RunResult& run, std::optional<std::string> metric = std::nullopt,
                                std::size_t bins = kRateBins);

/// Throws ValidationError unless values are non-empty and strictly increasing.
void validate_sweep_values(SweepAxis axis, std::span<const double> values);

SweepReport sweep_event_count(const EvalConfig& config, std::vector<double> counts = default_event_counts());
SweepReport sweep_duration(const EvalConfig& config, std::vector<double> values_ms = default_durations_ms());
SweepReport sweep_discard(const EvalConfig& config, std::vector<double> ratios = default_discard_ratios());
/// One between-frames run, binned by event rate.
SweepReport sweep_rate(const EvalConfig& config, std::optional<std::string> metric = std::nullopt);

/// Same as above over sequences loaded once by the caller.
SweepReport run_sweep(const EvalConfig& config, const std::vector<LoadedSequence>& sequences, SweepAxis axis,
                      std::vector<double> values);

}  // namespace evb
