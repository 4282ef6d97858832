#include "evb/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

namespace evb {

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::EventCount: return "count";
        case SweepAxis::Duration: return "duration";
        case SweepAxis::Discard: return "discard";
        case SweepAxis::Rate: return "rate";
    }
    return "unknown";
}

std::optional<SweepAxis> parse_sweep_axis(const std::string& name) {
    if (name == "count") return SweepAxis::EventCount;
    if (name == "duration") return SweepAxis::Duration;
    if (name == "discard") return SweepAxis::Discard;
    if (name == "rate") return SweepAxis::Rate;
    return std::nullopt;
}

std::vector<double> default_event_counts() {
    std::vector<double> v;
    for (int n = 5000; n <= 45000; n += 5000) v.push_back(n);
    return v;
}

std::vector<double> default_durations_ms() {
    std::vector<double> v;
    for (int ms = 10; ms <= 100; ms += 10) v.push_back(ms);
    return v;
}

std::vector<double> default_discard_ratios() {
    std::vector<double> v;
    for (int i = 0; i < 10; ++i) v.push_back(i / 10.0);
    return v;
}

std::vector<double> rate_bin_edges(std::span<const double> rates, std::size_t bins) {
    if (rates.empty()) throw ValidationError("no event rates to bin");
    if (bins == 0) throw ValidationError("rate binning needs at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(rates.begin(), rates.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return {lo, hi};
    std::vector<double> edges(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) edges[i] = lo + width * static_cast<double>(i);
    edges[bins] = hi;
    return edges;
}

std::size_t rate_bin_index(std::span<const double> edges, double rate) {
    const std::size_t bins = edges.size() - 1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), rate);
    const auto pos = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(pos, 0, static_cast<std::ptrdiff_t>(bins) - 1));
}

RateBinSeries bin_samples(std::span<const double> edges, std::span<const RateSample> samples) {
    if (edges.size() < 2) throw ValidationError("rate bins need at least two edges");
    const std::size_t bins = edges.size() - 1;
    RateBinSeries out;
    out.counts.assign(bins, 0);
    out.means.assign(bins, std::nullopt);
    std::vector<double> sums(bins, 0.0);
    for (const auto& s : samples) {
        const std::size_t b = rate_bin_index(edges, s.rate);
        sums[b] += s.value;
        ++out.counts[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (out.counts[b] > 0) out.means[b] = sums[b] / static_cast<double>(out.counts[b]);
    }
    return out;
}

RateBinReport bin_by_event_rate(const RunResult& run, std::optional<std::string> metric, std::size_t bins) {
    if (!metric) metric = run.default_binned_metric();
    if (!metric) throw ValidationError("rate binning needs at least one metric");
    const auto m = run.metric_index(*metric);
    if (!m) throw ValidationError("metric '" + *metric + "' is not part of this run");

    // Every in-window group counts once, whichever reconstructors produced it.
    std::set<std::tuple<std::string, std::string, std::size_t>> seen;
    std::vector<double> rates;
    for (const auto& seq : run.sequences) {
        for (const auto& row : seq.rows) {
            if (!row.in_window || !row.event_rate) continue;
            if (seen.emplace(seq.dataset, seq.sequence, row.group_index).second) rates.push_back(*row.event_rate);
        }
    }
    if (rates.empty()) throw ValidationError("run has no groups with an event rate");

    RateBinReport report;
    report.metric = *metric;
    report.edges = rate_bin_edges(rates, bins);
    report.degenerate = report.edges.size() == 2 && report.edges[0] == report.edges[1];

    std::vector<std::string> order;
    for (const auto& seq : run.sequences) {
        if (std::find(order.begin(), order.end(), seq.reconstructor) == order.end()) order.push_back(seq.reconstructor);
    }
    for (const auto& name : order) {
        std::vector<RateSample> samples;
        for (const auto& seq : run.sequences) {
            if (seq.reconstructor != name || seq.failed) continue;
            for (const auto& row : seq.rows) {
                if (row.in_window && row.event_rate && row.values[*m]) {
                    samples.push_back(RateSample{*row.event_rate, *row.values[*m]});
                }
            }
        }
        RateBinSeries series = bin_samples(report.edges, samples);
        series.reconstructor = name;
        report.series.push_back(std::move(series));
    }
    return report;
}

void validate_sweep_values(SweepAxis axis, std::span<const double> values) {
    if (axis == SweepAxis::Rate) return;
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!std::isfinite(v)) throw ValidationError("sweep values must be finite");
        if (i > 0 && !(v > values[i - 1])) throw ValidationError("sweep values must be strictly increasing");
        switch (axis) {
            case SweepAxis::EventCount:
                if (v < 1.0 || v != std::floor(v)) throw ValidationError("event counts must be positive integers");
                break;
            case SweepAxis::Duration:
                if (!(v > 0.0)) throw ValidationError("durations must be positive");
                break;
            case SweepAxis::Discard:
                if (!(v >= 0.0 && v < 1.0)) throw ValidationError("discard ratios must lie in [0,1)");
                break;
            case SweepAxis::Rate: break;
        }
    }
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

SweepReport run_sweep(const EvalConfig& config, const std::vector<LoadedSequence>& sequences, SweepAxis axis,
                      std::vector<double> values) {
    validate_sweep_values(axis, values);
    SweepReport report;
    report.axis = axis;
    const MatchPolicy one_ms(0.001);

    if (axis == SweepAxis::Rate) {
        RunOverrides overrides;
        overrides.grouping = GroupingSpec::between_frames();
        SweepPoint point;
        point.label = "between_frames";
        point.result = run_loaded(config, sequences, overrides);
        report.rate = bin_by_event_rate(point.result, config.binned_metric);
        report.points.push_back(std::move(point));
        return report;
    }

    for (double v : values) {
        RunOverrides overrides;
        SweepPoint point;
        point.value = v;
        switch (axis) {
            case SweepAxis::EventCount:
                overrides.grouping = GroupingSpec::fixed_number(static_cast<std::size_t>(v));
                overrides.match = one_ms;
                point.label = format_value(v) + " events";
                break;
            case SweepAxis::Duration:
                overrides.grouping = GroupingSpec::fixed_duration(v / 1000.0);
                overrides.match = one_ms;
                point.fps = 1000.0 / v;
                point.label = format_value(v) + " ms";
                break;
            case SweepAxis::Discard:
                overrides.grouping = GroupingSpec::between_frames();
                overrides.discard_ratio = v;
                point.label = "discard " + format_value(v);
                break;
            case SweepAxis::Rate: break;
        }
        point.result = run_loaded(config, sequences, overrides);
        report.points.push_back(std::move(point));
    }
    return report;
}

SweepReport sweep_event_count(const EvalConfig& config, std::vector<double> counts) {
    validate_sweep_values(SweepAxis::EventCount, counts);
    return run_sweep(config, load_sequences(config), SweepAxis::EventCount, std::move(counts));
}

SweepReport sweep_duration(const EvalConfig& config, std::vector<double> values_ms) {
    validate_sweep_values(SweepAxis::Duration, values_ms);
    return run_sweep(config, load_sequences(config), SweepAxis::Duration, std::move(values_ms));
}

SweepReport sweep_discard(const EvalConfig& config, std::vector<double> ratios) {
    validate_sweep_values(SweepAxis::Discard, ratios);
    return run_sweep(config, load_sequences(config), SweepAxis::Discard, std::move(ratios));
}

SweepReport sweep_rate(const EvalConfig& config, std::optional<std::string> metric) {
    EvalConfig cfg = config;
    if (metric) cfg.binned_metric = metric;
    return run_sweep(cfg, load_sequences(cfg), SweepAxis::Rate, {});
}

}  // namespace evb
