#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evb/config.hpp"
#include "evb/event_model.hpp"
#include "evb/grouping.hpp"
#include "evb/metrics.hpp"

namespace evb {

/// One reconstruction, with the metric values that apply to it (aligned with
/// RunResult::metric_names; empty where a metric did not apply or failed).
struct TimelineRow {
    double timestamp = 0.0;
    std::size_t group_index = 0;
    std::optional<double> event_rate;
    bool matched = false;
    bool in_window = true;
    std::vector<std::optional<double>> values;
};

struct SequenceCounts {
    std::size_t groups = 0;
    std::size_t reconstructions = 0;
    std::size_t matched = 0;
    std::size_t scored = 0;
    std::size_t metric_failures = 0;
};

/// [event-count visualisation | reconstruction | ground truth] for one sampled frame.
struct MontageStrip {
    std::size_t group_index = 0;
    Image image;
};

struct SequenceResult {
    std::string dataset;
    std::string sequence;
    std::string reconstructor;
    /// Metric identities as reported by the registry; empty if it could not be built.
    std::vector<MetricId> metric_ids;
    std::vector<TimelineRow> rows;
    /// Per-metric mean over scored rows; empty when no row carried that metric.
    std::vector<std::optional<double>> means;
    SequenceCounts counts;
    bool failed = false;
    std::string error;
    std::vector<MontageStrip> montage;
};

struct DatasetAggregate {
    std::string dataset;
    std::string reconstructor;
    /// Mean over non-failed sequences of the per-sequence means.
    std::vector<std::optional<double>> means;
    std::size_t sequences = 0;
    std::size_t failed = 0;
};

struct RunResult {
    std::vector<std::string> metric_names;
    std::vector<SequenceResult> sequences;
    std::vector<DatasetAggregate> datasets;

    std::size_t failed_count() const;
    std::optional<std::size_t> metric_index(const std::string& name) const;
    /// First full-reference metric seen in any sequence, else the first metric.
    std::optional<std::string> default_binned_metric() const;
};

/// A sequence read from disk once, reusable across sweep points.
struct LoadedSequence {
    std::string dataset;
    SequenceSource source;
    std::optional<SequenceDataset> data;
    std::string load_error;
};

std::vector<LoadedSequence> load_sequences(const EvalConfig& config);

/// Per-run substitutions used by the sweeps.
struct RunOverrides {
    std::optional<GroupingSpec> grouping;
    std::optional<MatchPolicy> match;
    /// Drop each interior ground-truth frame with this probability before grouping.
    std::optional<double> discard_ratio;
};

/// Keeps the first and last frame; drops each interior frame independently with
/// probability `ratio` (seeded, order-independent).
FrameStream discard_frames(const FrameStream& frames, double ratio, std::uint64_t seed);

/// Preprocess, group, represent, reconstruct, post-process, match and score
/// every (sequence, reconstructor) pair. Per-sequence failures are recorded
/// and the run continues.
RunResult run_standard_eval(const EvalConfig& config);
RunResult run_loaded(const EvalConfig& config, const std::vector<LoadedSequence>& sequences,
                     const RunOverrides& overrides = {});

/// Recomputes the dataset-level means from the per-sequence results.
std::vector<DatasetAggregate> aggregate_datasets(const std::vector<SequenceResult>& sequences,
                                                 std::size_t metric_count);

/// Per-pixel event counts of a group, min/max-normalised into [0,1].
Image event_count_image(std::span<const Event> events, SensorGeometry geometry);

}  // namespace evb
