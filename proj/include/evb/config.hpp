#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evb/grouping.hpp"
#include "evb/metrics.hpp"
#include "evb/reconstruct.hpp"

namespace evb {

/// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SequenceSource {
    std::string name;
    std::filesystem::path events;
    std::optional<std::filesystem::path> frames;
    /// Required for text event files; EVT1 files carry their own.
    std::optional<SensorGeometry> geometry;
    std::optional<TimeWindow> eval_window;
    bool sort = false;
};

struct DatasetSource {
    std::string name;
    std::vector<SequenceSource> sequences;
};

/// A whole evaluation run, normally read from one JSON document:
///
///   {
///     "datasets": [{"name": "ecd", "sequences": [
///         {"name": "dynamic_6dof", "events": "dyn/events.txt", "frames": "dyn/frames",
///          "width": 240, "height": 180, "eval_window": [5.0, 20.0], "sort": false}]}],
///     "grouping": {"mode": "between_frames" | "fixed_number" | "fixed_duration",
///                  "n_g": 15000, "t_g_ms": 50, "tolerance_ms": 1},
///     "bins": 5,
///     "reconstructors": [
///         {"name": "collapse", "builtin": "voxel_collapse"},
///         {"name": "leaky", "builtin": "leaky_integrator", "tau": 0.1, "gain": 0.1},
///         {"name": "e2vid", "plugin": "python3 plugin.py --model e2vid", "pad_multiple": 8,
///          "tensor_norm": "nonzero_mean_std",
///          "postproc": [{"step": "robust_minmax", "lo": 1, "hi": 99}]}],
///     "metrics": ["mse", "ssim", {"name": "lpips", "plugin": "python3 plugin.py --metric lpips"}],
///     "preprocess": {"noise_rate": 0, "drop_ratio": 0},
///     "binned_metric": "mse",
///     "seed": 1, "parallelism": 2, "montage_stride": 0,
///     "handshake_timeout_s": 30, "request_timeout_s": 300
///   }
///
/// Relative paths are resolved against the config file's directory.
struct EvalConfig {
    std::vector<DatasetSource> datasets;
    GroupingSpec grouping = GroupingSpec::between_frames();
    MatchPolicy match;
    int bins = kDefaultBins;
    std::vector<ReconstructorSpec> reconstructors;
    std::vector<MetricSpec> metrics;
    double noise_rate = 0.0;
    double drop_ratio = 0.0;
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
    std::size_t montage_stride = 0;
    std::optional<std::string> binned_metric;
    /// The document as given, echoed into reports.
    nlohmann::ordered_json source;

    std::vector<std::string> metric_names() const;
};

/// Parses and validates; every referenced path must exist.
EvalConfig parse_config(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir);
EvalConfig load_config(const std::filesystem::path& path);

PostProcSpec parse_postproc(const nlohmann::ordered_json& steps);
GroupingSpec parse_grouping(const nlohmann::ordered_json& grouping, MatchPolicy& match);

}  // namespace evb
