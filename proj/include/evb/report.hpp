#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evb/harness.hpp"
#include "evb/sweep.hpp"

namespace evb {

using ojson = nlohmann::ordered_json;

std::string tool_version();

/// "%.9g"; the fixed float formatting used by every CSV emission.
std::string format_number(double v);

/// Header `timestamp,group_index,event_rate,matched,in_window,<metric...>`, one
/// row per reconstruction. Missing values are empty cells. LF line endings.
std::string timeline_csv(const SequenceResult& seq, const std::vector<std::string>& metric_names);
void emit_timeline(const SequenceResult& seq, const std::vector<std::string>& metric_names,
                   const std::filesystem::path& path);

ojson summary_json(const RunResult& run, const ojson& config);
void emit_summary(const RunResult& run, const ojson& config, const std::filesystem::path& path);

/// One PGM per sampled reconstruction: `<dir>/<group index>.pgm`.
void emit_montage(const SequenceResult& seq, const std::filesystem::path& dir);

/// Relative location of a sequence's files inside a bundle: `<dataset>/<sequence>/<reconstructor>`.
std::filesystem::path sequence_path(const SequenceResult& seq);

/// Lossless JSON form of a run (montage images excluded).
ojson run_to_json(const RunResult& run);
RunResult run_from_json(const ojson& doc);

ojson sweep_json(const SweepReport& sweep, const ojson& config);
/// Tidy rows: axis,value,label,fps,dataset,reconstructor,metric,mean,sequences,failed.
std::string sweep_csv(const SweepReport& sweep);
/// Rows: reconstructor,bin,lo,hi,count,mean.
std::string rate_bins_csv(const RateBinReport& report);

ojson sweep_to_json(const SweepReport& sweep);
SweepReport sweep_from_json(const ojson& doc);

/// Contents of raw_results.json: everything `report` needs to re-render a bundle.
struct RawResults {
    ojson config;
    std::optional<RunResult> run;
    std::optional<SweepReport> sweep;
};

void emit_raw(const RawResults& raw, const std::filesystem::path& path);
RawResults load_raw(const std::filesystem::path& path);

/// Writes summary.json, timelines/, raw_results.json and, when `montage` is set,
/// montage/ into `out_dir`.
void write_eval_bundle(const RunResult& run, const ojson& config, const std::filesystem::path& out_dir,
                       bool montage = true);
/// Writes sweep.json, sweep.csv, rate_bins.csv (rate sweeps), raw_results.json and
/// per-point summaries and timelines under points/<index>/.
void write_sweep_bundle(const SweepReport& sweep, const ojson& config, const std::filesystem::path& out_dir);
/// Re-renders every text emission of a bundle from its raw results.
void rerender_bundle(const RawResults& raw, const std::filesystem::path& out_dir);

}  // namespace evb
