// evb: command-line front end for the benchmark harness.
//
//   evb convert IN OUT [--width W --height H] [--sort] [--noise-rate R] [--drop-ratio D] [--seed S]
//   evb eval --config FILE --out-dir DIR [--seed S] [--parallel N] [--montage-stride K]
//   evb sweep {count|duration|discard|rate} --config FILE --out-dir DIR [--values a,b,c] [--metric NAME]
//   evb report --raw FILE --out-dir DIR
//   evb make-fixture --out-dir DIR [--seed S]
//
// Exit codes: 0 success, 1 partial failure or runtime error, 2 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evb/config.hpp"
#include "evb/event_io.hpp"
#include "evb/fixtures.hpp"
#include "evb/harness.hpp"
#include "evb/preprocess.hpp"
#include "evb/report.hpp"
#include "evb/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct RunFlags {
    std::string config;
    std::string out_dir = "evb_out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallel;
    std::optional<std::size_t> montage_stride;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--config", flags.config, "Run configuration (JSON)")->required()->envname("EVB_CONFIG");
    cmd->add_option("--out-dir", flags.out_dir, "Output directory")->envname("EVB_OUT_DIR")->capture_default_str();
    cmd->add_option("--seed", flags.seed, "Override the config seed")->envname("EVB_SEED");
    cmd->add_option("--parallel", flags.parallel, "Maximum sequences evaluated concurrently")
        ->envname("EVB_PARALLEL")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--montage-stride", flags.montage_stride, "Write a montage strip every K reconstructions (0 = off)")
        ->envname("EVB_MONTAGE_STRIDE");
}

evb::EvalConfig load_with_overrides(const RunFlags& flags) {
    evb::EvalConfig cfg = evb::load_config(flags.config);
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.source["seed"] = *flags.seed;
    }
    if (flags.parallel) {
        cfg.parallelism = *flags.parallel;
        cfg.source["parallelism"] = *flags.parallel;
    }
    if (flags.montage_stride) {
        cfg.montage_stride = *flags.montage_stride;
        cfg.source["montage_stride"] = *flags.montage_stride;
    }
    return cfg;
}

void report_failures(const evb::RunResult& run) {
    for (const auto& s : run.sequences) {
        if (s.failed) {
            std::cerr << "evb: " << s.dataset << "/" << s.sequence << " [" << s.reconstructor << "] failed: " << s.error
                      << "\n";
        }
    }
}

int cmd_convert(const std::string& in, const std::string& out, std::optional<int> width, std::optional<int> height,
                bool sort, double noise_rate, double drop_ratio, std::uint64_t seed, const std::string& to) {
    std::optional<evb::SensorGeometry> geometry;
    if (width || height) {
        if (!width || !height) {
            std::cerr << "evb: --width and --height go together\n";
            return kExitConfig;
        }
        geometry = evb::SensorGeometry(*width, *height);
    }
    evb::EventStream stream = evb::load_events(in, geometry, evb::TextParseOptions{sort});
    if (noise_rate > 0.0) stream = evb::inject_noise(stream, evb::NoiseSpec(noise_rate, evb::mix_seed(seed, 1)));
    if (drop_ratio > 0.0) stream = evb::downsample_events(stream, evb::DownsampleSpec(drop_ratio, evb::mix_seed(seed, 2)));

    bool binary = false;
    if (to == "evt1") {
        binary = true;
    } else if (to == "text") {
        binary = false;
    } else {
        binary = std::filesystem::path(out).extension() == ".evt1";
    }
    if (binary) {
        evb::write_binary_events(stream, out);
    } else {
        evb::write_text_events(stream, out);
    }
    std::cerr << "evb: wrote " << stream.size() << " events to " << out << "\n";
    return kExitOk;
}

int cmd_eval(const RunFlags& flags) {
    const evb::EvalConfig cfg = load_with_overrides(flags);
    const evb::RunResult run = evb::run_standard_eval(cfg);
    evb::write_eval_bundle(run, cfg.source, flags.out_dir);
    report_failures(run);
    std::cerr << "evb: " << run.sequences.size() << " sequence runs, " << run.failed_count() << " failed; results in "
              << flags.out_dir << "\n";
    return run.failed_count() > 0 ? kExitPartial : kExitOk;
}

int cmd_sweep(const std::string& axis_name, const RunFlags& flags, std::vector<double> values,
              const std::optional<std::string>& metric) {
    const auto axis = evb::parse_sweep_axis(axis_name);
    if (!axis) {
        std::cerr << "evb: unknown sweep '" << axis_name << "'\n";
        return kExitConfig;
    }
    evb::EvalConfig cfg = load_with_overrides(flags);
    if (metric) {
        const auto names = cfg.metric_names();
        if (std::find(names.begin(), names.end(), *metric) == names.end()) {
            throw evb::ConfigError("metric '" + *metric + "' is not in the metric list");
        }
        cfg.binned_metric = metric;
        cfg.source["binned_metric"] = *metric;
    }
    if (values.empty()) {
        switch (*axis) {
            case evb::SweepAxis::EventCount: values = evb::default_event_counts(); break;
            case evb::SweepAxis::Duration: values = evb::default_durations_ms(); break;
            case evb::SweepAxis::Discard: values = evb::default_discard_ratios(); break;
            case evb::SweepAxis::Rate: break;
        }
    }
    try {
        evb::validate_sweep_values(*axis, values);
    } catch (const evb::ValidationError& err) {
        throw evb::ConfigError(err.what());
    }
    const evb::SweepReport sweep = evb::run_sweep(cfg, evb::load_sequences(cfg), *axis, values);
    evb::write_sweep_bundle(sweep, cfg.source, flags.out_dir);
    std::size_t failed = 0;
    for (const auto& p : sweep.points) {
        report_failures(p.result);
        failed += p.result.failed_count();
    }
    std::cerr << "evb: " << to_string(*axis) << " sweep, " << sweep.points.size() << " points; results in "
              << flags.out_dir << "\n";
    return failed > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const std::string& raw_path, const std::string& out_dir) {
    const evb::RawResults raw = evb::load_raw(raw_path);
    evb::rerender_bundle(raw, out_dir);
    std::size_t failed = raw.run ? raw.run->failed_count() : 0;
    if (raw.sweep) {
        for (const auto& p : raw.sweep->points) failed += p.result.failed_count();
    }
    return failed > 0 ? kExitPartial : kExitOk;
}

int cmd_make_fixture(const std::string& out_dir, std::uint64_t seed) {
    std::vector<evb::SequenceDataset> seqs;
    std::size_t total = 0;
    for (const auto& spec : evb::default_fixture_specs(seed)) {
        seqs.push_back(evb::generate_synthetic_sequence(spec));
        total += seqs.back().events.size();
    }
    evb::write_fixture_dataset(seqs, out_dir);
    std::cerr << "evb: wrote " << seqs.size() << " sequences (" << total << " events) to " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-based video reconstruction benchmark harness"};
    app.set_version_flag("--version", evb::tool_version());
    app.require_subcommand(1);

    std::string conv_in, conv_out, conv_to = "auto";
    std::optional<int> conv_w, conv_h;
    bool conv_sort = false;
    double conv_noise = 0.0, conv_drop = 0.0;
    std::uint64_t conv_seed = 0;
    auto* convert = app.add_subcommand("convert", "Convert between text and EVT1 event files");
    convert->add_option("input", conv_in, "Input event file (text or EVT1)")->required();
    convert->add_option("output", conv_out, "Output event file")->required();
    convert->add_option("--width", conv_w, "Sensor width (text input)");
    convert->add_option("--height", conv_h, "Sensor height (text input)");
    convert->add_flag("--sort", conv_sort, "Sort unsorted text input by time");
    convert->add_option("--noise-rate", conv_noise, "Inject noise events per pixel per second")->envname("EVB_NOISE_RATE");
    convert->add_option("--drop-ratio", conv_drop, "Drop each event with this probability")->envname("EVB_DROP_RATIO");
    convert->add_option("--seed", conv_seed, "Seed for noise and dropping")->envname("EVB_SEED");
    convert->add_option("--to", conv_to, "Output format")->check(CLI::IsMember({"auto", "text", "evt1"}));

    RunFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "Run a standard evaluation");
    add_run_flags(eval, eval_flags);

    RunFlags sweep_flags;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::optional<std::string> sweep_metric;
    auto* sweep = app.add_subcommand("sweep", "Run a robustness sweep");
    sweep->add_option("axis", sweep_axis, "count | duration | discard | rate")
        ->required()
        ->check(CLI::IsMember({"count", "duration", "discard", "rate"}));
    add_run_flags(sweep, sweep_flags);
    sweep->add_option("--values", sweep_values, "Comma-separated sweep values")->delimiter(',');
    sweep->add_option("--metric", sweep_metric, "Metric binned by the rate sweep");

    std::string report_raw, report_out = "evb_report";
    auto* report = app.add_subcommand("report", "Re-render reports from stored raw results");
    report->add_option("--raw", report_raw, "raw_results.json from an eval or sweep")->required();
    report->add_option("--out-dir", report_out, "Output directory")->envname("EVB_OUT_DIR")->capture_default_str();

    std::string fixture_out = "evb_fixture";
    std::uint64_t fixture_seed = 7;
    auto* fixture = app.add_subcommand("make-fixture", "Write the synthetic fixture dataset and its config");
    fixture->add_option("--out-dir", fixture_out, "Output directory")->capture_default_str();
    fixture->add_option("--seed", fixture_seed, "Scene seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*convert) {
            return cmd_convert(conv_in, conv_out, conv_w, conv_h, conv_sort, conv_noise, conv_drop, conv_seed, conv_to);
        }
        if (*eval) return cmd_eval(eval_flags);
        if (*sweep) return cmd_sweep(sweep_axis, sweep_flags, sweep_values, sweep_metric);
        if (*report) return cmd_report(report_raw, report_out);
        if (*fixture) return cmd_make_fixture(fixture_out, fixture_seed);
    } catch (const evb::ConfigError& err) {
        std::cerr << "evb: config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const evb::ValidationError& err) {
        std::cerr << "evb: invalid input: " << err.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& err) {
        std::cerr << "evb: " << err.what() << "\n";
        return kExitPartial;
    }
    return kExitOk;
}
