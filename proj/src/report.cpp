#include "evb/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "evb/frame_io.hpp"

namespace evb {

namespace fs = std::filesystem;

std::string tool_version() {
    return EVB_VERSION;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("short write to '" + path.string() + "'");
}

std::string safe_component(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) c = '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

ojson optional_number(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

std::optional<double> number_or_null(const ojson& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

ojson means_object(const std::vector<std::string>& names, const std::vector<std::optional<double>>& means) {
    ojson out = ojson::object();
    for (std::size_t m = 0; m < names.size(); ++m) out[names[m]] = optional_number(means[m]);
    return out;
}

std::string kind_name(MetricKind k) {
    return k == MetricKind::FullReference ? "full_reference" : "no_reference";
}

std::string direction_name(Direction d) {
    return d == Direction::HigherBetter ? "higher_better" : "lower_better";
}

}  // namespace

fs::path sequence_path(const SequenceResult& seq) {
    return fs::path(safe_component(seq.dataset)) / safe_component(seq.sequence) / safe_component(seq.reconstructor);
}

std::string timeline_csv(const SequenceResult& seq, const std::vector<std::string>& metric_names) {
    std::string out = "timestamp,group_index,event_rate,matched,in_window";
    for (const auto& name : metric_names) out += "," + name;
    out += "\n";
    for (const auto& row : seq.rows) {
        out += format_number(row.timestamp);
        out += "," + std::to_string(row.group_index);
        out += ",";
        if (row.event_rate) out += format_number(*row.event_rate);
        out += row.matched ? ",1" : ",0";
        out += row.in_window ? ",1" : ",0";
        for (const auto& v : row.values) {
            out += ",";
            if (v) out += format_number(*v);
        }
        out += "\n";
    }
    return out;
}

void emit_timeline(const SequenceResult& seq, const std::vector<std::string>& metric_names, const fs::path& path) {
    write_text(path, timeline_csv(seq, metric_names));
}

ojson summary_json(const RunResult& run, const ojson& config) {
    ojson doc;
    doc["tool"] = "evbench";
    doc["version"] = tool_version();
    doc["metrics"] = run.metric_names;
    ojson seqs = ojson::array();
    std::size_t failed = 0;
    for (const auto& s : run.sequences) {
        ojson e;
        e["dataset"] = s.dataset;
        e["sequence"] = s.sequence;
        e["reconstructor"] = s.reconstructor;
        e["failed"] = s.failed;
        if (s.failed) {
            e["error"] = s.error;
            ++failed;
        }
        e["counts"] = {{"groups", s.counts.groups},
                       {"reconstructions", s.counts.reconstructions},
                       {"matched", s.counts.matched},
                       {"scored", s.counts.scored},
                       {"metric_failures", s.counts.metric_failures}};
        e["means"] = means_object(run.metric_names, s.means);
        e["timeline"] = (fs::path("timelines") / sequence_path(s)).generic_string() + ".csv";
        seqs.push_back(std::move(e));
    }
    doc["sequences"] = std::move(seqs);
    ojson datasets = ojson::array();
    for (const auto& d : run.datasets) {
        datasets.push_back({{"dataset", d.dataset},
                            {"reconstructor", d.reconstructor},
                            {"sequences", d.sequences},
                            {"failed", d.failed},
                            {"means", means_object(run.metric_names, d.means)}});
    }
    doc["datasets"] = std::move(datasets);
    doc["totals"] = {{"sequence_runs", run.sequences.size()}, {"failed", failed}};
    doc["config"] = config;
    return doc;
}

void emit_summary(const RunResult& run, const ojson& config, const fs::path& path) {
    write_text(path, summary_json(run, config).dump(2) + "\n");
}

void emit_montage(const SequenceResult& seq, const fs::path& dir) {
    if (seq.montage.empty()) return;
    fs::create_directories(dir);
    char name[32];
    for (const auto& strip : seq.montage) {
        std::snprintf(name, sizeof name, "%06zu.pgm", strip.group_index);
        write_pgm(strip.image, dir / name);
    }
}

ojson run_to_json(const RunResult& run) {
    ojson doc;
    doc["metric_names"] = run.metric_names;
    ojson seqs = ojson::array();
    for (const auto& s : run.sequences) {
        ojson e;
        e["dataset"] = s.dataset;
        e["sequence"] = s.sequence;
        e["reconstructor"] = s.reconstructor;
        ojson ids = ojson::array();
        for (const auto& id : s.metric_ids) {
            ids.push_back({{"name", id.name},
                           {"kind", kind_name(id.kind)},
                           {"direction", direction_name(id.direction)},
                           {"source", id.source == MetricSource::Builtin ? "builtin" : "plugin"}});
        }
        e["metric_ids"] = std::move(ids);
        e["failed"] = s.failed;
        e["error"] = s.error;
        e["counts"] = {{"groups", s.counts.groups},
                       {"reconstructions", s.counts.reconstructions},
                       {"matched", s.counts.matched},
                       {"scored", s.counts.scored},
                       {"metric_failures", s.counts.metric_failures}};
        ojson rows = ojson::array();
        for (const auto& r : s.rows) {
            ojson values = ojson::array();
            for (const auto& v : r.values) values.push_back(optional_number(v));
            rows.push_back({{"t", r.timestamp},
                            {"group", r.group_index},
                            {"rate", optional_number(r.event_rate)},
                            {"matched", r.matched},
                            {"in_window", r.in_window},
                            {"values", std::move(values)}});
        }
        e["rows"] = std::move(rows);
        seqs.push_back(std::move(e));
    }
    doc["sequences"] = std::move(seqs);
    return doc;
}

RunResult run_from_json(const ojson& doc) {
    RunResult run;
    run.metric_names = doc.at("metric_names").get<std::vector<std::string>>();
    const std::size_t n_metrics = run.metric_names.size();
    for (const auto& e : doc.at("sequences")) {
        SequenceResult s;
        s.dataset = e.at("dataset").get<std::string>();
        s.sequence = e.at("sequence").get<std::string>();
        s.reconstructor = e.at("reconstructor").get<std::string>();
        for (const auto& id : e.at("metric_ids")) {
            MetricId m;
            m.name = id.at("name").get<std::string>();
            m.kind = id.at("kind") == "no_reference" ? MetricKind::NoReference : MetricKind::FullReference;
            m.direction = id.at("direction") == "higher_better" ? Direction::HigherBetter : Direction::LowerBetter;
            m.source = id.at("source") == "plugin" ? MetricSource::Plugin : MetricSource::Builtin;
            s.metric_ids.push_back(std::move(m));
        }
        s.failed = e.at("failed").get<bool>();
        s.error = e.at("error").get<std::string>();
        const auto& c = e.at("counts");
        s.counts.groups = c.at("groups").get<std::size_t>();
        s.counts.reconstructions = c.at("reconstructions").get<std::size_t>();
        s.counts.matched = c.at("matched").get<std::size_t>();
        s.counts.scored = c.at("scored").get<std::size_t>();
        s.counts.metric_failures = c.at("metric_failures").get<std::size_t>();
        for (const auto& r : e.at("rows")) {
            TimelineRow row;
            row.timestamp = r.at("t").get<double>();
            row.group_index = r.at("group").get<std::size_t>();
            row.event_rate = number_or_null(r.at("rate"));
            row.matched = r.at("matched").get<bool>();
            row.in_window = r.at("in_window").get<bool>();
            for (const auto& v : r.at("values")) row.values.push_back(number_or_null(v));
            if (row.values.size() != n_metrics) throw std::runtime_error("raw results: row width does not match metrics");
            s.rows.push_back(std::move(row));
        }
        // Means are derived data; recomputing them keeps raw files small and consistent.
        s.means.assign(n_metrics, std::nullopt);
        for (std::size_t m = 0; m < n_metrics; ++m) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& row : s.rows) {
                if (row.values[m]) {
                    sum += *row.values[m];
                    ++n;
                }
            }
            if (n > 0) s.means[m] = sum / static_cast<double>(n);
        }
        run.sequences.push_back(std::move(s));
    }
    run.datasets = aggregate_datasets(run.sequences, n_metrics);
    return run;
}

ojson sweep_json(const SweepReport& sweep, const ojson& config) {
    ojson doc;
    doc["tool"] = "evbench";
    doc["version"] = tool_version();
    doc["axis"] = to_string(sweep.axis);
    ojson points = ojson::array();
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        const auto& p = sweep.points[i];
        ojson e;
        e["index"] = i;
        e["label"] = p.label;
        e["value"] = p.value;
        e["fps"] = optional_number(p.fps);
        std::size_t groups = 0;
        std::size_t matched = 0;
        for (const auto& s : p.result.sequences) {
            groups += s.counts.groups;
            matched += s.counts.matched;
        }
        e["counts"] = {{"groups", groups}, {"matched", matched}, {"failed", p.result.failed_count()}};
        ojson datasets = ojson::array();
        for (const auto& d : p.result.datasets) {
            datasets.push_back({{"dataset", d.dataset},
                                {"reconstructor", d.reconstructor},
                                {"sequences", d.sequences},
                                {"failed", d.failed},
                                {"means", means_object(p.result.metric_names, d.means)}});
        }
        e["datasets"] = std::move(datasets);
        points.push_back(std::move(e));
    }
    doc["points"] = std::move(points);
    if (sweep.rate) {
        const auto& r = *sweep.rate;
        ojson rate;
        rate["metric"] = r.metric;
        rate["edges_scope"] = "global over all in-window groups of the run";
        rate["degenerate"] = r.degenerate;
        rate["bins"] = r.bin_count();
        rate["edges"] = r.edges;
        ojson series = ojson::array();
        for (const auto& s : r.series) {
            ojson means = ojson::array();
            for (const auto& m : s.means) means.push_back(optional_number(m));
            series.push_back({{"reconstructor", s.reconstructor}, {"counts", s.counts}, {"means", std::move(means)}});
        }
        rate["series"] = std::move(series);
        doc["rate_bins"] = std::move(rate);
    }
    doc["config"] = config;
    return doc;
}

std::string sweep_csv(const SweepReport& sweep) {
    std::string out = "axis,value,label,fps,dataset,reconstructor,metric,mean,sequences,failed\n";
    for (const auto& p : sweep.points) {
        for (const auto& d : p.result.datasets) {
            for (std::size_t m = 0; m < p.result.metric_names.size(); ++m) {
                out += to_string(sweep.axis) + "," + format_number(p.value) + "," + p.label + ",";
                if (p.fps) out += format_number(*p.fps);
                out += "," + d.dataset + "," + d.reconstructor + "," + p.result.metric_names[m] + ",";
                if (d.means[m]) out += format_number(*d.means[m]);
                out += "," + std::to_string(d.sequences) + "," + std::to_string(d.failed) + "\n";
            }
        }
    }
    return out;
}

std::string rate_bins_csv(const RateBinReport& report) {
    std::string out = "reconstructor,bin,lo,hi,count,mean\n";
    for (const auto& s : report.series) {
        for (std::size_t b = 0; b < s.counts.size(); ++b) {
            out += s.reconstructor + "," + std::to_string(b) + "," + format_number(report.edges[b]) + "," +
                   format_number(report.edges[b + 1]) + "," + std::to_string(s.counts[b]) + ",";
            if (s.means[b]) out += format_number(*s.means[b]);
            out += "\n";
        }
    }
    return out;
}

ojson sweep_to_json(const SweepReport& sweep) {
    ojson doc;
    doc["axis"] = to_string(sweep.axis);
    ojson points = ojson::array();
    for (const auto& p : sweep.points) {
        points.push_back(
            {{"value", p.value}, {"label", p.label}, {"fps", optional_number(p.fps)}, {"result", run_to_json(p.result)}});
    }
    doc["points"] = std::move(points);
    doc["rate_metric"] = sweep.rate ? ojson(sweep.rate->metric) : ojson(nullptr);
    return doc;
}

SweepReport sweep_from_json(const ojson& doc) {
    SweepReport sweep;
    const auto axis = parse_sweep_axis(doc.at("axis").get<std::string>());
    if (!axis) throw std::runtime_error("raw results: unknown sweep axis");
    sweep.axis = *axis;
    for (const auto& p : doc.at("points")) {
        SweepPoint point;
        point.value = p.at("value").get<double>();
        point.label = p.at("label").get<std::string>();
        point.fps = number_or_null(p.at("fps"));
        point.result = run_from_json(p.at("result"));
        sweep.points.push_back(std::move(point));
    }
    if (!doc.at("rate_metric").is_null() && !sweep.points.empty()) {
        sweep.rate = bin_by_event_rate(sweep.points.front().result, doc.at("rate_metric").get<std::string>());
    }
    return sweep;
}

void emit_raw(const RawResults& raw, const fs::path& path) {
    ojson doc;
    doc["format"] = "evbench-raw";
    doc["version"] = tool_version();
    doc["config"] = raw.config;
    if (raw.run) doc["run"] = run_to_json(*raw.run);
    if (raw.sweep) doc["sweep"] = sweep_to_json(*raw.sweep);
    write_text(path, doc.dump() + "\n");
}

RawResults load_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open raw results '" + path.string() + "'");
    RawResults raw;
    try {
        const ojson doc = ojson::parse(in);
        if (doc.value("format", "") != "evbench-raw") throw std::runtime_error("not an evbench raw results file");
        raw.config = doc.at("config");
        if (doc.contains("run")) raw.run = run_from_json(doc.at("run"));
        if (doc.contains("sweep")) raw.sweep = sweep_from_json(doc.at("sweep"));
    } catch (const ojson::exception& err) {
        throw std::runtime_error("malformed raw results '" + path.string() + "': " + err.what());
    }
    return raw;
}

namespace {

void write_run_texts(const RunResult& run, const ojson& config, const fs::path& dir) {
    emit_summary(run, config, dir / "summary.json");
    for (const auto& s : run.sequences) {
        emit_timeline(s, run.metric_names, dir / "timelines" / (sequence_path(s).string() + ".csv"));
    }
}

void write_sweep_texts(const SweepReport& sweep, const ojson& config, const fs::path& dir) {
    write_text(dir / "sweep.json", sweep_json(sweep, config).dump(2) + "\n");
    write_text(dir / "sweep.csv", sweep_csv(sweep));
    if (sweep.rate) write_text(dir / "rate_bins.csv", rate_bins_csv(*sweep.rate));
    char name[16];
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        std::snprintf(name, sizeof name, "%02zu", i);
        write_run_texts(sweep.points[i].result, config, dir / "points" / name);
    }
}

}  // namespace

void write_eval_bundle(const RunResult& run, const ojson& config, const fs::path& out_dir, bool montage) {
    fs::create_directories(out_dir);
    write_run_texts(run, config, out_dir);
    if (montage) {
        for (const auto& s : run.sequences) emit_montage(s, out_dir / "montage" / sequence_path(s));
    }
    emit_raw(RawResults{config, run, std::nullopt}, out_dir / "raw_results.json");
}

void write_sweep_bundle(const SweepReport& sweep, const ojson& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    write_sweep_texts(sweep, config, out_dir);
    emit_raw(RawResults{config, std::nullopt, sweep}, out_dir / "raw_results.json");
}

void rerender_bundle(const RawResults& raw, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    if (raw.run) write_run_texts(*raw.run, raw.config, out_dir);
    if (raw.sweep) write_sweep_texts(*raw.sweep, raw.config, out_dir);
}

}  // namespace evb
