#include "evb/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace evb {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<std::string> EvalConfig::metric_names() const {
    std::vector<std::string> out;
    for (const auto& m : metrics) out.push_back(m.name);
    return out;
}

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

SequenceSource parse_sequence(const json& j, const fs::path& base, const std::string& dataset) {
    if (!j.is_object()) throw ConfigError("dataset '" + dataset + "': sequence entries must be objects");
    SequenceSource s;
    s.name = get_or<std::string>(j, "name", "");
    if (s.name.empty()) throw ConfigError("dataset '" + dataset + "': every sequence needs a name");
    const auto events = get_or<std::string>(j, "events", "");
    if (events.empty()) throw ConfigError("sequence '" + s.name + "' has no events path");
    s.events = resolve(base, events);
    if (!fs::exists(s.events)) throw ConfigError("sequence '" + s.name + "': missing events '" + s.events.string() + "'");
    if (j.contains("frames")) {
        s.frames = resolve(base, j.at("frames").get<std::string>());
        if (!fs::is_directory(*s.frames)) {
            throw ConfigError("sequence '" + s.name + "': missing frame directory '" + s.frames->string() + "'");
        }
    }
    if (j.contains("width") || j.contains("height")) {
        try {
            s.geometry = SensorGeometry(get_or<int>(j, "width", 0), get_or<int>(j, "height", 0));
        } catch (const ValidationError& err) {
            throw ConfigError("sequence '" + s.name + "': " + err.what());
        }
    }
    if (j.contains("eval_window")) {
        const auto& w = j.at("eval_window");
        if (!w.is_array() || w.size() != 2) throw ConfigError("sequence '" + s.name + "': eval_window must be [start, end]");
        s.eval_window = TimeWindow{w[0].get<double>(), w[1].get<double>()};
        if (s.eval_window->end < s.eval_window->start) {
            throw ConfigError("sequence '" + s.name + "': eval_window ends before it starts");
        }
    }
    s.sort = get_or<bool>(j, "sort", false);
    return s;
}

ReconstructorSpec parse_reconstructor(const json& j, const SessionOptions& session) {
    if (!j.is_object()) throw ConfigError("reconstructor entries must be objects");
    ReconstructorSpec r;
    r.session = session;
    if (j.contains("builtin")) {
        const auto name = j.at("builtin").get<std::string>();
        if (name == "voxel_collapse") {
            r.kind = ReconstructorSpec::Kind::VoxelCollapse;
        } else if (name == "leaky_integrator") {
            r.kind = ReconstructorSpec::Kind::LeakyIntegrator;
        } else {
            throw ConfigError("unknown builtin reconstructor '" + name + "'");
        }
        r.name = get_or<std::string>(j, "name", name);
    } else if (j.contains("plugin")) {
        r.kind = ReconstructorSpec::Kind::Plugin;
        r.cmdline = j.at("plugin").get<std::string>();
        if (r.cmdline.empty()) throw ConfigError("plugin reconstructor with an empty command line");
        r.name = get_or<std::string>(j, "name", "plugin");
    } else {
        throw ConfigError("reconstructor entries need either 'builtin' or 'plugin'");
    }
    r.tau = get_or<double>(j, "tau", 0.1);
    r.gain = get_or<double>(j, "gain", 0.1);
    if (!(r.tau > 0.0)) throw ConfigError("reconstructor '" + r.name + "': tau must be positive");
    r.pad_multiple = get_or<int>(j, "pad_multiple", 1);
    if (r.pad_multiple < 1) throw ConfigError("reconstructor '" + r.name + "': pad_multiple must be >= 1");
    const auto norm = get_or<std::string>(j, "tensor_norm", "none");
    if (norm == "none") {
        r.norm.mode = TensorNorm::None;
    } else if (norm == "nonzero_mean_std") {
        r.norm.mode = TensorNorm::NonzeroMeanStd;
    } else {
        throw ConfigError("unknown tensor_norm '" + norm + "'");
    }
    if (j.contains("postproc")) r.postproc = parse_postproc(j.at("postproc"));
    return r;
}

MetricSpec parse_metric(const json& j, const SessionOptions& session) {
    MetricSpec m;
    m.session = session;
    if (j.is_string()) {
        m.name = j.get<std::string>();
    } else if (j.is_object()) {
        m.name = get_or<std::string>(j, "name", "");
        m.cmdline = get_or<std::string>(j, "plugin", "");
    } else {
        throw ConfigError("metric entries must be names or objects");
    }
    if (m.name.empty()) throw ConfigError("metric entries need a name");
    if (m.cmdline.empty() && m.name != "mse" && m.name != "ssim") {
        throw ConfigError("metric '" + m.name + "' is not built in; give it a plugin command line");
    }
    return m;
}

}  // namespace

PostProcSpec parse_postproc(const json& steps) {
    if (!steps.is_array()) throw ConfigError("postproc must be a list of steps");
    std::vector<PostStep> out;
    for (const auto& s : steps) {
        const std::string name = s.is_string() ? s.get<std::string>() : get_or<std::string>(s, "step", "");
        if (name == "exponential") {
            out.emplace_back(Exponential{});
        } else if (name == "robust_minmax") {
            RobustMinMax r;
            if (s.is_object()) {
                r.lo_pct = get_or<double>(s, "lo", 1.0);
                r.hi_pct = get_or<double>(s, "hi", 99.0);
            }
            out.emplace_back(r);
        } else if (name == "histogram_equalize") {
            out.emplace_back(HistogramEqualize{});
        } else {
            throw ConfigError("unknown postproc step '" + name + "'");
        }
    }
    try {
        return PostProcSpec(std::move(out));
    } catch (const ValidationError& err) {
        throw ConfigError(err.what());
    }
}

GroupingSpec parse_grouping(const json& g, MatchPolicy& match) {
    const auto mode = get_or<std::string>(g, "mode", "between_frames");
    try {
        match = MatchPolicy(get_or<double>(g, "tolerance_ms", 1.0) / 1000.0);
        if (mode == "between_frames") return GroupingSpec::between_frames();
        if (mode == "fixed_number") {
            const auto n = get_or<long long>(g, "n_g", 0);
            if (n < 1) throw ConfigError("fixed_number grouping needs n_g >= 1");
            return GroupingSpec::fixed_number(static_cast<std::size_t>(n));
        }
        if (mode == "fixed_duration") return GroupingSpec::fixed_duration(get_or<double>(g, "t_g_ms", 0.0) / 1000.0);
    } catch (const ValidationError& err) {
        throw ConfigError(err.what());
    }
    throw ConfigError("unknown grouping mode '" + mode + "'");
}

EvalConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    EvalConfig cfg;
    cfg.source = doc;

    SessionOptions session;
    session.handshake_timeout =
        std::chrono::milliseconds(static_cast<long long>(get_or<double>(doc, "handshake_timeout_s", 30.0) * 1000));
    session.request_timeout =
        std::chrono::milliseconds(static_cast<long long>(get_or<double>(doc, "request_timeout_s", 300.0) * 1000));

    if (!doc.contains("datasets") || !doc.at("datasets").is_array() || doc.at("datasets").empty()) {
        throw ConfigError("config needs a non-empty 'datasets' list");
    }
    std::set<std::string> seen;
    for (const auto& d : doc.at("datasets")) {
        DatasetSource ds;
        ds.name = get_or<std::string>(d, "name", "");
        if (ds.name.empty()) throw ConfigError("every dataset needs a name");
        if (!d.contains("sequences") || !d.at("sequences").is_array()) {
            throw ConfigError("dataset '" + ds.name + "' needs a 'sequences' list");
        }
        for (const auto& s : d.at("sequences")) {
            ds.sequences.push_back(parse_sequence(s, base_dir, ds.name));
            if (!seen.insert(ds.name + "/" + ds.sequences.back().name).second) {
                throw ConfigError("duplicate sequence '" + ds.name + "/" + ds.sequences.back().name + "'");
            }
        }
        cfg.datasets.push_back(std::move(ds));
    }

    cfg.grouping = parse_grouping(doc.contains("grouping") ? doc.at("grouping") : json::object(), cfg.match);
    cfg.bins = get_or<int>(doc, "bins", kDefaultBins);
    if (cfg.bins < 2) throw ConfigError("bins must be >= 2");

    if (!doc.contains("reconstructors") || !doc.at("reconstructors").is_array() || doc.at("reconstructors").empty()) {
        throw ConfigError("config needs a non-empty 'reconstructors' list");
    }
    std::set<std::string> names;
    for (const auto& r : doc.at("reconstructors")) {
        cfg.reconstructors.push_back(parse_reconstructor(r, session));
        if (!names.insert(cfg.reconstructors.back().name).second) {
            throw ConfigError("duplicate reconstructor name '" + cfg.reconstructors.back().name + "'");
        }
    }
    if (doc.contains("metrics")) {
        std::set<std::string> metric_names;
        for (const auto& m : doc.at("metrics")) {
            cfg.metrics.push_back(parse_metric(m, session));
            if (!metric_names.insert(cfg.metrics.back().name).second) {
                throw ConfigError("duplicate metric '" + cfg.metrics.back().name + "'");
            }
        }
    }

    const json pre = doc.contains("preprocess") ? doc.at("preprocess") : json::object();
    cfg.noise_rate = get_or<double>(pre, "noise_rate", 0.0);
    cfg.drop_ratio = get_or<double>(pre, "drop_ratio", 0.0);
    if (!(cfg.noise_rate >= 0.0)) throw ConfigError("noise_rate must be >= 0");
    if (!(cfg.drop_ratio >= 0.0 && cfg.drop_ratio <= 1.0)) throw ConfigError("drop_ratio must lie in [0,1]");

    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    const auto parallel = get_or<long long>(doc, "parallelism", 1);
    if (parallel < 1) throw ConfigError("parallelism must be >= 1");
    cfg.parallelism = static_cast<std::size_t>(parallel);
    const auto stride = get_or<long long>(doc, "montage_stride", 0);
    if (stride < 0) throw ConfigError("montage_stride must be >= 0");
    cfg.montage_stride = static_cast<std::size_t>(stride);
    if (doc.contains("binned_metric")) {
        cfg.binned_metric = doc.at("binned_metric").get<std::string>();
        const auto all = cfg.metric_names();
        if (std::find(all.begin(), all.end(), *cfg.binned_metric) == all.end()) {
            throw ConfigError("binned_metric '" + *cfg.binned_metric + "' is not in the metric list");
        }
    }
    return cfg;
}

EvalConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& err) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + err.what());
    }
    try {
        return parse_config(doc, fs::absolute(path).parent_path());
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config has an invalid field: ") + err.what());
    }
}

}  // namespace evb
