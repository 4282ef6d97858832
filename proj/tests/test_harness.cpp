#include <doctest.h>

#include <cmath>
#include <random>

#include "evb/fixtures.hpp"
#include "evb/harness.hpp"
#include "evb/preprocess.hpp"
#include "evb/sweep.hpp"

using namespace evb;

namespace {

SequenceDataset small_seq(const std::string& name, int W, int H, std::uint64_t seed, double duration = 1.0) {
    SyntheticSpec spec;
    spec.name = name;
    spec.width = W;
    spec.height = H;
    spec.duration = duration;
    spec.seed = seed;
    SequenceDataset d = generate_synthetic_sequence(spec);
    d.eval_window.reset();
    return d;
}

// Evenly spaced events, `per_frame` per frame interval, so a group whose size is
// a multiple of `per_frame` ends exactly on a frame time.
SequenceDataset monotone_seq(std::size_t per_frame, std::size_t n_frames) {
    const double frame_dt = 0.04;
    const double dt = frame_dt / static_cast<double>(per_frame);
    std::vector<Event> ev;
    const std::size_t n = per_frame * (n_frames - 1);
    for (std::size_t i = 0; i < n; ++i) {
        ev.push_back(Event{static_cast<double>(i + 1) * dt, static_cast<std::uint16_t>(i % 16),
                           static_cast<std::uint16_t>((i / 16) % 16), static_cast<std::int8_t>(i % 3 ? 1 : -1)});
    }
    std::vector<Frame> frames;
    for (std::size_t j = 0; j < n_frames; ++j) frames.push_back(Frame{static_cast<double>(j) * frame_dt, Image(16, 16, 0.5)});
    const SensorGeometry g(16, 16);
    return SequenceDataset("mono", EventStream(g, ev), FrameStream(g, frames));
}

LoadedSequence loaded(const std::string& dataset, SequenceDataset data) {
    LoadedSequence l;
    l.dataset = dataset;
    l.source.name = data.name;
    l.data = std::move(data);
    return l;
}

EvalConfig base_config() {
    EvalConfig c;
    ReconstructorSpec collapse;
    collapse.name = "collapse";
    collapse.kind = ReconstructorSpec::Kind::VoxelCollapse;
    ReconstructorSpec leaky;
    leaky.name = "leaky";
    leaky.kind = ReconstructorSpec::Kind::LeakyIntegrator;
    c.reconstructors = {collapse, leaky};
    c.metrics = {{"mse", "", {}}, {"ssim", "", {}}};
    c.seed = 3;
    return c;
}

ReconstructorSpec plugin_spec(const std::string& name, const std::string& args) {
    ReconstructorSpec r;
    r.name = name;
    r.kind = ReconstructorSpec::Kind::Plugin;
    r.cmdline = std::string(EVB_TEST_PLUGIN) + " " + args;
    return r;
}

bool same_rows(const SequenceResult& a, const SequenceResult& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.timestamp != y.timestamp || x.group_index != y.group_index || x.event_rate != y.event_rate ||
            x.matched != y.matched || x.in_window != y.in_window || x.values != y.values) {
            return false;
        }
    }
    return a.means == b.means && a.failed == b.failed;
}

}  // namespace

TEST_CASE("between-frames run scores N-1 reconstructions per sequence") {
    const auto seq = small_seq("a", 48, 36, 1);
    const std::size_t n_frames = seq.ground_truth->size();
    const RunResult run = run_loaded(base_config(), {loaded("ds", seq)});
    REQUIRE(run.sequences.size() == 2);
    CHECK(run.metric_names == std::vector<std::string>{"mse", "ssim"});
    for (const auto& s : run.sequences) {
        CHECK_FALSE(s.failed);
        CHECK(s.counts.groups == n_frames - 1);
        CHECK(s.counts.reconstructions == n_frames - 1);
        CHECK(s.counts.matched == n_frames - 1);
        CHECK(s.counts.scored == n_frames - 1);
        REQUIRE(s.rows.size() == n_frames - 1);
        double sum = 0.0;
        for (std::size_t k = 0; k < s.rows.size(); ++k) {
            CHECK(s.rows[k].timestamp == seq.ground_truth->timestamps()[k + 1]);
            REQUIRE(s.rows[k].values[0].has_value());
            REQUIRE(s.rows[k].values[1].has_value());
            sum += *s.rows[k].values[0];
        }
        CHECK(*s.means[0] == doctest::Approx(sum / static_cast<double>(s.rows.size())).epsilon(1e-12));
    }
    CHECK(run.sequences[0].reconstructor == "collapse");
    CHECK(run.sequences[1].reconstructor == "leaky");
    CHECK(run.default_binned_metric() == "mse");
}

TEST_CASE("evaluation window limits scoring") {
    auto seq = small_seq("a", 48, 36, 1);
    seq.eval_window = TimeWindow{0.3, 0.6};
    const RunResult run = run_loaded(base_config(), {loaded("ds", seq)});
    const auto& s = run.sequences[0];
    std::size_t inside = 0;
    for (const auto& row : s.rows) {
        const bool in = row.timestamp >= 0.3 && row.timestamp <= 0.6;
        CHECK(row.in_window == in);
        CHECK(row.values[0].has_value() == in);
        if (in) ++inside;
    }
    CHECK(s.counts.scored == inside);
    CHECK(inside > 0);
    CHECK(inside < s.rows.size());
}

TEST_CASE("dataset means average the sequence means") {
    const RunResult run = run_loaded(base_config(), {loaded("ds", small_seq("a", 48, 36, 1)),
                                                     loaded("ds", small_seq("b", 48, 36, 2)),
                                                     loaded("other", small_seq("c", 48, 36, 3))});
    REQUIRE(run.sequences.size() == 6);
    REQUIRE(run.datasets.size() == 4);
    const auto& agg = run.datasets[0];
    CHECK(agg.dataset == "ds");
    CHECK(agg.reconstructor == "collapse");
    CHECK(agg.sequences == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        const double m1 = *run.sequences[0].means[m];
        const double m2 = *run.sequences[2].means[m];
        CHECK(*agg.means[m] == doctest::Approx((m1 + m2) / 2).epsilon(1e-12));
    }
    CHECK(run.datasets[3].sequences == 1);
    CHECK(*run.datasets[3].means[0] == *run.sequences[5].means[0]);
}

TEST_CASE("runs are deterministic and independent of parallelism") {
    EvalConfig c = base_config();
    c.noise_rate = 0.5;
    c.drop_ratio = 0.2;
    const std::vector<LoadedSequence> seqs{loaded("ds", small_seq("a", 48, 36, 1)),
                                           loaded("ds", small_seq("b", 48, 36, 2)),
                                           loaded("ds", small_seq("c", 48, 36, 3))};
    const RunResult a = run_loaded(c, seqs);
    const RunResult b = run_loaded(c, seqs);
    c.parallelism = 3;
    const RunResult p = run_loaded(c, seqs);
    REQUIRE(a.sequences.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(same_rows(a.sequences[i], b.sequences[i]));
        CHECK(same_rows(a.sequences[i], p.sequences[i]));
    }
    c.seed = 4;
    const RunResult other = run_loaded(c, seqs);
    CHECK_FALSE(same_rows(a.sequences[0], other.sequences[0]));
}

TEST_CASE("a crashing plugin fails only its own sequence") {
    EvalConfig c = base_config();
    c.reconstructors.push_back(plugin_spec("plug", "echo crash-width=40"));
    const std::vector<LoadedSequence> all{loaded("ds", small_seq("a", 48, 36, 1)),
                                          loaded("ds", small_seq("bad", 40, 30, 2)),
                                          loaded("ds", small_seq("c", 48, 36, 3))};
    const std::vector<LoadedSequence> good{all[0], all[2]};
    for (std::size_t par : {1u, 3u}) {
        c.parallelism = par;
        const RunResult run = run_loaded(c, all);
        const RunResult ref = run_loaded(c, good);
        REQUIRE(run.sequences.size() == 9);
        CHECK(run.failed_count() == 1);
        const auto& bad = run.sequences[5];
        CHECK(bad.sequence == "bad");
        CHECK(bad.reconstructor == "plug");
        CHECK(bad.failed);
        CHECK_FALSE(bad.error.empty());
        CHECK(bad.rows.empty());
        CHECK_FALSE(run.sequences[3].failed);
        CHECK_FALSE(run.sequences[4].failed);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(same_rows(run.sequences[i], ref.sequences[i]));
            CHECK(same_rows(run.sequences[6 + i], ref.sequences[3 + i]));
        }
        const auto& agg = run.datasets[2];
        CHECK(agg.reconstructor == "plug");
        CHECK(agg.failed == 1);
        CHECK(agg.sequences == 3);
        CHECK(*agg.means[0] == doctest::Approx(*ref.datasets[2].means[0]).epsilon(1e-15));
    }
}

TEST_CASE("unloadable sequences and missing frames are reported as failures") {
    EvalConfig c = base_config();
    LoadedSequence missing;
    missing.dataset = "ds";
    missing.source.name = "gone";
    missing.load_error = "no such file";
    auto no_frames = small_seq("nf", 48, 36, 5);
    no_frames.ground_truth.reset();
    const RunResult run = run_loaded(c, {missing, loaded("ds", no_frames), loaded("ds", small_seq("a", 48, 36, 1))});
    REQUIRE(run.sequences.size() == 6);
    CHECK(run.sequences[0].failed);
    CHECK(run.sequences[0].error == "no such file");
    CHECK(run.sequences[2].failed);
    CHECK_FALSE(run.sequences[4].failed);
    CHECK(run.failed_count() == 4);

    RunOverrides fixed;
    fixed.grouping = GroupingSpec::fixed_number(2000);
    const RunResult nf = run_loaded(c, {loaded("ds", no_frames)}, fixed);
    CHECK_FALSE(nf.sequences[0].failed);
    CHECK(nf.sequences[0].counts.matched == 0);
    CHECK(nf.sequences[0].counts.scored == nf.sequences[0].rows.size());
    CHECK_FALSE(nf.sequences[0].means[0].has_value());
}

TEST_CASE("histogram-equalising chains are scored against equalised ground truth") {
    EvalConfig c = base_config();
    c.reconstructors.resize(1);
    c.reconstructors[0].postproc = PostProcSpec({HistogramEqualize{}});
    c.metrics = {{"mse", "", {}}};
    const auto seq = small_seq("a", 48, 36, 1);
    const RunResult run = run_loaded(c, {loaded("ds", seq)});
    const auto& rows = run.sequences[0].rows;
    REQUIRE_FALSE(rows.empty());
    CHECK(*rows[0].values[0] < 0.5);

    const auto tl = group_between_frames(seq.events, seq.ground_truth->timestamps());
    const Image recon = PostProcSpec({HistogramEqualize{}}).apply(baseline_voxel_collapse(build_voxel_grid(tl[0], seq.events.geometry())));
    const Image gt = histogram_equalize((*seq.ground_truth)[1].image);
    CHECK(*rows[0].values[0] == doctest::Approx(mse(recon, gt)).epsilon(1e-12));
}

TEST_CASE("montage strips") {
    EvalConfig c = base_config();
    c.montage_stride = 5;
    const auto seq = small_seq("a", 48, 36, 1);
    const RunResult run = run_loaded(c, {loaded("ds", seq)});
    const auto& s = run.sequences[0];
    CHECK(s.montage.size() == (s.rows.size() + 4) / 5);
    for (const auto& strip : s.montage) {
        CHECK(strip.group_index % 5 == 0);
        CHECK(strip.image.width == 3 * 48);
        CHECK(strip.image.height == 36);
    }
    RunOverrides fixed;
    fixed.grouping = GroupingSpec::fixed_number(1000);
    fixed.match = MatchPolicy(0.0);
    const RunResult unmatched = run_loaded(c, {loaded("ds", seq)}, fixed);
    for (const auto& strip : unmatched.sequences[0].montage) {
        if (!unmatched.sequences[0].rows[strip.group_index].matched) CHECK(strip.image.width == 2 * 48);
    }
}

TEST_CASE("event count image") {
    const SensorGeometry g(3, 2);
    const std::vector<Event> ev{{0.0, 0, 0, 1}, {0.1, 0, 0, -1}, {0.2, 2, 1, 1}};
    const Image img = event_count_image(ev, g);
    CHECK(img.at(0, 0) == 1.0);
    CHECK(img.at(2, 1) == 0.5);
    CHECK(img.at(1, 0) == 0.0);
    for (double v : event_count_image({}, g).pixels) CHECK(v == 0.0);
}

TEST_CASE("discarding frames") {
    std::vector<Frame> frames;
    for (int i = 0; i < 100; ++i) frames.push_back(Frame{i * 0.01, Image(2, 2)});
    const FrameStream fs(SensorGeometry(2, 2), frames);
    CHECK(discard_frames(fs, 0.0, 1).size() == 100);
    CHECK_THROWS_AS(discard_frames(fs, 1.0, 1), ValidationError);
    CHECK_THROWS_AS(discard_frames(fs, -0.1, 1), ValidationError);
    const double sigma = std::sqrt(98 * 0.9 * 0.1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const FrameStream kept = discard_frames(fs, 0.9, seed);
        const double interior = static_cast<double>(kept.size()) - 2.0;
        CHECK(std::abs(interior - 9.8) <= 3 * sigma);
        CHECK(kept[0].timestamp == 0.0);
        CHECK(kept[kept.size() - 1].timestamp == doctest::Approx(0.99));
        const FrameStream lighter = discard_frames(fs, 0.5, seed);
        for (double t : kept.timestamps()) {
            const auto lt = lighter.timestamps();
            CHECK(std::find(lt.begin(), lt.end(), t) != lt.end());
        }
    }
}

TEST_CASE("sweep cardinalities and per-point properties") {
    const EvalConfig c = base_config();
    const std::vector<LoadedSequence> seqs{loaded("ds", small_seq("a", 48, 36, 1)),
                                           loaded("ds", small_seq("b", 48, 36, 2))};

    const auto counts = run_sweep(c, seqs, SweepAxis::EventCount, {500, 1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500});
    CHECK(counts.points.size() == 9);
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t i = 0; i < counts.points.size(); ++i) {
            const std::size_t n = seqs[s / 2].data->events.size();
            CHECK(counts.points[i].result.sequences[s].counts.groups ==
                  n / static_cast<std::size_t>(counts.points[i].value));
        }
    }

    const auto durations = run_sweep(c, seqs, SweepAxis::Duration, default_durations_ms());
    CHECK(durations.points.size() == 10);
    for (const auto& p : durations.points) {
        REQUIRE(p.fps.has_value());
        CHECK(*p.fps == doctest::Approx(1000.0 / p.value));
        for (std::size_t s = 0; s < 4; ++s) {
            const auto& ev = seqs[s / 2].data->events;
            const double span = ev.t_last() - ev.t_first();
            const auto expect = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / (p.value / 1000.0))));
            CHECK(p.result.sequences[s].counts.groups == expect);
        }
    }

    const auto discard = run_sweep(c, seqs, SweepAxis::Discard, default_discard_ratios());
    CHECK(discard.points.size() == 10);
    const RunResult standard = run_loaded(c, seqs);
    for (std::size_t s = 0; s < 4; ++s) CHECK(same_rows(discard.points[0].result.sequences[s], standard.sequences[s]));
    for (const auto& p : discard.points) {
        for (std::size_t s = 0; s < 4; ++s) {
            const auto& seq = seqs[s / 2];
            const auto seed = mix_seed(c.seed, stable_hash(seq.dataset + "/" + seq.data->name) ^ 0x64697363ull);
            const auto survivors = discard_frames(*seq.data->ground_truth, p.value, seed).size();
            CHECK(p.result.sequences[s].counts.groups == survivors - 1);
            CHECK(p.result.sequences[s].counts.matched == survivors - 1);
        }
    }

    const auto rate = run_sweep(c, seqs, SweepAxis::Rate, {});
    CHECK(rate.points.size() == 1);
    REQUIRE(rate.rate.has_value());
    CHECK(rate.rate->bin_count() == kRateBins);
    CHECK(rate.rate->metric == "mse");
    REQUIRE(rate.rate->series.size() == 2);
    std::size_t total = 0;
    for (auto n : rate.rate->series[0].counts) total += n;
    CHECK(total == rate.points[0].result.sequences[0].rows.size() + rate.points[0].result.sequences[2].rows.size());

    CHECK_THROWS_AS(run_sweep(c, seqs, SweepAxis::EventCount, {1000, 500}), ValidationError);
    CHECK_THROWS_AS(run_sweep(c, seqs, SweepAxis::EventCount, {10.5}), ValidationError);
    CHECK_THROWS_AS(run_sweep(c, seqs, SweepAxis::Duration, {0}), ValidationError);
    CHECK_THROWS_AS(run_sweep(c, seqs, SweepAxis::Discard, {0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(run_sweep(c, seqs, SweepAxis::Discard, {}), ValidationError);
    CHECK(parse_sweep_axis("count") == SweepAxis::EventCount);
    CHECK_FALSE(parse_sweep_axis("bogus").has_value());
    for (auto axis : {SweepAxis::EventCount, SweepAxis::Duration, SweepAxis::Discard, SweepAxis::Rate}) {
        CHECK(parse_sweep_axis(to_string(axis)) == axis);
    }
}

TEST_CASE("count sweep on a monotone stream matches the counting oracle") {
    const std::vector<LoadedSequence> seqs{loaded("ds", monotone_seq(500, 51))};
    const auto sweep = run_sweep(base_config(), seqs, SweepAxis::EventCount, {500, 1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500});
    const std::size_t n = seqs[0].data->events.size();
    std::size_t previous = n;
    for (const auto& p : sweep.points) {
        const std::size_t groups = n / static_cast<std::size_t>(p.value);
        const auto& counts = p.result.sequences[0].counts;
        CHECK(counts.groups == groups);
        CHECK(counts.matched == groups);
        CHECK(counts.matched <= previous);
        previous = counts.matched;
    }
    CHECK(sweep.points.back().result.sequences[0].counts.matched < sweep.points.front().result.sequences[0].counts.matched);
}

TEST_CASE("rate bin edges") {
    std::vector<double> rates;
    for (int i = 0; i <= 100; ++i) rates.push_back(i * 1e5);
    const auto edges = rate_bin_edges(rates, 10);
    REQUIRE(edges.size() == 11);
    for (int i = 0; i <= 10; ++i) CHECK(edges[i] == doctest::Approx(i * 1e6).epsilon(1e-12));
    CHECK(rate_bin_index(edges, 0.0) == 0);
    CHECK(rate_bin_index(edges, 1e6) == 1);
    CHECK(rate_bin_index(edges, 9.99e6) == 9);
    CHECK(rate_bin_index(edges, 1e7) == 9);

    const std::vector<double> same(7, 4.2e5);
    const auto deg = rate_bin_edges(same, 10);
    CHECK(deg == std::vector<double>{4.2e5, 4.2e5});
    CHECK(rate_bin_index(deg, 4.2e5) == 0);
    CHECK_THROWS_AS(rate_bin_edges(std::vector<double>{}, 10), ValidationError);
}

TEST_CASE("binning a metric equal to the rate recovers bin centres") {
    std::mt19937_64 rng(8);
    std::vector<RateSample> samples;
    std::vector<double> rates;
    for (int i = 0; i < 100000; ++i) {
        const double r = std::uniform_real_distribution<double>(0, 1e7)(rng);
        rates.push_back(r);
        samples.push_back({r, r});
    }
    rates.push_back(0.0);
    rates.push_back(1e7);
    const auto edges = rate_bin_edges(rates, 10);
    const auto series = bin_samples(edges, samples);
    std::size_t total = 0;
    for (std::size_t b = 0; b < 10; ++b) {
        total += series.counts[b];
        REQUIRE(series.means[b].has_value());
        CHECK(std::abs(*series.means[b] - (b + 0.5) * 1e6) < 2e4);
    }
    CHECK(total == samples.size());

    auto shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = bin_samples(edges, shuffled);
    CHECK(again.counts == series.counts);
    for (std::size_t b = 0; b < 10; ++b) CHECK(*again.means[b] == doctest::Approx(*series.means[b]).epsilon(1e-12));
}

TEST_CASE("run-level binning shares edges and handles a single rate") {
    RunResult run;
    run.metric_names = {"mse"};
    for (const std::string recon : {"x", "y"}) {
        SequenceResult s;
        s.dataset = "ds";
        s.sequence = "a";
        s.reconstructor = recon;
        s.metric_ids = {MetricId{"mse"}};
        for (std::size_t k = 0; k < 5; ++k) {
            TimelineRow row;
            row.group_index = k;
            row.event_rate = 1000.0;
            row.values = {recon == "x" ? 0.1 : 0.3};
            s.rows.push_back(row);
        }
        run.sequences.push_back(s);
    }
    const auto rep = bin_by_event_rate(run);
    CHECK(rep.degenerate);
    CHECK(rep.bin_count() == 1);
    REQUIRE(rep.series.size() == 2);
    CHECK(rep.series[0].counts[0] == 5);
    CHECK(*rep.series[0].means[0] == doctest::Approx(0.1));
    CHECK(*rep.series[1].means[0] == doctest::Approx(0.3));
    CHECK_THROWS_AS(bin_by_event_rate(run, std::string("ssim")), ValidationError);

    run.sequences[1].failed = true;
    const auto partial = bin_by_event_rate(run);
    CHECK(partial.series[1].counts[0] == 0);
    CHECK_FALSE(partial.series[1].means[0].has_value());
}
