#include "evb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "evb/event_io.hpp"
#include "evb/frame_io.hpp"
#include "evb/image_ops.hpp"
#include "evb/metrics.hpp"
#include "evb/preprocess.hpp"
#include "evb/reconstruct.hpp"

namespace evb {

std::size_t RunResult::failed_count() const {
    return static_cast<std::size_t>(
        std::count_if(sequences.begin(), sequences.end(), [](const SequenceResult& s) { return s.failed; }));
}

std::optional<std::size_t> RunResult::metric_index(const std::string& name) const {
    auto it = std::find(metric_names.begin(), metric_names.end(), name);
    if (it == metric_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - metric_names.begin());
}

std::optional<std::string> RunResult::default_binned_metric() const {
    for (const auto& seq : sequences) {
        for (const auto& id : seq.metric_ids) {
            if (id.kind == MetricKind::FullReference) return id.name;
        }
    }
    if (metric_names.empty()) return std::nullopt;
    return metric_names.front();
}

std::vector<LoadedSequence> load_sequences(const EvalConfig& config) {
    std::vector<LoadedSequence> out;
    for (const auto& ds : config.datasets) {
        for (const auto& src : ds.sequences) {
            LoadedSequence loaded;
            loaded.dataset = ds.name;
            loaded.source = src;
            try {
                EventStream events = load_events(src.events, src.geometry, TextParseOptions{src.sort});
                std::optional<FrameStream> frames;
                if (src.frames) frames = load_frame_stream(*src.frames);
                loaded.data = SequenceDataset(src.name, std::move(events), std::move(frames), src.eval_window);
            } catch (const std::exception& err) {
                loaded.load_error = err.what();
            }
            out.push_back(std::move(loaded));
        }
    }
    return out;
}

FrameStream discard_frames(const FrameStream& frames, double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ValidationError("discard ratio must lie in [0,1)");
    if (ratio == 0.0 || frames.size() <= 2) return frames;
    Rng rng(seed);
    std::vector<Frame> kept;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const bool endpoint = i == 0 || i + 1 == frames.size();
        const double u = rng.uniform01();
        if (endpoint || u >= ratio) kept.push_back(frames[i]);
    }
    return FrameStream(frames.geometry(), std::move(kept));
}

Image event_count_image(std::span<const Event> events, SensorGeometry geometry) {
    Image counts(geometry.width, geometry.height);
    for (const Event& e : events) counts.at(e.x, e.y) += 1.0;
    const auto [lo, hi] = std::minmax_element(counts.pixels.begin(), counts.pixels.end());
    const double range = *hi - *lo;
    if (range <= 0.0) {
        std::fill(counts.pixels.begin(), counts.pixels.end(), 0.0);
        return counts;
    }
    const double base = *lo;
    for (double& v : counts.pixels) v = (v - base) / range;
    return counts;
}

namespace {

Image make_strip(const Image& events, const Image& recon, const Image* gt) {
    const int panels = gt ? 3 : 2;
    Image strip(events.width * panels, events.height);
    const Image* parts[3] = {&events, &recon, gt};
    for (int p = 0; p < panels; ++p) {
        for (int y = 0; y < events.height; ++y) {
            for (int x = 0; x < events.width; ++x) strip.at(p * events.width + x, y) = parts[p]->at(x, y);
        }
    }
    return strip;
}

std::vector<std::optional<double>> row_means(const std::vector<TimelineRow>& rows, std::size_t metric_count) {
    std::vector<std::optional<double>> means(metric_count);
    for (std::size_t m = 0; m < metric_count; ++m) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& row : rows) {
            if (row.values[m]) {
                sum += *row.values[m];
                ++n;
            }
        }
        if (n > 0) means[m] = sum / static_cast<double>(n);
    }
    return means;
}

std::vector<SequenceResult> failed_results(const EvalConfig& config, const LoadedSequence& seq,
                                           const std::string& error) {
    std::vector<SequenceResult> out;
    for (const auto& r : config.reconstructors) {
        SequenceResult res;
        res.dataset = seq.dataset;
        res.sequence = seq.source.name;
        res.reconstructor = r.name;
        res.means.assign(config.metrics.size(), std::nullopt);
        res.failed = true;
        res.error = error;
        out.push_back(std::move(res));
    }
    return out;
}

std::vector<SequenceResult> evaluate_sequence(const EvalConfig& config, const LoadedSequence& seq,
                                              const RunOverrides& overrides) {
    if (!seq.data) return failed_results(config, seq, seq.load_error);
    const SequenceDataset& data = *seq.data;
    const std::uint64_t seq_key = stable_hash(seq.dataset + "/" + data.name);
    const GroupingSpec grouping = overrides.grouping.value_or(config.grouping);
    const MatchPolicy match = overrides.match.value_or(config.match);

    EventStream events = data.events;
    std::optional<FrameStream> frames = data.ground_truth;
    GroupTimeline timeline;
    std::vector<GroupMatch> matches;
    std::vector<double> frame_times;
    try {
        if (config.noise_rate > 0.0) {
            events = inject_noise(events, NoiseSpec(config.noise_rate, mix_seed(config.seed, seq_key ^ 0x6e6f697365ull)));
        }
        if (config.drop_ratio > 0.0) {
            events = downsample_events(events, DownsampleSpec(config.drop_ratio, mix_seed(config.seed, seq_key ^ 0x64726f70ull)));
        }
        if (overrides.discard_ratio && frames) {
            frames = discard_frames(*frames, *overrides.discard_ratio, mix_seed(config.seed, seq_key ^ 0x64697363ull));
        }
        if (frames) frame_times = frames->timestamps();
        if (grouping.needs_frames() && !frames) throw ValidationError("between-frames grouping needs ground-truth frames");
        timeline = make_timeline(events, grouping,
                                 frames ? std::optional<std::span<const double>>(frame_times) : std::nullopt);
        if (frames) matches = match_ground_truth(timeline, frame_times, match);
    } catch (const std::exception& err) {
        return failed_results(config, seq, err.what());
    }

    std::optional<MetricRegistry> registry;
    std::string registry_error;
    try {
        registry.emplace(config.metrics, events.geometry());
    } catch (const std::exception& err) {
        registry_error = err.what();
    }

    std::vector<SequenceResult> out;
    for (const auto& rspec : config.reconstructors) {
        SequenceResult res;
        res.dataset = seq.dataset;
        res.sequence = data.name;
        res.reconstructor = rspec.name;
        res.counts.groups = timeline.size();
        res.means.assign(config.metrics.size(), std::nullopt);
        if (registry) res.metric_ids = registry->ids();
        if (!registry) {
            res.failed = true;
            res.error = "metric setup failed: " + registry_error;
            out.push_back(std::move(res));
            continue;
        }

        SequenceReconstruction recon;
        try {
            ReconstructorHandle handle(make_reconstructor(rspec, events.geometry(), config.bins));
            ReconstructOptions options{config.bins, rspec.norm, rspec.postproc};
            recon = reconstruct_sequence(timeline, handle, events.geometry(), options);
        } catch (const std::exception& err) {
            recon.failed = true;
            recon.error = err.what();
        }
        res.failed = recon.failed;
        res.error = recon.error;
        res.counts.reconstructions = recon.frames.size();

        // Equalised ground truth, computed lazily when the chain equalises its output.
        std::map<std::size_t, Image> equalized_gt;
        for (const Reconstruction& r : recon.frames) {
            TimelineRow row;
            row.timestamp = r.timestamp;
            row.group_index = r.group_index;
            row.event_rate = timeline[r.group_index].event_rate;
            row.in_window = !data.eval_window || data.eval_window->contains(r.timestamp);
            row.values.assign(config.metrics.size(), std::nullopt);
            const Image* gt = nullptr;
            if (!matches.empty() && matches[r.group_index].frame) {
                row.matched = true;
                const std::size_t f = *matches[r.group_index].frame;
                gt = &(*frames)[f].image;
                if (rspec.postproc.equalizes()) {
                    auto it = equalized_gt.find(f);
                    if (it == equalized_gt.end()) it = equalized_gt.emplace(f, histogram_equalize(*gt)).first;
                    gt = &it->second;
                }
            }
            if (row.matched) ++res.counts.matched;
            if (row.in_window) {
                ++res.counts.scored;
                PairEvaluation eval = evaluate_pair(*registry, r.timestamp, r.image, gt);
                for (const auto& sample : eval.samples) {
                    for (std::size_t m = 0; m < config.metrics.size(); ++m) {
                        if (config.metrics[m].name == sample.metric.name) row.values[m] = sample.value;
                    }
                }
                res.counts.metric_failures += eval.failures.size();
            }
            if (config.montage_stride > 0 && r.group_index % config.montage_stride == 0) {
                const auto& group = timeline[r.group_index];
                res.montage.push_back(
                    MontageStrip{r.group_index, make_strip(event_count_image(group.events, events.geometry()), r.image,
                                                           row.matched ? &(*frames)[*matches[r.group_index].frame].image
                                                                       : nullptr)});
            }
            res.rows.push_back(std::move(row));
        }
        res.means = row_means(res.rows, config.metrics.size());
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace

std::vector<DatasetAggregate> aggregate_datasets(const std::vector<SequenceResult>& sequences,
                                                 std::size_t metric_count) {
    std::vector<DatasetAggregate> out;
    const auto find = [&](const SequenceResult& s) -> DatasetAggregate& {
        for (auto& agg : out) {
            if (agg.dataset == s.dataset && agg.reconstructor == s.reconstructor) return agg;
        }
        DatasetAggregate agg;
        agg.dataset = s.dataset;
        agg.reconstructor = s.reconstructor;
        agg.means.assign(metric_count, std::nullopt);
        out.push_back(std::move(agg));
        return out.back();
    };
    for (const auto& s : sequences) find(s);
    for (auto& agg : out) {
        for (std::size_t m = 0; m < metric_count; ++m) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& s : sequences) {
                if (s.dataset != agg.dataset || s.reconstructor != agg.reconstructor || s.failed) continue;
                if (s.means[m]) {
                    sum += *s.means[m];
                    ++n;
                }
            }
            if (n > 0) agg.means[m] = sum / static_cast<double>(n);
        }
        for (const auto& s : sequences) {
            if (s.dataset != agg.dataset || s.reconstructor != agg.reconstructor) continue;
            ++agg.sequences;
            if (s.failed) ++agg.failed;
        }
    }
    return out;
}

RunResult run_loaded(const EvalConfig& config, const std::vector<LoadedSequence>& sequences,
                     const RunOverrides& overrides) {
    std::vector<std::vector<SequenceResult>> slots(sequences.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < sequences.size(); i = next++) {
            slots[i] = evaluate_sequence(config, sequences[i], overrides);
        }
    };
    const std::size_t n_threads = std::min(config.parallelism, sequences.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    RunResult result;
    result.metric_names = config.metric_names();
    for (auto& slot : slots) {
        for (auto& r : slot) result.sequences.push_back(std::move(r));
    }
    result.datasets = aggregate_datasets(result.sequences, result.metric_names.size());
    return result;
}

RunResult run_standard_eval(const EvalConfig& config) {
    return run_loaded(config, load_sequences(config));
}

}  // namespace evb
