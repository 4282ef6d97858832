#include "evb/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "evb/event_io.hpp"
#include "evb/frame_io.hpp"
#include "evb/preprocess.hpp"
#include "evb/representation.hpp"

namespace evb {

namespace {

struct Scene {
    double kx, ky, vx, vy, phase;
    double disc_x0, disc_y0, disc_vx, disc_vy, disc_r;

    double intensity(double x, double y, double t) const {
        const double wave = std::sin(kx * (x - vx * t) + ky * (y - vy * t) + phase);
        double v = 0.45 + 0.3 * wave;
        const double dx = x - (disc_x0 + disc_vx * t);
        const double dy = y - (disc_y0 + disc_vy * t);
        const double edge = std::clamp((disc_r - std::sqrt(dx * dx + dy * dy)) / 2.0, 0.0, 1.0);
        v = v * (1.0 - edge) + 0.95 * edge;
        return std::clamp(v, 0.02, 1.0);
    }
};

Scene make_scene(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    const double two_pi = 2.0 * std::numbers::pi;
    Scene s{};
    const double wavelength = 20.0 + 20.0 * rng.uniform01();
    const double angle = two_pi * rng.uniform01();
    s.kx = two_pi / wavelength * std::cos(angle);
    s.ky = two_pi / wavelength * std::sin(angle);
    const double speed = 15.0 + 20.0 * rng.uniform01();
    const double heading = two_pi * rng.uniform01();
    s.vx = speed * std::cos(heading);
    s.vy = speed * std::sin(heading);
    s.phase = two_pi * rng.uniform01();
    s.disc_r = 0.1 * std::min(spec.width, spec.height) + 0.1 * std::min(spec.width, spec.height) * rng.uniform01();
    s.disc_x0 = spec.width * (0.25 + 0.5 * rng.uniform01());
    s.disc_y0 = spec.height * (0.25 + 0.5 * rng.uniform01());
    s.disc_vx = (rng.uniform01() - 0.5) * 60.0;
    s.disc_vy = (rng.uniform01() - 0.5) * 60.0;
    return s;
}

double quantize(double v) {
    return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

}  // namespace

SequenceDataset generate_synthetic_sequence(const SyntheticSpec& spec) {
    const SensorGeometry geometry(spec.width, spec.height);
    const Scene scene = make_scene(spec);
    const int n_frames = static_cast<int>(std::floor(spec.duration * spec.frame_rate)) + 1;
    const double frame_dt = 1.0 / spec.frame_rate;
    const double step_dt = frame_dt / spec.substeps;
    const double c = spec.contrast_threshold;

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(n_frames));
    const auto render = [&](double t) {
        Image image(spec.width, spec.height);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) image.at(x, y) = quantize(scene.intensity(x, y, t));
        }
        return image;
    };

    const std::size_t n_pixels = geometry.pixel_count();
    std::vector<double> reference(n_pixels);
    std::vector<double> previous(n_pixels);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * spec.width + x;
            previous[i] = std::log(scene.intensity(x, y, 0.0));
            reference[i] = previous[i];
        }
    }

    std::vector<Event> events;
    const int total_steps = (n_frames - 1) * spec.substeps;
    for (int step = 1; step <= total_steps; ++step) {
        const double t0 = (step - 1) * step_dt;
        const double t1 = step * step_dt;
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * spec.width + x;
                const double now = std::log(scene.intensity(x, y, t1));
                const double before = previous[i];
                const double delta = now - before;
                if (delta != 0.0) {
                    double& ref = reference[i];
                    while (std::abs(now - ref) >= c) {
                        const double sign = now > ref ? 1.0 : -1.0;
                        ref += sign * c;
                        const double frac = std::clamp((ref - before) / delta, 0.0, 1.0);
                        events.push_back(Event{t0 + frac * step_dt, static_cast<std::uint16_t>(x),
                                               static_cast<std::uint16_t>(y), static_cast<std::int8_t>(sign)});
                    }
                }
                previous[i] = now;
            }
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

    for (int k = 0; k < n_frames; ++k) frames.push_back(Frame{k * frame_dt, render(k * frame_dt)});

    const double end = (n_frames - 1) * frame_dt;
    return SequenceDataset(spec.name, EventStream(geometry, std::move(events)),
                           FrameStream(geometry, std::move(frames)), TimeWindow{0.2 * end, end});
}

void write_fixture_dataset(const std::vector<SequenceDataset>& sequences, const std::filesystem::path& dir,
                           const std::string& dataset_name) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json seq_list = nlohmann::ordered_json::array();
    for (const auto& seq : sequences) {
        const auto seq_dir = dir / seq.name;
        std::filesystem::create_directories(seq_dir);
        write_binary_events(seq.events, seq_dir / "events.evt1");
        nlohmann::ordered_json entry;
        entry["name"] = seq.name;
        entry["events"] = seq.name + "/events.evt1";
        if (seq.ground_truth) {
            write_frame_stream(*seq.ground_truth, seq_dir / "frames");
            entry["frames"] = seq.name + "/frames";
        }
        if (seq.eval_window) entry["eval_window"] = {seq.eval_window->start, seq.eval_window->end};
        seq_list.push_back(entry);
    }
    nlohmann::ordered_json config;
    config["datasets"] = nlohmann::ordered_json::array({{{"name", dataset_name}, {"sequences", seq_list}}});
    config["grouping"] = {{"mode", "between_frames"}, {"tolerance_ms", 1.0}};
    config["bins"] = 5;
    config["reconstructors"] = nlohmann::ordered_json::array(
        {{{"name", "voxel_collapse"}, {"builtin", "voxel_collapse"}},
         {{"name", "leaky_integrator"}, {"builtin", "leaky_integrator"}}});
    config["metrics"] = nlohmann::ordered_json::array({"mse", "ssim"});
    config["seed"] = 1;
    std::ofstream out(dir / "config.json");
    out << config.dump(2) << "\n";
}

std::vector<SyntheticSpec> default_fixture_specs(std::uint64_t seed) {
    std::vector<SyntheticSpec> specs;
    for (int i = 0; i < 3; ++i) {
        SyntheticSpec s;
        s.name = "seq" + std::to_string(i);
        s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        specs.push_back(s);
    }
    return specs;
}

std::vector<Event> random_events(std::size_t count, SensorGeometry geometry, double t0, double t1,
                                 std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> times(count);
    for (double& t : times) t = t0 + (t1 - t0) * rng.uniform01();
    std::sort(times.begin(), times.end());
    std::vector<Event> events(count);
    for (std::size_t i = 0; i < count; ++i) {
        events[i].t = times[i];
        events[i].x = static_cast<std::uint16_t>(rng.below(static_cast<std::uint32_t>(geometry.width)));
        events[i].y = static_cast<std::uint16_t>(rng.below(static_cast<std::uint32_t>(geometry.height)));
        events[i].p = rng.uniform01() < 0.5 ? -1 : 1;
    }
    return events;
}

VoxelBenchResult bench_voxel_grid(std::size_t total_events, std::size_t group_size, SensorGeometry geometry,
                                  int bins, int repeats, std::uint64_t seed) {
    if (group_size == 0) throw ValidationError("group size must be positive");
    const std::vector<Event> events = random_events(total_events, geometry, 0.0, 1.0, seed);
    const std::span<const Event> all(events);
    VoxelBenchResult result;
    result.events = total_events;
    result.repeats = repeats;
    double best = 0.0;
    for (int r = 0; r < repeats; ++r) {
        double checksum = 0.0;
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t begin = 0; begin < total_events; begin += group_size) {
            const std::size_t n = std::min(group_size, total_events - begin);
            const auto group = all.subspan(begin, n);
            const VoxelGrid grid = build_voxel_grid(group, group.front().t, group.back().t, geometry, bins);
            checksum += grid.sum();
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (r == 0 || elapsed < best) best = elapsed;
        result.checksum = checksum;
    }
    result.seconds = best;
    result.events_per_second = best > 0.0 ? static_cast<double>(total_events) / best : 0.0;
    return result;
}

}  // namespace evb
