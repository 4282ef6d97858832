#include "evb/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

namespace evb {

std::uint32_t Rng::below(std::uint32_t n) {
    const auto v = static_cast<std::uint32_t>(uniform01() * n);
    return v < n ? v : n - 1;
}

double Rng::exponential(double rate) {
    return -std::log1p(-uniform01()) / rate;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (key + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

DownsampleSpec::DownsampleSpec(double ratio, std::uint64_t s) : drop_ratio(ratio), seed(s) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw ValidationError("drop ratio must lie in [0,1], got " + std::to_string(ratio));
    }
}

NoiseSpec::NoiseSpec(double r, std::uint64_t s) : rate(r), seed(s) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw ValidationError("noise rate must be finite and non-negative, got " + std::to_string(r));
    }
}

EventStream downsample_events(const EventStream& stream, const DownsampleSpec& spec) {
    if (spec.is_identity()) return stream;
    Rng rng(spec.seed);
    std::vector<Event> kept;
    kept.reserve(static_cast<std::size_t>(stream.size() * (1.0 - spec.drop_ratio)) + 16);
    for (const Event& e : stream.events()) {
        if (rng.uniform01() >= spec.drop_ratio) kept.push_back(e);
    }
    return EventStream(stream.geometry(), std::move(kept));
}

EventStream inject_noise(const EventStream& stream, const NoiseSpec& spec) {
    if (spec.is_identity()) return stream;
    if (stream.empty() || stream.span() <= 0.0) {
        throw ValidationError("cannot place noise: the stream spans zero time");
    }
    const SensorGeometry& g = stream.geometry();
    const double total_rate = spec.rate * static_cast<double>(g.pixel_count());
    const double t0 = stream.t_first();
    const double t1 = stream.t_last();

    Rng rng(spec.seed);
    std::vector<Event> noise;
    noise.reserve(static_cast<std::size_t>(total_rate * (t1 - t0) * 1.05) + 16);
    double t = t0;
    for (;;) {
        t += rng.exponential(total_rate);
        if (t > t1) break;
        Event e;
        e.t = t;
        e.x = static_cast<std::uint16_t>(rng.below(static_cast<std::uint32_t>(g.width)));
        e.y = static_cast<std::uint16_t>(rng.below(static_cast<std::uint32_t>(g.height)));
        e.p = rng.uniform01() < 0.5 ? std::int8_t{1} : std::int8_t{-1};
        noise.push_back(e);
    }

    std::vector<Event> merged;
    merged.reserve(stream.size() + noise.size());
    // std::merge takes from the first range on ties, so originals precede noise at equal times.
    std::merge(stream.events().begin(), stream.events().end(), noise.begin(), noise.end(), std::back_inserter(merged),
               [](const Event& a, const Event& b) { return a.t < b.t; });
    return EventStream(g, std::move(merged));
}

}  // namespace evb
