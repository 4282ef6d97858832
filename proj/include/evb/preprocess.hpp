#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "evb/event_model.hpp"

namespace evb {

/// Portable random source used everywhere the harness needs randomness.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are derived here from raw 64-bit draws (the
/// standard library's distributions are implementation-defined), so seeded
/// results replicate across compilers and platforms:
///   uniform01  = (draw >> 11) * 2^-53
///   below(n)   = floor(uniform01 * n)
///   exponential(rate) = -log1p(-uniform01) / rate
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint32_t below(std::uint32_t n);
    double exponential(double rate);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; combines seeds with stable per-item keys.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);
/// FNV-1a; stable across runs and platforms (unlike std::hash).
std::uint64_t stable_hash(std::string_view text);

struct DownsampleSpec {
    double drop_ratio = 0.0;
    std::uint64_t seed = 0;

    DownsampleSpec() = default;
    DownsampleSpec(double ratio, std::uint64_t seed);
    bool is_identity() const { return drop_ratio == 0.0; }
};

struct NoiseSpec {
    /// Events per pixel per second.
    double rate = 0.0;
    std::uint64_t seed = 0;

    NoiseSpec() = default;
    NoiseSpec(double rate, std::uint64_t seed);
    bool is_identity() const { return rate == 0.0; }
};

/// Bernoulli thinning: each event survives independently with probability 1 - drop_ratio.
EventStream downsample_events(const EventStream& stream, const DownsampleSpec& spec);

/// Merges a homogeneous Poisson process of total rate rate*W*H over
/// [t_first, t_last] (uniform pixel, fair-coin polarity) into the stream.
/// Throws ValidationError when rate > 0 and the stream has zero span.
EventStream inject_noise(const EventStream& stream, const NoiseSpec& spec);

}  // namespace evb
