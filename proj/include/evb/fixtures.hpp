#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evb/event_model.hpp"

namespace evb {

/// Parameters of a synthetic scene: a drifting sinusoidal texture plus a moving
/// bright disc, observed by an idealised contrast-threshold event sensor.
struct SyntheticSpec {
    std::string name = "synthetic";
    int width = 240;
    int height = 180;
    double duration = 2.0;
    double frame_rate = 25.0;
    /// Log-intensity change that triggers one event.
    double contrast_threshold = 0.45;
    /// Simulation steps between consecutive frames.
    int substeps = 8;
    std::uint64_t seed = 1;
};

/// Deterministic for a given spec. Frames are quantised to 8-bit levels so the
/// sequence survives a PGM round-trip unchanged.
SequenceDataset generate_synthetic_sequence(const SyntheticSpec& spec);

/// Writes "<dir>/<name>/events.evt1" and "<dir>/<name>/frames/" for each sequence,
/// plus "<dir>/config.json" describing one dataset made of them.
void write_fixture_dataset(const std::vector<SequenceDataset>& sequences, const std::filesystem::path& dir,
                           const std::string& dataset_name = "synthetic");

/// Three sequences totalling roughly 200k events at 240x180.
std::vector<SyntheticSpec> default_fixture_specs(std::uint64_t seed = 7);

/// `count` time-sorted events with uniform positions, times in [t0, t1] and
/// random polarity.
std::vector<Event> random_events(std::size_t count, SensorGeometry geometry, double t0, double t1,
                                 std::uint64_t seed);

struct VoxelBenchResult {
    std::size_t events = 0;
    int repeats = 0;
    double seconds = 0.0;
    double events_per_second = 0.0;
    /// Sum of all grid cells, kept so the work cannot be optimised away.
    double checksum = 0.0;
};

/// Times single-threaded voxel-grid construction over groups of `group_size`
/// random events at the given geometry; best of `repeats` passes.
VoxelBenchResult bench_voxel_grid(std::size_t total_events, std::size_t group_size, SensorGeometry geometry,
                                  int bins, int repeats, std::uint64_t seed = 1);

}  // namespace evb
