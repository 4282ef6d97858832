// Voxel-grid construction throughput at 240x180, B=5.

#include <cstdio>

#include <CLI11.hpp>

#include "evb/fixtures.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Voxel-grid construction throughput"};
    std::size_t events = 2'000'000;
    std::size_t group = 15'000;
    int bins = 5;
    int repeats = 5;
    double floor = 1e6;
    app.add_option("--events", events, "Total events")->capture_default_str();
    app.add_option("--group", group, "Events per group")->capture_default_str();
    app.add_option("--bins", bins, "Temporal bins")->capture_default_str();
    app.add_option("--repeats", repeats, "Passes; the best is reported")->capture_default_str();
    app.add_option("--floor", floor, "Required events/s; exit 1 below it")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const auto r = evb::bench_voxel_grid(events, group, evb::SensorGeometry(240, 180), bins, repeats);
    std::printf("events=%zu group=%zu bins=%d best=%.4fs rate=%.0f events/s checksum=%.3f\n", r.events, group, bins,
                r.seconds, r.events_per_second, r.checksum);
    return r.events_per_second >= floor ? 0 : 1;
}
