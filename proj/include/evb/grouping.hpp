#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evb/event_model.hpp"

namespace evb {

struct FixedNumber {
    std::size_t count = 0;
};

struct FixedDuration {
    double seconds = 0.0;
};

struct BetweenFrames {};

/// How the stream is cut into groups. Construction validates N_G >= 1 and T_G > 0.
class GroupingSpec {
public:
    using Mode = std::variant<FixedNumber, FixedDuration, BetweenFrames>;

    GroupingSpec() : mode_(BetweenFrames{}) {}
    static GroupingSpec fixed_number(std::size_t count);
    static GroupingSpec fixed_duration(double seconds);
    static GroupingSpec between_frames();

    const Mode& mode() const { return mode_; }
    bool needs_frames() const { return std::holds_alternative<BetweenFrames>(mode_); }
    std::string describe() const;

private:
    explicit GroupingSpec(Mode m) : mode_(m) {}
    Mode mode_;
};

/// A contiguous slice of the stream. `begin`/`end` index the source stream;
/// `events` views it, so a group must not outlive its stream.
struct EventGroup {
    std::size_t index = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::span<const Event> events;
    double t_start = 0.0;
    double t_end = 0.0;
    /// Time at which the reconstruction for this group is stamped.
    double target_time = 0.0;
    /// Members satisfy t_start <= t <= t_end instead of t < t_end.
    bool closed = false;
    /// |G| / (t_end - t_start); empty when the window has zero width.
    std::optional<double> event_rate;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin == end; }
    double duration() const { return t_end - t_start; }
    bool admits(double t) const { return t >= t_start && (closed ? t <= t_end : t < t_end); }
};

struct GroupTimeline {
    std::vector<EventGroup> groups;

    std::size_t size() const { return groups.size(); }
    bool empty() const { return groups.empty(); }
    const EventGroup& operator[](std::size_t k) const { return groups[k]; }
};

/// Indices [k*N, (k+1)*N); a trailing remainder shorter than N is dropped.
/// Window is [first member t, last member t], stamped at the last member.
GroupTimeline group_fixed_number(const EventStream& stream, std::size_t count);

/// Windows [t0 + k*T, t0 + (k+1)*T) anchored at the first event, ceil(span/T) of them
/// (at least one for a non-empty stream). Empty windows are kept. The final window is
/// closed so the last event is never lost. Stamped at the window end.
GroupTimeline group_fixed_duration(const EventStream& stream, double seconds);

/// Same scheme over an explicit window: ceil(width/T) windows anchored at
/// `window.start`, at least one. Events outside the window are left out.
GroupTimeline group_fixed_duration(const EventStream& stream, double seconds, TimeWindow window);

/// Group k holds events in [s_k, s_{k+1}), stamped at s_{k+1}. Needs at least two frame times.
GroupTimeline group_between_frames(const EventStream& stream, std::span<const double> frame_times);

/// Dispatches on the spec; `frame_times` is required for BetweenFrames.
GroupTimeline make_timeline(const EventStream& stream, const GroupingSpec& spec,
                            std::optional<std::span<const double>> frame_times = std::nullopt);

struct MatchPolicy {
    double tolerance = 0.001;

    MatchPolicy() = default;
    explicit MatchPolicy(double tol);
};

struct GroupMatch {
    std::size_t group = 0;
    std::optional<std::size_t> frame;
    /// |frame time - target time| when matched.
    double delta = 0.0;
};

/// Pairs each group with its nearest frame when within tolerance. A frame is
/// claimed by at most one group: the nearest, with the earlier group winning ties.
std::vector<GroupMatch> match_ground_truth(const GroupTimeline& timeline, std::span<const double> frame_times,
                                           const MatchPolicy& policy = {});

}  // namespace evb
