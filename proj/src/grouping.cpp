#include "evb/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evb {

GroupingSpec GroupingSpec::fixed_number(std::size_t count) {
    if (count < 1) throw ValidationError("fixed-number grouping needs N_G >= 1");
    return GroupingSpec(FixedNumber{count});
}

GroupingSpec GroupingSpec::fixed_duration(double seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) throw ValidationError("fixed-duration grouping needs T_G > 0");
    return GroupingSpec(FixedDuration{seconds});
}

GroupingSpec GroupingSpec::between_frames() {
    return GroupingSpec(BetweenFrames{});
}

std::string GroupingSpec::describe() const {
    if (auto* n = std::get_if<FixedNumber>(&mode_)) return "fixed_number(" + std::to_string(n->count) + ")";
    if (auto* d = std::get_if<FixedDuration>(&mode_)) return "fixed_duration(" + std::to_string(d->seconds) + "s)";
    return "between_frames";
}

namespace {

EventGroup make_group(const EventStream& stream, std::size_t index, std::size_t begin, std::size_t end, double t_start,
                      double t_end, bool closed) {
    EventGroup g;
    g.index = index;
    g.begin = begin;
    g.end = end;
    g.events = stream.events().subspan(begin, end - begin);
    g.t_start = t_start;
    g.t_end = t_end;
    g.target_time = t_end;
    g.closed = closed;
    if (t_end > t_start) g.event_rate = static_cast<double>(end - begin) / (t_end - t_start);
    return g;
}

// First index whose timestamp is >= t.
std::size_t first_at_or_after(std::span<const Event> events, double t) {
    auto it = std::lower_bound(events.begin(), events.end(), t, [](const Event& e, double v) { return e.t < v; });
    return static_cast<std::size_t>(it - events.begin());
}

}  // namespace

GroupTimeline group_fixed_number(const EventStream& stream, std::size_t count) {
    if (count < 1) throw ValidationError("fixed-number grouping needs N_G >= 1");
    GroupTimeline timeline;
    const std::size_t n_groups = stream.size() / count;
    timeline.groups.reserve(n_groups);
    for (std::size_t k = 0; k < n_groups; ++k) {
        const std::size_t begin = k * count;
        const std::size_t end = begin + count;
        timeline.groups.push_back(make_group(stream, k, begin, end, stream[begin].t, stream[end - 1].t, true));
    }
    return timeline;
}

GroupTimeline group_fixed_duration(const EventStream& stream, double seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) throw ValidationError("fixed-duration grouping needs T_G > 0");
    if (stream.empty()) return {};
    return group_fixed_duration(stream, seconds, TimeWindow{stream.t_first(), stream.t_last()});
}

GroupTimeline group_fixed_duration(const EventStream& stream, double seconds, TimeWindow window) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) throw ValidationError("fixed-duration grouping needs T_G > 0");
    if (!(window.end >= window.start)) throw ValidationError("grouping window ends before it starts");
    GroupTimeline timeline;
    const double t0 = window.start;
    const auto n_groups =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((window.end - window.start) / seconds)));
    timeline.groups.reserve(n_groups);
    const auto events = stream.events();
    std::size_t begin = first_at_or_after(events, t0);
    for (std::size_t k = 0; k < n_groups; ++k) {
        const double start = t0 + static_cast<double>(k) * seconds;
        double end_t = t0 + static_cast<double>(k + 1) * seconds;
        const bool last = k + 1 == n_groups;
        std::size_t end = 0;
        if (last) {
            end_t = std::max(end_t, window.end);
            auto it = std::upper_bound(events.begin(), events.end(), end_t,
                                       [](double v, const Event& e) { return v < e.t; });
            end = std::max(begin, static_cast<std::size_t>(it - events.begin()));
        } else {
            end = std::max(begin, first_at_or_after(events, end_t));
        }
        timeline.groups.push_back(make_group(stream, k, begin, end, start, end_t, last));
        begin = end;
    }
    return timeline;
}

GroupTimeline group_between_frames(const EventStream& stream, std::span<const double> frame_times) {
    if (frame_times.size() < 2) throw ValidationError("between-frames grouping needs at least two frames");
    for (std::size_t i = 1; i < frame_times.size(); ++i) {
        if (!(frame_times[i] > frame_times[i - 1])) throw ValidationError("frame times must be strictly increasing");
    }
    GroupTimeline timeline;
    timeline.groups.reserve(frame_times.size() - 1);
    const auto events = stream.events();
    std::size_t begin = first_at_or_after(events, frame_times[0]);
    for (std::size_t k = 0; k + 1 < frame_times.size(); ++k) {
        const std::size_t end = first_at_or_after(events, frame_times[k + 1]);
        timeline.groups.push_back(make_group(stream, k, begin, end, frame_times[k], frame_times[k + 1], false));
        begin = end;
    }
    return timeline;
}

GroupTimeline make_timeline(const EventStream& stream, const GroupingSpec& spec,
                            std::optional<std::span<const double>> frame_times) {
    return std::visit(
        [&](const auto& mode) -> GroupTimeline {
            using T = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<T, FixedNumber>) {
                return group_fixed_number(stream, mode.count);
            } else if constexpr (std::is_same_v<T, FixedDuration>) {
                return group_fixed_duration(stream, mode.seconds);
            } else {
                if (!frame_times) throw ValidationError("between-frames grouping needs ground-truth frames");
                return group_between_frames(stream, *frame_times);
            }
        },
        spec.mode());
}

MatchPolicy::MatchPolicy(double tol) : tolerance(tol) {
    if (!(tol >= 0.0)) throw ValidationError("matching tolerance must be non-negative");
}

std::vector<GroupMatch> match_ground_truth(const GroupTimeline& timeline, std::span<const double> frame_times,
                                           const MatchPolicy& policy) {
    std::vector<GroupMatch> matches(timeline.size());
    // Best claimant per frame: (distance, group).
    std::vector<std::optional<std::pair<double, std::size_t>>> claims(frame_times.size());

    for (std::size_t k = 0; k < timeline.size(); ++k) {
        matches[k].group = k;
        if (frame_times.empty()) continue;
        const double target = timeline[k].target_time;
        auto it = std::lower_bound(frame_times.begin(), frame_times.end(), target);
        std::size_t best = frame_times.size();
        double best_d = std::numeric_limits<double>::infinity();
        if (it != frame_times.begin()) {
            best = static_cast<std::size_t>(it - frame_times.begin()) - 1;
            best_d = std::abs(target - frame_times[best]);
        }
        if (it != frame_times.end()) {
            const double d = std::abs(*it - target);
            if (d < best_d) {
                best = static_cast<std::size_t>(it - frame_times.begin());
                best_d = d;
            }
        }
        if (best == frame_times.size() || !(best_d <= policy.tolerance)) continue;
        auto& claim = claims[best];
        if (!claim || best_d < claim->first) claim = std::make_pair(best_d, k);
    }

    for (std::size_t f = 0; f < claims.size(); ++f) {
        if (!claims[f]) continue;
        auto& m = matches[claims[f]->second];
        m.frame = f;
        m.delta = claims[f]->first;
    }
    return matches;
}

}  // namespace evb
