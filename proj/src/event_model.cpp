#include "evb/event_model.hpp"

#include <cmath>
#include <string>

namespace evb {

SensorGeometry::SensorGeometry(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1 || w > 65535 || h > 65535) {
        throw ValidationError("sensor geometry must be between 1x1 and 65535x65535, got " + std::to_string(w) + "x" +
                              std::to_string(h));
    }
}

EventStream::EventStream(SensorGeometry geometry, std::vector<Event> events)
    : geometry_(geometry), events_(std::move(events)) {
    double previous = 0.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        if (!std::isfinite(e.t) || e.t < 0.0) {
            throw ValidationError("event " + std::to_string(i) + " has an invalid timestamp");
        }
        if (!geometry_.contains(e.x, e.y)) {
            throw ValidationError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + ", " +
                                  std::to_string(e.y) + ") is outside the sensor");
        }
        if (e.p != 1 && e.p != -1) {
            throw ValidationError("event " + std::to_string(i) + " has polarity " + std::to_string(e.p));
        }
        if (i > 0 && e.t < previous) {
            throw ValidationError("event " + std::to_string(i) + " breaks time ordering");
        }
        previous = e.t;
    }
}

double EventStream::t_first() const {
    return events_.empty() ? 0.0 : events_.front().t;
}

double EventStream::t_last() const {
    return events_.empty() ? 0.0 : events_.back().t;
}

double EventStream::span() const {
    return t_last() - t_first();
}

Image::Image(int w, int h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

Image::Image(int w, int h, std::vector<double> values) : width(w), height(h), pixels(std::move(values)) {
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
        throw ValidationError("image buffer size does not match " + std::to_string(w) + "x" + std::to_string(h));
    }
}

bool in_unit_range(const Image& image) {
    for (double v : image.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

FrameStream::FrameStream(SensorGeometry geometry, std::vector<Frame> frames)
    : geometry_(geometry), frames_(std::move(frames)) {
    for (std::size_t i = 0; i < frames_.size(); ++i) {
        const Frame& f = frames_[i];
        if (f.image.width != geometry_.width || f.image.height != geometry_.height) {
            throw ValidationError("frame " + std::to_string(i) + " does not match the sensor geometry");
        }
        if (!in_unit_range(f.image)) {
            throw ValidationError("frame " + std::to_string(i) + " has pixels outside [0,1]");
        }
        if (!std::isfinite(f.timestamp) || (i > 0 && f.timestamp <= frames_[i - 1].timestamp)) {
            throw ValidationError("frame timestamps must be strictly increasing (frame " + std::to_string(i) + ")");
        }
    }
}

std::vector<double> FrameStream::timestamps() const {
    std::vector<double> out;
    out.reserve(frames_.size());
    for (const Frame& f : frames_) out.push_back(f.timestamp);
    return out;
}

SequenceDataset::SequenceDataset(std::string n, EventStream ev, std::optional<FrameStream> gt,
                                 std::optional<TimeWindow> window)
    : name(std::move(n)), events(std::move(ev)), ground_truth(std::move(gt)), eval_window(window) {
    if (ground_truth && ground_truth->geometry() != events.geometry()) {
        throw ValidationError("sequence '" + name + "': ground truth geometry differs from event geometry");
    }
    if (eval_window && eval_window->end < eval_window->start) {
        throw ValidationError("sequence '" + name + "': evaluation window ends before it starts");
    }
}

}  // namespace evb
