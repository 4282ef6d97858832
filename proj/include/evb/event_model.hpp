#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evb {

/// Raised when input data violates a domain invariant (bounds, ordering, ranges).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the file readers; carries the offending path and, for text input, the line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SensorGeometry {
    int width = 0;
    int height = 0;

    SensorGeometry() = default;
    SensorGeometry(int w, int h);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// A single sensor event. Polarity is canonically +1 or -1.
struct Event {
    double t = 0.0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Time-sorted, bounds-checked sequence of events. Immutable after construction.
class EventStream {
public:
    EventStream() = default;
    /// Validates every event against the geometry and the sort order; throws ValidationError.
    EventStream(SensorGeometry geometry, std::vector<Event> events);

    const SensorGeometry& geometry() const { return geometry_; }
    std::span<const Event> events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    const Event& operator[](std::size_t i) const { return events_[i]; }

    double t_first() const;
    double t_last() const;
    /// t_last - t_first, or 0 for an empty stream.
    double span() const;

    friend bool operator==(const EventStream&, const EventStream&) = default;

private:
    SensorGeometry geometry_;
    std::vector<Event> events_;
};

/// Row-major grayscale image. Values are unconstrained here; Frame and
/// Reconstruction enforce the [0,1] range where required.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0);
    Image(int w, int h, std::vector<double> values);

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }
    bool same_shape(const Image& other) const { return width == other.width && height == other.height; }

    friend bool operator==(const Image&, const Image&) = default;
};

/// True when every pixel is finite and inside [0,1].
bool in_unit_range(const Image& image);

struct Frame {
    double timestamp = 0.0;
    Image image;
};

/// Ground-truth or reconstructed frames with strictly increasing timestamps.
class FrameStream {
public:
    FrameStream() = default;
    FrameStream(SensorGeometry geometry, std::vector<Frame> frames);

    const SensorGeometry& geometry() const { return geometry_; }
    std::span<const Frame> frames() const { return frames_; }
    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    std::vector<double> timestamps() const;

private:
    SensorGeometry geometry_;
    std::vector<Frame> frames_;
};

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
    bool contains(double t) const { return t >= start && t <= end; }
};

struct SequenceDataset {
    std::string name;
    EventStream events;
    std::optional<FrameStream> ground_truth;
    std::optional<TimeWindow> eval_window;

    SequenceDataset() = default;
    SequenceDataset(std::string name, EventStream events, std::optional<FrameStream> ground_truth = std::nullopt,
                    std::optional<TimeWindow> eval_window = std::nullopt);
};

}  // namespace evb
