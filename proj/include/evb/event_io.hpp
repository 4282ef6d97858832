#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evb/event_model.hpp"

namespace evb {

struct TextParseOptions {
    /// Sort events by timestamp instead of rejecting out-of-order input.
    bool sort = false;
};

/// Reads "t x y p" lines. Blank lines and lines starting with '#' are skipped.
/// Polarity may be written as 0/1 or -1/+1; 0 maps to -1.
EventStream parse_text_events(const std::filesystem::path& path, SensorGeometry geometry,
                              TextParseOptions options = {});

/// Same as parse_text_events, on an in-memory buffer. `origin` names the source in errors.
EventStream parse_text_events_buffer(std::string_view text, SensorGeometry geometry, TextParseOptions options = {},
                                     const std::string& origin = "<buffer>");

/// Writes "t x y p" lines with shortest round-trip timestamps and -1/+1 polarities.
void write_text_events(const EventStream& stream, const std::filesystem::path& path);

// "EVT1" container:
//   magic "EVT1" | version u8 = 1 | reserved u8 = 0 | width u16 | height u16 | count u64
//   followed by count records of { t f64, x u16, y u16, p i8 }, all little-endian.
inline constexpr std::size_t kEvt1HeaderSize = 18;
inline constexpr std::size_t kEvt1RecordSize = 13;
inline constexpr std::uint8_t kEvt1Version = 1;

std::vector<std::uint8_t> encode_binary_events(const EventStream& stream);
EventStream decode_binary_events(std::span<const std::uint8_t> data);

EventStream parse_binary_events(const std::filesystem::path& path);
void write_binary_events(const EventStream& stream, const std::filesystem::path& path);

/// True when the file starts with the EVT1 magic.
bool is_binary_event_file(const std::filesystem::path& path);

/// Dispatches on the file's magic; text input needs a geometry.
EventStream load_events(const std::filesystem::path& path, std::optional<SensorGeometry> geometry,
                        TextParseOptions options = {});

}  // namespace evb
