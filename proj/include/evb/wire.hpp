#pragma once

// Framing shared by the harness and external plugin processes.
//
//   message := tag[4 ASCII] | length u32 LE | payload[length]
//   TEN1    := "TEN1" | dtype u8 (1 = f32 LE) | ndim u8 (1..4) | ndim x u32 LE dims | row-major payload
//
// Tags: INIT IRES RSET TENS IMGR METQ METR ERRS QUIT.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evb/event_model.hpp"

namespace evb::wire {

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kDtypeF32 = 1;
inline constexpr std::size_t kMaxDims = 4;
inline constexpr std::size_t kMessageHeaderSize = 8;
/// Upper bound on a single payload; larger declared lengths are rejected as corrupt.
inline constexpr std::uint32_t kMaxPayload = 256u << 20;

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
void encode_tensor_into(const Tensor& tensor, std::vector<std::uint8_t>& out);
/// Decodes exactly one tensor spanning all of `data`.
Tensor decode_tensor(std::span<const std::uint8_t> data);
/// Decodes one tensor from the front of `data` and reports how many bytes it used.
Tensor decode_tensor_prefix(std::span<const std::uint8_t> data, std::size_t& consumed);

Tensor tensor_from_image(const Image& image);
/// Interprets an (H, W) tensor as an image.
Image image_from_tensor(const Tensor& tensor);

using Tag = std::array<char, 4>;

constexpr Tag make_tag(const char (&s)[5]) {
    return {s[0], s[1], s[2], s[3]};
}

inline constexpr Tag kInit = make_tag("INIT");
inline constexpr Tag kIres = make_tag("IRES");
inline constexpr Tag kRset = make_tag("RSET");
inline constexpr Tag kTens = make_tag("TENS");
inline constexpr Tag kImgr = make_tag("IMGR");
inline constexpr Tag kMetq = make_tag("METQ");
inline constexpr Tag kMetr = make_tag("METR");
inline constexpr Tag kErrs = make_tag("ERRS");
inline constexpr Tag kQuit = make_tag("QUIT");

bool is_known_tag(const Tag& tag);
std::string tag_name(const Tag& tag);

struct Message {
    Tag tag{};
    std::vector<std::uint8_t> payload;

    std::string_view text() const {
        return {reinterpret_cast<const char*>(payload.data()), payload.size()};
    }
};

std::vector<std::uint8_t> encode_message(const Tag& tag, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_message(const Tag& tag, std::string_view text);

/// Incremental decoder for a byte stream of messages. Never throws on bad input:
/// malformed data moves it into a sticky error state.
class FrameDecoder {
public:
    enum class Status { NeedMore, Ready, Error };

    void feed(std::span<const std::uint8_t> data);
    /// Pops the next complete message if there is one.
    Status next(Message& out);
    const std::string& error() const { return error_; }
    std::size_t buffered() const { return buffer_.size() - head_; }

private:
    std::vector<std::uint8_t> buffer_;
    std::size_t head_ = 0;
    std::string error_;
};

/// "key=value" lines, as used by INIT and IRES.
using KeyValues = std::map<std::string, std::string>;
std::string format_key_values(const KeyValues& kv);
KeyValues parse_key_values(std::string_view text);

std::vector<std::uint8_t> encode_f64(double v);
double decode_f64(std::span<const std::uint8_t> payload);

}  // namespace evb::wire
