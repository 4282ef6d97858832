#include "evb/wire.hpp"

#include <cstring>
#include <limits>

#include "evb/bytes.hpp"

namespace evb::wire {

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

void encode_tensor_into(const Tensor& tensor, std::vector<std::uint8_t>& out) {
    if (tensor.dims.empty() || tensor.dims.size() > kMaxDims) {
        throw WireError("TEN1: tensors need 1 to 4 dimensions");
    }
    if (tensor.element_count() != tensor.data.size()) throw WireError("TEN1: dims do not match data size");
    bytes::Writer w;
    w.reserve(6 + 4 * tensor.dims.size() + 4 * tensor.data.size());
    w.tag("TEN1");
    w.u8(kDtypeF32);
    w.u8(static_cast<std::uint8_t>(tensor.dims.size()));
    for (auto d : tensor.dims) w.u32(d);
    w.raw(tensor.data.data(), tensor.data.size() * sizeof(float));
    auto& buf = w.data();
    out.insert(out.end(), buf.begin(), buf.end());
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
    std::vector<std::uint8_t> out;
    encode_tensor_into(tensor, out);
    return out;
}

Tensor decode_tensor_prefix(std::span<const std::uint8_t> data, std::size_t& consumed) {
    if (data.size() < 6) throw WireError("TEN1: truncated header");
    if (std::memcmp(data.data(), "TEN1", 4) != 0) throw WireError("TEN1: bad magic");
    bytes::Reader r(data.subspan(4));
    if (r.u8() != kDtypeF32) throw WireError("TEN1: unsupported dtype");
    const std::size_t ndim = r.u8();
    if (ndim < 1 || ndim > kMaxDims) throw WireError("TEN1: ndim must be between 1 and 4");
    if (r.remaining() < 4 * ndim) throw WireError("TEN1: truncated dims");
    Tensor t;
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const std::uint32_t d = r.u32();
        t.dims.push_back(d);
        if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d) {
            throw WireError("TEN1: dims product overflows");
        }
        count *= d;
    }
    if (count > r.remaining() / sizeof(float)) throw WireError("TEN1: payload shorter than dims declare");
    t.data.resize(static_cast<std::size_t>(count));
    auto payload = r.take(t.data.size() * sizeof(float));
    std::memcpy(t.data.data(), payload.data(), payload.size());
    consumed = 4 + r.position();
    return t;
}

Tensor decode_tensor(std::span<const std::uint8_t> data) {
    std::size_t consumed = 0;
    Tensor t = decode_tensor_prefix(data, consumed);
    if (consumed != data.size()) throw WireError("TEN1: trailing bytes after payload");
    return t;
}

Tensor tensor_from_image(const Image& image) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(image.height), static_cast<std::uint32_t>(image.width)};
    t.data.assign(image.pixels.begin(), image.pixels.end());
    return t;
}

Image image_from_tensor(const Tensor& tensor) {
    if (tensor.dims.size() != 2) throw WireError("expected a 2-D image tensor");
    Image image(static_cast<int>(tensor.dims[1]), static_cast<int>(tensor.dims[0]));
    for (std::size_t i = 0; i < tensor.data.size(); ++i) image.pixels[i] = tensor.data[i];
    return image;
}

bool is_known_tag(const Tag& tag) {
    for (const Tag& t : {kInit, kIres, kRset, kTens, kImgr, kMetq, kMetr, kErrs, kQuit}) {
        if (t == tag) return true;
    }
    return false;
}

std::string tag_name(const Tag& tag) {
    std::string out;
    for (char c : tag) {
        if (c >= 0x20 && c < 0x7f) {
            out += c;
        } else {
            out += '?';
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_message(const Tag& tag, std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayload) throw WireError("message payload too large");
    bytes::Writer w;
    w.reserve(kMessageHeaderSize + payload.size());
    w.raw(tag.data(), 4);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.append(payload);
    return w.take();
}

std::vector<std::uint8_t> encode_message(const Tag& tag, std::string_view text) {
    return encode_message(tag, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void FrameDecoder::feed(std::span<const std::uint8_t> data) {
    if (!error_.empty()) return;
    if (head_ > 0 && head_ == buffer_.size()) {
        buffer_.clear();
        head_ = 0;
    }
    buffer_.insert(buffer_.end(), data.begin(), data.end());
}

FrameDecoder::Status FrameDecoder::next(Message& out) {
    if (!error_.empty()) return Status::Error;
    const std::size_t avail = buffer_.size() - head_;
    if (avail < kMessageHeaderSize) return Status::NeedMore;
    Tag tag;
    std::memcpy(tag.data(), buffer_.data() + head_, 4);
    if (!is_known_tag(tag)) {
        error_ = "unknown message tag '" + tag_name(tag) + "'";
        return Status::Error;
    }
    std::uint32_t len = 0;
    std::memcpy(&len, buffer_.data() + head_ + 4, 4);
    if (len > kMaxPayload) {
        error_ = "declared payload length " + std::to_string(len) + " exceeds limit";
        return Status::Error;
    }
    if (avail - kMessageHeaderSize < len) return Status::NeedMore;
    out.tag = tag;
    const auto* begin = buffer_.data() + head_ + kMessageHeaderSize;
    out.payload.assign(begin, begin + len);
    head_ += kMessageHeaderSize + len;
    if (head_ == buffer_.size()) {
        buffer_.clear();
        head_ = 0;
    }
    return Status::Ready;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw WireError("malformed key=value line '" + std::string(line) + "'");
        kv[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    }
    return kv;
}

std::vector<std::uint8_t> encode_f64(double v) {
    std::vector<std::uint8_t> out(8);
    std::memcpy(out.data(), &v, 8);
    return out;
}

double decode_f64(std::span<const std::uint8_t> payload) {
    if (payload.size() != 8) throw WireError("METR payload must be 8 bytes");
    double v = 0.0;
    std::memcpy(&v, payload.data(), 8);
    return v;
}

}  // namespace evb::wire
