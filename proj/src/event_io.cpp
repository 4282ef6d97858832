#include "evb/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>

#include "evb/bytes.hpp"

namespace evb {

namespace bytes {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

}  // namespace bytes

namespace {

std::string_view next_token(std::string_view& line) {
    std::size_t begin = line.find_first_not_of(" \t\r,");
    if (begin == std::string_view::npos) {
        line = {};
        return {};
    }
    std::size_t end = line.find_first_of(" \t\r,", begin);
    if (end == std::string_view::npos) end = line.size();
    std::string_view token = line.substr(begin, end - begin);
    line.remove_prefix(end);
    return token;
}

template <typename T>
std::optional<T> parse_number(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    T value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

[[noreturn]] void fail_line(const std::string& origin, std::size_t line_no, const std::string& what) {
    throw ParseError(origin + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

EventStream parse_text_events_buffer(std::string_view text, SensorGeometry geometry, TextParseOptions options,
                                     const std::string& origin) {
    std::vector<Event> events;
    std::size_t line_no = 0;
    double previous = -std::numeric_limits<double>::infinity();
    bool sorted = true;

    while (!text.empty()) {
        std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;

        std::string_view rest = line;
        std::string_view t_tok = next_token(rest);
        if (t_tok.empty() || t_tok.front() == '#') continue;
        std::string_view x_tok = next_token(rest);
        std::string_view y_tok = next_token(rest);
        std::string_view p_tok = next_token(rest);
        if (p_tok.empty() || !next_token(rest).empty()) {
            fail_line(origin, line_no, "expected 't x y p'");
        }

        auto t = parse_number<double>(t_tok);
        auto x = parse_number<long>(x_tok);
        auto y = parse_number<long>(y_tok);
        auto p = parse_number<int>(p_tok);
        if (!t || !x || !y || !p) fail_line(origin, line_no, "malformed number");
        if (!std::isfinite(*t) || *t < 0.0) fail_line(origin, line_no, "timestamp must be finite and non-negative");
        if (*x < 0 || *x >= geometry.width) {
            fail_line(origin, line_no, "x out of bounds (" + std::to_string(*x) + ")");
        }
        if (*y < 0 || *y >= geometry.height) {
            fail_line(origin, line_no, "y out of bounds (" + std::to_string(*y) + ")");
        }
        std::int8_t polarity = 0;
        if (*p == 1) {
            polarity = 1;
        } else if (*p == 0 || *p == -1) {
            polarity = -1;
        } else {
            fail_line(origin, line_no, "polarity must be 0/1 or -1/+1");
        }
        if (*t < previous) {
            if (!options.sort) fail_line(origin, line_no, "timestamps are not non-decreasing");
            sorted = false;
        }
        previous = *t;
        events.push_back(Event{*t, static_cast<std::uint16_t>(*x), static_cast<std::uint16_t>(*y), polarity});
    }

    if (!sorted) {
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    return EventStream(geometry, std::move(events));
}

EventStream parse_text_events(const std::filesystem::path& path, SensorGeometry geometry, TextParseOptions options) {
    auto data = bytes::read_file(path.string());
    std::string_view text(reinterpret_cast<const char*>(data.data()), data.size());
    return parse_text_events_buffer(text, geometry, options, path.string());
}

void write_text_events(const EventStream& stream, const std::filesystem::path& path) {
    std::FILE* out = std::fopen(path.string().c_str(), "wb");
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    char buf[64];
    for (const Event& e : stream.events()) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.t);
        *ptr = '\0';
        std::fprintf(out, "%s %u %u %d\n", buf, unsigned(e.x), unsigned(e.y), int(e.p));
    }
    if (std::fclose(out) != 0) throw std::runtime_error("failed to finish '" + path.string() + "'");
}

std::vector<std::uint8_t> encode_binary_events(const EventStream& stream) {
    bytes::Writer w;
    w.reserve(kEvt1HeaderSize + stream.size() * kEvt1RecordSize);
    w.tag("EVT1");
    w.u8(kEvt1Version);
    w.u8(0);
    w.u16(static_cast<std::uint16_t>(stream.geometry().width));
    w.u16(static_cast<std::uint16_t>(stream.geometry().height));
    w.u64(stream.size());
    for (const Event& e : stream.events()) {
        w.f64(e.t);
        w.u16(e.x);
        w.u16(e.y);
        w.i8(e.p);
    }
    return w.take();
}

EventStream decode_binary_events(std::span<const std::uint8_t> data) {
    if (data.size() < kEvt1HeaderSize) throw ParseError("EVT1: truncated header");
    if (std::memcmp(data.data(), "EVT1", 4) != 0) throw ParseError("EVT1: bad magic");
    bytes::Reader r(data.subspan(4));
    const auto version = r.u8();
    if (version != kEvt1Version) throw ParseError("EVT1: unsupported version " + std::to_string(version));
    r.u8();
    const int width = r.u16();
    const int height = r.u16();
    const std::uint64_t count = r.u64();
    const std::size_t payload = data.size() - kEvt1HeaderSize;
    if (payload % kEvt1RecordSize != 0) throw ParseError("EVT1: truncated payload");
    if (count != payload / kEvt1RecordSize) {
        throw ParseError("EVT1: header declares " + std::to_string(count) + " events, payload holds " +
                         std::to_string(payload / kEvt1RecordSize));
    }
    std::vector<Event> events(count);
    for (auto& e : events) {
        e.t = r.f64();
        e.x = r.u16();
        e.y = r.u16();
        e.p = r.i8();
    }
    try {
        return EventStream(SensorGeometry(width, height), std::move(events));
    } catch (const ValidationError& err) {
        throw ParseError(std::string("EVT1: ") + err.what());
    }
}

EventStream parse_binary_events(const std::filesystem::path& path) {
    auto data = bytes::read_file(path.string());
    try {
        return decode_binary_events(data);
    } catch (const ParseError& err) {
        throw ParseError(path.string() + ": " + err.what());
    }
}

void write_binary_events(const EventStream& stream, const std::filesystem::path& path) {
    bytes::write_file(path.string(), encode_binary_events(stream));
}

bool is_binary_event_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::memcmp(magic, "EVT1", 4) == 0;
}

EventStream load_events(const std::filesystem::path& path, std::optional<SensorGeometry> geometry,
                        TextParseOptions options) {
    if (!std::filesystem::exists(path)) throw ParseError("no such event file '" + path.string() + "'");
    if (is_binary_event_file(path)) {
        EventStream stream = parse_binary_events(path);
        if (geometry && *geometry != stream.geometry()) {
            throw ParseError(path.string() + ": geometry in file differs from the configured geometry");
        }
        return stream;
    }
    if (!geometry) throw ParseError(path.string() + ": text event files need an explicit sensor geometry");
    return parse_text_events(path, *geometry, options);
}

}  // namespace evb
