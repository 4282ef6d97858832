#include "evb/frame_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "evb/bytes.hpp"

namespace evb {

namespace {

// Skips whitespace and '#' comments in a PNM header.
void skip_header_space(std::span<const std::uint8_t> data, std::size_t& pos) {
    while (pos < data.size()) {
        if (data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (std::isspace(data[pos])) {
            ++pos;
        } else {
            break;
        }
    }
}

int read_header_int(std::span<const std::uint8_t> data, std::size_t& pos) {
    skip_header_space(data, pos);
    const std::size_t begin = pos;
    while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') ++pos;
    if (pos == begin || pos - begin > 9) throw ParseError("PGM: malformed header");
    int value = 0;
    std::from_chars(reinterpret_cast<const char*>(data.data() + begin), reinterpret_cast<const char*>(data.data() + pos),
                    value);
    return value;
}

}  // namespace

Image decode_pgm(std::span<const std::uint8_t> data) {
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw ParseError("PGM: not a binary P5 file");
    std::size_t pos = 2;
    const int width = read_header_int(data, pos);
    const int height = read_header_int(data, pos);
    const int maxval = read_header_int(data, pos);
    if (width < 1 || height < 1) throw ParseError("PGM: empty image");
    if (maxval != 255) throw ParseError("PGM: only 8-bit images (maxval 255) are supported");
    if (pos >= data.size() || !std::isspace(data[pos])) throw ParseError("PGM: malformed header");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (data.size() - pos < n) throw ParseError("PGM: truncated pixel data");
    Image image(width, height);
    for (std::size_t i = 0; i < n; ++i) image.pixels[i] = data[pos + i] / 255.0;
    return image;
}

Image read_pgm(const std::filesystem::path& path) {
    auto data = bytes::read_file(path.string());
    try {
        return decode_pgm(data);
    } catch (const ParseError& err) {
        throw ParseError(path.string() + ": " + err.what());
    }
}

std::vector<std::uint8_t> encode_pgm(const Image& image) {
    const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.size());
    for (double v : image.pixels) {
        const double clamped = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
    }
    return out;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
    bytes::write_file(path.string(), encode_pgm(image));
}

std::string frame_file_name(std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.pgm", index);
    return name;
}

FrameStream load_frame_stream(const std::filesystem::path& dir) {
    const auto ts_path = dir / "timestamps.txt";
    std::ifstream in(ts_path);
    if (!in) throw ParseError("cannot open '" + ts_path.string() + "'");

    std::vector<double> timestamps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        double t = 0.0;
        auto [ptr, ec] = std::from_chars(line.data() + first, line.data() + last + 1, t);
        if (ec != std::errc() || ptr != line.data() + last + 1 || !std::isfinite(t)) {
            throw ParseError(ts_path.string() + ":" + std::to_string(line_no) + ": malformed timestamp");
        }
        if (!timestamps.empty() && t <= timestamps.back()) {
            throw ParseError(ts_path.string() + ":" + std::to_string(line_no) + ": timestamps must be increasing");
        }
        timestamps.push_back(t);
    }

    std::size_t image_count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".pgm") ++image_count;
    }
    if (image_count != timestamps.size()) {
        throw ParseError(dir.string() + ": " + std::to_string(image_count) + " images but " +
                         std::to_string(timestamps.size()) + " timestamps");
    }

    std::vector<Frame> frames;
    frames.reserve(timestamps.size());
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        const auto path = dir / frame_file_name(i);
        if (!std::filesystem::exists(path)) throw ParseError("missing frame '" + path.string() + "'");
        frames.push_back(Frame{timestamps[i], read_pgm(path)});
    }
    if (frames.empty()) throw ParseError(dir.string() + ": no frames");
    const SensorGeometry geometry(frames.front().image.width, frames.front().image.height);
    try {
        return FrameStream(geometry, std::move(frames));
    } catch (const ValidationError& err) {
        throw ParseError(dir.string() + ": " + err.what());
    }
}

void write_frame_stream(const FrameStream& frames, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::FILE* ts = std::fopen((dir / "timestamps.txt").string().c_str(), "wb");
    if (!ts) throw std::runtime_error("cannot write timestamps in '" + dir.string() + "'");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, frames[i].timestamp);
        *ptr = '\0';
        std::fprintf(ts, "%s\n", buf);
        write_pgm(frames[i].image, dir / frame_file_name(i));
    }
    std::fclose(ts);
}

}  // namespace evb
