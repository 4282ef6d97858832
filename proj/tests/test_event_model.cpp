#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "evb/bytes.hpp"
#include "evb/event_io.hpp"
#include "evb/frame_io.hpp"
#include "oracles.hpp"

using namespace evb;

namespace {

void write_string(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

// Little-endian field reads done by hand, independent of bytes::Reader.
std::uint64_t le(const std::vector<std::uint8_t>& b, std::size_t off, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[off + i];
    return v;
}

}  // namespace

TEST_CASE("geometry bounds") {
    CHECK_THROWS_AS(SensorGeometry(0, 10), ValidationError);
    CHECK_THROWS_AS(SensorGeometry(10, 0), ValidationError);
    SensorGeometry g(240, 180);
    CHECK(g.pixel_count() == 43200);
    CHECK(g.contains(239, 179));
    CHECK_FALSE(g.contains(240, 0));
}

TEST_CASE("event stream validation") {
    SensorGeometry g(4, 4);
    CHECK_NOTHROW(EventStream(g, {{0.0, 0, 0, 1}, {0.0, 3, 3, -1}}));
    CHECK_THROWS_AS(EventStream(g, {{0.0, 4, 0, 1}}), ValidationError);
    CHECK_THROWS_AS(EventStream(g, {{0.0, 0, 0, 0}}), ValidationError);
    CHECK_THROWS_AS(EventStream(g, {{-1.0, 0, 0, 1}}), ValidationError);
    CHECK_THROWS_AS(EventStream(g, {{0.5, 0, 0, 1}, {0.4, 0, 0, 1}}), ValidationError);
    EventStream s(g, {{0.25, 0, 0, 1}, {1.0, 1, 1, -1}});
    CHECK(s.t_first() == 0.25);
    CHECK(s.t_last() == 1.0);
    CHECK(s.span() == 0.75);
    CHECK(EventStream(g, {}).span() == 0.0);
}

TEST_CASE("text events: polarity mapping and comments") {
    const auto s = parse_text_events_buffer("# header\n0.0 1 2 1\n\n0.5 3 2 0\n", SensorGeometry(240, 180));
    REQUIRE(s.size() == 2);
    CHECK(s[0].p == 1);
    CHECK(s[1].p == -1);
    CHECK(s[1].x == 3);
    CHECK(s[1].y == 2);
    CHECK(s[1].t == 0.5);
    const auto signed_p = parse_text_events_buffer("0.1 0 0 -1\n0.2 0 0 1\n", SensorGeometry(2, 2));
    CHECK(signed_p[0].p == -1);
    CHECK(signed_p[1].p == 1);
}

TEST_CASE("text events: errors carry the line number") {
    const SensorGeometry g(240, 180);
    try {
        parse_text_events_buffer("0.0 1 1 1\n0.1 300 2 1\n", g, {}, "f.txt");
        FAIL("expected an error");
    } catch (const ParseError& err) {
        CHECK(std::string(err.what()).find("f.txt:2") != std::string::npos);
        CHECK(std::string(err.what()).find("x out of bounds") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_text_events_buffer("0.1 2 200 1\n", g), ParseError);
    CHECK_THROWS_AS(parse_text_events_buffer("0.1 2 2\n", g), ParseError);
    CHECK_THROWS_AS(parse_text_events_buffer("abc 2 2 1\n", g), ParseError);
    CHECK_THROWS_AS(parse_text_events_buffer("0.1 2 2 5\n", g), ParseError);
    CHECK_THROWS_AS(parse_text_events_buffer("0.1 2 2 1 9\n", g), ParseError);
}

TEST_CASE("text events: unsorted input needs the sort flag") {
    const SensorGeometry g(10, 10);
    const std::string text = "0.3 1 1 1\n0.1 2 2 0\n0.2 3 3 1\n";
    CHECK_THROWS_AS(parse_text_events_buffer(text, g), ParseError);
    const auto s = parse_text_events_buffer(text, g, TextParseOptions{true});
    REQUIRE(s.size() == 3);
    CHECK(s[0].t == 0.1);
    CHECK(s[1].t == 0.2);
    CHECK(s[2].t == 0.3);
}

TEST_CASE("EVT1 header and record layout") {
    const SensorGeometry g(240, 180);
    const auto empty = encode_binary_events(EventStream(g, {}));
    CHECK(empty.size() == kEvt1HeaderSize);
    CHECK(kEvt1HeaderSize == 4 + 1 + 1 + 2 + 2 + 8);
    CHECK(std::memcmp(empty.data(), "EVT1", 4) == 0);
    CHECK(empty[4] == 1);
    CHECK(empty[5] == 0);
    CHECK(le(empty, 6, 2) == 240);
    CHECK(le(empty, 8, 2) == 180);
    CHECK(le(empty, 10, 8) == 0);

    const auto one = encode_binary_events(EventStream(g, {{1.0, 5, 6, 1}}));
    REQUIRE(one.size() == kEvt1HeaderSize + 13);
    CHECK(le(one, 10, 8) == 1);
    const std::size_t r = kEvt1HeaderSize;
    double t = 0;
    const std::uint64_t bits = le(one, r, 8);
    std::memcpy(&t, &bits, 8);
    CHECK(t == 1.0);
    CHECK(bits == 0x3FF0000000000000ull);
    CHECK(le(one, r + 8, 2) == 5);
    CHECK(le(one, r + 10, 2) == 6);
    CHECK(static_cast<std::int8_t>(one[r + 12]) == 1);
}

TEST_CASE("EVT1 decoding errors") {
    const SensorGeometry g(8, 8);
    auto good = encode_binary_events(EventStream(g, {{0.1, 1, 1, 1}, {0.2, 2, 2, -1}}));
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_binary_events(bad_magic), ParseError);
    auto truncated = good;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_binary_events(truncated), ParseError);
    auto short_header = std::vector<std::uint8_t>(good.begin(), good.begin() + 10);
    CHECK_THROWS_AS(decode_binary_events(short_header), ParseError);
    auto wrong_count = good;
    wrong_count[10] = 3;
    CHECK_THROWS_AS(decode_binary_events(wrong_count), ParseError);
    auto bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode_binary_events(bad_version), ParseError);
    auto out_of_bounds = good;
    out_of_bounds[kEvt1HeaderSize + 8] = 9;
    CHECK_THROWS_AS(decode_binary_events(out_of_bounds), ParseError);
}

TEST_CASE("10,000-line text fixture round-trips through EVT1 field for field") {
    const auto dir = oracle::scratch("event_roundtrip");
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> ux(0, 239), uy(0, 179), up(0, 1);
    std::string text;
    std::vector<Event> expected;
    double t = 0.0;
    for (int i = 0; i < 10000; ++i) {
        t += std::uniform_real_distribution<double>(0.0, 1e-3)(rng);
        char line[96];
        std::snprintf(line, sizeof line, "%.9f %d %d %d\n", t, ux(rng), uy(rng), up(rng));
        text += line;
        double tv;
        int x, y, p;
        std::sscanf(line, "%lf %d %d %d", &tv, &x, &y, &p);
        expected.push_back(Event{tv, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                 static_cast<std::int8_t>(p ? 1 : -1)});
    }
    write_string(dir / "events.txt", text);
    const SensorGeometry g(240, 180);
    const EventStream parsed = parse_text_events(dir / "events.txt", g);
    REQUIRE(parsed.size() == 10000);
    write_binary_events(parsed, dir / "events.evt1");
    const EventStream back = parse_binary_events(dir / "events.evt1");
    REQUIRE(back.size() == expected.size());
    CHECK(back.geometry() == g);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(back[i].t == expected[i].t);
        CHECK(back[i].x == expected[i].x);
        CHECK(back[i].y == expected[i].y);
        CHECK(back[i].p == expected[i].p);
    }
    CHECK(is_binary_event_file(dir / "events.evt1"));
    CHECK_FALSE(is_binary_event_file(dir / "events.txt"));

    write_text_events(back, dir / "again.txt");
    CHECK(parse_text_events(dir / "again.txt", g) == back);
}

TEST_CASE("EVT1 round-trip on random streams") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int W = 1 + static_cast<int>(rng() % 400);
        const int H = 1 + static_cast<int>(rng() % 300);
        const auto n = static_cast<std::size_t>(rng() % 2000);
        const EventStream s(SensorGeometry(W, H), oracle::random_events(n, W, H, 0.0, 10.0, rng));
        CHECK(decode_binary_events(encode_binary_events(s)) == s);
    }
}

TEST_CASE("load_events dispatches on content") {
    const auto dir = oracle::scratch("load_events");
    write_string(dir / "a.txt", "0.0 1 1 1\n");
    CHECK_THROWS_AS(load_events(dir / "a.txt", std::nullopt), ParseError);
    CHECK(load_events(dir / "a.txt", SensorGeometry(4, 4)).size() == 1);
    write_binary_events(EventStream(SensorGeometry(4, 4), {{0.0, 1, 1, 1}}), dir / "b.evt1");
    CHECK(load_events(dir / "b.evt1", std::nullopt).geometry() == SensorGeometry(4, 4));
    CHECK_THROWS_AS(load_events(dir / "b.evt1", SensorGeometry(5, 4)), ParseError);
    CHECK_THROWS_AS(load_events(dir / "missing.evt1", std::nullopt), ParseError);
}

TEST_CASE("PGM mapping is v/255") {
    std::vector<std::uint8_t> pgm = {'P', '5', '\n', '3', ' ', '1', '\n', '2', '5', '5', '\n', 0, 128, 255};
    const Image img = decode_pgm(pgm);
    REQUIRE(img.width == 3);
    REQUIRE(img.height == 1);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[1] == 128.0 / 255.0);
    CHECK(img.pixels[2] == 1.0);
    CHECK(decode_pgm(encode_pgm(img)) == img);
    for (int v = 1; v < 256; ++v) {
        std::vector<std::uint8_t> a = {'P', '5', ' ', '1', ' ', '1', ' ', '2', '5', '5', ' ', static_cast<std::uint8_t>(v - 1)};
        std::vector<std::uint8_t> b = a;
        b.back() = static_cast<std::uint8_t>(v);
        CHECK(decode_pgm(a).pixels[0] < decode_pgm(b).pixels[0]);
    }
    std::vector<std::uint8_t> p2 = {'P', '2', ' ', '1', ' ', '1', ' ', '2', '5', '5', ' ', '0'};
    CHECK_THROWS_AS(decode_pgm(p2), ParseError);
    std::vector<std::uint8_t> deep = {'P', '5', ' ', '1', ' ', '1', ' ', '6', '5', '5', '3', '5', ' ', 0, 0};
    CHECK_THROWS_AS(decode_pgm(deep), ParseError);
}

TEST_CASE("frame directories") {
    const auto dir = oracle::scratch("frames");
    const SensorGeometry g(3, 2);
    std::vector<Frame> frames;
    for (int k = 0; k < 3; ++k) frames.push_back(Frame{0.04 * k, Image(3, 2, k / 255.0)});
    write_frame_stream(FrameStream(g, frames), dir / "ok");
    const FrameStream loaded = load_frame_stream(dir / "ok");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded.timestamps() == std::vector<double>{0.0, 0.04, 0.08});
    CHECK(loaded[2].image.pixels[0] == 2.0 / 255.0);
    CHECK(frame_file_name(7) == "000007.pgm");

    write_frame_stream(FrameStream(g, frames), dir / "mismatch");
    std::filesystem::remove(dir / "mismatch" / frame_file_name(2));
    CHECK_THROWS_AS(load_frame_stream(dir / "mismatch"), ParseError);

    write_frame_stream(FrameStream(g, frames), dir / "order");
    write_string(dir / "order" / "timestamps.txt", "0.0\n0.08\n0.04\n");
    CHECK_THROWS_AS(load_frame_stream(dir / "order"), ParseError);

    write_frame_stream(FrameStream(g, frames), dir / "notpgm");
    write_string(dir / "notpgm" / frame_file_name(1), "hello");
    CHECK_THROWS_AS(load_frame_stream(dir / "notpgm"), ParseError);
}

TEST_CASE("frame stream validation") {
    const SensorGeometry g(2, 2);
    CHECK_THROWS_AS(FrameStream(g, {Frame{0.0, Image(2, 2, 1.5)}}), ValidationError);
    CHECK_THROWS_AS(FrameStream(g, {Frame{0.0, Image(3, 2)}}), ValidationError);
    CHECK_THROWS_AS(FrameStream(g, {Frame{0.1, Image(2, 2)}, Frame{0.1, Image(2, 2)}}), ValidationError);
    CHECK_THROWS_AS(SequenceDataset("s", EventStream(g, {}), FrameStream(SensorGeometry(3, 3), {}), std::nullopt),
                    ValidationError);
}
