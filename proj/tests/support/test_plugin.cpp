// Scriptable plugin process for protocol tests.
//
//   test_plugin <mode> [key=value ...]
//
// Modes: echo, counter, mse, nr, version2, hang, hang-infer, crash, wrong-dims,
// errs, garbage, out-of-range, silent-quit.
// Options: value=<v> (echo fill), crash-width=<W> (crash on TENS only when the
// negotiated width is W), crash-after=<n> (crash on the n-th TENS).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>
#include <unistd.h>

#include "evb/wire.hpp"

using namespace evb;

namespace {

void write_all(const std::vector<std::uint8_t>& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t n = ::write(1, bytes.data() + off, bytes.size() - off);
        if (n <= 0) std::_Exit(9);
        off += static_cast<std::size_t>(n);
    }
}

void reply(const wire::Tag& tag, std::span<const std::uint8_t> payload) {
    write_all(wire::encode_message(tag, payload));
}

void reply_text(const wire::Tag& tag, const std::string& text) {
    write_all(wire::encode_message(tag, text));
}

void hang_forever() {
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(60));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "echo";
    double fill = 0.5;
    long crash_width = -1;
    long crash_after = -1;
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto eq = arg.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = arg.substr(0, eq);
        const std::string val = arg.substr(eq + 1);
        if (key == "value") fill = std::stod(val);
        if (key == "crash-width") crash_width = std::stol(val);
        if (key == "crash-after") crash_after = std::stol(val);
    }

    wire::FrameDecoder decoder;
    std::vector<std::uint8_t> buf(1 << 16);
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    long requests = 0;
    long since_reset = 0;

    for (;;) {
        wire::Message msg;
        auto status = decoder.next(msg);
        if (status == wire::FrameDecoder::Status::Error) return 4;
        if (status == wire::FrameDecoder::Status::NeedMore) {
            const ssize_t n = ::read(0, buf.data(), buf.size());
            if (n <= 0) return 0;
            decoder.feed(std::span(buf.data(), static_cast<std::size_t>(n)));
            continue;
        }

        if (msg.tag == wire::kInit) {
            const auto kv = wire::parse_key_values(msg.text());
            width = static_cast<std::uint32_t>(std::stoul(kv.at("width")));
            height = static_cast<std::uint32_t>(std::stoul(kv.at("height")));
            if (mode == "hang") hang_forever();
            if (mode == "garbage") {
                write_all({'x', 'x', 'x', 'x', 0xff, 0xff, 0xff, 0xff, 1, 2, 3});
                hang_forever();
            }
            wire::KeyValues out{{"protocol_version", mode == "version2" ? "2" : "1"},
                                {"name", "test-" + mode},
                                {"version", "0.1"}};
            if (mode == "mse") {
                out["kind"] = "metric";
                out["metric_kind"] = "full_reference";
                out["direction"] = "lower_better";
            } else if (mode == "nr") {
                out["kind"] = "metric";
                out["metric_kind"] = "no_reference";
                out["direction"] = "higher_better";
            } else {
                out["kind"] = "reconstructor";
            }
            reply_text(wire::kIres, wire::format_key_values(out));
        } else if (msg.tag == wire::kRset) {
            since_reset = 0;
            reply(wire::kRset, {});
        } else if (msg.tag == wire::kTens) {
            ++requests;
            ++since_reset;
            const auto in = wire::decode_tensor(msg.payload);
            if (in.dims.size() != 3 || in.dims[1] != height || in.dims[2] != width) return 5;
            if (mode == "hang-infer") hang_forever();
            if (mode == "silent-quit") return 0;
            if (mode == "crash" || (crash_width >= 0 && width == static_cast<std::uint32_t>(crash_width)) ||
                (crash_after >= 0 && requests >= crash_after)) {
                std::_Exit(3);
            }
            if (mode == "errs") {
                reply_text(wire::kErrs, "model exploded");
                continue;
            }
            wire::Tensor out;
            out.dims = {height + (mode == "wrong-dims" ? 1u : 0u), width};
            float value = static_cast<float>(fill);
            if (mode == "counter") value = static_cast<float>(static_cast<double>(since_reset % 1000) / 1000.0);
            if (mode == "out-of-range") value = 1.5f;
            out.data.assign(out.element_count(), value);
            reply(wire::kImgr, wire::encode_tensor(out));
        } else if (msg.tag == wire::kMetq) {
            std::size_t used = 0;
            const auto a = wire::decode_tensor_prefix(msg.payload, used);
            double value = 0.0;
            if (mode == "mse") {
                const auto b = wire::decode_tensor(std::span(msg.payload).subspan(used));
                double sum = 0.0;
                for (std::size_t i = 0; i < a.data.size(); ++i) {
                    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
                    sum += d * d;
                }
                value = sum / static_cast<double>(a.data.size());
            } else {
                double sum = 0.0;
                for (float v : a.data) sum += v;
                value = sum / static_cast<double>(a.data.size());
            }
            reply(wire::kMetr, wire::encode_f64(value));
        } else if (msg.tag == wire::kQuit) {
            return 0;
        } else {
            reply_text(wire::kErrs, "unexpected message " + wire::tag_name(msg.tag));
        }
    }
}
