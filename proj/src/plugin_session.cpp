#include "evb/plugin_session.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <iostream>
#include <mutex>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "evb/image_ops.hpp"

namespace evb {

namespace {

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::string to_string(SessionState state) {
    switch (state) {
        case SessionState::Init: return "Init";
        case SessionState::Ready: return "Ready";
        case SessionState::InSequence: return "InSequence";
        case SessionState::Closed: return "Closed";
    }
    return "?";
}

PluginSession::PluginSession(const std::string& cmdline, SensorGeometry geometry, int bins, SessionOptions options)
    : geometry_(geometry), bins_(bins), options_(options), label_(cmdline) {
    spawn(cmdline);
    try {
        handshake();
    } catch (...) {
        kill_child();
        state_ = SessionState::Closed;
        throw;
    }
}

void PluginSession::handshake() {
    wire::KeyValues init{{"protocol_version", std::to_string(kProtocolVersion)},
                         {"width", std::to_string(geometry_.width)},
                         {"height", std::to_string(geometry_.height)},
                         {"bins", std::to_string(bins_)}};
    const std::string text = wire::format_key_values(init);
    const auto reply =
        round_trip(wire::kInit, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                   wire::kIres, options_.handshake_timeout);

    wire::KeyValues kv;
    try {
        kv = wire::parse_key_values(reply.text());
    } catch (const wire::WireError& err) {
        fail(std::string("bad IRES payload: ") + err.what());
    }
    const auto version = kv.find("protocol_version");
    if (version == kv.end() || version->second != std::to_string(kProtocolVersion)) {
        fail("protocol version mismatch: harness speaks " + std::to_string(kProtocolVersion) + ", plugin replied " +
             (version == kv.end() ? std::string("nothing") : version->second));
    }
    info_.raw = kv;
    info_.name = kv.count("name") ? kv.at("name") : "unnamed";
    info_.version = kv.count("version") ? kv.at("version") : "";
    const std::string kind = kv.count("kind") ? kv.at("kind") : "";
    if (kind == "reconstructor") {
        info_.kind = PluginKind::Reconstructor;
    } else if (kind == "metric") {
        info_.kind = PluginKind::Metric;
        const std::string arity = kv.count("metric_kind") ? kv.at("metric_kind") : "full_reference";
        if (arity == "full_reference") {
            info_.arity = MetricArity::FullReference;
        } else if (arity == "no_reference") {
            info_.arity = MetricArity::NoReference;
        } else {
            fail("unknown metric_kind '" + arity + "'");
        }
        info_.higher_is_better = kv.count("direction") && kv.at("direction") == "higher_better";
    } else {
        fail("unknown plugin kind '" + kind + "'");
    }
    state_ = SessionState::Ready;
}

PluginSession::~PluginSession() {
    try {
        shutdown();
    } catch (...) {
        kill_child();
    }
}

void PluginSession::spawn(const std::string& cmdline) {
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw PluginError("pipe: " + std::string(std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw PluginError("pipe: " + std::string(std::strerror(errno)));
    }
    const std::string script = "exec " + cmdline;
    const char* argv[] = {"/bin/sh", "-c", script.c_str(), nullptr};

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        throw PluginError("fork: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execv("/bin/sh", const_cast<char* const*>(argv));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

void PluginSession::require_open() const {
    if (state_ == SessionState::Closed) throw PluginError("plugin session '" + label_ + "' is Closed");
}

void PluginSession::send(const wire::Tag& tag, std::span<const std::uint8_t> payload) {
    const auto message = wire::encode_message(tag, payload);
    std::size_t written = 0;
    while (written < message.size()) {
        const ssize_t n = ::write(to_child_, message.data() + written, message.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("write to plugin failed (" + std::string(std::strerror(errno)) + ")" + describe_exit());
        }
        written += static_cast<std::size_t>(n);
    }
}

wire::Message PluginSession::receive(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    wire::Message message;
    std::uint8_t buf[65536];
    for (;;) {
        switch (decoder_.next(message)) {
            case wire::FrameDecoder::Status::Ready: return message;
            case wire::FrameDecoder::Status::Error: fail("protocol error: " + decoder_.error());
            case wire::FrameDecoder::Status::NeedMore: break;
        }
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) fail("timed out after " + std::to_string(timeout.count()) + " ms waiting for a reply");
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
        if (ready < 0) {
            if (errno == EINTR) continue;
            fail("poll failed: " + std::string(std::strerror(errno)));
        }
        if (ready == 0) continue;
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("read from plugin failed: " + std::string(std::strerror(errno)));
        }
        if (n == 0) fail("plugin closed its output" + describe_exit());
        decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
}

wire::Message PluginSession::round_trip(const wire::Tag& tag, std::span<const std::uint8_t> payload,
                                        const wire::Tag& expected, std::chrono::milliseconds timeout) {
    send(tag, payload);
    wire::Message reply = receive(timeout);
    if (reply.tag == wire::kErrs) {
        throw PluginError("plugin '" + label_ + "' reported: " + std::string(reply.text()));
    }
    if (reply.tag != expected) {
        fail("expected " + wire::tag_name(expected) + " but received " + wire::tag_name(reply.tag));
    }
    return reply;
}

void PluginSession::fail(const std::string& what) {
    kill_child();
    state_ = SessionState::Closed;
    throw PluginError("plugin '" + label_ + "': " + what);
}

void PluginSession::reset() {
    require_open();
    if (info_.kind != PluginKind::Reconstructor) throw PluginError("RSET sent to a metric plugin");
    round_trip(wire::kRset, {}, wire::kRset, options_.request_timeout);
    state_ = SessionState::InSequence;
}

Image PluginSession::infer(const VoxelGrid& voxel) {
    require_open();
    if (info_.kind != PluginKind::Reconstructor) throw PluginError("TENS sent to a metric plugin");
    if (state_ != SessionState::InSequence) throw PluginError("infer before RSET (state " + to_string(state_) + ")");
    if (voxel.bins != bins_ || voxel.height != geometry_.height || voxel.width != geometry_.width) {
        throw PluginError("voxel grid shape does not match the negotiated geometry");
    }
    wire::Tensor tensor;
    tensor.dims = {static_cast<std::uint32_t>(voxel.bins), static_cast<std::uint32_t>(voxel.height),
                   static_cast<std::uint32_t>(voxel.width)};
    tensor.data.assign(voxel.data.begin(), voxel.data.end());
    const auto reply = round_trip(wire::kTens, wire::encode_tensor(tensor), wire::kImgr, options_.request_timeout);

    wire::Tensor out;
    try {
        out = wire::decode_tensor(reply.payload);
    } catch (const wire::WireError& err) {
        fail(std::string("bad IMGR payload: ") + err.what());
    }
    if (out.dims.size() != 2 || out.dims[0] != static_cast<std::uint32_t>(geometry_.height) ||
        out.dims[1] != static_cast<std::uint32_t>(geometry_.width)) {
        std::string shape;
        for (auto d : out.dims) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        throw PluginError("plugin '" + label_ + "' replied with a " + shape + " image for a " +
                          std::to_string(geometry_.height) + "x" + std::to_string(geometry_.width) + " session");
    }
    Image image = wire::image_from_tensor(out);
    if (clamp_unit(image) > 1e-3) {
        ++clamp_warnings_;
        if (clamp_warnings_ == 1) {
            std::cerr << "warning: plugin '" << label_ << "' returned pixels outside [0,1]; clamped\n";
        }
    }
    return image;
}

double PluginSession::metric_query(const Image& image, const Image* reference) {
    require_open();
    if (info_.kind != PluginKind::Metric) throw PluginError("METQ sent to a reconstructor plugin");
    const bool full = info_.arity == MetricArity::FullReference;
    if (full != (reference != nullptr)) {
        throw PluginError("metric '" + info_.name + "' is " + (full ? "full-reference" : "no-reference") +
                          " but was queried with " + (reference ? "two images" : "one image"));
    }
    std::vector<std::uint8_t> payload;
    wire::encode_tensor_into(wire::tensor_from_image(image), payload);
    if (reference) wire::encode_tensor_into(wire::tensor_from_image(*reference), payload);
    const auto reply = round_trip(wire::kMetq, payload, wire::kMetr, options_.request_timeout);
    try {
        return wire::decode_f64(reply.payload);
    } catch (const wire::WireError& err) {
        fail(err.what());
    }
}

void PluginSession::shutdown() {
    if (state_ == SessionState::Closed) return;
    state_ = SessionState::Closed;
    if (pid_ < 0) return;
    const auto quit = wire::encode_message(wire::kQuit, std::span<const std::uint8_t>{});
    [[maybe_unused]] auto n = ::write(to_child_, quit.data(), quit.size());
    ::close(to_child_);
    to_child_ = -1;
    for (int i = 0; i < 200; ++i) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            pid_ = -1;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill_child();
}

void PluginSession::kill_child() {
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        ::close(from_child_);
        from_child_ = -1;
    }
}

std::string PluginSession::describe_exit() {
    if (pid_ <= 0) return "";
    int status = 0;
    pid_t r = 0;
    for (int i = 0; i < 50 && r == 0; ++i) {
        r = ::waitpid(pid_, &status, WNOHANG);
        if (r == 0) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (r != pid_) return "";
    pid_ = -1;
    if (WIFEXITED(status)) return " (exited with status " + std::to_string(WEXITSTATUS(status)) + ")";
    if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
    return "";
}

}  // namespace evb
