#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <sys/types.h>

#include "evb/event_model.hpp"
#include "evb/representation.hpp"
#include "evb/wire.hpp"

namespace evb {

class PluginError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kProtocolVersion = 1;

enum class SessionState { Init, Ready, InSequence, Closed };
enum class PluginKind { Reconstructor, Metric };
enum class MetricArity { FullReference, NoReference };

struct PluginInfo {
    std::string name;
    PluginKind kind = PluginKind::Reconstructor;
    std::string version;
    /// Only meaningful for metric plugins.
    MetricArity arity = MetricArity::FullReference;
    bool higher_is_better = false;
    wire::KeyValues raw;
};

struct SessionOptions {
    std::chrono::milliseconds handshake_timeout{30'000};
    std::chrono::milliseconds request_timeout{300'000};
};

/// One external plugin process speaking the framed protocol over its stdin/stdout.
///
/// State machine: Init -(INIT/IRES)-> Ready -(RSET)-> InSequence. RSET is legal
/// from Ready or InSequence. Any transport or protocol failure kills the child
/// and leaves the session Closed; an ERRS reply raises PluginError but keeps
/// the session usable. Sessions are not thread-safe and must not be shared.
class PluginSession {
public:
    /// Spawns `cmdline` through /bin/sh and performs the handshake.
    PluginSession(const std::string& cmdline, SensorGeometry geometry, int bins, SessionOptions options = {});
    ~PluginSession();

    PluginSession(const PluginSession&) = delete;
    PluginSession& operator=(const PluginSession&) = delete;

    const PluginInfo& info() const { return info_; }
    SessionState state() const { return state_; }
    SensorGeometry geometry() const { return geometry_; }
    int bins() const { return bins_; }
    /// Number of replies whose clamping moved some pixel by more than 1e-3.
    std::size_t clamp_warnings() const { return clamp_warnings_; }

    /// Clears model state and enters InSequence. Acknowledged by an empty RSET reply.
    void reset();
    /// Sends TENS(B,H,W) and returns the IMGR(H,W) reply clamped into [0,1].
    Image infer(const VoxelGrid& voxel);
    /// METQ with one (no-reference) or two (full-reference) images; returns the METR scalar.
    double metric_query(const Image& image, const Image* reference);
    /// Sends QUIT and reaps the child. Idempotent.
    void shutdown();

private:
    void spawn(const std::string& cmdline);
    void handshake();
    void send(const wire::Tag& tag, std::span<const std::uint8_t> payload);
    wire::Message receive(std::chrono::milliseconds timeout);
    wire::Message round_trip(const wire::Tag& tag, std::span<const std::uint8_t> payload, const wire::Tag& expected,
                             std::chrono::milliseconds timeout);
    [[noreturn]] void fail(const std::string& what);
    void require_open() const;
    void kill_child();
    std::string describe_exit();

    SensorGeometry geometry_;
    int bins_ = 0;
    SessionOptions options_;
    SessionState state_ = SessionState::Init;
    PluginInfo info_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    wire::FrameDecoder decoder_;
    std::size_t clamp_warnings_ = 0;
    std::string label_;
};

std::string to_string(SessionState state);

}  // namespace evb
