#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evb/grouping.hpp"
#include "evb/image_ops.hpp"
#include "evb/plugin_session.hpp"
#include "evb/representation.hpp"

namespace evb {

struct Reconstruction {
    double timestamp = 0.0;
    Image image;
    std::size_t group_index = 0;
};

/// A reconstruction method. Implementations return a raw image at the sensor's
/// (padded) resolution; range conditioning happens in the post-processing chain.
class Reconstructor {
public:
    virtual ~Reconstructor() = default;
    virtual std::string name() const = 0;
    /// Recurrent methods carry state across the groups of one sequence.
    virtual bool stateful() const = 0;
    virtual void reset() {}
    virtual bool wants_voxel() const { return true; }
    virtual PadSpec pad() const { return {}; }
    virtual Image reconstruct(const EventGroup& group, const VoxelGrid& voxel) = 0;
};

/// Sums the bins of the voxel grid per pixel, then applies RobustMinMax(1, 99).
Image baseline_voxel_collapse(const VoxelGrid& grid);

class VoxelCollapse final : public Reconstructor {
public:
    std::string name() const override { return "voxel_collapse"; }
    bool stateful() const override { return false; }
    Image reconstruct(const EventGroup& group, const VoxelGrid& voxel) override;
};

/// Per-pixel leaky accumulator: the state decays by exp(-dt/tau) between
/// events and gains gain*p at each event. Frames are sampled at the group's
/// target time and mapped through RobustMinMax(1, 99).
class LeakyIntegrator final : public Reconstructor {
public:
    explicit LeakyIntegrator(SensorGeometry geometry, double tau = 0.1, double gain = 0.1);

    std::string name() const override { return "leaky_integrator"; }
    bool stateful() const override { return true; }
    bool wants_voxel() const override { return false; }
    void reset() override;
    Image reconstruct(const EventGroup& group, const VoxelGrid& voxel) override;

    /// Feeds events without sampling an image.
    void integrate(std::span<const Event> events);
    /// Decayed state of one pixel as seen at time t (t must not precede its last update).
    double state_at(int x, int y, double t) const;
    /// Unnormalised state image at time t.
    Image sample(double t) const;

private:
    double decay(double dt) const;

    SensorGeometry geometry_;
    double tau_;
    double gain_;
    std::vector<double> level_;
    std::vector<double> updated_;
};

/// Reconstructor backed by an external process speaking the plugin protocol.
class PluginReconstructor final : public Reconstructor {
public:
    PluginReconstructor(const std::string& cmdline, SensorGeometry geometry, int bins, PadSpec pad = {},
                        SessionOptions options = {});

    std::string name() const override { return session_->info().name; }
    bool stateful() const override { return true; }
    PadSpec pad() const override { return pad_; }
    void reset() override { session_->reset(); }
    Image reconstruct(const EventGroup& group, const VoxelGrid& voxel) override;
    PluginSession& session() { return *session_; }

private:
    PadSpec pad_;
    std::unique_ptr<PluginSession> session_;
};

/// Owns a reconstructor for one sequence at a time and enforces ordering for
/// stateful methods: after begin_sequence() groups must arrive as 0, 1, 2, ...
class ReconstructorHandle {
public:
    explicit ReconstructorHandle(std::unique_ptr<Reconstructor> impl);

    Reconstructor& impl() { return *impl_; }
    const Reconstructor& impl() const { return *impl_; }
    bool stateful() const { return impl_->stateful(); }

    void begin_sequence();
    /// Throws ValidationError when a stateful handle receives a group out of order.
    Image step(const EventGroup& group, const VoxelGrid& voxel);

private:
    std::unique_ptr<Reconstructor> impl_;
    std::size_t next_index_ = 0;
    bool in_sequence_ = false;
};

struct ReconstructOptions {
    int bins = kDefaultBins;
    TensorNormSpec norm;
    PostProcSpec postproc;
};

struct SequenceReconstruction {
    std::vector<Reconstruction> frames;
    bool failed = false;
    std::string error;
};

/// Runs every group through representation, normalisation, padding, the
/// reconstructor and post-processing. A failure stops the sequence but keeps
/// the frames produced so far, flagged as failed.
SequenceReconstruction reconstruct_sequence(const GroupTimeline& timeline, ReconstructorHandle& handle,
                                            SensorGeometry geometry, const ReconstructOptions& options);

struct ReconstructorSpec {
    enum class Kind { VoxelCollapse, LeakyIntegrator, Plugin };

    std::string name;
    Kind kind = Kind::VoxelCollapse;
    std::string cmdline;
    double tau = 0.1;
    double gain = 0.1;
    int pad_multiple = 1;
    TensorNormSpec norm;
    PostProcSpec postproc;
    SessionOptions session;
};

/// Builds a fresh reconstructor instance for one sequence.
std::unique_ptr<Reconstructor> make_reconstructor(const ReconstructorSpec& spec, SensorGeometry geometry, int bins);

}  // namespace evb
