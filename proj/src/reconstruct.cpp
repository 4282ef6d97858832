#include "evb/reconstruct.hpp"

#include <cmath>
#include <limits>

namespace evb {

Image baseline_voxel_collapse(const VoxelGrid& grid) {
    Image image(grid.width, grid.height);
    const std::size_t plane = grid.plane_size();
    for (int b = 0; b < grid.bins; ++b) {
        const double* src = grid.data.data() + static_cast<std::size_t>(b) * plane;
        for (std::size_t i = 0; i < plane; ++i) image.pixels[i] += src[i];
    }
    return robust_minmax_normalize(image, 1.0, 99.0);
}

Image VoxelCollapse::reconstruct(const EventGroup&, const VoxelGrid& voxel) {
    return baseline_voxel_collapse(voxel);
}

LeakyIntegrator::LeakyIntegrator(SensorGeometry geometry, double tau, double gain)
    : geometry_(geometry), tau_(tau), gain_(gain) {
    if (!(tau > 0.0)) throw ValidationError("leaky integrator needs tau > 0");
    reset();
}

void LeakyIntegrator::reset() {
    level_.assign(geometry_.pixel_count(), 0.0);
    updated_.assign(geometry_.pixel_count(), 0.0);
}

double LeakyIntegrator::decay(double dt) const {
    if (std::isinf(tau_)) return 1.0;
    return std::exp(-std::max(dt, 0.0) / tau_);
}

void LeakyIntegrator::integrate(std::span<const Event> events) {
    for (const Event& e : events) {
        const std::size_t i = static_cast<std::size_t>(e.y) * geometry_.width + e.x;
        level_[i] = level_[i] * decay(e.t - updated_[i]) + gain_ * e.p;
        updated_[i] = e.t;
    }
}

double LeakyIntegrator::state_at(int x, int y, double t) const {
    const std::size_t i = static_cast<std::size_t>(y) * geometry_.width + x;
    return level_[i] * decay(t - updated_[i]);
}

Image LeakyIntegrator::sample(double t) const {
    Image image(geometry_.width, geometry_.height);
    for (std::size_t i = 0; i < level_.size(); ++i) {
        image.pixels[i] = level_[i] == 0.0 ? 0.0 : level_[i] * decay(t - updated_[i]);
    }
    return image;
}

Image LeakyIntegrator::reconstruct(const EventGroup& group, const VoxelGrid&) {
    integrate(group.events);
    return robust_minmax_normalize(sample(group.target_time), 1.0, 99.0);
}

PluginReconstructor::PluginReconstructor(const std::string& cmdline, SensorGeometry geometry, int bins, PadSpec pad,
                                         SessionOptions options)
    : pad_(pad) {
    const auto round_up = [&](int v) { return (v + pad.multiple - 1) / pad.multiple * pad.multiple; };
    const SensorGeometry padded(round_up(geometry.width), round_up(geometry.height));
    session_ = std::make_unique<PluginSession>(cmdline, padded, bins, options);
    if (session_->info().kind != PluginKind::Reconstructor) {
        throw PluginError("'" + cmdline + "' is not a reconstructor plugin");
    }
}

Image PluginReconstructor::reconstruct(const EventGroup&, const VoxelGrid& voxel) {
    return session_->infer(voxel);
}

ReconstructorHandle::ReconstructorHandle(std::unique_ptr<Reconstructor> impl) : impl_(std::move(impl)) {}

void ReconstructorHandle::begin_sequence() {
    impl_->reset();
    next_index_ = 0;
    in_sequence_ = true;
}

Image ReconstructorHandle::step(const EventGroup& group, const VoxelGrid& voxel) {
    if (impl_->stateful()) {
        if (!in_sequence_) throw ValidationError("stateful reconstructor used before begin_sequence()");
        if (group.index != next_index_) {
            throw ValidationError("stateful reconstructor expected group " + std::to_string(next_index_) +
                                  " but received group " + std::to_string(group.index));
        }
    }
    Image out = impl_->reconstruct(group, voxel);
    next_index_ = group.index + 1;
    return out;
}

SequenceReconstruction reconstruct_sequence(const GroupTimeline& timeline, ReconstructorHandle& handle,
                                            SensorGeometry geometry, const ReconstructOptions& options) {
    SequenceReconstruction result;
    result.frames.reserve(timeline.size());
    try {
        handle.begin_sequence();
        const PadSpec pad = handle.impl().pad();
        const bool wants_voxel = handle.impl().wants_voxel();
        for (const EventGroup& group : timeline.groups) {
            Image raw;
            if (wants_voxel) {
                VoxelGrid voxel = normalize_tensor(build_voxel_grid(group, geometry, options.bins), options.norm);
                PaddedGrid padded = pad_to_multiple(voxel, pad);
                raw = crop_image(handle.step(group, padded.grid), padded.crop);
            } else {
                raw = handle.step(group, VoxelGrid{});
            }
            if (raw.width != geometry.width || raw.height != geometry.height) {
                throw ValidationError("reconstructor returned an image of the wrong size");
            }
            Image image = options.postproc.apply(std::move(raw));
            result.frames.push_back(Reconstruction{group.target_time, std::move(image), group.index});
        }
    } catch (const std::exception& err) {
        result.failed = true;
        result.error = err.what();
    }
    return result;
}

std::unique_ptr<Reconstructor> make_reconstructor(const ReconstructorSpec& spec, SensorGeometry geometry, int bins) {
    switch (spec.kind) {
        case ReconstructorSpec::Kind::VoxelCollapse: return std::make_unique<VoxelCollapse>();
        case ReconstructorSpec::Kind::LeakyIntegrator:
            return std::make_unique<LeakyIntegrator>(geometry, spec.tau, spec.gain);
        case ReconstructorSpec::Kind::Plugin:
            return std::make_unique<PluginReconstructor>(spec.cmdline, geometry, bins, PadSpec(spec.pad_multiple),
                                                         spec.session);
    }
    throw ValidationError("unknown reconstructor kind");
}

}  // namespace evb
