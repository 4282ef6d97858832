#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evb/event_model.hpp"
#include "evb/plugin_session.hpp"

namespace evb {

enum class MetricKind { FullReference, NoReference };
enum class Direction { LowerBetter, HigherBetter };
enum class MetricSource { Builtin, Plugin };

struct MetricId {
    std::string name;
    MetricKind kind = MetricKind::FullReference;
    Direction direction = Direction::LowerBetter;
    MetricSource source = MetricSource::Builtin;
};

struct MetricSample {
    double timestamp = 0.0;
    double value = 0.0;
    MetricId metric;
};

/// Mean squared difference. Throws ValidationError on a shape mismatch.
double mse(const Image& pred, const Image& gt);

// SSIM settings: 11x11 Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03,
// data range L = 1. Local statistics use the normalised Gaussian weights
// directly (no sample-covariance correction) and the map is averaged over
// positions where the window fits entirely inside the image.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kSsimC1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
inline constexpr double kSsimC2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

/// The 11 normalised 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> ssim_gaussian_taps();

/// Mean structural similarity. Throws ValidationError on a shape mismatch or an
/// image smaller than the window.
double ssim(const Image& pred, const Image& gt);

class Metric {
public:
    virtual ~Metric() = default;
    virtual const MetricId& id() const = 0;
    /// `gt` is null for no-reference evaluation.
    virtual double evaluate(const Image& pred, const Image* gt) = 0;
};

class MseMetric final : public Metric {
public:
    const MetricId& id() const override { return id_; }
    double evaluate(const Image& pred, const Image* gt) override;

private:
    MetricId id_{"mse", MetricKind::FullReference, Direction::LowerBetter, MetricSource::Builtin};
};

class SsimMetric final : public Metric {
public:
    const MetricId& id() const override { return id_; }
    double evaluate(const Image& pred, const Image* gt) override;

private:
    MetricId id_{"ssim", MetricKind::FullReference, Direction::HigherBetter, MetricSource::Builtin};
};

/// A metric computed by an external plugin process (LPIPS, BRISQUE, NIQE, MANIQA, ...).
/// The harness sends single-channel (H, W) tensors; channel replication is the plugin's job.
class PluginMetric final : public Metric {
public:
    PluginMetric(std::string name, const std::string& cmdline, SensorGeometry geometry, SessionOptions options = {});

    const MetricId& id() const override { return id_; }
    double evaluate(const Image& pred, const Image* gt) override;

private:
    MetricId id_;
    std::unique_ptr<PluginSession> session_;
};

struct MetricSpec {
    std::string name;
    /// Empty for builtins; otherwise the plugin command line.
    std::string cmdline;
    SessionOptions session;
};

/// Resolves a builtin by name; unknown names need a plugin command line.
std::unique_ptr<Metric> make_metric(const MetricSpec& spec, SensorGeometry geometry);

class MetricRegistry {
public:
    MetricRegistry() = default;
    MetricRegistry(const std::vector<MetricSpec>& specs, SensorGeometry geometry);

    void add(std::unique_ptr<Metric> metric);
    std::size_t size() const { return metrics_.size(); }
    bool empty() const { return metrics_.empty(); }
    const std::vector<std::unique_ptr<Metric>>& metrics() const { return metrics_; }
    std::vector<MetricId> ids() const;

private:
    std::vector<std::unique_ptr<Metric>> metrics_;
};

struct MetricFailure {
    std::string metric;
    std::string error;
};

struct PairEvaluation {
    std::vector<MetricSample> samples;
    std::vector<MetricFailure> failures;
};

/// Runs every applicable metric: full-reference ones only when `gt` is given,
/// no-reference ones always. A failing metric is recorded, not thrown.
PairEvaluation evaluate_pair(MetricRegistry& registry, double timestamp, const Image& pred, const Image* gt);

}  // namespace evb
