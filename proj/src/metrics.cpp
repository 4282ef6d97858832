#include "evb/metrics.hpp"

#include <cmath>

namespace evb {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw ValidationError("metric inputs differ in size: " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height));
    }
}

// Separable "valid" correlation with the Gaussian taps: output is (h-10) x (w-10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        const double* in = src.data() + static_cast<std::size_t>(y) * w;
        double* out = rows.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * in[x + i];
            out[x] = acc;
        }
    }
    std::vector<double> result(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y) {
        double* out = result.data() + static_cast<std::size_t>(y) * ow;
        for (int i = 0; i < k; ++i) {
            const double* in = rows.data() + static_cast<std::size_t>(y + i) * ow;
            const double t = taps[i];
            for (int x = 0; x < ow; ++x) out[x] += t * in[x];
        }
    }
    return result;
}

}  // namespace

double mse(const Image& pred, const Image& gt) {
    require_same_shape(pred, gt);
    if (pred.pixels.empty()) throw ValidationError("mse of empty images");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.pixels[i] - gt.pixels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

std::vector<double> ssim_gaussian_taps() {
    std::vector<double> taps(kSsimWindow);
    const int radius = kSsimWindow / 2;
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - radius;
        taps[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
        total += taps[i];
    }
    for (double& t : taps) t /= total;
    return taps;
}

double ssim(const Image& pred, const Image& gt) {
    require_same_shape(pred, gt);
    if (pred.width < kSsimWindow || pred.height < kSsimWindow) {
        throw ValidationError("ssim needs images of at least 11x11");
    }
    const int w = pred.width;
    const int h = pred.height;
    const auto taps = ssim_gaussian_taps();

    const std::size_t n = pred.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = pred.pixels[i];
        const double b = gt.pixels[i];
        xx[i] = a * a;
        yy[i] = b * b;
        xy[i] = a * b;
    }
    const auto mu_x = filter_valid(pred.pixels, w, h, taps);
    const auto mu_y = filter_valid(gt.pixels, w, h, taps);
    const auto e_xx = filter_valid(xx, w, h, taps);
    const auto e_yy = filter_valid(yy, w, h, taps);
    const auto e_xy = filter_valid(xy, w, h, taps);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double vx = e_xx[i] - mx * mx;
        const double vy = e_yy[i] - my * my;
        const double cxy = e_xy[i] - mx * my;
        const double num = (2.0 * mx * my + kSsimC1) * (2.0 * cxy + kSsimC2);
        const double den = (mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

double MseMetric::evaluate(const Image& pred, const Image* gt) {
    if (!gt) throw ValidationError("mse needs a reference image");
    return mse(pred, *gt);
}

double SsimMetric::evaluate(const Image& pred, const Image* gt) {
    if (!gt) throw ValidationError("ssim needs a reference image");
    return ssim(pred, *gt);
}

PluginMetric::PluginMetric(std::string name, const std::string& cmdline, SensorGeometry geometry,
                           SessionOptions options)
    : session_(std::make_unique<PluginSession>(cmdline, geometry, kDefaultBins, options)) {
    const auto& info = session_->info();
    if (info.kind != PluginKind::Metric) throw PluginError("'" + cmdline + "' is not a metric plugin");
    id_.name = std::move(name);
    id_.kind = info.arity == MetricArity::FullReference ? MetricKind::FullReference : MetricKind::NoReference;
    id_.direction = info.higher_is_better ? Direction::HigherBetter : Direction::LowerBetter;
    id_.source = MetricSource::Plugin;
}

double PluginMetric::evaluate(const Image& pred, const Image* gt) {
    return session_->metric_query(pred, id_.kind == MetricKind::FullReference ? gt : nullptr);
}

std::unique_ptr<Metric> make_metric(const MetricSpec& spec, SensorGeometry geometry) {
    if (spec.cmdline.empty()) {
        if (spec.name == "mse") return std::make_unique<MseMetric>();
        if (spec.name == "ssim") return std::make_unique<SsimMetric>();
        throw ValidationError("metric '" + spec.name + "' is not built in and has no plugin command");
    }
    return std::make_unique<PluginMetric>(spec.name, spec.cmdline, geometry, spec.session);
}

MetricRegistry::MetricRegistry(const std::vector<MetricSpec>& specs, SensorGeometry geometry) {
    for (const auto& spec : specs) add(make_metric(spec, geometry));
}

void MetricRegistry::add(std::unique_ptr<Metric> metric) {
    metrics_.push_back(std::move(metric));
}

std::vector<MetricId> MetricRegistry::ids() const {
    std::vector<MetricId> out;
    for (const auto& m : metrics_) out.push_back(m->id());
    return out;
}

PairEvaluation evaluate_pair(MetricRegistry& registry, double timestamp, const Image& pred, const Image* gt) {
    PairEvaluation out;
    for (const auto& metric : registry.metrics()) {
        const MetricId& id = metric->id();
        if (id.kind == MetricKind::FullReference && !gt) continue;
        try {
            const double value = metric->evaluate(pred, gt);
            if (!std::isfinite(value)) throw ValidationError("non-finite value");
            out.samples.push_back(MetricSample{timestamp, value, id});
        } catch (const std::exception& err) {
            out.failures.push_back(MetricFailure{id.name, err.what()});
        }
    }
    return out;
}

}  // namespace evb
