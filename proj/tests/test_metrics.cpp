#include <doctest.h>

#include <cmath>
#include <random>

#include "evb/metrics.hpp"
#include "oracles.hpp"

using namespace evb;

namespace {

// Closed-form image pair; reference SSIM values were computed with
// skimage.metrics.structural_similarity(gaussian_weights=True, sigma=1.5,
// use_sample_covariance=False, data_range=1).
Image wave(int W, int H) {
    Image img(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) img.at(x, y) = (std::sin(0.3 * x) + std::cos(0.2 * y) + 2.0) / 4.0;
    }
    return img;
}

Image perturbed(const Image& a) {
    Image b = a;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            b.at(x, y) = std::clamp(a.at(x, y) + 0.1 * std::sin(0.05 * x * y), 0.0, 1.0);
        }
    }
    return b;
}

std::string plugin(const std::string& args) { return std::string(EVB_TEST_PLUGIN) + " " + args; }

}  // namespace

TEST_CASE("mse examples") {
    const Image a(2, 2, std::vector<double>{0, 0, 1, 1});
    const Image b(2, 2, std::vector<double>{0, 0.5, 1, 1});
    CHECK(mse(a, b) == 0.0625);
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == mse(b, a));
    CHECK_THROWS_AS(mse(a, Image(3, 2)), ValidationError);
}

TEST_CASE("mse and ssim against the direct oracles") {
    std::mt19937_64 rng(100);
    for (int i = 0; i < 200; ++i) {
        const Image a = oracle::random_image(32, 32, rng);
        Image b = oracle::random_image(32, 32, rng);
        if (i % 2 == 0) {
            for (std::size_t k = 0; k < b.size(); ++k) b.pixels[k] = std::clamp(0.7 * a.pixels[k] + 0.3 * b.pixels[k], 0.0, 1.0);
        }
        CHECK(std::abs(mse(a, b) - oracle::mse(a, b)) <= 1e-9);
        if (i < 40) CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) <= 1e-9);
    }
}

TEST_CASE("ssim reference values") {
    const Image a = wave(32, 24);
    const Image b = perturbed(a);
    CHECK(ssim(a, b) == doctest::Approx(0.7611784315298539).epsilon(1e-9));
    Image inv = a;
    for (double& v : inv.pixels) v = 1.0 - v;
    CHECK(ssim(a, inv) == doctest::Approx(-0.6149760759786423).epsilon(1e-9));
}

TEST_CASE("ssim properties") {
    std::mt19937_64 rng(5);
    const Image a = oracle::random_image(20, 16, rng);
    const Image b = oracle::random_image(20, 16, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(ssim(a, b) < 1.0);
    const Image zero(16, 16, 0.0);
    const Image one(16, 16, 1.0);
    CHECK(ssim(zero, one) == doctest::Approx(kSsimC1 / (1.0 + kSsimC1)).epsilon(1e-12));
    CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), ValidationError);
    CHECK_THROWS_AS(ssim(Image(20, 20), Image(20, 21)), ValidationError);

    const auto taps = ssim_gaussian_taps();
    REQUIRE(taps.size() == 11);
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(taps[0] == doctest::Approx(taps[10]).epsilon(1e-15));
}

TEST_CASE("builtin registry and metric ids") {
    const MetricRegistry reg({{"mse", "", {}}, {"ssim", "", {}}}, SensorGeometry(16, 16));
    const auto ids = reg.ids();
    REQUIRE(ids.size() == 2);
    CHECK(ids[0].name == "mse");
    CHECK(ids[0].direction == Direction::LowerBetter);
    CHECK(ids[1].name == "ssim");
    CHECK(ids[1].direction == Direction::HigherBetter);
    CHECK(ids[1].source == MetricSource::Builtin);
    CHECK_THROWS_AS(make_metric({"lpips", "", {}}, SensorGeometry(16, 16)), ValidationError);
}

TEST_CASE("evaluate_pair rules") {
    const SensorGeometry g(16, 16);
    MetricRegistry reg({{"mse", "", {}}, {"ssim", "", {}}, {"nr_mean", plugin("nr"), {}}}, g);
    const Image pred(16, 16, 0.25);
    const Image gt(16, 16, 0.5);

    const auto with_gt = evaluate_pair(reg, 1.5, pred, &gt);
    REQUIRE(with_gt.samples.size() == 3);
    CHECK(with_gt.failures.empty());
    CHECK(with_gt.samples[0].metric.name == "mse");
    CHECK(with_gt.samples[0].value == 0.0625);
    CHECK(with_gt.samples[0].timestamp == 1.5);
    CHECK(with_gt.samples[2].metric.name == "nr_mean");
    CHECK(with_gt.samples[2].metric.kind == MetricKind::NoReference);
    CHECK(with_gt.samples[2].metric.source == MetricSource::Plugin);
    CHECK(with_gt.samples[2].value == doctest::Approx(0.25));

    const auto without = evaluate_pair(reg, 2.0, pred, nullptr);
    REQUIRE(without.samples.size() == 1);
    CHECK(without.samples[0].metric.name == "nr_mean");

    MetricRegistry empty;
    CHECK(evaluate_pair(empty, 0.0, pred, &gt).samples.empty());
}

TEST_CASE("plugin full-reference metric and failure recording") {
    const SensorGeometry g(12, 12);
    MetricRegistry reg;
    reg.add(make_metric({"plugin_mse", plugin("mse"), {}}, g));
    reg.add(make_metric({"mse", "", {}}, g));
    std::mt19937_64 rng(6);
    const Image a = oracle::random_image(12, 12, rng);
    const Image b = oracle::random_image(12, 12, rng);
    const auto same = evaluate_pair(reg, 0.0, a, &a);
    REQUIRE(same.samples.size() == 2);
    CHECK(same.samples[0].value == 0.0);
    const auto diff = evaluate_pair(reg, 0.0, a, &b);
    REQUIRE(diff.samples.size() == 2);
    CHECK(diff.samples[0].value == doctest::Approx(diff.samples[1].value).epsilon(1e-6));

    const auto bad = evaluate_pair(reg, 0.0, a, nullptr);
    CHECK(bad.samples.empty());

    const Image small(12, 11);
    const auto mismatched = evaluate_pair(reg, 0.0, a, &small);
    CHECK(mismatched.failures.size() >= 1);

    CHECK_THROWS_AS(make_metric({"x", plugin("echo"), {}}, g), PluginError);
}
