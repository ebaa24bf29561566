#include <doctest.h>

#include <cmath>

#include "ppmatch/rare.hpp"
#include "ppmatch/stats.hpp"

using namespace ppmatch;

namespace {

PointSeq seq_on(std::vector<double> pts, double a, double b) {
    PointSeq s;
    s.points = std::move(pts);
    s.window_start = a;
    s.window_end = b;
    s.validate();
    return s;
}

} // namespace

TEST_CASE("constant f: IS reproduces the Poisson tail") {
    // f = constant(1), lambda = 1, l = 1, theta = 2:
    // p = Pr{Poisson(1) >= 2} = 1 - 2/e
    const double truth = 1.0 - 2.0 * std::exp(-1.0);
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::constant(1.0));
    int pass = 0;
    for (int s = 0; s < 5; ++s) {
        const ISEstimate est =
            is_estimate(tmpl, f, 1.0, 2.0, 1.0, 100000, RngSeed{100 + (std::uint64_t)s, 0}, 2);
        if (std::fabs(est.p_hat - truth) <= 3.0 * est.stderr_est) ++pass;
    }
    CHECK(pass >= 4);
}

TEST_CASE("constant f: naive MC reproduces the Poisson tail") {
    const double truth = 1.0 - 2.0 * std::exp(-1.0);
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::constant(1.0));
    const ISEstimate est = naive_mc_estimate(tmpl, f, 1.0, 2.0, 1.0, 100000, RngSeed{200, 0}, 2);
    CHECK(std::fabs(est.p_hat - truth) <= 3.0 * est.stderr_est);
}

TEST_CASE("threshold below the empirical mean falls back to zero tilt with a warning") {
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::indicator(0.2));
    const EmpiricalCgf e(tmpl, 1.0, f.only());
    const double low_theta = 0.5 * e.eval(0.0).d1;
    const ISEstimate est = is_estimate(tmpl, f, 1.0, low_theta, 1.0, 20000, RngSeed{300, 0});
    CHECK(est.zero_tilt);
    CHECK(est.method == "is_zero_tilt_naive");
    CHECK(est.p_hat > 0.0);
}

TEST_CASE("weight bound holds exactly on every run") {
    const ScoreFn f(ScoreComponent::indicator(0.25));
    for (int s = 0; s < 10; ++s) {
        const PointSeq tmpl = sample_poisson(1.0, 0.0, 10.0, RngSeed{400 + (std::uint64_t)s, 0});
        if (tmpl.empty()) continue;
        const ISEstimate est = is_estimate(tmpl, f, 1.0, 1.0, 10.0, 20000, RngSeed{500, 0}, 2);
        CHECK(est.max_weight <= std::exp(-10.0 * est.rate_empirical) * (1.0 + 1e-12));
    }
}

TEST_CASE("IS agrees with naive MC within three combined standard errors") {
    // l = 15 keeps p large enough for the naive route to record many hits
    const ScoreFn f(ScoreComponent::indicator(0.25));
    const PointSeq tmpl = sample_poisson(1.0, 0.0, 15.0, RngSeed{600, 0});
    REQUIRE(!tmpl.empty());
    const ISEstimate is = is_estimate(tmpl, f, 1.0, 1.0, 15.0, 40000, RngSeed{601, 0}, 2);
    const ISEstimate mc = naive_mc_estimate(tmpl, f, 1.0, 1.0, 15.0, 400000, RngSeed{602, 0}, 2);
    REQUIRE(mc.p_hat * 400000 >= 100); // enough hits for the binomial error to mean something
    const double combined = std::sqrt(is.stderr_est * is.stderr_est + mc.stderr_est * mc.stderr_est);
    CHECK(std::fabs(is.p_hat - mc.p_hat) <= 3.0 * combined);
}

TEST_CASE("IS relative error beats naive MC by 10x at matched sample count") {
    const ScoreFn f(ScoreComponent::indicator(0.25));
    const PointSeq tmpl = sample_poisson(1.0, 0.0, 30.0, RngSeed{700, 0});
    REQUIRE(!tmpl.empty());
    const std::uint64_t n = 20000;
    const ISEstimate is = is_estimate(tmpl, f, 1.0, 1.0, 30.0, n, RngSeed{701, 0}, 2);
    const ISEstimate mc = naive_mc_estimate(tmpl, f, 1.0, 1.0, 30.0, n, RngSeed{702, 0}, 2);
    REQUIRE(is.p_hat > 0.0);
    const double is_rel = is.stderr_est / is.p_hat;
    // if naive found nothing its relative error is effectively infinite
    const double mc_rel = mc.p_hat > 0.0 ? mc.stderr_est / mc.p_hat : kInf;
    CHECK(is_rel * 10.0 <= mc_rel);
}

TEST_CASE("theorem3 deviation: singleton shape") {
    const DeviationTable table =
        theorem3_deviation(ProcessModel::poisson(1.0), ScoreFn(ScoreComponent::indicator(0.25)),
                           1.0, 1.0, {8.0}, 5000, 1, RngSeed{800, 0}, 2);
    REQUIRE(table.rows.size() == 1);
    REQUIRE(table.summary.size() == 1);
    CHECK(table.summary[0].n == 1);
    CHECK(std::isfinite(table.rows[0].delta));
}

TEST_CASE("theorem3 deviation: constant f checked against the Poisson tail") {
    // constant f makes Lambda_{S,l} = Lambda exactly and p a pure Poisson tail
    const double l = 6.0, theta = 2.0, lambda = 1.0;
    const PointSeq tmpl = seq_on({3.0}, 0.0, l);
    const ScoreFn f(ScoreComponent::constant(1.0));
    const ISEstimate est = is_estimate(tmpl, f, lambda, theta, l, 200000, RngSeed{900, 0}, 2);
    const double truth = poisson_tail(lambda * l, theta * l); // Pr{Poisson(6) >= 12}
    CHECK(std::fabs(est.p_hat - truth) <= 3.0 * est.stderr_est);
    // Delta against the exact tail: modest for moderate l
    const EmpiricalCgf e(tmpl, lambda, f.only());
    const LegendreResult r = empirical_rate_star(e, theta);
    const double delta = (-std::log(truth) - l * r.rate) / std::sqrt(l);
    CHECK(std::fabs(delta) < 1.5);
}

TEST_CASE("tilted sampler: empirical count mean matches the normalizer K") {
    // K = l (Lambda_{S,l}(t*) + lambda) is the total mass of the tilted
    // intensity, so the mean point count over many draws should match it
    const ScoreFn f(ScoreComponent::indicator(0.25));
    const PointSeq tmpl = sample_poisson(1.0, 0.0, 10.0, RngSeed{950, 0});
    REQUIRE(!tmpl.empty());
    const TiltedSampler sampler = TiltedSampler::build(tmpl, f.only(), 1.0, 1.0);

    // K consistency with the empirical CGF at t*
    const EmpiricalCgf e(tmpl, 1.0, f.only());
    const double k_check = 10.0 * (e.eval(sampler.t_star).value + 1.0);
    CHECK(sampler.big_k == doctest::Approx(k_check).epsilon(1e-14));

    double count_sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        std::uint64_t n_points = 0;
        sampler.sample_score_sum(RngSeed{951, (std::uint64_t)i}, n_points);
        count_sum += static_cast<double>(n_points);
    }
    const double mean_count = count_sum / n;
    CHECK(std::fabs(mean_count - sampler.big_k) <= 0.02 * sampler.big_k);
}

TEST_CASE("tilted intensity stays below its envelope") {
    const ScoreFn f(ScoreComponent::triangular(0.4));
    const PointSeq tmpl = sample_poisson(1.0, 0.0, 6.0, RngSeed{960, 0});
    REQUIRE(!tmpl.empty());
    const TiltedSampler sampler = TiltedSampler::build(tmpl, f.only(), 1.3, 1.2 * 1.3 * 0.3);
    for (int i = 0; i <= 600; ++i) {
        const double y = 6.0 * i / 600.0;
        CHECK(sampler.intensity(y) <= sampler.envelope * (1.0 + 1e-12));
    }
}

TEST_CASE("rare estimators reject bad input") {
    PointSeq empty;
    empty.window_end = 1.0;
    const ScoreFn f(ScoreComponent::constant(1.0));
    CHECK_THROWS_AS(is_estimate(empty, f, 1.0, 2.0, 1.0, 100, RngSeed{}), std::invalid_argument);
    CHECK_THROWS_AS(naive_mc_estimate(empty, f, 1.0, 2.0, 1.0, 100, RngSeed{}),
                    std::invalid_argument);
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    CHECK_THROWS_AS(is_estimate(tmpl, f, 1.0, 2.0, 1.0, 0, RngSeed{}), std::invalid_argument);
}
