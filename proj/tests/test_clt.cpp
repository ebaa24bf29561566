#include <doctest.h>

#include <cmath>

#include "ppmatch/clt.hpp"
#include "ppmatch/quadrature.hpp"
#include "ppmatch/stats.hpp"

using namespace ppmatch;

TEST_CASE("sigma2 is exactly zero for constant f") {
    const Sigma2Result s = sigma2(ScoreComponent::constant(0.8), 1.3, 1.0);
    CHECK(s.sigma2 == 0.0);
    CHECK(s.target_variance == 0.0);
}

TEST_CASE("sigma2 rejects discontinuous f") {
    CHECK_THROWS_AS(sigma2(ScoreComponent::indicator(0.25), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("sigma2: quadrature agrees with Monte Carlo") {
    const double rho = 1.0;
    const double t0 = 0.9;
    const Sigma2Result quad = sigma2(ScoreComponent::triangular(0.5), t0, rho);
    double mc_stderr = 0.0;
    const Sigma2Result mc =
        sigma2_monte_carlo(ScoreComponent::triangular(0.5), t0, rho, 1000000, RngSeed{42, 0},
                           mc_stderr);
    CHECK(std::fabs(quad.sigma2 - mc.sigma2) <= 3.0 * mc_stderr);
    CHECK(quad.sigma2 > 0.0);
}

TEST_CASE("sigma2 stays finite across rho") {
    for (double rho : {0.5, 1.0, 2.0}) {
        const Sigma2Result s = sigma2(ScoreComponent::triangular(0.5), 1.1, rho);
        CHECK(std::isfinite(s.sigma2));
        CHECK(s.sigma2 >= 0.0);
        CHECK(std::isfinite(s.target_variance));
    }
}

TEST_CASE("ks statistic: hand cases") {
    // single sample at the reference median
    CHECK(ks_statistic({0.0}, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // constant sample against the degenerate point mass is an exact match
    CHECK(ks_statistic({2.0, 2.0, 2.0}, 2.0, 0.0) == 0.0);
    // nonconstant sample against a degenerate reference is invalid
    CHECK_THROWS_AS(ks_statistic({1.0, 2.0}, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ks_statistic({}, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("ks statistic: self-simulation stays small") {
    Pcg64 rng(RngSeed{77, 0});
    std::vector<double> z;
    for (int i = 0; i < 10000; ++i) {
        // Box-Muller from two uniforms
        double u1 = rng.uniform01(), u2 = rng.uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        z.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    }
    CHECK(ks_statistic(z, 0.0, 1.0) <= 0.05);
}

TEST_CASE("clt experiment: constant f degenerates to all-zero statistics") {
    const CltSummary s = clt_experiment(1.0, 1.0, ScoreFn(ScoreComponent::constant(1.0)), 2.0, 50.0,
                                        40, RngSeed{501, 0}, 2);
    CHECK(s.target_variance == 0.0);
    for (const auto& row : s.rows) CHECK(row.s_i == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("clt experiment: gap statistic is nonnegative for every replicate") {
    const ScoreFn f(ScoreComponent::triangular(0.5));
    const double phi = AnalyticScalarCgf(1.0, 1.0, f.only()).phi();
    const CltSummary s = clt_experiment(1.0, 1.0, f, 1.5 * phi, 60.0, 150, RngSeed{502, 0}, 2);
    REQUIRE(!s.rows.empty());
    for (const auto& row : s.rows) CHECK(row.gap_i >= -1e-9);
}

TEST_CASE("clt experiment: replicate rows reproducible across worker counts") {
    const ScoreFn f(ScoreComponent::triangular(0.5));
    const double phi = AnalyticScalarCgf(1.0, 1.0, f.only()).phi();
    const CltSummary a = clt_experiment(1.0, 1.0, f, 1.5 * phi, 40.0, 30, RngSeed{503, 0}, 1);
    const CltSummary b = clt_experiment(1.0, 1.0, f, 1.5 * phi, 40.0, 30, RngSeed{503, 0}, 4);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].s_i == b.rows[i].s_i);
        CHECK(a.rows[i].gap_i == b.rows[i].gap_i);
        CHECK(a.rows[i].t_star_i == b.rows[i].t_star_i);
    }
}

namespace {

// Deterministic oracle for E[S_l]: the distance from y to a Poisson(rho)
// template restricted to [0, l) has survival exp(-rho |[y-u, y+u] cap [0,l]|),
// so E[Lambda_{X,l}(t0)] is a double quadrature with no Monte Carlo noise.
double expected_s(double rho, double lambda, const ScoreComponent& f, double t0, double theta,
                  double rate, double l) {
    auto inner = [&](double y) {
        const double umax = std::max(y, l - y);
        auto density_part = Quadrature::integrate(
            [&](double u) {
                const double len = std::min(y + u, l) - std::max(y - u, 0.0);
                const double dlen = (y + u < l ? 1.0 : 0.0) + (y - u > 0.0 ? 1.0 : 0.0);
                return std::exp(t0 * f.eval(u)) * rho * dlen * std::exp(-rho * len);
            },
            0.0, umax, {1e-12, 1e-10, 40});
        // atom at u = umax: the whole window is empty of template points
        const double atom = std::exp(-rho * l) * std::exp(t0 * f.eval(umax));
        return density_part + atom - 1.0;
    };
    const double mean_cgf =
        lambda / l * Quadrature::integrate(inner, 0.0, l, {1e-11, 1e-9, 30});
    return std::sqrt(l) * (theta * t0 - mean_cgf - rate);
}

} // namespace

TEST_CASE("clt experiment: centering drifts toward zero in l") {
    // E[S_l] falls like 1/sqrt(l); the expectation comes from a quadrature
    // oracle (no Monte Carlo noise) and the estimator is tied to it at one l
    const ScoreFn f(ScoreComponent::triangular(0.5));
    const AnalyticScalarCgf cgf(1.0, 1.0, f.only());
    const double theta = 1.5 * cgf.phi();
    const LegendreResult r = rate_star(cgf, theta);
    REQUIRE(r.status == SolveStatus::Converged);

    std::vector<double> drift;
    for (double l : {100.0, 200.0, 400.0})
        drift.push_back(expected_s(1.0, 1.0, f.only(), r.t(), theta, r.rate, l));
    CHECK(drift[0] > 0.0);
    CHECK(std::fabs(drift[1]) < std::fabs(drift[0]));
    CHECK(std::fabs(drift[2]) < std::fabs(drift[1]));

    const CltSummary s = clt_experiment(1.0, 1.0, f, theta, 100.0, 4000, RngSeed{504, 0}, 2);
    const double se = std::sqrt(s.sample_variance / 4000.0);
    CHECK(std::fabs(s.sample_mean - drift[0]) <= 3.0 * se);
}

TEST_CASE("clt experiment rejects bad configurations") {
    CHECK_THROWS_AS(
        clt_experiment(1.0, 1.0, ScoreFn(ScoreComponent::indicator(0.2)), 1.0, 50.0, 10, RngSeed{}),
        std::invalid_argument);
    const ScoreFn f(ScoreComponent::triangular(0.5));
    const double phi = AnalyticScalarCgf(1.0, 1.0, f.only()).phi();
    CHECK_THROWS_AS(clt_experiment(1.0, 1.0, f, 0.5 * phi, 50.0, 10, RngSeed{}),
                    std::invalid_argument);
}
