#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppmatch/rates.hpp"
#include "ppmatch/rng.hpp"
#include "ppmatch/score_fn.hpp"

namespace ppmatch {

// sigma^2 of Theorem 4: with U ~ Exp(1), g(x) = e^{t0 f(x)}, G(x) = int_0^x g,
//   sigma^2 = Var[G(U/2rho) - c U] + (E[G(U/2rho) - g(U/2rho) U/(2rho)])^2,
//   c = E[g(U/2rho) U/(2rho)].
struct Sigma2Result {
    double t0 = 0.0;
    double sigma2 = 0.0;
    double target_variance = 0.0; // 4 rho sigma^2
    double c_const = 0.0;
    std::string method;
    double tolerance = 0.0;
};

// Quadrature route; requires continuous nonzero f (Theorem 4's hypothesis).
Sigma2Result sigma2(const ScoreComponent& f, double t0, double rho);

// Monte Carlo cross-check on n draws of U; stderr from batch means.
Sigma2Result sigma2_monte_carlo(const ScoreComponent& f, double t0, double rho, std::uint64_t n,
                                RngSeed seed, double& stderr_out);

// Kolmogorov-Smirnov sup-distance between the sample and Normal(mean, variance).
double ks_statistic(std::vector<double> samples, double mean, double variance);

struct CltRow {
    int replicate;
    double s_i;       // sqrt(l) (theta t0 - Lambda_{X,l}(t0) - Lambda*(theta))
    double gap_i;     // l {Lambda*_{X,l}(theta) - [theta t0 - Lambda_{X,l}(t0)]} / sqrt(l)
    double t_star_i;
};

struct CltSummary {
    std::vector<CltRow> rows;
    double t0 = 0.0;
    double rate = 0.0; // Lambda*(theta)
    double sigma2_value = 0.0;
    double target_variance = 0.0; // lambda^2 4 rho sigma^2
    double sample_mean = 0.0;
    double sample_variance = 0.0;
    double variance_ratio = 0.0;
    double ks_distance = 0.0;
    double median_abs_gap = 0.0;
    int n_failed = 0;
};

// Theorem 4 experiment: X Poisson(rho); per replicate a fresh template on
// [0, l), its gap decomposition, the centered normalized statistic S_i and
// the Eq.-style centering gap.
CltSummary clt_experiment(double rho, double lambda, const ScoreFn& f, double theta, double l,
                          int replicates, RngSeed seed, int workers = 1);

} // namespace ppmatch
