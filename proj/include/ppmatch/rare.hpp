#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppmatch/point_seq.hpp"
#include "ppmatch/procgen.hpp"
#include "ppmatch/rates.hpp"
#include "ppmatch/score_fn.hpp"

namespace ppmatch {

// Exponentially tilted sampler for one template: data intensity
// lambda e^{t* f(d(y,S))} on [0, l), realized by thinning under the envelope
// lambda e^{t* M}.
struct TiltedSampler {
    PointSeq tmpl;
    ScoreComponent f;
    double lambda = 0.0;
    double l = 0.0;
    double t_star = 0.0;
    double envelope = 0.0;       // lambda e^{t* M}
    double big_k = 0.0;          // K = l (Lambda_{S,l}(t*) + lambda), Eq. (5.4)
    double log_weight_base = 0.0; // l Lambda_{S,l}(t*)
    double rate_empirical = 0.0; // Lambda*_{S,l}(theta)

    static TiltedSampler build(const PointSeq& tmpl, const ScoreComponent& f, double lambda,
                               double theta);

    double intensity(double y) const;
    // One tilted realization: returns T = sum of f at template distances and
    // the point count.
    double sample_score_sum(RngSeed seed, std::uint64_t& n_points) const;

private:
    explicit TiltedSampler(ScoreComponent fc) : f(std::move(fc)) {}
};

struct ISEstimate {
    double p_hat = 0.0;
    double log_p_hat = 0.0;
    double stderr_est = 0.0;
    std::uint64_t n_samples = 0;
    double hit_fraction = 0.0;
    double max_weight = 0.0;
    double t_star = 0.0;
    double rate_empirical = 0.0;
    bool zero_tilt = false; // t* = 0: reduces to naive Monte Carlo (warned)
    std::string method;
};

// Importance-sampling estimate of p_l = Pr{rho_l(X_0^l, Y_0^l) >= theta}
// = Pr{W_l(theta) = 0}. Unbiased; weights on hits obey
// w <= exp(-l Lambda*_{S,l}(theta)) exactly.
ISEstimate is_estimate(const PointSeq& tmpl, const ScoreFn& f, double lambda, double theta,
                       double l, std::uint64_t n_samples, RngSeed seed, int workers = 1);

// Brute-force oracle: direct Poisson sampling, binomial standard error.
ISEstimate naive_mc_estimate(const PointSeq& tmpl, const ScoreFn& f, double lambda, double theta,
                             double l, std::uint64_t n_samples, RngSeed seed, int workers = 1);

// Theorem 3 diagnostic: Delta_l = (-log p_hat - l Lambda*_{S,l}(theta)) / sqrt(l)
// per fresh template, tabulated per l.
struct DeviationRow {
    double l;
    int replicate;
    ISEstimate est;
    double delta;
};

struct DeviationSummary {
    double l;
    double mean_delta;
    double median_abs_delta;
    int n;
};

struct DeviationTable {
    std::vector<DeviationRow> rows;
    std::vector<DeviationSummary> summary;
};

DeviationTable theorem3_deviation(const ProcessModel& x_model, const ScoreFn& f, double lambda,
                                  double theta, const std::vector<double>& l_list,
                                  std::uint64_t n_samples, int replicates, RngSeed seed,
                                  int workers = 1);

} // namespace ppmatch
