#include "ppmatch/rare.hpp"

#include <algorithm>
#include <cmath>

#include "ppmatch/parallel.hpp"
#include "ppmatch/score.hpp"
#include "ppmatch/stats.hpp"

namespace ppmatch {

TiltedSampler TiltedSampler::build(const PointSeq& tmpl, const ScoreComponent& f, double lambda,
                                   double theta) {
    if (tmpl.empty()) throw std::invalid_argument("TiltedSampler: empty template");
    TiltedSampler s(f);
    s.tmpl = tmpl;
    s.lambda = lambda;
    s.l = tmpl.length();

    EmpiricalCgf ecgf(tmpl, lambda, f);
    const LegendreResult solved = empirical_rate_star(ecgf, theta);
    if (solved.status == SolveStatus::Failed)
        throw std::runtime_error("TiltedSampler: t* solve failed: " + solved.diagnostic);
    s.t_star = solved.status == SolveStatus::Converged ? solved.t() : 0.0;
    s.rate_empirical = solved.rate;
    const double big_lambda = ecgf.eval(s.t_star).value;
    s.big_k = s.l * (big_lambda + lambda);
    s.log_weight_base = s.l * big_lambda;
    s.envelope = lambda * std::exp(s.t_star * f.bound());
    return s;
}

double TiltedSampler::intensity(double y) const {
    return lambda * std::exp(t_star * f.eval(dist_to_sorted(y, tmpl.points)));
}

double TiltedSampler::sample_score_sum(RngSeed seed, std::uint64_t& n_points) const {
    Pcg64 gaps(seed, RngRole::location);
    Pcg64 accept(seed, RngRole::thinning);
    double t = 0.0;
    double total = 0.0;
    n_points = 0;
    while (true) {
        t += gaps.exponential(envelope);
        if (t >= l) break;
        const double fx = f.eval(dist_to_sorted(t, tmpl.points));
        const double lam = lambda * std::exp(t_star * fx);
        // lam <= envelope holds by construction (f <= M)
        if (accept.uniform01() * envelope < lam) {
            total += fx;
            ++n_points;
        }
    }
    return total;
}

namespace {

ISEstimate finalize_weighted(double lth, double t_star, double log_weight_base,
                             double rate_empirical, double l,
                             const std::vector<double>& score_sums) {
    ISEstimate est;
    est.n_samples = score_sums.size();
    est.t_star = t_star;
    est.rate_empirical = rate_empirical;
    est.method = "is_tilted";

    // scaled weights a_i = exp(t*(l theta - T_i)) <= 1 on hits, so the
    // algebraic bound w <= exp(-l Lambda*) holds exactly in floating point
    const double log_w_max = log_weight_base - t_star * lth; // = -l Lambda*_{S,l}(theta)
    double s1 = 0.0, s2 = 0.0, a_max = 0.0;
    std::uint64_t hits = 0;
    for (double total : score_sums) {
        if (!(total >= lth)) continue;
        ++hits;
        const double a = std::exp(t_star * (lth - total));
        s1 += a;
        s2 += a * a;
        a_max = std::max(a_max, a);
    }
    const double n = static_cast<double>(score_sums.size());
    const double mean_a = s1 / n;
    est.hit_fraction = static_cast<double>(hits) / n;
    est.max_weight = a_max * std::exp(log_w_max);
    if (hits == 0) {
        est.p_hat = 0.0;
        est.log_p_hat = -kInf;
        est.stderr_est = 0.0;
        return est;
    }
    est.p_hat = std::exp(log_w_max) * mean_a;
    est.log_p_hat = log_w_max + std::log(mean_a);
    const double var_a = std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0));
    est.stderr_est = std::exp(log_w_max) * std::sqrt(var_a / n);
    (void)l;
    return est;
}

} // namespace

ISEstimate is_estimate(const PointSeq& tmpl, const ScoreFn& f, double lambda, double theta,
                       double l, std::uint64_t n_samples, RngSeed seed, int workers) {
    if (tmpl.empty()) throw std::invalid_argument("is_estimate: empty template");
    if (!f.scalar()) throw std::invalid_argument("is_estimate: scalar score function required");
    if (std::fabs(tmpl.length() - l) > 1e-9 * std::max(1.0, l))
        throw std::invalid_argument("is_estimate: template window length must equal l");
    if (n_samples == 0) throw std::invalid_argument("is_estimate: n_samples must be > 0");

    const TiltedSampler sampler = TiltedSampler::build(tmpl, f.only(), lambda, theta);
    if (sampler.t_star == 0.0) {
        // theta at or below Lambda'_{S,l}(0): zero tilt is the identity
        // change of measure, so fall back to naive sampling with a warning
        ISEstimate est = naive_mc_estimate(tmpl, f, lambda, theta, l, n_samples, seed, workers);
        est.zero_tilt = true;
        est.method = "is_zero_tilt_naive";
        est.t_star = 0.0;
        est.rate_empirical = sampler.rate_empirical;
        return est;
    }

    std::vector<double> sums(n_samples);
    parallel_for(n_samples, workers, [&](std::size_t i) {
        std::uint64_t n_points = 0;
        sums[i] = sampler.sample_score_sum(seed.with_stream(seed.stream_index + i), n_points);
    });
    return finalize_weighted(l * theta, sampler.t_star, sampler.log_weight_base,
                             sampler.rate_empirical, l, sums);
}

ISEstimate naive_mc_estimate(const PointSeq& tmpl, const ScoreFn& f, double lambda, double theta,
                             double l, std::uint64_t n_samples, RngSeed seed, int workers) {
    if (tmpl.empty()) throw std::invalid_argument("naive_mc_estimate: empty template");
    if (!f.scalar()) throw std::invalid_argument("naive_mc_estimate: scalar score function required");
    if (n_samples == 0) throw std::invalid_argument("naive_mc_estimate: n_samples must be > 0");

    const ScoreComponent& comp = f.only();
    const double lth = l * theta;
    std::vector<std::uint8_t> hits(n_samples, 0);
    parallel_for(n_samples, workers, [&](std::size_t i) {
        Pcg64 gaps(seed.with_stream(seed.stream_index + i), RngRole::location);
        double t = 0.0, total = 0.0;
        while (true) {
            t += gaps.exponential(lambda);
            if (t >= l) break;
            total += comp.eval(dist_to_sorted(t, tmpl.points));
        }
        hits[i] = total >= lth ? 1 : 0;
    });
    std::uint64_t n_hit = 0;
    for (auto h : hits) n_hit += h;

    ISEstimate est;
    est.n_samples = n_samples;
    est.method = "naive_mc";
    const double n = static_cast<double>(n_samples);
    est.p_hat = static_cast<double>(n_hit) / n;
    est.hit_fraction = est.p_hat;
    est.log_p_hat = n_hit == 0 ? -kInf : std::log(est.p_hat);
    est.stderr_est = std::sqrt(est.p_hat * (1.0 - est.p_hat) / n);
    est.max_weight = n_hit > 0 ? 1.0 : 0.0;
    EmpiricalCgf ecgf(tmpl, lambda, comp);
    const LegendreResult solved = empirical_rate_star(ecgf, theta);
    est.t_star = solved.status == SolveStatus::Converged ? solved.t() : 0.0;
    est.rate_empirical = solved.rate;
    return est;
}

DeviationTable theorem3_deviation(const ProcessModel& x_model, const ScoreFn& f, double lambda,
                                  double theta, const std::vector<double>& l_list,
                                  std::uint64_t n_samples, int replicates, RngSeed seed,
                                  int workers) {
    if (!f.scalar()) throw std::invalid_argument("theorem3_deviation: scalar f required");
    if (replicates < 0) throw std::invalid_argument("theorem3_deviation: replicates must be >= 0");
    DeviationTable table;
    const std::size_t jobs = l_list.size() * static_cast<std::size_t>(replicates);
    table.rows.resize(jobs);

    // one stream block per job: template plus n_samples IS streams
    const std::uint64_t block = n_samples + 16;
    parallel_for(jobs, 1, [&](std::size_t jid) {
        const std::size_t li = jid / static_cast<std::size_t>(replicates);
        const int rep = static_cast<int>(jid % static_cast<std::size_t>(replicates));
        const double l = l_list[li];
        const RngSeed tmpl_seed = seed.with_stream(seed.stream_index + jid * block);
        const RngSeed is_seed = seed.with_stream(seed.stream_index + jid * block + 1);
        const PointSeq tmpl = sample_model(x_model, 0.0, l, tmpl_seed);
        DeviationRow row{l, rep, ISEstimate{}, 0.0};
        if (!tmpl.empty()) {
            row.est = is_estimate(tmpl, f, lambda, theta, l, n_samples, is_seed, workers);
            row.delta = (-row.est.log_p_hat - l * row.est.rate_empirical) / std::sqrt(l);
        }
        table.rows[jid] = row;
    });

    for (std::size_t li = 0; li < l_list.size(); ++li) {
        std::vector<double> deltas, abs_deltas;
        for (int rep = 0; rep < replicates; ++rep) {
            const DeviationRow& row = table.rows[li * replicates + rep];
            deltas.push_back(row.delta);
            abs_deltas.push_back(std::fabs(row.delta));
        }
        DeviationSummary s;
        s.l = l_list[li];
        s.n = replicates;
        s.mean_delta = deltas.empty() ? 0.0 : summarize(deltas).mean;
        s.median_abs_delta = abs_deltas.empty() ? 0.0 : median(abs_deltas);
        table.summary.push_back(s);
    }
    return table;
}

} // namespace ppmatch
