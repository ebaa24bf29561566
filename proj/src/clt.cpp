#include "ppmatch/clt.hpp"

#include <algorithm>
#include <cmath>

#include "ppmatch/parallel.hpp"
#include "ppmatch/piecewise.hpp"
#include "ppmatch/procgen.hpp"
#include "ppmatch/quadrature.hpp"
#include "ppmatch/stats.hpp"

namespace ppmatch {

namespace {

// G(x) = int_0^x e^{t0 f(u)} du: closed form over a linear profile, adaptive
// quadrature otherwise.
double antiderivative_g(const ScoreComponent& f,
                        const std::optional<std::vector<LinearSegment>>& profile, double t0,
                        double x) {
    if (x <= 0.0) return 0.0;
    if (profile) return exp_integrals_profile(*profile, t0, 0.0, x).e;
    return Quadrature::integrate([&](double u) { return std::exp(t0 * f.eval(u)); }, 0.0, x,
                                 {1e-13, 1e-12, 40});
}

bool is_constant_component(const ScoreComponent& f) {
    if (auto profile = f.linear_profile()) {
        const double c = (*profile)[0].intercept;
        for (const auto& seg : *profile)
            if (seg.slope != 0.0 || seg.intercept != c) return false;
        return true;
    }
    return false;
}

} // namespace

Sigma2Result sigma2(const ScoreComponent& f, double t0, double rho) {
    if (!f.continuous())
        throw std::invalid_argument("sigma2: Theorem 4 requires a continuous score function");
    if (!(f.bound() > 0.0)) throw std::invalid_argument("sigma2: f must be nonzero");
    if (!(rho > 0.0)) throw std::invalid_argument("sigma2: rho must be > 0");

    Sigma2Result out;
    out.t0 = t0;
    out.tolerance = 1e-8;

    if (is_constant_component(f)) {
        // g constant, G linear: both variance and bias terms vanish identically
        const double g0 = std::exp(t0 * f.eval(0.0));
        out.sigma2 = 0.0;
        out.target_variance = 0.0;
        out.c_const = g0 / (2.0 * rho);
        out.method = "closed-form degenerate (constant f)";
        return out;
    }

    const auto profile = f.linear_profile();
    // moments against U ~ Exp(1) through v = e^{-u}:
    //   m[0] = E[G(U/2rho)], m[1] = E[G^2], m[2] = E[G(U/2rho) U],
    //   m[3] = c = E[g(U/2rho) U/(2rho)]
    auto integrand = [&](double v, double* vals) {
        const double u = -std::log(v);
        const double x = u / (2.0 * rho);
        const double big_g = antiderivative_g(f, profile, t0, x);
        const double g = std::exp(t0 * f.eval(x));
        vals[0] = big_g;
        vals[1] = big_g * big_g;
        vals[2] = big_g * u;
        vals[3] = g * x;
    };
    const auto m = VectorQuadrature::integrate(integrand, 4, 0.0, 1.0, {1e-13, 1e-10, 44});
    const double c = m[3];
    // A = G(U/2rho) - c U: E[A] = m0 - c, E[A^2] = m1 - 2c m2 + 2c^2 (E[U^2] = 2)
    const double mean_a = m[0] - c;
    const double mean_a2 = m[1] - 2.0 * c * m[2] + 2.0 * c * c;
    const double var_term = mean_a2 - mean_a * mean_a;
    const double bias = m[0] - c; // E[G - g U/(2rho)] with E[g U/(2rho)] = c
    out.c_const = c;
    out.sigma2 = std::max(0.0, var_term + bias * bias);
    out.target_variance = 4.0 * rho * out.sigma2;
    out.method = "quadrature";
    return out;
}

Sigma2Result sigma2_monte_carlo(const ScoreComponent& f, double t0, double rho, std::uint64_t n,
                                RngSeed seed, double& stderr_out) {
    if (!(rho > 0.0)) throw std::invalid_argument("sigma2_monte_carlo: rho must be > 0");
    const auto profile = f.linear_profile();

    // c estimated on the full sample first, then batch-means estimates of
    // sigma^2 give an honest spread
    const std::uint64_t n_batches = 100;
    const std::uint64_t per_batch = std::max<std::uint64_t>(2, n / n_batches);
    Pcg64 rng(seed, RngRole::generic);

    const std::uint64_t total = n_batches * per_batch;
    std::vector<double> big_g_vals(total), u_vals(total), gx_vals(total);
    double c_acc = 0.0;
    for (std::uint64_t i = 0; i < total; ++i) {
        const double u = rng.exponential(1.0);
        const double x = u / (2.0 * rho);
        big_g_vals[i] = antiderivative_g(f, profile, t0, x);
        u_vals[i] = u;
        gx_vals[i] = std::exp(t0 * f.eval(x)) * x; // g(U/2rho) U/(2rho)
        c_acc += gx_vals[i];
    }
    const double c = c_acc / static_cast<double>(total);

    std::vector<double> batch_est;
    for (std::uint64_t b = 0; b < n_batches; ++b) {
        double s = 0.0, ss = 0.0, sb = 0.0;
        for (std::uint64_t i = 0; i < per_batch; ++i) {
            const std::uint64_t k = b * per_batch + i;
            const double a = big_g_vals[k] - c * u_vals[k];
            s += a;
            ss += a * a;
            sb += big_g_vals[k] - gx_vals[k];
        }
        const double np = static_cast<double>(per_batch);
        const double var_a = (ss - s * s / np) / (np - 1.0);
        const double bias = sb / np;
        batch_est.push_back(var_a + bias * bias);
    }
    const SummaryStats stats = summarize(batch_est);
    Sigma2Result out;
    out.t0 = t0;
    out.sigma2 = stats.mean;
    out.target_variance = 4.0 * rho * stats.mean;
    out.c_const = c;
    out.method = "monte_carlo";
    out.tolerance = stats.stderr_mean;
    stderr_out = stats.stderr_mean;
    return out;
}

double ks_statistic(std::vector<double> samples, double mean, double variance) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    if (variance < 0.0) throw std::invalid_argument("ks_statistic: negative variance");
    if (variance == 0.0) {
        for (double s : samples)
            if (s != mean)
                throw std::invalid_argument("ks_statistic: degenerate reference, nonconstant sample");
        return 0.0; // exact match with the point mass
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = normal_cdf(samples[i], mean, variance);
        d = std::max(d, cdf - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - cdf);
    }
    return d;
}

CltSummary clt_experiment(double rho, double lambda, const ScoreFn& f, double theta, double l,
                          int replicates, RngSeed seed, int workers) {
    if (!f.scalar()) throw std::invalid_argument("clt_experiment: scalar f required");
    if (replicates < 0) throw std::invalid_argument("clt_experiment: replicates must be >= 0");
    const ScoreComponent& comp = f.only();
    if (!comp.continuous())
        throw std::invalid_argument("clt_experiment: Theorem 4 requires continuous f");

    CltSummary out;
    const AnalyticScalarCgf cgf(lambda, rho, comp);
    if (!(theta > cgf.phi()))
        throw std::invalid_argument("clt_experiment: theta must exceed phi");
    const LegendreResult base = rate_star(cgf, theta);
    if (base.status != SolveStatus::Converged)
        throw std::runtime_error("clt_experiment: t0 solve failed: " + base.diagnostic);
    out.t0 = base.t();
    out.rate = base.rate;

    const Sigma2Result s2 = sigma2(comp, out.t0, rho);
    out.sigma2_value = s2.sigma2;
    out.target_variance = lambda * lambda * s2.target_variance;

    const double sqrt_l = std::sqrt(l);
    struct Slot {
        CltRow row;
        bool ok;
    };
    std::vector<Slot> slots(replicates);
    parallel_for(static_cast<std::size_t>(replicates), workers, [&](std::size_t i) {
        const PointSeq tmpl =
            sample_poisson(rho, 0.0, l, seed.with_stream(seed.stream_index + i));
        Slot slot;
        slot.row.replicate = static_cast<int>(i);
        if (tmpl.empty()) {
            slot.ok = false;
            slots[i] = slot;
            return;
        }
        const EmpiricalCgf ecgf(tmpl, lambda, comp);
        const double lam_at_t0 = ecgf.eval(out.t0).value;
        slot.row.s_i = sqrt_l * (theta * out.t0 - lam_at_t0 - out.rate);
        const LegendreResult emp = empirical_rate_star(ecgf, theta);
        if (emp.status == SolveStatus::Failed) {
            slot.ok = false;
            slots[i] = slot;
            return;
        }
        slot.row.t_star_i = emp.status == SolveStatus::Converged ? emp.t() : 0.0;
        slot.row.gap_i = sqrt_l * (emp.rate - (theta * out.t0 - lam_at_t0));
        slot.ok = true;
        slots[i] = slot;
    });

    std::vector<double> s_vals, abs_gaps;
    for (const Slot& slot : slots) {
        if (!slot.ok) {
            ++out.n_failed;
            continue;
        }
        out.rows.push_back(slot.row);
        s_vals.push_back(slot.row.s_i);
        abs_gaps.push_back(std::fabs(slot.row.gap_i));
    }
    if (!s_vals.empty()) {
        const SummaryStats stats = summarize(s_vals);
        out.sample_mean = stats.mean;
        out.sample_variance = stats.variance;
        out.variance_ratio =
            out.target_variance > 0.0 ? out.sample_variance / out.target_variance : 0.0;
        out.median_abs_gap = median(abs_gaps);
        if (out.target_variance > 0.0)
            out.ks_distance = ks_statistic(s_vals, 0.0, out.target_variance);
    }
    return out;
}

} // namespace ppmatch
