#include <algorithm>
#include <cmath>
#include <limits>

#include "ppmatch/piecewise.hpp"
#include "ppmatch/quadrature.hpp"
#include "ppmatch/rates.hpp"

namespace ppmatch {

namespace {

// Gaussian elimination with partial pivoting for the tiny systems that show
// up here (n is the score dimension). Returns false on (numerical) singularity.
bool solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n,
                 std::vector<double>& x) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        if (std::fabs(a[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = a[r * n + col] / a[col * n + col];
            if (m == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= m * a[col * n + c];
            b[r] -= m * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
        x[ri] = s / a[ri * n + ri];
    }
    return true;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double c : v) m = std::max(m, std::fabs(c));
    return m;
}

} // namespace

VectorCgf::VectorCgf(double lambda, double rho, ScoreFn f)
    : lambda_(lambda), rho_(rho), f_(std::move(f)) {
    if (!(lambda > 0.0) || !(rho > 0.0))
        throw std::invalid_argument("VectorCgf: lambda and rho must be > 0");

    // merge component profiles onto common cuts for the closed-form route
    std::vector<std::vector<LinearSegment>> profiles;
    for (const auto& comp : f_.components) {
        auto p = comp.linear_profile();
        if (!p) return; // exp-decay component: quadrature route
        profiles.push_back(std::move(*p));
    }
    cuts_.push_back(0.0);
    for (const auto& p : profiles)
        for (const auto& seg : p)
            if (seg.lo > 0.0 && std::isfinite(seg.lo)) cuts_.push_back(seg.lo);
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
    cuts_.push_back(std::numeric_limits<double>::infinity());
    const std::size_t n = f_.dim();
    const std::size_t segments = cuts_.size() - 1;
    seg_slope_.assign(segments * n, 0.0);
    seg_icept_.assign(segments * n, 0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        const double lo = cuts_[s];
        for (std::size_t k = 0; k < n; ++k) {
            for (const auto& seg : profiles[k]) {
                if (seg.lo <= lo && lo < seg.hi) {
                    seg_slope_[s * n + k] = seg.slope;
                    seg_icept_[s * n + k] = seg.intercept;
                    break;
                }
            }
        }
    }
    closed_form_ = true;
}

void VectorCgf::moments(const std::vector<double>& t, std::vector<double>& out) const {
    const std::size_t n = f_.dim();
    const std::size_t m = 1 + n + n * (n + 1) / 2;
    if (closed_form_) {
        out.assign(m, 0.0);
        const double rate = 2.0 * rho_;
        for (std::size_t s = 0; s + 1 < cuts_.size(); ++s) {
            const double lo = cuts_[s];
            const double hi = cuts_[s + 1];
            const double* sl = &seg_slope_[s * n];
            const double* ic = &seg_icept_[s * n];
            double big_s = 0.0, big_c = 0.0; // <t, f(u)> = big_s u + big_c
            for (std::size_t k = 0; k < n; ++k) {
                big_s += t[k] * sl[k];
                big_c += t[k] * ic[k];
            }
            const double a = big_s - rate;
            const double e0 = expint::e0(a, lo, hi);
            const double e1 = expint::e1(a, lo, hi);
            const double e2 = expint::e2(a, lo, hi);
            const double w = rate * std::exp(big_c);
            out[0] += w * e0;
            for (std::size_t k = 0; k < n; ++k) out[1 + k] += w * (sl[k] * e1 + ic[k] * e0);
            std::size_t idx = 1 + n;
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = j; k < n; ++k)
                    out[idx++] += w * (sl[j] * sl[k] * e2 + (sl[j] * ic[k] + sl[k] * ic[j]) * e1 +
                                       ic[j] * ic[k] * e0);
        }
        out[0] -= 1.0; // E[e^{<t,f>} - 1]
        return;
    }

    const double rate = 2.0 * rho_;
    auto integrand = [&](double v, double* vals) {
        thread_local std::vector<double> fx;
        const double u = -std::log(v) / rate;
        f_.eval(u, fx);
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += t[k] * fx[k];
        const double w = std::exp(dot);
        vals[0] = w - 1.0;
        for (std::size_t k = 0; k < n; ++k) vals[1 + k] = fx[k] * w;
        std::size_t idx = 1 + n;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j; k < n; ++k) vals[idx++] = fx[j] * fx[k] * w;
    };
    out = VectorQuadrature::integrate(integrand, m, 0.0, 1.0);
}

double VectorCgf::value(const std::vector<double>& t) const {
    std::vector<double> m;
    moments(t, m);
    return lambda_ * m[0];
}

void VectorCgf::eval(const std::vector<double>& t, double& value, std::vector<double>& grad,
                     std::vector<double>& hess) const {
    const std::size_t n = f_.dim();
    std::vector<double> m;
    moments(t, m);
    value = lambda_ * m[0];
    grad.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) grad[k] = lambda_ * m[1 + k];
    hess.assign(n * n, 0.0);
    std::size_t idx = 1 + n;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j; k < n; ++k) {
            hess[j * n + k] = lambda_ * m[idx];
            hess[k * n + j] = lambda_ * m[idx];
            ++idx;
        }
}

std::vector<double> VectorCgf::phi() const {
    std::vector<double> t(dim(), 0.0), grad, hess;
    double value;
    eval(t, value, grad, hess);
    return grad;
}

// Damped Newton for Lambda*(z) = sup_t {<z,t> - Lambda(t)} (strictly concave
// inner problem). Failure means the supremum was not attained numerically,
// which callers treat as Lambda*(z) = +inf.
LegendreResult legendre_transform(const VectorCgf& cgf, const std::vector<double>& z,
                                  const std::vector<double>* warm_start) {
    const std::size_t n = cgf.dim();
    if (z.size() != n) throw std::invalid_argument("legendre_transform: dimension mismatch");
    LegendreResult res;
    std::vector<double> t = warm_start && warm_start->size() == n ? *warm_start
                                                                  : std::vector<double>(n, 0.0);
    std::vector<double> grad, hess, g(n), step;
    double lam_value;
    cgf.eval(t, lam_value, grad, hess);
    double obj = -lam_value;
    for (std::size_t k = 0; k < n; ++k) obj += z[k] * t[k];

    // Levenberg-Marquardt on the concave objective: damping persists across
    // iterations, growing on rejected steps and relaxing on accepted ones,
    // which rides out the near-singular Hessians that indicator components
    // produce.
    const double t_cap = 2000.0;
    double mu = 1e-8;
    for (int iter = 1; iter <= 500; ++iter) {
        res.iterations = iter;
        for (std::size_t k = 0; k < n; ++k) g[k] = z[k] - grad[k];
        if (inf_norm(g) <= 1e-10 * (1.0 + inf_norm(z))) {
            res.t_star = t;
            res.rate = obj;
            res.residual = inf_norm(g);
            res.status = SolveStatus::Converged;
            return res;
        }
        double trace = 0.0;
        for (std::size_t k = 0; k < n; ++k) trace += hess[k * n + k];
        const double scale = std::max(trace / static_cast<double>(n), 1e-12);
        bool moved = false;
        for (int attempt = 0; attempt < 60 && !moved; ++attempt) {
            std::vector<double> h = hess;
            for (std::size_t k = 0; k < n; ++k) h[k * n + k] += mu * scale;
            std::vector<double> tn(n);
            if (solve_dense(h, g, n, step)) {
                for (std::size_t k = 0; k < n; ++k) tn[k] = t[k] + step[k];
                if (inf_norm(tn) <= t_cap) {
                    std::vector<double> grad_n, hess_n;
                    double lam_n;
                    cgf.eval(tn, lam_n, grad_n, hess_n);
                    double obj_n = -lam_n;
                    for (std::size_t k = 0; k < n; ++k) obj_n += z[k] * tn[k];
                    if (std::isfinite(obj_n) && obj_n > obj) {
                        t = tn;
                        grad = grad_n;
                        hess = hess_n;
                        obj = obj_n;
                        moved = true;
                        mu = std::max(mu * 0.25, 1e-12);
                        break;
                    }
                }
            }
            mu *= 8.0;
        }
        if (!moved) {
            res.t_star = t;
            res.rate = obj;
            res.residual = inf_norm(g);
            // a floating-point plateau this close to stationarity is a solve;
            // the value error is O(residual^2)
            if (res.residual <= 1e-7 * (1.0 + inf_norm(z))) {
                res.status = SolveStatus::Converged;
            } else {
                res.status = SolveStatus::Failed;
                res.diagnostic = "inner Newton stalled (sup may be unattained)";
            }
            return res;
        }
    }
    res.t_star = t;
    res.rate = obj;
    res.residual = inf_norm(g);
    if (res.residual <= 1e-7 * (1.0 + inf_norm(z))) {
        res.status = SolveStatus::Converged;
        return res;
    }
    res.status = SolveStatus::Failed;
    res.diagnostic = "inner Newton iteration limit";
    return res;
}

namespace {

// Dual route: maximize D(t) = <theta, t> - Lambda(t) over the nonnegative
// orthant by projected, damped Newton.
LegendreResult dual_solve(const VectorCgf& cgf, const std::vector<double>& theta) {
    const std::size_t n = cgf.dim();
    LegendreResult res;
    std::vector<double> t(n, 0.0), grad, hess, g(n), step;
    double lam_value;
    cgf.eval(t, lam_value, grad, hess);
    double obj = -lam_value;

    auto proj_grad_norm = [&](const std::vector<double>& tt, const std::vector<double>& gg) {
        double m = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double pg = tt[k] > 0.0 ? gg[k] : std::max(gg[k], 0.0);
            m = std::max(m, std::fabs(pg));
        }
        return m;
    };

    for (int iter = 1; iter <= 300; ++iter) {
        res.iterations = iter;
        for (std::size_t k = 0; k < n; ++k) g[k] = theta[k] - grad[k];
        if (proj_grad_norm(t, g) <= SolverTolerances::vector_gradient) {
            res.t_star = t;
            res.rate = obj;
            res.residual = proj_grad_norm(t, g);
            res.status = SolveStatus::Converged;
            return res;
        }
        // active-set reduction: variables pinned at 0 with inward gradient
        // stay out of the Newton system, otherwise projection zigzags
        std::vector<std::size_t> free_vars;
        for (std::size_t k = 0; k < n; ++k)
            if (t[k] > 0.0 || g[k] > 0.0) free_vars.push_back(k);

        bool moved = false;
        auto try_direction = [&](const std::vector<double>& dir) {
            double alpha = 1.0;
            for (int ls = 0; ls < 60 && !moved; ++ls) {
                std::vector<double> tn(n);
                double displacement = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    tn[k] = std::max(0.0, t[k] + alpha * dir[k]);
                    displacement = std::max(displacement, std::fabs(tn[k] - t[k]));
                }
                if (displacement == 0.0) return; // pinned by the constraint
                std::vector<double> grad_n, hess_n;
                double lam_n;
                cgf.eval(tn, lam_n, grad_n, hess_n);
                double obj_n = -lam_n;
                for (std::size_t k = 0; k < n; ++k) obj_n += theta[k] * tn[k];
                if (std::isfinite(obj_n) && obj_n > obj) {
                    t = tn;
                    grad = grad_n;
                    hess = hess_n;
                    obj = obj_n;
                    moved = true;
                    return;
                }
                alpha *= 0.5;
            }
        };

        if (!free_vars.empty()) {
            const std::size_t m = free_vars.size();
            std::vector<double> hr(m * m), gr(m), sr;
            for (std::size_t a = 0; a < m; ++a) {
                gr[a] = g[free_vars[a]];
                for (std::size_t b = 0; b < m; ++b)
                    hr[a * m + b] = hess[free_vars[a] * n + free_vars[b]];
            }
            double trace = 0.0;
            for (std::size_t a = 0; a < m; ++a) trace += hr[a * m + a];
            double mu = std::max(1e-12 * std::max(trace, 1.0), 1e-14);
            for (int attempt = 0; attempt < 20 && !moved; ++attempt) {
                std::vector<double> h = hr;
                for (std::size_t a = 0; a < m; ++a) h[a * m + a] += mu;
                if (solve_dense(h, gr, m, sr)) {
                    std::vector<double> dir(n, 0.0);
                    for (std::size_t a = 0; a < m; ++a) dir[free_vars[a]] = sr[a];
                    try_direction(dir);
                }
                mu *= 10.0;
            }
        }
        if (!moved) try_direction(g); // projected gradient fallback
        if (!moved) break;
    }
    for (std::size_t k = 0; k < n; ++k) g[k] = theta[k] - grad[k];
    res.t_star = t;
    res.rate = obj;
    res.residual = proj_grad_norm(t, g);
    res.status = res.residual <= 1e2 * SolverTolerances::vector_gradient ? SolveStatus::Converged
                                                                         : SolveStatus::Failed;
    if (res.status == SolveStatus::Failed) res.diagnostic = "projected Newton stalled";
    return res;
}

// Primal route: minimize the convex Lambda*(z) over {z >= theta} by projected
// descent along the inner maximizer t(z) = grad Lambda*(z).
LegendreResult primal_solve(const VectorCgf& cgf, const std::vector<double>& theta) {
    const std::size_t n = cgf.dim();
    LegendreResult res;
    std::vector<double> z = theta;
    LegendreResult inner = legendre_transform(cgf, z);
    if (inner.status != SolveStatus::Converged) {
        res.status = SolveStatus::Failed;
        res.diagnostic = "primal: Lambda*(theta) unattained: " + inner.diagnostic;
        return res;
    }
    double best = inner.rate;
    std::vector<double> t = inner.t_star;

    double alpha0 = 1.0;
    for (int iter = 1; iter <= 4000; ++iter) {
        res.iterations = iter;
        // stationarity: z - max(theta, z - t(z)) = 0
        double kkt = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            kkt = std::max(kkt, std::fabs(z[k] - std::max(theta[k], z[k] - t[k])));
        if (kkt <= 3e-8 * (1.0 + inf_norm(t))) break;

        double alpha = alpha0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            std::vector<double> zn(n);
            for (std::size_t k = 0; k < n; ++k) zn[k] = std::max(theta[k], z[k] - alpha * t[k]);
            LegendreResult in_n = legendre_transform(cgf, zn, &t);
            if (in_n.status == SolveStatus::Converged) {
                double progress = 0.0;
                for (std::size_t k = 0; k < n; ++k) progress += t[k] * (z[k] - zn[k]);
                if (in_n.rate <= best - 1e-6 * progress) {
                    z = zn;
                    best = in_n.rate;
                    t = in_n.t_star;
                    moved = true;
                    alpha0 = std::min(alpha * 2.0, 64.0); // carry the accepted scale forward
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!moved) break;
    }
    res.t_star = z; // primal reports the minimizing z
    res.rate = best;
    res.status = SolveStatus::Converged;
    return res;
}

} // namespace

LegendreResult vector_rate(const VectorCgf& cgf, const std::vector<double>& theta) {
    if (theta.size() != cgf.dim()) throw std::invalid_argument("vector_rate: dimension mismatch");
    LegendreResult dual = dual_solve(cgf, theta);
    if (dual.status == SolveStatus::Failed) return dual;
    LegendreResult primal = primal_solve(cgf, theta);
    if (primal.status == SolveStatus::Failed) {
        dual.status = SolveStatus::Failed;
        dual.diagnostic = "primal cross-check failed: " + primal.diagnostic;
        return dual;
    }
    const double gap = std::fabs(primal.rate - dual.rate);
    dual.diagnostic = "primal=" + format_double(primal.rate) + " dual=" + format_double(dual.rate) +
                      " gap=" + format_double(gap);
    if (gap > SolverTolerances::duality_gap) {
        dual.status = SolveStatus::Failed;
        dual.diagnostic = "duality gap above tolerance: " + dual.diagnostic;
    }
    return dual;
}

} // namespace ppmatch
