#include "ppmatch/rates.hpp"

#include <algorithm>
#include <cmath>

#include "ppmatch/piecewise.hpp"
#include "ppmatch/procgen.hpp"
#include "ppmatch/quadrature.hpp"

namespace ppmatch {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::AtBoundary: return "AtBoundary";
        case SolveStatus::Failed: return "Failed";
    }
    return "?";
}

namespace {

// moments of e^{t f(U)} for U ~ Exp(rate), via the substitution v = e^{-rate u}
// mapping [0, inf) onto (0, 1]; used when no linear profile exists.
CgfTriple expweight_moments_quadrature(const ScoreComponent& f, double t, double rate) {
    auto integrand = [&](double v, double* out) {
        const double u = -std::log(v) / rate;
        const double fx = f.eval(u);
        const double w = std::exp(t * fx);
        out[0] = w - 1.0;
        out[1] = fx * w;
        out[2] = fx * fx * w;
    };
    auto m = VectorQuadrature::integrate(integrand, 3, 0.0, 1.0);
    return {m[0], m[1], m[2]};
}

} // namespace

AnalyticScalarCgf::AnalyticScalarCgf(double lambda, double rho, ScoreComponent f)
    : lambda_(lambda), rho_(rho), f_(std::move(f)), profile_(f_.linear_profile()) {
    if (!(lambda > 0.0)) throw std::invalid_argument("AnalyticScalarCgf: lambda must be > 0");
    if (!(rho > 0.0)) throw std::invalid_argument("AnalyticScalarCgf: rho must be > 0");
}

CgfTriple AnalyticScalarCgf::eval(double t) const {
    CgfTriple out;
    if (profile_) {
        ExpIntegrals acc;
        for (const auto& seg : *profile_)
            acc += exp_integrals_segment_expweight(seg, t, seg.lo, seg.hi, 2.0 * rho_);
        out.value = lambda_ * (acc.e - 1.0);
        out.d1 = lambda_ * acc.fe;
        out.d2 = lambda_ * acc.ffe;
    } else {
        const CgfTriple m = expweight_moments_quadrature(f_, t, 2.0 * rho_);
        out.value = lambda_ * m.value;
        out.d1 = lambda_ * m.d1;
        out.d2 = lambda_ * m.d2;
    }
    return out;
}

EmpiricalCgf::EmpiricalCgf(const PointSeq& tmpl, double lambda, ScoreComponent f)
    : lambda_(lambda), l_(tmpl.length()), f_(std::move(f)), profile_(f_.linear_profile()) {
    if (!(lambda > 0.0)) throw std::invalid_argument("EmpiricalCgf: lambda must be > 0");
    if (tmpl.empty()) {
        degenerate_ = true;
        return;
    }
    if (!(l_ > 0.0)) throw std::invalid_argument("EmpiricalCgf: window must have positive length");
    if (profile_) {
        // constant f: Lambda_{S,l} = Lambda for every nonempty template, so
        // evaluate the closed form and skip the partition arithmetic
        constant_value_ = (*profile_)[0].intercept;
        for (const auto& seg : *profile_)
            if (seg.slope != 0.0 || seg.intercept != *constant_value_) {
                constant_value_.reset();
                break;
            }
    }
    const double a = tmpl.window_start;
    left_len_ = tmpl.points.front() - a;
    right_len_ = (tmpl.window_end - a) - (tmpl.points.back() - a);
    half_gaps_.reserve(tmpl.size());
    for (std::size_t i = 0; i + 1 < tmpl.points.size(); ++i)
        half_gaps_.push_back(0.5 * (tmpl.points[i + 1] - tmpl.points[i]));
}

double EmpiricalCgf::piece_integrals(double t, double len, CgfTriple& acc) const {
    if (len <= 0.0) return 0.0;
    if (profile_) {
        const ExpIntegrals e = exp_integrals_profile(*profile_, t, 0.0, len);
        acc.value += e.e;
        acc.d1 += e.fe;
        acc.d2 += e.ffe;
    } else {
        auto integrand = [&](double u, double* out) {
            const double fx = f_.eval(u);
            const double w = std::exp(t * fx);
            out[0] = w;
            out[1] = fx * w;
            out[2] = fx * fx * w;
        };
        auto m = VectorQuadrature::integrate(integrand, 3, 0.0, len);
        acc.value += m[0];
        acc.d1 += m[1];
        acc.d2 += m[2];
    }
    return len;
}

CgfTriple EmpiricalCgf::eval(double t) const {
    if (degenerate_) return {0.0, 0.0, 0.0};
    if (constant_value_) {
        const double c = *constant_value_;
        const double etc = std::exp(t * c);
        return {lambda_ * (etc - 1.0), lambda_ * c * etc, lambda_ * c * c * etc};
    }
    CgfTriple acc; // integrals of e^{tf}, f e^{tf}, f^2 e^{tf} over [0, l)
    double covered = 0.0;
    covered += piece_integrals(t, left_len_, acc);
    covered += piece_integrals(t, right_len_, acc);
    for (double hg : half_gaps_) {
        CgfTriple one;
        const double len = piece_integrals(t, hg, one);
        acc.value += 2.0 * one.value;
        acc.d1 += 2.0 * one.d1;
        acc.d2 += 2.0 * one.d2;
        covered += 2.0 * len;
    }
    // the partition covers [0, l) exactly; `covered` differs from l only by
    // floating-point accumulation
    CgfTriple out;
    const double scale = lambda_ / l_;
    out.value = scale * (acc.value - covered);
    out.d1 = scale * acc.d1;
    out.d2 = scale * acc.d2;
    return out;
}

double EmpiricalCgf::fraction_f_above(double c) const {
    if (degenerate_) return 0.0;
    auto measure_on = [&](double len) -> double {
        if (len <= 0.0) return 0.0;
        if (profile_) {
            double m = 0.0;
            for (const auto& seg : *profile_) {
                const double lo = std::max(0.0, seg.lo);
                const double hi = std::min(len, seg.hi);
                if (lo >= hi) continue;
                if (seg.slope == 0.0) {
                    if (seg.intercept > c) m += hi - lo;
                } else {
                    // solve slope*u + intercept > c on [lo, hi]
                    const double ucross = (c - seg.intercept) / seg.slope;
                    if (seg.slope > 0.0)
                        m += std::max(0.0, hi - std::max(lo, ucross));
                    else
                        m += std::max(0.0, std::min(hi, ucross) - lo);
                }
            }
            return m;
        }
        double m = 0.0;
        const int n = 2000;
        const double h = len / n;
        for (int i = 0; i < n; ++i)
            if (f_.eval((i + 0.5) * h) > c) m += h;
        return m;
    };
    double total = measure_on(left_len_) + measure_on(right_len_);
    for (double hg : half_gaps_) total += 2.0 * measure_on(hg);
    return total / l_;
}

CompoundCgf::CompoundCgf(std::shared_ptr<const ScalarCgf> base, MarkDist marks)
    : base_(std::move(base)), marks_(std::move(marks)) {
    marks_.validate();
}

CgfTriple CompoundCgf::eval(double t) const {
    CgfTriple out;
    for (std::size_t i = 0; i < marks_.support.size(); ++i) {
        const double q = static_cast<double>(marks_.support[i]);
        const double p = marks_.probabilities[i];
        const CgfTriple b = base_->eval(t * q);
        out.value += p * b.value;
        out.d1 += p * q * b.d1;
        out.d2 += p * q * q * b.d2;
    }
    return out;
}

LegendreResult rate_star(const ScalarCgf& cgf, double theta) {
    LegendreResult res;
    res.t_star = {0.0};
    const double phi = cgf.eval(0.0).d1;
    if (!(theta > phi)) {
        res.status = SolveStatus::AtBoundary;
        res.rate = 0.0;
        res.residual = 0.0;
        return res;
    }

    // grow a bracket [lo, hi] with Lambda'(lo) < theta <= Lambda'(hi)
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (true) {
        const double d1 = cgf.eval(hi).d1;
        if (std::isnan(d1)) {
            res.status = SolveStatus::Failed;
            res.diagnostic = "CGF derivative not finite during bracketing";
            return res;
        }
        if (d1 >= theta) break;
        lo = hi;
        hi *= 2.0;
        if (++guard > 70) {
            res.status = SolveStatus::Failed;
            res.diagnostic = "theta exceeds the achievable slope of the CGF";
            return res;
        }
    }

    // Newton with the bracket as a safety net
    double t = std::min(hi, lo + 0.5 * (hi - lo));
    int rejected = 0;
    for (int iter = 1; iter <= 200; ++iter) {
        const CgfTriple e = cgf.eval(t);
        const double g = e.d1 - theta;
        res.iterations = iter;
        if (std::fabs(g) <= SolverTolerances::scalar_residual) {
            if (!(e.d2 > 0.0)) {
                res.status = SolveStatus::Failed;
                res.diagnostic = "second derivative not positive at solution";
                return res;
            }
            res.t_star = {t};
            res.rate = theta * t - e.value;
            res.residual = std::fabs(g);
            res.status = SolveStatus::Converged;
            return res;
        }
        if (g > 0.0) hi = t; else lo = t;
        double next = t;
        bool newton_ok = false;
        if (e.d2 > 0.0 && rejected < 5) { // bisection-only after 5 rejected steps
            next = t - g / e.d2;
            if (next > lo && next < hi) newton_ok = true; else ++rejected;
        }
        if (!newton_ok) next = 0.5 * (lo + hi);
        if (next == t) { // bracket exhausted at floating-point resolution
            res.t_star = {t};
            res.rate = theta * t - e.value;
            res.residual = std::fabs(g);
            res.status = std::fabs(g) <= 1e2 * SolverTolerances::scalar_residual
                             ? SolveStatus::Converged
                             : SolveStatus::Failed;
            if (res.status == SolveStatus::Failed) res.diagnostic = "stalled bracket";
            return res;
        }
        t = next;
    }
    res.status = SolveStatus::Failed;
    res.diagnostic = "Newton iteration limit";
    return res;
}

LegendreResult empirical_rate_star(const EmpiricalCgf& ecgf, double theta) {
    if (ecgf.degenerate()) {
        LegendreResult res;
        res.t_star = {0.0};
        res.rate = 0.0;
        res.status = SolveStatus::AtBoundary;
        res.diagnostic = "degenerate empty template: Lambda_{S,l} identically 0";
        return res;
    }
    return rate_star(ecgf, theta);
}

RateModel RateModel::analytic(double lambda, double rho, ScoreFn f) {
    RateModel m;
    m.lambda_ = lambda;
    m.f_ = std::move(f);
    m.rho_ = rho;
    for (const auto& comp : m.f_.components)
        m.per_component_.push_back(std::make_shared<AnalyticScalarCgf>(lambda, rho, comp));
    if (m.f_.scalar()) m.scalar_ = m.per_component_.front();
    return m;
}

RateModel RateModel::empirical(double lambda, const PointSeq& long_template, ScoreFn f) {
    if (long_template.empty())
        throw std::invalid_argument("RateModel::empirical: empty template");
    RateModel m;
    m.lambda_ = lambda;
    m.f_ = std::move(f);
    for (const auto& comp : m.f_.components)
        m.per_component_.push_back(std::make_shared<EmpiricalCgf>(long_template, lambda, comp));
    if (m.f_.scalar()) m.scalar_ = m.per_component_.front();
    return m;
}

RateModel RateModel::from_models(const ProcessModel& x_model, const ProcessModel& y_model,
                                 const ScoreFn& f, RngSeed seed, double reference_length) {
    x_model.validate();
    y_model.validate();
    if (x_model.is_marked())
        throw std::invalid_argument("RateModel: marked template processes are not supported");
    RateModel m;
    const double lambda = y_model.density();
    if (x_model.is_poisson()) {
        m = analytic(lambda, x_model.density(), f);
    } else {
        const PointSeq long_template = sample_model(x_model, 0.0, reference_length, seed);
        if (long_template.empty())
            throw std::invalid_argument("RateModel: reference template came out empty");
        m = empirical(lambda, long_template, f);
    }
    if (const MarkDist* marks = y_model.marks()) {
        m.marks_ = *marks;
        if (m.scalar_) m.scalar_ = std::make_shared<CompoundCgf>(m.scalar_, *marks);
    }
    return m;
}

double RateModel::rho() const {
    if (!rho_) throw std::invalid_argument("RateModel: no analytic density (empirical route)");
    return *rho_;
}

std::vector<double> RateModel::phi() const {
    std::vector<double> out;
    out.reserve(per_component_.size());
    const double mark_mean = marks_ ? marks_->mean() : 1.0;
    for (const auto& cgf : per_component_) out.push_back(mark_mean * cgf->phi());
    return out;
}

const ScalarCgf& RateModel::scalar_cgf() const {
    if (!scalar_) throw std::invalid_argument("RateModel: scalar CGF requires scalar f");
    return *scalar_;
}

VectorCgf RateModel::vector_cgf() const {
    if (!rho_) throw std::invalid_argument("RateModel: vector CGF requires the analytic route");
    if (marks_) throw std::invalid_argument("RateModel: vector CGF does not support marks");
    return VectorCgf(lambda_, *rho_, f_);
}

std::vector<double> phi_mean(const RateModel& model) { return model.phi(); }

std::string ConditionReport::to_text() const {
    std::string out;
    for (const auto& c : checks) {
        const char* v = c.verdict == ConditionCheck::Pass ? "pass"
                        : c.verdict == ConditionCheck::Warn ? "warn"
                                                            : "FAIL";
        out += std::string(v) + "  " + c.name + ": " + c.detail + "\n";
    }
    return out;
}

ConditionReport validate_conditions(const ProcessModel& x_model, const ProcessModel& y_model,
                                    const ScoreFn& f, const std::vector<double>& theta) {
    ConditionReport report;
    if (theta.size() != f.dim())
        throw std::invalid_argument("validate_conditions: theta dimension mismatch");

    const RngSeed kValidationSeed{0x7061706572323030ULL, 2005};
    const RateModel model = RateModel::from_models(x_model, y_model, f, kValidationSeed);

    // 1. boundedness is structural for descriptor-based score functions
    report.checks.push_back({"f bounded", ConditionCheck::Pass,
                             "M = " + format_double(f.bound()) + " (descriptor family)"});

    // 2. theta > phi componentwise (hard requirement for a positive rate)
    const std::vector<double> phi = model.phi();
    {
        bool ok = true;
        std::string detail;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            if (k) detail += ", ";
            detail += "theta=" + format_double(theta[k]) + " vs phi=" + format_double(phi[k]);
            if (!(theta[k] > phi[k])) ok = false;
        }
        report.checks.push_back(
            {"theta > phi", ok ? ConditionCheck::Pass : ConditionCheck::HardFail, detail});
        if (!ok) report.hard_fail = true;
    }

    // quantile grid of the d(0,X) law for positivity probes
    const int kGrid = 20000;
    std::vector<double> d_grid;
    d_grid.reserve(kGrid);
    if (model.analytic_route()) {
        const double rate = 2.0 * model.rho();
        for (int i = 0; i < kGrid; ++i) {
            const double p = (i + 0.5) / kGrid;
            d_grid.push_back(-std::log1p(-p) / rate);
        }
    } else {
        const PointSeq ref = sample_model(x_model, 0.0, 1e4, kValidationSeed);
        for (int i = 0; i < kGrid; ++i) {
            const double y = (i + 0.5) / kGrid * ref.length();
            double best = kInf;
            auto it = std::lower_bound(ref.points.begin(), ref.points.end(), y);
            if (it != ref.points.end()) best = *it - y;
            if (it != ref.points.begin()) best = std::min(best, y - *(it - 1));
            d_grid.push_back(best);
        }
    }

    // 3 (scalar) / 3' (vector): positivity of the score at template distances
    if (f.scalar()) {
        double mass = 0.0;
        for (double d : d_grid)
            if (f.components[0].eval(d) > 0.0) mass += 1.0 / kGrid;
        report.checks.push_back({"Pr{f(d) > 0} > 0",
                                 mass > 0.0 ? ConditionCheck::Pass : ConditionCheck::Warn,
                                 "estimated mass " + format_double(mass)});
    } else {
        Pcg64 rng(kValidationSeed, RngRole::generic);
        int bad = 0;
        std::vector<double> fx;
        const int kDirections = 1000;
        for (int rep = 0; rep < kDirections; ++rep) {
            std::vector<double> v(f.dim());
            double norm = 0.0;
            for (auto& c : v) {
                c = rng.uniform(-1.0, 1.0);
                norm += c * c;
            }
            if (norm == 0.0) continue;
            bool positive = false;
            for (std::size_t i = 0; i < d_grid.size() && !positive; i += 7) {
                f.eval(d_grid[i], fx);
                double dot = 0.0;
                for (std::size_t k = 0; k < fx.size(); ++k) dot += v[k] * fx[k];
                if (dot > 0.0) positive = true;
            }
            if (!positive) ++bad;
        }
        report.checks.push_back({"Pr{<v, f(d)> > 0} > 0 for sampled v",
                                 bad == 0 ? ConditionCheck::Pass : ConditionCheck::Warn,
                                 std::to_string(kDirections - bad) + "/" +
                                     std::to_string(kDirections) + " directions positive"});
    }

    // condition 2: discontinuities of f carry zero d-probability
    {
        std::size_t n_disc = 0;
        for (const auto& comp : f.components) n_disc += comp.discontinuities().size();
        const std::string detail =
            n_disc == 0 ? "f continuous"
                        : std::to_string(n_disc) +
                              " jump point(s); d(0,X) is absolutely continuous, zero mass";
        report.checks.push_back({"d avoids discontinuities of f a.s.", ConditionCheck::Pass, detail});
    }

    return report;
}

} // namespace ppmatch
