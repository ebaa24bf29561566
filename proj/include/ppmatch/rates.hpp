#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ppmatch/point_seq.hpp"
#include "ppmatch/process_model.hpp"
#include "ppmatch/rng.hpp"
#include "ppmatch/score_fn.hpp"

namespace ppmatch {

enum class SolveStatus { Converged, AtBoundary, Failed };

const char* to_string(SolveStatus s);

// A solved rate-function query. Scalar solves fill t_star with one entry.
struct LegendreResult {
    std::vector<double> t_star;
    double rate = 0.0;
    double residual = 0.0; // |Lambda'(t*) - theta| (scalar) or projected-gradient norm
    SolveStatus status = SolveStatus::Failed;
    int iterations = 0;
    std::string diagnostic;

    double t() const { return t_star.at(0); }
};

struct CgfTriple {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Scalar cumulant generating function with two derivatives.
class ScalarCgf {
public:
    virtual ~ScalarCgf() = default;
    virtual CgfTriple eval(double t) const = 0;
    double phi() const { return eval(0.0).d1; }
};

// Lambda(t) = lambda E[e^{t f(d)} - 1] for d ~ Exp(2 rho) (Poisson template
// process). Closed form for the piecewise-linear family, adaptive quadrature
// when exp-decay terms are present.
class AnalyticScalarCgf final : public ScalarCgf {
public:
    AnalyticScalarCgf(double lambda, double rho, ScoreComponent f);
    CgfTriple eval(double t) const override;

    double lambda() const { return lambda_; }
    double rho() const { return rho_; }
    const ScoreComponent& f() const { return f_; }

private:
    double lambda_;
    double rho_;
    ScoreComponent f_;
    std::optional<std::vector<LinearSegment>> profile_;
};

// The gap decomposition of a template on [0, l): the exact partition of the
// window into edge pieces and doubled half-gaps on which d(., S) sweeps an
// interval linearly, enabling exact evaluation of Lambda_{S,l} and its
// derivatives.
class EmpiricalCgf final : public ScalarCgf {
public:
    // Empty template: degenerate, Lambda identically 0.
    EmpiricalCgf(const PointSeq& tmpl, double lambda, ScoreComponent f);

    CgfTriple eval(double t) const override;

    bool degenerate() const { return degenerate_; }
    double l() const { return l_; }
    double lambda() const { return lambda_; }
    const ScoreComponent& f() const { return f_; }
    double left_len() const { return left_len_; }
    double right_len() const { return right_len_; }
    const std::vector<double>& half_gaps() const { return half_gaps_; }

    // (1/l) * measure{y in [0,l): f(d(y,S)) > c}.
    double fraction_f_above(double c) const;

private:
    double piece_integrals(double t, double len, CgfTriple& acc) const;

    double lambda_;
    double l_;
    ScoreComponent f_;
    std::optional<std::vector<LinearSegment>> profile_;
    std::optional<double> constant_value_; // set when f is constant
    bool degenerate_ = false;
    double left_len_ = 0.0;
    double right_len_ = 0.0;
    std::vector<double> half_gaps_;
};

// Compound (marked) CGF: Lambda~(t) = sum_q P(q) Lambda(t q).
class CompoundCgf final : public ScalarCgf {
public:
    CompoundCgf(std::shared_ptr<const ScalarCgf> base, MarkDist marks);
    CgfTriple eval(double t) const override;

private:
    std::shared_ptr<const ScalarCgf> base_;
    MarkDist marks_;
};

// Vector CGF Lambda(t) = lambda E[e^{<t, f(d)>} - 1], d ~ Exp(2 rho).
// Closed form over merged linear profiles when every component is piecewise
// linear, adaptive quadrature otherwise.
class VectorCgf {
public:
    VectorCgf(double lambda, double rho, ScoreFn f);

    std::size_t dim() const { return f_.dim(); }
    double value(const std::vector<double>& t) const;
    // value, gradient and Hessian in one pass
    void eval(const std::vector<double>& t, double& value, std::vector<double>& grad,
              std::vector<double>& hess) const;
    std::vector<double> phi() const;

private:
    void moments(const std::vector<double>& t, std::vector<double>& out) const;

    double lambda_;
    double rho_;
    ScoreFn f_;
    // merged segmentation: cuts_[i], cuts_[i+1] bound segment i; per segment
    // and component, slope/intercept of f_k
    bool closed_form_ = false;
    std::vector<double> cuts_;
    std::vector<double> seg_slope_;  // segment-major, dim entries each
    std::vector<double> seg_icept_;
};

// Solver tolerances, pinned project-wide.
struct SolverTolerances {
    static constexpr double scalar_residual = 1e-10;
    static constexpr double vector_gradient = 1e-8;
    static constexpr double duality_gap = 1e-6;
};

// sup_{t >= 0} {theta t - Lambda(t)} by bracketed Newton on Lambda'(t) = theta.
// theta <= phi returns AtBoundary with rate 0 (the sup is at t = 0).
LegendreResult rate_star(const ScalarCgf& cgf, double theta);

// Vector rate: dual sup_{t>=0}{<theta,t> - Lambda(t)} by projected Newton,
// cross-checked against the primal inf_{z>=theta} Lambda*(z) by projected
// descent. Returns the dual value; Failed when the routes disagree.
LegendreResult vector_rate(const VectorCgf& cgf, const std::vector<double>& theta);

// Unconstrained Legendre transform Lambda*(z) = sup_t {<z,t> - Lambda(t)}
// by damped Newton; used by the primal route and exposed for tests.
// warm_start, when given, seeds the iteration.
LegendreResult legendre_transform(const VectorCgf& cgf, const std::vector<double>& z,
                                  const std::vector<double>* warm_start = nullptr);

// Models d(0, X) analytically (Poisson X) or through a long-template gap
// decomposition, with the data density and score function attached.
class RateModel {
public:
    static RateModel analytic(double lambda, double rho, ScoreFn f);
    static RateModel empirical(double lambda, const PointSeq& long_template, ScoreFn f);
    // Chooses the route from the template model; marked data models wrap the
    // CGF in the compound transform.
    static RateModel from_models(const ProcessModel& x_model, const ProcessModel& y_model,
                                 const ScoreFn& f, RngSeed seed, double reference_length = 1e4);

    const ScoreFn& f() const { return f_; }
    double lambda() const { return lambda_; }
    bool analytic_route() const { return rho_.has_value(); }
    double rho() const;

    // phi = lambda E[f(d(0,X))] (componentwise), times E[Q] for marked data.
    std::vector<double> phi() const;
    // Scalar CGF (f must be scalar); includes the compound transform if any.
    const ScalarCgf& scalar_cgf() const;
    // Vector CGF (analytic route only, unmarked).
    VectorCgf vector_cgf() const;

    const MarkDist* marks() const { return marks_ ? &*marks_ : nullptr; }

private:
    RateModel() = default;

    double lambda_ = 0.0;
    ScoreFn f_;
    std::optional<double> rho_;
    std::optional<MarkDist> marks_;
    std::vector<std::shared_ptr<const ScalarCgf>> per_component_; // base CGFs
    std::shared_ptr<const ScalarCgf> scalar_; // with compound transform applied
};

// phi via closed form / quadrature; absolute tolerance 1e-10.
std::vector<double> phi_mean(const RateModel& model);

// Template-conditional rate: solves Lambda'_{S,l}(t*) = theta.
LegendreResult empirical_rate_star(const EmpiricalCgf& ecgf, double theta);

// Theorem-condition validation report.
struct ConditionCheck {
    std::string name;
    enum Verdict { Pass, Warn, HardFail } verdict;
    std::string detail;
};

struct ConditionReport {
    std::vector<ConditionCheck> checks;
    bool hard_fail = false;
    std::string to_text() const;
};

ConditionReport validate_conditions(const ProcessModel& x_model, const ProcessModel& y_model,
                                    const ScoreFn& f, const std::vector<double>& theta);

} // namespace ppmatch
