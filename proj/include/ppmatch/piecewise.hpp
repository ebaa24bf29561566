#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace ppmatch {

// One affine piece of a scalar function of u >= 0: value = slope*u + intercept
// on [lo, hi). Profiles are for integration and one-sided limits; pointwise
// values at piece boundaries come from ScoreComponent::eval.
struct LinearSegment {
    double lo = 0.0;
    double hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;

    double at(double u) const { return slope * u + intercept; }
};

namespace expint {

// epsilon0(w) = (e^w - 1)/w, g1(w) = int_0^1 s e^{ws} ds, g2(w) = int_0^1 s^2 e^{ws} ds.
// Series below |w| = 0.5 where the closed forms cancel.
inline double eps0(double w) {
    if (std::fabs(w) < 0.5) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k <= 16; ++k) {
            term *= w / (k + 1);
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum;
    }
    return std::expm1(w) / w;
}

inline double g1(double w) {
    if (std::fabs(w) < 0.5) {
        double fact = 1.0, sum = 0.5;
        for (int k = 1; k <= 18; ++k) {
            fact *= w / k;
            const double term = fact / (k + 2);
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum;
    }
    const double ew = std::exp(w);
    return (w * ew - ew + 1.0) / (w * w);
}

inline double g2(double w) {
    if (std::fabs(w) < 0.5) {
        double fact = 1.0, sum = 1.0 / 3.0;
        for (int k = 1; k <= 18; ++k) {
            fact *= w / k;
            const double term = fact / (k + 3);
            sum += term;
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum;
    }
    const double ew = std::exp(w);
    return (w * w * ew - 2.0 * w * ew + 2.0 * ew - 2.0) / (w * w * w);
}

// int_{u0}^{inf} u^k e^{a u} du for k = 0, 1, 2; requires a < 0.
inline double e0_inf(double a, double u0) { return -std::exp(a * u0) / a; }
inline double e1_inf(double a, double u0) {
    return std::exp(a * u0) * (1.0 / (a * a) - u0 / a);
}
inline double e2_inf(double a, double u0) {
    return std::exp(a * u0) * (-u0 * u0 / a + 2.0 * u0 / (a * a) - 2.0 / (a * a * a));
}

// int_{u0}^{u1} u^k e^{a u} du for k = 0, 1, 2.
inline double e0(double a, double u0, double u1) {
    if (std::isinf(u1)) return e0_inf(a, u0);
    const double d = u1 - u0;
    return std::exp(a * u0) * d * eps0(a * d);
}

inline double e1(double a, double u0, double u1) {
    if (std::isinf(u1)) return e1_inf(a, u0);
    const double d = u1 - u0;
    const double w = a * d;
    return std::exp(a * u0) * (u0 * d * eps0(w) + d * d * g1(w));
}

inline double e2(double a, double u0, double u1) {
    if (std::isinf(u1)) return e2_inf(a, u0);
    const double d = u1 - u0;
    const double w = a * d;
    return std::exp(a * u0) * (u0 * u0 * d * eps0(w) + 2.0 * u0 * d * d * g1(w) + d * d * d * g2(w));
}

} // namespace expint

// int e^{t f}, int f e^{t f}, int f^2 e^{t f} over a u-interval.
struct ExpIntegrals {
    double e = 0.0;
    double fe = 0.0;
    double ffe = 0.0;

    ExpIntegrals& operator+=(const ExpIntegrals& o) {
        e += o.e;
        fe += o.fe;
        ffe += o.ffe;
        return *this;
    }
};

// Unweighted integrals of e^{t f(u)} moments over [lo, hi] subset of one segment.
inline ExpIntegrals exp_integrals_segment(const LinearSegment& seg, double t, double lo, double hi) {
    const double a = t * seg.slope;
    const double s = seg.slope, c = seg.intercept;
    const double etc = std::exp(t * c);
    const double E0 = expint::e0(a, lo, hi);
    const double E1 = expint::e1(a, lo, hi);
    const double E2 = expint::e2(a, lo, hi);
    ExpIntegrals r;
    r.e = etc * E0;
    r.fe = etc * (s * E1 + c * E0);
    r.ffe = etc * (s * s * E2 + 2.0 * s * c * E1 + c * c * E0);
    return r;
}

// Same, weighted by the density rate*e^{-rate*u} of an exponential law.
inline ExpIntegrals exp_integrals_segment_expweight(const LinearSegment& seg, double t, double lo,
                                                    double hi, double rate) {
    const double a = t * seg.slope - rate;
    const double s = seg.slope, c = seg.intercept;
    const double etc = rate * std::exp(t * c);
    const double E0 = expint::e0(a, lo, hi);
    const double E1 = expint::e1(a, lo, hi);
    const double E2 = expint::e2(a, lo, hi);
    ExpIntegrals r;
    r.e = etc * E0;
    r.fe = etc * (s * E1 + c * E0);
    r.ffe = etc * (s * s * E2 + 2.0 * s * c * E1 + c * c * E0);
    return r;
}

// Integrals over [lo, hi] across a full profile (segments contiguous on [0, inf)).
inline ExpIntegrals exp_integrals_profile(const std::vector<LinearSegment>& profile, double t,
                                          double lo, double hi) {
    ExpIntegrals total;
    for (const auto& seg : profile) {
        const double a = std::max(lo, seg.lo);
        const double b = std::min(hi, seg.hi);
        if (a < b) total += exp_integrals_segment(seg, t, a, b);
    }
    return total;
}

} // namespace ppmatch
