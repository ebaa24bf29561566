#pragma once

#include <stdexcept>
#include <vector>

#include "ppmatch/point_seq.hpp"
#include "ppmatch/score_fn.hpp"

namespace ppmatch {

struct InsufficientData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A matching-score value: n reals, or bottom = (-inf, ..., -inf) for an
// empty template. Comparison against a threshold is componentwise.
struct ScoreValue {
    std::vector<double> values;
    bool bottom = false;

    static ScoreValue make_bottom(std::size_t dim) {
        ScoreValue v;
        v.bottom = true;
        v.values.assign(dim, -kInf);
        return v;
    }

    // u >= theta iff every component is >= ; bottom never meets a finite theta.
    bool meets(const std::vector<double>& theta) const {
        if (bottom) return false;
        if (theta.size() != values.size())
            throw std::invalid_argument("ScoreValue: dimension mismatch");
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!(values[k] >= theta[k])) return false;
        return true;
    }
};

// d(y, S) = inf{|y - s| : s in S}; +inf for an empty template.
double dist_to_template(double y, const PointSeq& tmpl);

// Nearest-distance on a raw sorted array (shared by the fast scan paths).
double dist_to_sorted(double y, const std::vector<double>& sorted_points);

// rho_l: (1/l) sum over data points y in [t, t+l) of f(d(y - t, template)),
// times the point's mark when the data carry marks. Bottom for an empty
// template; an empty sum is the zero vector.
ScoreValue matching_score(const PointSeq& tmpl, const PointSeq& data, const ScoreFn& f, double l,
                          double t);

} // namespace ppmatch
