#include "ppmatch/score.hpp"

#include <algorithm>
#include <cmath>

namespace ppmatch {

double dist_to_sorted(double y, const std::vector<double>& pts) {
    if (pts.empty()) return kInf;
    auto it = std::lower_bound(pts.begin(), pts.end(), y);
    double best = kInf;
    if (it != pts.end()) best = *it - y;
    if (it != pts.begin()) best = std::min(best, y - *(it - 1));
    return best;
}

double dist_to_template(double y, const PointSeq& tmpl) {
    return dist_to_sorted(y, tmpl.points);
}

ScoreValue matching_score(const PointSeq& tmpl, const PointSeq& data, const ScoreFn& f, double l,
                          double t) {
    if (!(l > 0.0)) throw std::invalid_argument("matching_score: l must be > 0");
    if (tmpl.empty()) return ScoreValue::make_bottom(f.dim());
    if (data.window_start > t || data.window_end < t + l)
        throw InsufficientData("matching_score: data window does not cover [t, t+l)");

    ScoreValue out;
    out.values.assign(f.dim(), 0.0);
    auto lo = std::lower_bound(data.points.begin(), data.points.end(), t);
    std::vector<double> fx;
    for (auto it = lo; it != data.points.end() && *it < t + l; ++it) {
        const double d = dist_to_sorted(*it - t, tmpl.points);
        f.eval(d, fx);
        const double mark = data.marked()
                                ? static_cast<double>(data.marks[static_cast<std::size_t>(
                                      it - data.points.begin())])
                                : 1.0;
        for (std::size_t k = 0; k < fx.size(); ++k) out.values[k] += mark * fx[k];
    }
    for (double& v : out.values) v /= l;
    return out;
}

} // namespace ppmatch
