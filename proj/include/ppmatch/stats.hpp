#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ppmatch {

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0; // sample variance, denominator n - 1
    double stderr_mean = 0.0;
};

inline SummaryStats summarize(const std::vector<double>& xs) {
    SummaryStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    s.mean = m;
    s.variance = s.n > 1 ? ss / static_cast<double>(s.n - 1) : 0.0;
    s.stderr_mean = s.n > 1 ? std::sqrt(s.variance / static_cast<double>(s.n)) : 0.0;
    return s;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Least squares y = slope*x + intercept.
struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_fit: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
    OlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

inline double normal_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

// Regularized lower incomplete gamma P(a, x); series for x < a+1, continued
// fraction otherwise (Numerical Recipes style).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

// Pr{Poisson(mean) >= k} for integer k >= 0.
inline double poisson_tail(double mean, double k) {
    if (k <= 0.0) return 1.0;
    return gamma_p(k, mean);
}

inline double chi_square_cdf(double x, double df) { return gamma_p(0.5 * df, 0.5 * x); }

// Chi-square goodness-of-fit statistic for observed counts vs expected.
inline double chi_square_stat(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("chi_square_stat: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

} // namespace ppmatch
