#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ppmatch {

// Adaptive Gauss-Kronrod (G7, K15) with interval bisection. Nodes are
// interior, so integrands only defined on the open interval are fine.
struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-11;
    int max_depth = 40;
};

class Quadrature {
public:
    using Options = QuadOptions;

    static double integrate(const std::function<double(double)>& f, double a, double b,
                            QuadOptions opt = QuadOptions()) {
        if (a == b) return 0.0;
        double err = 0.0;
        const double total_estimate = gk15(f, a, b, err);
        return adapt(f, a, b, total_estimate, err, opt, std::fabs(total_estimate), 0);
    }

private:
    static double adapt(const std::function<double(double)>& f, double a, double b, double whole,
                        double err, const QuadOptions& opt, double scale, int depth) {
        if (err <= opt.abs_tol || err <= opt.rel_tol * std::max(scale, std::fabs(whole)) ||
            depth >= opt.max_depth)
            return whole;
        const double m = 0.5 * (a + b);
        double le = 0.0, re = 0.0;
        const double left = gk15(f, a, m, le);
        const double right = gk15(f, m, b, re);
        return adapt(f, a, m, left, le, opt, scale, depth + 1) +
               adapt(f, m, b, right, re, opt, scale, depth + 1);
    }

    static double gk15(const std::function<double(double)>& f, double a, double b, double& err) {
        // Kronrod-15 abscissae (positive half) and weights; Gauss-7 weights.
        static const double xk[8] = {0.0,
                                     0.2077849550078985,
                                     0.4058451513773972,
                                     0.5860872354676911,
                                     0.7415311855993944,
                                     0.8648644233597691,
                                     0.9491079123427585,
                                     0.9914553711208126};
        static const double wk[8] = {0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
                                     0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
                                     0.0630920926299786, 0.0229353220105292};
        static const double wg[4] = {0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
                                     0.1294849661688697};

        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        const double fc = f(c);
        double kron = wk[0] * fc;
        double gauss = wg[0] * fc;
        for (int i = 1; i < 8; ++i) {
            const double fa = f(c - h * xk[i]);
            const double fb = f(c + h * xk[i]);
            kron += wk[i] * (fa + fb);
            if (i % 2 == 0) gauss += wg[i / 2] * (fa + fb);
        }
        kron *= h;
        gauss *= h;
        err = std::fabs(kron - gauss);
        return kron;
    }
};

// Adaptive GK15 for an array-valued integrand, with an explicit interval
// stack and reused buffers. Cheaper than m scalar passes when the components
// share evaluation work (CGF value/gradient/Hessian).
class VectorQuadrature {
public:
    using Fn = std::function<void(double, double*)>; // fills m values

    static std::vector<double> integrate(const Fn& f, std::size_t m, double a, double b,
                                         QuadOptions opt = QuadOptions()) {
        std::vector<double> total(m, 0.0);
        if (a == b) return total;

        struct Panel {
            double a, b;
            int depth;
        };
        std::vector<Panel> stack{{a, b, 0}};
        std::vector<double> kron(m), gauss(m), fx(m), fb(m), scale;

        while (!stack.empty()) {
            const Panel p = stack.back();
            stack.pop_back();
            gk15(f, m, p.a, p.b, kron, gauss, fx, fb);
            if (scale.empty()) {
                scale.resize(m);
                for (std::size_t i = 0; i < m; ++i) scale[i] = std::fabs(kron[i]);
            }
            bool ok = true;
            for (std::size_t i = 0; i < m; ++i) {
                const double err = std::fabs(kron[i] - gauss[i]);
                if (err > opt.abs_tol &&
                    err > opt.rel_tol * std::max(scale[i], std::fabs(kron[i]))) {
                    ok = false;
                    break;
                }
            }
            if (ok || p.depth >= opt.max_depth) {
                for (std::size_t i = 0; i < m; ++i) total[i] += kron[i];
            } else {
                const double mid = 0.5 * (p.a + p.b);
                stack.push_back({p.a, mid, p.depth + 1});
                stack.push_back({mid, p.b, p.depth + 1});
            }
        }
        return total;
    }

private:
    static void gk15(const Fn& f, std::size_t m, double a, double b, std::vector<double>& kron,
                     std::vector<double>& gauss, std::vector<double>& fx, std::vector<double>& fb) {
        static const double xk[8] = {0.0,
                                     0.2077849550078985,
                                     0.4058451513773972,
                                     0.5860872354676911,
                                     0.7415311855993944,
                                     0.8648644233597691,
                                     0.9491079123427585,
                                     0.9914553711208126};
        static const double wk[8] = {0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
                                     0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
                                     0.0630920926299786, 0.0229353220105292};
        static const double wg[4] = {0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
                                     0.1294849661688697};
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        f(c, fx.data());
        for (std::size_t i = 0; i < m; ++i) {
            kron[i] = wk[0] * fx[i];
            gauss[i] = wg[0] * fx[i];
        }
        for (int j = 1; j < 8; ++j) {
            f(c - h * xk[j], fx.data());
            f(c + h * xk[j], fb.data());
            for (std::size_t i = 0; i < m; ++i) {
                const double s = fx[i] + fb[i];
                kron[i] += wk[j] * s;
                if (j % 2 == 0) gauss[i] += wg[j / 2] * s;
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            kron[i] *= h;
            gauss[i] *= h;
        }
    }
};

} // namespace ppmatch
