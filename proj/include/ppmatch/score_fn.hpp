#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ppmatch/piecewise.hpp"

namespace ppmatch {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One scalar score function of the distance x >= 0. Closed-form descriptors
// (rather than callbacks) so the rate machinery can integrate e^{t f} exactly
// for the piecewise-linear family.
class ScoreComponent {
public:
    struct Indicator {
        double a;
    }; // 1 if x <= a else 0
    struct ExpDecay {
        double tau;
    }; // e^{-x/tau}
    struct Triangular {
        double a;
    }; // max(0, 1 - x/a)
    struct PiecewiseLinear {
        std::vector<double> knots; // strictly ascending, first knot 0
        std::vector<double> values;
        double tail_value; // value for x beyond the last knot
    };
    struct Constant {
        double c;
    };
    struct AffineTerm {
        double weight;
        std::size_t base_index;
    };
    struct Affine {
        std::vector<AffineTerm> terms;
        std::vector<ScoreComponent> bases; // non-affine components
        double offset;
    };

    ScoreComponent(Indicator v) : v_(v) { check(); }
    ScoreComponent(ExpDecay v) : v_(v) { check(); }
    ScoreComponent(Triangular v) : v_(v) { check(); }
    ScoreComponent(PiecewiseLinear v) : v_(std::move(v)) { check(); }
    ScoreComponent(Constant v) : v_(v) { check(); }
    ScoreComponent(Affine v) : v_(std::move(v)) { check(); }

    static ScoreComponent indicator(double a) { return ScoreComponent(Indicator{a}); }
    static ScoreComponent exp_decay(double tau) { return ScoreComponent(ExpDecay{tau}); }
    static ScoreComponent triangular(double a) { return ScoreComponent(Triangular{a}); }
    static ScoreComponent constant(double c) { return ScoreComponent(Constant{c}); }
    static ScoreComponent piecewise_linear(std::vector<double> knots, std::vector<double> values,
                                           double tail) {
        return ScoreComponent(PiecewiseLinear{std::move(knots), std::move(values), tail});
    }

    // Pointwise value; x = +inf returns the tail/limit value.
    double eval(double x) const;

    // sup_x |f(x)| (exact for the piecewise-linear family, an upper bound
    // when exp-decay terms enter an affine combination).
    double bound() const;
    // sup_x f(x), used for thinning envelopes.
    double sup_value() const;

    bool continuous() const { return discontinuities().empty(); }

    // Smallest r with f constant on [r, inf); +inf for exp decay.
    double support_radius() const;

    double tail_value() const;

    // Affine segments covering [0, inf) when f is piecewise linear;
    // nullopt when an exp-decay term is present.
    std::optional<std::vector<LinearSegment>> linear_profile() const;

    // x-locations where f jumps (empty for continuous f).
    std::vector<double> discontinuities() const;

    std::string canonical() const;
    static ScoreComponent parse(const std::string& text);

    bool operator==(const ScoreComponent& other) const { return canonical() == other.canonical(); }

private:
    void check() const;
    std::variant<Indicator, ExpDecay, Triangular, PiecewiseLinear, Constant, Affine> v_;
};

// A bounded, possibly vector-valued score function with cached metadata.
struct ScoreFn {
    std::vector<ScoreComponent> components;

    ScoreFn() = default;
    explicit ScoreFn(ScoreComponent c) { components.push_back(std::move(c)); }
    explicit ScoreFn(std::vector<ScoreComponent> cs) : components(std::move(cs)) {
        if (components.empty()) throw std::invalid_argument("ScoreFn: no components");
    }

    std::size_t dim() const { return components.size(); }
    bool scalar() const { return components.size() == 1; }
    const ScoreComponent& only() const {
        if (!scalar()) throw std::invalid_argument("ScoreFn: scalar function required");
        return components.front();
    }

    double bound() const {
        double m = 0.0;
        for (const auto& c : components) m = std::max(m, c.bound());
        return m;
    }

    void eval(double x, std::vector<double>& out) const {
        out.resize(components.size());
        for (std::size_t k = 0; k < components.size(); ++k) out[k] = components[k].eval(x);
    }

    std::string canonical() const;
    static ScoreFn parse(const std::string& text);

    bool operator==(const ScoreFn& other) const { return canonical() == other.canonical(); }
};

std::string format_double(double x);

} // namespace ppmatch
