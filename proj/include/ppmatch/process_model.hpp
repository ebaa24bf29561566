#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ppmatch {

// Distribution of integer point multiplicities Q. Bounded support keeps the
// mark MGF finite for all real arguments.
struct MarkDist {
    std::vector<std::uint32_t> support;
    std::vector<double> probabilities;

    void validate() const {
        if (support.empty()) throw std::invalid_argument("MarkDist: empty support");
        if (support.size() != probabilities.size())
            throw std::invalid_argument("MarkDist: support/probability mismatch");
        double total = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            if (support[i] == 0) throw std::invalid_argument("MarkDist: marks must be positive");
            if (probabilities[i] < 0.0) throw std::invalid_argument("MarkDist: negative probability");
            total += probabilities[i];
        }
        if (std::fabs(total - 1.0) > 1e-9)
            throw std::invalid_argument("MarkDist: probabilities must sum to 1");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) m += probabilities[i] * support[i];
        return m;
    }

    // G_Q(s) = E[e^{sQ}] and its first two derivatives in s.
    double mgf(double s) const {
        double g = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i)
            g += probabilities[i] * std::exp(s * support[i]);
        return g;
    }
    double mgf_d1(double s) const {
        double g = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i)
            g += probabilities[i] * support[i] * std::exp(s * support[i]);
        return g;
    }
    double mgf_d2(double s) const {
        double g = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i)
            g += probabilities[i] * support[i] * static_cast<double>(support[i]) *
                 std::exp(s * support[i]);
        return g;
    }
};

// Interarrival law for the equilibrium renewal generator.
struct Interarrival {
    struct Exponential {
        double rate;
    };
    struct Uniform {
        double a, b;
    };
    struct Discrete {
        std::vector<double> atoms;
        std::vector<double> probabilities;
    };
    struct GammaInt {
        unsigned shape;
        double rate;
    };

    std::variant<Exponential, Uniform, Discrete, GammaInt> law;

    double mean() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Exponential>) return 1.0 / f.rate;
                else if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (f.a + f.b);
                else if constexpr (std::is_same_v<T, GammaInt>) return f.shape / f.rate;
                else {
                    double m = 0.0;
                    for (std::size_t i = 0; i < f.atoms.size(); ++i)
                        m += f.probabilities[i] * f.atoms[i];
                    return m;
                }
            },
            law);
    }

    void validate() const {
        std::visit(
            [](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    if (!(f.rate > 0.0)) throw std::invalid_argument("interarrival: rate must be > 0");
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    if (!(0.0 <= f.a && f.a < f.b))
                        throw std::invalid_argument("interarrival: need 0 <= a < b");
                } else if constexpr (std::is_same_v<T, GammaInt>) {
                    if (f.shape == 0 || !(f.rate > 0.0))
                        throw std::invalid_argument("interarrival: gamma needs shape >= 1, rate > 0");
                } else {
                    if (f.atoms.empty() || f.atoms.size() != f.probabilities.size())
                        throw std::invalid_argument("interarrival: bad discrete descriptor");
                    double total = 0.0;
                    for (std::size_t i = 0; i < f.atoms.size(); ++i) {
                        if (!(f.atoms[i] > 0.0))
                            throw std::invalid_argument("interarrival: atoms must be > 0");
                        total += f.probabilities[i];
                    }
                    if (std::fabs(total - 1.0) > 1e-9)
                        throw std::invalid_argument("interarrival: probabilities must sum to 1");
                }
            },
            law);
        if (!(mean() > 0.0) || !std::isfinite(mean()))
            throw std::invalid_argument("interarrival: mean must be finite and > 0");
    }
};

// A point-process model: homogeneous Poisson, marked (compound) Poisson, or
// equilibrium renewal started from the stationary-excess delay.
struct ProcessModel {
    struct HomogeneousPoisson {
        double density;
    };
    struct MarkedPoisson {
        double density;
        MarkDist marks;
    };
    struct EquilibriumRenewal {
        Interarrival interarrival;
    };

    std::variant<HomogeneousPoisson, MarkedPoisson, EquilibriumRenewal> model;

    static ProcessModel poisson(double density) { return {HomogeneousPoisson{density}}; }
    static ProcessModel marked_poisson(double density, MarkDist marks) {
        return {MarkedPoisson{density, std::move(marks)}};
    }
    static ProcessModel renewal(Interarrival ia) { return {EquilibriumRenewal{std::move(ia)}}; }

    bool is_poisson() const { return std::holds_alternative<HomogeneousPoisson>(model); }
    bool is_marked() const { return std::holds_alternative<MarkedPoisson>(model); }

    const MarkDist* marks() const {
        if (const auto* m = std::get_if<MarkedPoisson>(&model)) return &m->marks;
        return nullptr;
    }

    // Mean number of points per unit length.
    double density() const {
        return std::visit(
            [](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, EquilibriumRenewal>)
                    return 1.0 / f.interarrival.mean();
                else
                    return f.density;
            },
            model);
    }

    void validate() const {
        std::visit(
            [](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, EquilibriumRenewal>) {
                    f.interarrival.validate();
                } else {
                    if (!(f.density > 0.0) || !std::isfinite(f.density))
                        throw std::invalid_argument("ProcessModel: density must be finite and > 0");
                    if constexpr (std::is_same_v<T, MarkedPoisson>) f.marks.validate();
                }
            },
            model);
    }
};

} // namespace ppmatch
