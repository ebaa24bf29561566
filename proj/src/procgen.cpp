#include "ppmatch/procgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ppmatch {

namespace {

constexpr double kInfinityValue = std::numeric_limits<double>::infinity();

void append_strict(std::vector<double>& pts, double p) {
    // exact duplicates (possible in floating point) are bumped one ulp up
    if (!pts.empty() && p <= pts.back()) p = std::nextafter(pts.back(), kInfinityValue);
    pts.push_back(p);
}

class PoissonStream final : public ArrivalStream {
public:
    PoissonStream(double density, double start, RngSeed seed, const MarkDist* marks)
        : rng_(seed, RngRole::location),
          mark_rng_(seed, RngRole::mark),
          density_(density),
          t_(start) {
        if (marks) {
            mark_support_ = marks->support;
            mark_sampler_.emplace(marks->probabilities);
        }
    }

    std::optional<Arrival> next() override {
        double p = t_ + rng_.exponential(density_);
        if (p <= t_) p = std::nextafter(t_, kInfinityValue);
        t_ = p;
        Arrival a{p, 1};
        if (mark_sampler_) a.mark = mark_support_[mark_sampler_->sample(mark_rng_)];
        return a;
    }

private:
    Pcg64 rng_;
    Pcg64 mark_rng_;
    double density_;
    double t_;
    std::vector<std::uint32_t> mark_support_;
    std::optional<DiscreteSampler> mark_sampler_;
};

class RenewalStream final : public ArrivalStream {
public:
    RenewalStream(const Interarrival& ia, double start, RngSeed seed)
        : rng_(seed, RngRole::location), eq_rng_(seed, RngRole::equilibrium), ia_(ia), t_(start) {}

    std::optional<Arrival> next() override {
        double p = first_ ? t_ + equilibrium_delay() : t_ + draw_gap();
        first_ = false;
        if (p <= t_) p = std::nextafter(t_, kInfinityValue);
        t_ = p;
        return Arrival{p, 1};
    }

private:
    double draw_gap() {
        return std::visit(
            [this](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Interarrival::Exponential>) {
                    return rng_.exponential(f.rate);
                } else if constexpr (std::is_same_v<T, Interarrival::Uniform>) {
                    return rng_.uniform(f.a, f.b);
                } else if constexpr (std::is_same_v<T, Interarrival::GammaInt>) {
                    double g = 0.0;
                    for (unsigned i = 0; i < f.shape; ++i) g += rng_.exponential(f.rate);
                    return g;
                } else {
                    if (!atom_sampler_) atom_sampler_.emplace(f.probabilities);
                    return f.atoms[atom_sampler_->sample(rng_)];
                }
            },
            ia_.law);
    }

    // Stationary-excess law of the interarrival distribution:
    // density (1 - F(u)) / mean.
    double equilibrium_delay() {
        const double m = ia_.mean();
        return std::visit(
            [this, m](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Interarrival::Exponential>) {
                    return eq_rng_.exponential(f.rate); // memoryless
                } else if constexpr (std::is_same_v<T, Interarrival::Uniform>) {
                    // flat part on [0, a) with mass a/m, triangular tail on [a, b)
                    if (eq_rng_.uniform01() < f.a / m) return eq_rng_.uniform(0.0, f.a);
                    const double v = eq_rng_.uniform01();
                    return f.b - (f.b - f.a) * std::sqrt(1.0 - v);
                } else if constexpr (std::is_same_v<T, Interarrival::GammaInt>) {
                    // excess of Erlang(k) is Erlang(J) with J uniform on 1..k
                    const unsigned j =
                        1 + static_cast<unsigned>(eq_rng_.uniform01() * f.shape) % f.shape;
                    double g = 0.0;
                    for (unsigned i = 0; i < j; ++i) g += eq_rng_.exponential(f.rate);
                    return g;
                } else {
                    // atom c_i selected with probability p_i c_i / m, then uniform on [0, c_i)
                    std::vector<double> w(f.atoms.size());
                    for (std::size_t i = 0; i < f.atoms.size(); ++i)
                        w[i] = f.probabilities[i] * f.atoms[i];
                    DiscreteSampler pick(w);
                    const double c = f.atoms[pick.sample(eq_rng_)];
                    return eq_rng_.uniform(0.0, c);
                }
            },
            ia_.law);
    }

    Pcg64 rng_;
    Pcg64 eq_rng_;
    Interarrival ia_;
    double t_;
    bool first_ = true;
    std::optional<DiscreteSampler> atom_sampler_;
};

class ReplayStream final : public ArrivalStream {
public:
    ReplayStream(const PointSeq& seq, double from) : seq_(&seq) {
        idx_ = static_cast<std::size_t>(
            std::lower_bound(seq.points.begin(), seq.points.end(), from) - seq.points.begin());
    }

    std::optional<Arrival> next() override {
        if (idx_ >= seq_->points.size()) return std::nullopt;
        Arrival a{seq_->points[idx_], seq_->marked() ? seq_->marks[idx_] : 1u};
        ++idx_;
        return a;
    }

private:
    const PointSeq* seq_;
    std::size_t idx_;
};

PointSeq collect(ArrivalStream& stream, double a, double b, bool marked) {
    PointSeq out;
    out.window_start = a;
    out.window_end = b;
    while (true) {
        auto arrival = stream.next();
        if (!arrival || arrival->time >= b) break;
        append_strict(out.points, arrival->time);
        if (marked) out.marks.push_back(arrival->mark);
    }
#ifndef NDEBUG
    out.validate();
#endif
    return out;
}

void check_window(double a, double b) {
    if (a > b) throw std::invalid_argument("procgen: inverted window");
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("procgen: window must be finite");
}

} // namespace

std::unique_ptr<ArrivalStream> make_stream(const ProcessModel& model, double start, RngSeed seed) {
    model.validate();
    if (const auto* p = std::get_if<ProcessModel::HomogeneousPoisson>(&model.model))
        return std::make_unique<PoissonStream>(p->density, start, seed, nullptr);
    if (const auto* p = std::get_if<ProcessModel::MarkedPoisson>(&model.model))
        return std::make_unique<PoissonStream>(p->density, start, seed, &p->marks);
    const auto& r = std::get<ProcessModel::EquilibriumRenewal>(model.model);
    return std::make_unique<RenewalStream>(r.interarrival, start, seed);
}

std::unique_ptr<ArrivalStream> make_replay_stream(const PointSeq& seq, double from) {
    return std::make_unique<ReplayStream>(seq, from);
}

PointSeq sample_poisson(double density, double a, double b, RngSeed seed) {
    if (!(density > 0.0)) throw std::invalid_argument("sample_poisson: density must be > 0");
    check_window(a, b);
    PoissonStream stream(density, a, seed, nullptr);
    return collect(stream, a, b, false);
}

PointSeq sample_marked_poisson(double density, const MarkDist& marks, double a, double b,
                               RngSeed seed) {
    if (!(density > 0.0)) throw std::invalid_argument("sample_marked_poisson: density must be > 0");
    marks.validate();
    check_window(a, b);
    PoissonStream stream(density, a, seed, &marks);
    return collect(stream, a, b, true);
}

PointSeq sample_equilibrium_renewal(const Interarrival& interarrival, double a, double b,
                                    RngSeed seed) {
    interarrival.validate();
    check_window(a, b);
    RenewalStream stream(interarrival, a, seed);
    return collect(stream, a, b, false);
}

PointSeq sample_inhomogeneous(const std::function<double(double)>& intensity,
                              double intensity_bound, double a, double b, RngSeed seed) {
    if (!(intensity_bound > 0.0))
        throw std::invalid_argument("sample_inhomogeneous: bound must be > 0");
    check_window(a, b);
    PoissonStream proposals(intensity_bound, a, seed, nullptr);
    Pcg64 accept_rng(seed, RngRole::thinning);
    PointSeq out;
    out.window_start = a;
    out.window_end = b;
    while (true) {
        auto arrival = proposals.next();
        if (!arrival || arrival->time >= b) break;
        const double lam = intensity(arrival->time);
        if (lam < 0.0) throw std::invalid_argument("sample_inhomogeneous: negative intensity");
        if (lam > intensity_bound)
            throw EnvelopeViolation("sample_inhomogeneous: intensity exceeds bound at y=" +
                                    std::to_string(arrival->time));
        if (accept_rng.uniform01() * intensity_bound < lam) append_strict(out.points, arrival->time);
    }
#ifndef NDEBUG
    out.validate();
#endif
    return out;
}

PointSeq sample_model(const ProcessModel& model, double a, double b, RngSeed seed) {
    model.validate();
    check_window(a, b);
    auto stream = make_stream(model, a, seed);
    return collect(*stream, a, b, model.is_marked());
}

} // namespace ppmatch
