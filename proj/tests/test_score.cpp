#include <doctest.h>

#include <cmath>

#include "ppmatch/rng.hpp"
#include "ppmatch/score.hpp"

using namespace ppmatch;

namespace {

PointSeq seq_on(std::vector<double> pts, double a, double b) {
    PointSeq s;
    s.points = std::move(pts);
    s.window_start = a;
    s.window_end = b;
    s.validate();
    return s;
}

double dist_linear_scan(double y, const std::vector<double>& pts) {
    double best = kInf;
    for (double p : pts) best = std::min(best, std::fabs(y - p));
    return best;
}

} // namespace

TEST_CASE("distance basics") {
    const PointSeq s = seq_on({1.0, 3.0}, 0.0, 4.0);
    CHECK(dist_to_template(2.2, s) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(dist_to_template(1.0, s) == 0.0);
    CHECK(dist_to_template(3.0, s) == 0.0);
    PointSeq empty;
    empty.window_end = 1.0;
    CHECK(std::isinf(dist_to_template(0.5, empty)));
}

TEST_CASE("distance agrees exactly with a linear-scan oracle") {
    Pcg64 rng(RngSeed{1001, 0});
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t n = 1 + (rng.next_u64() % 20);
        std::vector<double> pts;
        double x = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x += rng.exponential(1.0);
            pts.push_back(x);
        }
        const double y = rng.uniform(-2.0, x + 2.0);
        CHECK(dist_to_sorted(y, pts) == dist_linear_scan(y, pts));
    }
}

TEST_CASE("score function evaluation") {
    const auto ind = ScoreComponent::indicator(0.25);
    CHECK(ind.eval(0.25) == 1.0);
    CHECK(ind.eval(0.2500000001) == 0.0);
    CHECK(ind.eval(0.0) == 1.0);

    const auto expd = ScoreComponent::exp_decay(1.0);
    CHECK(expd.eval(0.5) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(expd.eval(kInf) == 0.0);

    const auto tri = ScoreComponent::triangular(0.5);
    CHECK(tri.eval(0.5) == 0.0);
    CHECK(tri.eval(0.7) == 0.0);
    CHECK(tri.eval(0.25) == doctest::Approx(0.5).epsilon(1e-15));

    const auto pl = ScoreComponent::piecewise_linear({0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}, 0.1);
    CHECK(pl.eval(0.5) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(pl.eval(2.0) == 0.25);
    CHECK(pl.eval(2.5) == 0.1);
}

TEST_CASE("metadata: bounds, continuity, support radius") {
    CHECK(ScoreComponent::indicator(0.3).bound() == 1.0);
    CHECK(ScoreComponent::indicator(0.3).support_radius() == 0.3);
    CHECK(!ScoreComponent::indicator(0.3).continuous());
    CHECK(ScoreComponent::triangular(0.5).continuous());
    CHECK(ScoreComponent::exp_decay(2.0).continuous());
    CHECK(std::isinf(ScoreComponent::exp_decay(2.0).support_radius()));
    CHECK(ScoreComponent::constant(-2.5).bound() == 2.5);
    const auto pl = ScoreComponent::piecewise_linear({0.0, 1.0}, {1.0, 0.2}, 0.2);
    CHECK(pl.continuous());
    CHECK(pl.support_radius() == 1.0);
}

TEST_CASE("affine combination evaluates and bounds") {
    const auto f = ScoreComponent::parse("affine(0.5*triangular(1),0.25*constant(1),-0.1)");
    CHECK(f.eval(0.0) == doctest::Approx(0.5 + 0.25 - 0.1).epsilon(1e-15));
    CHECK(f.eval(2.0) == doctest::Approx(0.25 - 0.1).epsilon(1e-15));
    CHECK(f.bound() >= 0.65 - 1e-15);
    CHECK(f.continuous());
    auto profile = f.linear_profile();
    REQUIRE(profile.has_value());
}

TEST_CASE("canonical text round-trips") {
    for (const std::string text :
         {"indicator(0.25)", "expdecay(1)", "triangular(0.5)", "constant(1)",
          "pl(0:1,0.5:0.2|0)", "affine(0.6*indicator(0.25),0.4*constant(1),-0.3)",
          "indicator(0.25);triangular(0.5)"}) {
        const ScoreFn f = ScoreFn::parse(text);
        CHECK(ScoreFn::parse(f.canonical()).canonical() == f.canonical());
    }
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS_AS(ScoreFn::parse("indicator(-1)"), std::invalid_argument);
    CHECK_THROWS_AS(ScoreFn::parse("gauss(1)"), std::invalid_argument);
    CHECK_THROWS_AS(ScoreFn::parse("pl(1:1,0:0|0)"), std::invalid_argument);
    CHECK_THROWS_AS(ScoreFn::parse("affine(0.5*affine(1*constant(1),0),0)"), std::invalid_argument);
}

TEST_CASE("matching score: empty template is bottom") {
    PointSeq tmpl;
    tmpl.window_end = 1.0;
    const PointSeq data = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::exp_decay(1.0));
    const ScoreValue v = matching_score(tmpl, data, f, 1.0, 0.0);
    CHECK(v.bottom);
    CHECK(!v.meets({-100.0}));
}

TEST_CASE("matching score: single term") {
    const PointSeq tmpl = seq_on({0.0}, 0.0, 1.0);
    const PointSeq data = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::exp_decay(1.0));
    const ScoreValue v = matching_score(tmpl, data, f, 1.0, 0.0);
    CHECK(v.values[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("matching score: empty sum is zero, distinct from bottom") {
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    PointSeq data;
    data.window_end = 1.0;
    const ScoreFn f(ScoreComponent::constant(1.0));
    const ScoreValue v = matching_score(tmpl, data, f, 1.0, 0.0);
    CHECK(!v.bottom);
    CHECK(v.values[0] == 0.0);
    CHECK(v.meets({0.0}));
}

TEST_CASE("unit marks reduce the marked score to the unmarked one") {
    const PointSeq tmpl = seq_on({0.2, 0.8}, 0.0, 1.0);
    PointSeq marked = seq_on({0.1, 0.5, 0.9}, 0.0, 1.0);
    marked.marks = {1, 1, 1};
    PointSeq plain = marked;
    plain.marks.clear();
    const ScoreFn f(ScoreComponent::triangular(0.4));
    CHECK(matching_score(tmpl, marked, f, 1.0, 0.0).values[0] ==
          matching_score(tmpl, plain, f, 1.0, 0.0).values[0]);
}

TEST_CASE("marks multiply terms") {
    const PointSeq tmpl = seq_on({0.0}, 0.0, 1.0);
    PointSeq data = seq_on({0.5}, 0.0, 1.0);
    data.marks = {3};
    const ScoreFn f(ScoreComponent::exp_decay(1.0));
    CHECK(matching_score(tmpl, data, f, 1.0, 0.0).values[0] ==
          doctest::Approx(3.0 * std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("translation invariance is exact") {
    Pcg64 rng(RngSeed{1002, 0});
    const PointSeq tmpl = seq_on({0.3, 1.1, 1.9}, 0.0, 2.0);
    const ScoreFn f(ScoreComponent::triangular(0.5));
    for (int rep = 0; rep < 200; ++rep) {
        const double t = rng.uniform(0.0, 3.0);
        std::vector<double> pts;
        double x = t;
        while (true) {
            x += rng.exponential(2.0);
            if (x >= t + 2.0) break;
            pts.push_back(x);
        }
        const PointSeq data = seq_on(pts, t, t + 2.0);
        PointSeq shifted = data;
        shifted.window_start = 0.0;
        shifted.window_end = 2.0;
        for (double& p : shifted.points) p -= t;
        const double a = matching_score(tmpl, data, f, 2.0, t).values[0];
        const double b = matching_score(tmpl, shifted, f, 2.0, 0.0).values[0];
        CHECK(a == b);
    }
}

TEST_CASE("additivity: adding a data point adds exactly its term") {
    const PointSeq tmpl = seq_on({0.5, 1.5}, 0.0, 2.0);
    const ScoreFn f(ScoreComponent::exp_decay(0.7));
    const PointSeq base = seq_on({0.4, 1.0}, 0.0, 2.0);
    PointSeq more = seq_on({0.4, 1.0, 1.8}, 0.0, 2.0);
    const double l = 2.0;
    const double a = matching_score(tmpl, base, f, l, 0.0).values[0];
    const double b = matching_score(tmpl, more, f, l, 0.0).values[0];
    const double term = f.components[0].eval(dist_to_template(1.8, tmpl)) / l;
    CHECK(b - a == doctest::Approx(term).epsilon(1e-14));
}

TEST_CASE("componentwise threshold comparison") {
    ScoreValue v;
    v.values = {1.0, 2.0};
    CHECK(v.meets({1.0, 2.0}));
    CHECK(v.meets({0.5, 1.0}));
    CHECK(!v.meets({1.5, 1.0}));
    CHECK(!v.meets({0.0, 2.5}));
}

TEST_CASE("insufficient data window is an error") {
    const PointSeq tmpl = seq_on({0.5}, 0.0, 1.0);
    const PointSeq data = seq_on({0.5}, 0.0, 1.0);
    const ScoreFn f(ScoreComponent::constant(1.0));
    CHECK_THROWS_AS(matching_score(tmpl, data, f, 1.0, 0.5), InsufficientData);
}
