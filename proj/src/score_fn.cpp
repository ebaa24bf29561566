#include "ppmatch/score_fn.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>

namespace ppmatch {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void ScoreComponent::check() const {
    if (const auto* p = std::get_if<Indicator>(&v_)) {
        if (!(p->a >= 0.0) || !std::isfinite(p->a))
            throw std::invalid_argument("indicator: radius must be finite and >= 0");
    } else if (const auto* p = std::get_if<ExpDecay>(&v_)) {
        if (!(p->tau > 0.0) || !std::isfinite(p->tau))
            throw std::invalid_argument("expdecay: tau must be finite and > 0");
    } else if (const auto* p = std::get_if<Triangular>(&v_)) {
        if (!(p->a > 0.0) || !std::isfinite(p->a))
            throw std::invalid_argument("triangular: radius must be finite and > 0");
    } else if (const auto* p = std::get_if<PiecewiseLinear>(&v_)) {
        if (p->knots.size() < 2 || p->knots.size() != p->values.size())
            throw std::invalid_argument("pl: need >= 2 knots with matching values");
        if (p->knots.front() != 0.0) throw std::invalid_argument("pl: first knot must be 0");
        for (std::size_t i = 1; i < p->knots.size(); ++i)
            if (!(p->knots[i] > p->knots[i - 1]))
                throw std::invalid_argument("pl: knots must be strictly ascending");
        for (double v : p->values)
            if (!std::isfinite(v)) throw std::invalid_argument("pl: values must be finite");
        if (!std::isfinite(p->tail_value)) throw std::invalid_argument("pl: tail must be finite");
    } else if (const auto* p = std::get_if<Constant>(&v_)) {
        if (!std::isfinite(p->c)) throw std::invalid_argument("constant: value must be finite");
    } else if (const auto* p = std::get_if<Affine>(&v_)) {
        if (p->terms.empty()) throw std::invalid_argument("affine: no terms");
        for (const auto& term : p->terms) {
            if (term.base_index >= p->bases.size())
                throw std::invalid_argument("affine: bad term index");
            if (!std::isfinite(term.weight)) throw std::invalid_argument("affine: weight not finite");
            if (std::holds_alternative<Affine>(p->bases[term.base_index].v_))
                throw std::invalid_argument("affine: nesting not supported");
        }
        if (!std::isfinite(p->offset)) throw std::invalid_argument("affine: offset not finite");
    }
}

double ScoreComponent::eval(double x) const {
    if (x < 0.0) throw std::invalid_argument("ScoreComponent::eval: x must be >= 0");
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Indicator>) {
                return x <= f.a ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, ExpDecay>) {
                return std::isinf(x) ? 0.0 : std::exp(-x / f.tau);
            } else if constexpr (std::is_same_v<T, Triangular>) {
                return x >= f.a ? 0.0 : 1.0 - x / f.a;
            } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                if (x > f.knots.back()) return f.tail_value;
                auto it = std::upper_bound(f.knots.begin(), f.knots.end(), x);
                const std::size_t hi = static_cast<std::size_t>(it - f.knots.begin());
                if (hi == f.knots.size()) return f.values.back(); // x == last knot
                const std::size_t lo = hi - 1;
                const double span = f.knots[hi] - f.knots[lo];
                const double w = (x - f.knots[lo]) / span;
                return f.values[lo] + w * (f.values[hi] - f.values[lo]);
            } else if constexpr (std::is_same_v<T, Constant>) {
                return f.c;
            } else {
                double acc = f.offset;
                for (const auto& term : f.terms) acc += term.weight * f.bases[term.base_index].eval(x);
                return acc;
            }
        },
        v_);
}

double ScoreComponent::tail_value() const {
    return std::visit(
        [this](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Indicator>) return 0.0;
            else if constexpr (std::is_same_v<T, ExpDecay>) return 0.0;
            else if constexpr (std::is_same_v<T, Triangular>) return 0.0;
            else if constexpr (std::is_same_v<T, PiecewiseLinear>) return f.tail_value;
            else if constexpr (std::is_same_v<T, Constant>) return f.c;
            else {
                double acc = f.offset;
                for (const auto& term : f.terms)
                    acc += term.weight * f.bases[term.base_index].tail_value();
                return acc;
            }
        },
        v_);
}

double ScoreComponent::support_radius() const {
    return std::visit(
        [](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Indicator>) return f.a;
            else if constexpr (std::is_same_v<T, ExpDecay>) return kInf;
            else if constexpr (std::is_same_v<T, Triangular>) return f.a;
            else if constexpr (std::is_same_v<T, PiecewiseLinear>) return f.knots.back();
            else if constexpr (std::is_same_v<T, Constant>) return 0.0;
            else {
                double r = 0.0;
                for (const auto& term : f.terms)
                    if (term.weight != 0.0)
                        r = std::max(r, f.bases[term.base_index].support_radius());
                return r;
            }
        },
        v_);
}

std::optional<std::vector<LinearSegment>> ScoreComponent::linear_profile() const {
    std::vector<LinearSegment> out;
    bool ok = std::visit(
        [&out](const auto& f) -> bool {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Indicator>) {
                if (f.a > 0.0) out.push_back({0.0, f.a, 0.0, 1.0});
                out.push_back({f.a, kInf, 0.0, 0.0});
                return true;
            } else if constexpr (std::is_same_v<T, ExpDecay>) {
                return false;
            } else if constexpr (std::is_same_v<T, Triangular>) {
                out.push_back({0.0, f.a, -1.0 / f.a, 1.0});
                out.push_back({f.a, kInf, 0.0, 0.0});
                return true;
            } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                for (std::size_t i = 0; i + 1 < f.knots.size(); ++i) {
                    const double span = f.knots[i + 1] - f.knots[i];
                    const double slope = (f.values[i + 1] - f.values[i]) / span;
                    out.push_back({f.knots[i], f.knots[i + 1], slope, f.values[i] - slope * f.knots[i]});
                }
                out.push_back({f.knots.back(), kInf, 0.0, f.tail_value});
                return true;
            } else if constexpr (std::is_same_v<T, Constant>) {
                out.push_back({0.0, kInf, 0.0, f.c});
                return true;
            } else {
                // merge base profiles over common breakpoints
                std::vector<std::vector<LinearSegment>> parts;
                for (const auto& term : f.terms) {
                    auto p = f.bases[term.base_index].linear_profile();
                    if (!p) return false;
                    parts.push_back(std::move(*p));
                }
                std::vector<double> cuts{0.0};
                for (const auto& p : parts)
                    for (const auto& seg : p)
                        if (std::isfinite(seg.lo)) cuts.push_back(seg.lo);
                std::sort(cuts.begin(), cuts.end());
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                for (std::size_t i = 0; i < cuts.size(); ++i) {
                    const double lo = cuts[i];
                    const double hi = (i + 1 < cuts.size()) ? cuts[i + 1] : kInf;
                    double slope = 0.0, intercept = f.offset;
                    for (std::size_t j = 0; j < f.terms.size(); ++j) {
                        for (const auto& seg : parts[j]) {
                            if (seg.lo <= lo && lo < seg.hi) {
                                slope += f.terms[j].weight * seg.slope;
                                intercept += f.terms[j].weight * seg.intercept;
                                break;
                            }
                        }
                    }
                    out.push_back({lo, hi, slope, intercept});
                }
                return true;
            }
        },
        v_);
    if (!ok) return std::nullopt;
    return out;
}

std::vector<double> ScoreComponent::discontinuities() const {
    std::vector<double> out;
    auto profile = linear_profile();
    if (!profile) return out; // exp decay terms are continuous
    for (std::size_t i = 0; i + 1 < profile->size(); ++i) {
        const double b = (*profile)[i].hi;
        const double left = (*profile)[i].at(b);
        const double right = (*profile)[i + 1].at(b);
        // segment endpoints are derived from the same knot data, so genuine
        // jumps dwarf the few-ulp noise of slope/intercept arithmetic
        const double tol = 1e-12 * std::max({1.0, std::fabs(left), std::fabs(right)});
        if (std::fabs(left - right) > tol) out.push_back(b);
    }
    return out;
}

double ScoreComponent::sup_value() const {
    if (auto profile = linear_profile()) {
        double m = -kInf;
        for (const auto& seg : *profile) {
            m = std::max(m, seg.at(seg.lo));
            if (std::isfinite(seg.hi)) m = std::max(m, seg.at(seg.hi));
        }
        return m;
    }
    // exp-decay terms: interval bound |w|*sup|base| plus PL extremes
    const auto* p = std::get_if<Affine>(&v_);
    if (!p) return 1.0; // plain ExpDecay has sup 1 at x = 0
    double acc = p->offset;
    for (const auto& term : p->terms) acc += std::fabs(term.weight) * p->bases[term.base_index].bound();
    return acc;
}

double ScoreComponent::bound() const {
    if (auto profile = linear_profile()) {
        double m = 0.0;
        for (const auto& seg : *profile) {
            m = std::max(m, std::fabs(seg.at(seg.lo)));
            if (std::isfinite(seg.hi)) m = std::max(m, std::fabs(seg.at(seg.hi)));
        }
        return m;
    }
    if (std::holds_alternative<ExpDecay>(v_)) return 1.0;
    const auto& p = std::get<Affine>(v_);
    double acc = std::fabs(p.offset);
    for (const auto& term : p.terms) acc += std::fabs(term.weight) * p.bases[term.base_index].bound();
    return acc;
}

std::string ScoreComponent::canonical() const {
    std::string s;
    std::visit(
        [&s](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Indicator>) {
                s = "indicator(" + format_double(f.a) + ")";
            } else if constexpr (std::is_same_v<T, ExpDecay>) {
                s = "expdecay(" + format_double(f.tau) + ")";
            } else if constexpr (std::is_same_v<T, Triangular>) {
                s = "triangular(" + format_double(f.a) + ")";
            } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                s = "pl(";
                for (std::size_t i = 0; i < f.knots.size(); ++i) {
                    if (i) s += ",";
                    s += format_double(f.knots[i]) + ":" + format_double(f.values[i]);
                }
                s += "|" + format_double(f.tail_value) + ")";
            } else if constexpr (std::is_same_v<T, Constant>) {
                s = "constant(" + format_double(f.c) + ")";
            } else {
                s = "affine(";
                for (const auto& term : f.terms)
                    s += format_double(term.weight) + "*" + f.bases[term.base_index].canonical() + ",";
                s += format_double(f.offset) + ")";
            }
        },
        v_);
    return s;
}

namespace {

[[noreturn]] void parse_fail(const std::string& text, const std::string& why) {
    throw std::invalid_argument("score function parse error: " + why + " in '" + text + "'");
}

double parse_num(const std::string& text, const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') parse_fail(text, "bad number '" + tok + "'");
    return v;
}

// splits "name(args)" -> {name, args}; args may contain balanced parens
std::pair<std::string, std::string> split_call(const std::string& text, const std::string& tok) {
    const auto open = tok.find('(');
    if (open == std::string::npos || tok.back() != ')') parse_fail(text, "expected name(args)");
    return {tok.substr(0, open), tok.substr(open + 1, tok.size() - open - 2)};
}

std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == sep && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

ScoreComponent ScoreComponent::parse(const std::string& raw) {
    const std::string text = strip(raw);
    auto [name, args] = split_call(text, text);
    if (name == "indicator") return indicator(parse_num(text, args));
    if (name == "expdecay") return exp_decay(parse_num(text, args));
    if (name == "triangular") return triangular(parse_num(text, args));
    if (name == "constant") return constant(parse_num(text, args));
    if (name == "pl") {
        const auto bar = args.rfind('|');
        if (bar == std::string::npos) parse_fail(text, "pl needs '|tail'");
        const double tail = parse_num(text, args.substr(bar + 1));
        std::vector<double> knots, values;
        for (const auto& pair_str : split_top(args.substr(0, bar), ',')) {
            const auto colon = pair_str.find(':');
            if (colon == std::string::npos) parse_fail(text, "pl pair needs 'knot:value'");
            knots.push_back(parse_num(text, strip(pair_str.substr(0, colon))));
            values.push_back(parse_num(text, strip(pair_str.substr(colon + 1))));
        }
        return piecewise_linear(std::move(knots), std::move(values), tail);
    }
    if (name == "affine") {
        Affine aff;
        aff.offset = 0.0;
        bool have_offset = false;
        for (const auto& entry_raw : split_top(args, ',')) {
            const std::string entry = strip(entry_raw);
            const auto star = entry.find('*');
            if (star == std::string::npos) {
                if (have_offset) parse_fail(text, "affine has two offsets");
                aff.offset = parse_num(text, entry);
                have_offset = true;
            } else {
                const double w = parse_num(text, strip(entry.substr(0, star)));
                aff.bases.push_back(parse(entry.substr(star + 1)));
                aff.terms.push_back({w, aff.bases.size() - 1});
            }
        }
        if (!have_offset) parse_fail(text, "affine must end with an offset");
        return ScoreComponent(std::move(aff));
    }
    parse_fail(text, "unknown component '" + name + "'");
}

std::string ScoreFn::canonical() const {
    std::string s;
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (i) s += ";";
        s += components[i].canonical();
    }
    return s;
}

ScoreFn ScoreFn::parse(const std::string& text) {
    std::vector<ScoreComponent> comps;
    for (const auto& part : split_top(text, ';')) comps.push_back(ScoreComponent::parse(part));
    return ScoreFn(std::move(comps));
}

} // namespace ppmatch
