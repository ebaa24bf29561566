#include "ppmatch/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ppmatch {

const char* to_string(Command c) {
    switch (c) {
        case Command::Generate: return "generate";
        case Command::Rate: return "rate";
        case Command::Wait: return "wait";
        case Command::Rare: return "rare";
        case Command::Clt: return "clt";
        case Command::Validate: return "validate";
    }
    return "?";
}

Command command_from_string(const std::string& s) {
    if (s == "generate") return Command::Generate;
    if (s == "rate") return Command::Rate;
    if (s == "wait") return Command::Wait;
    if (s == "rare") return Command::Rare;
    if (s == "clt") return Command::Clt;
    if (s == "validate") return Command::Validate;
    throw ConfigError("unknown command '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("field '" + key + "': bad number '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("field '" + key + "': bad unsigned integer '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    int x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ConfigError("field '" + key + "': bad integer '" + v + "'");
    return x;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_double(key, trim(tok)));
    if (out.empty()) throw ConfigError("field '" + key + "': empty list");
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += format_double(xs[i]);
    }
    return s;
}

// model descriptor: poisson(density) | marked_poisson(density; q1:p1,q2:p2,...)
//                 | renewal(exponential(rate)) | renewal(uniform(a,b))
//                 | renewal(discrete(c1:p1,...)) | renewal(gamma(k,rate))
std::string model_to_string(const ProcessModel& m) {
    if (const auto* p = std::get_if<ProcessModel::HomogeneousPoisson>(&m.model))
        return "poisson(" + format_double(p->density) + ")";
    if (const auto* p = std::get_if<ProcessModel::MarkedPoisson>(&m.model)) {
        std::string s = "marked_poisson(" + format_double(p->density) + ";";
        for (std::size_t i = 0; i < p->marks.support.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(p->marks.support[i]) + ":" + format_double(p->marks.probabilities[i]);
        }
        return s + ")";
    }
    const auto& r = std::get<ProcessModel::EquilibriumRenewal>(m.model);
    std::string inner;
    if (const auto* e = std::get_if<Interarrival::Exponential>(&r.interarrival.law))
        inner = "exponential(" + format_double(e->rate) + ")";
    else if (const auto* u = std::get_if<Interarrival::Uniform>(&r.interarrival.law))
        inner = "uniform(" + format_double(u->a) + "," + format_double(u->b) + ")";
    else if (const auto* g = std::get_if<Interarrival::GammaInt>(&r.interarrival.law))
        inner = "gamma(" + std::to_string(g->shape) + "," + format_double(g->rate) + ")";
    else {
        const auto& d = std::get<Interarrival::Discrete>(r.interarrival.law);
        inner = "discrete(";
        for (std::size_t i = 0; i < d.atoms.size(); ++i) {
            if (i) inner += ",";
            inner += format_double(d.atoms[i]) + ":" + format_double(d.probabilities[i]);
        }
        inner += ")";
    }
    return "renewal(" + inner + ")";
}

ProcessModel model_from_string(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
        throw ConfigError("field '" + key + "': expected model(args), got '" + s + "'");
    const std::string name = s.substr(0, open);
    const std::string args = s.substr(open + 1, s.size() - open - 2);
    try {
        if (name == "poisson") {
            const double density = to_double(key, args);
            if (!(density > 0.0)) throw ConfigError("field '" + key + "': density must be > 0");
            return ProcessModel::poisson(density);
        }
        if (name == "marked_poisson") {
            const auto semi = args.find(';');
            if (semi == std::string::npos)
                throw ConfigError("field '" + key + "': marked_poisson(density; q:p,...)");
            const double density = to_double(key, trim(args.substr(0, semi)));
            if (!(density > 0.0)) throw ConfigError("field '" + key + "': density must be > 0");
            MarkDist marks;
            std::stringstream ss(args.substr(semi + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("field '" + key + "': mark entries are q:p");
                marks.support.push_back(
                    static_cast<std::uint32_t>(to_u64(key, trim(tok.substr(0, colon)))));
                marks.probabilities.push_back(to_double(key, trim(tok.substr(colon + 1))));
            }
            marks.validate();
            return ProcessModel::marked_poisson(density, std::move(marks));
        }
        if (name == "renewal") {
            const auto inner_open = args.find('(');
            if (inner_open == std::string::npos || args.back() != ')')
                throw ConfigError("field '" + key + "': renewal(law(args))");
            const std::string law = trim(args.substr(0, inner_open));
            const std::string largs = args.substr(inner_open + 1, args.size() - inner_open - 2);
            Interarrival ia;
            if (law == "exponential") {
                ia.law = Interarrival::Exponential{to_double(key, largs)};
            } else if (law == "uniform") {
                const auto comma = largs.find(',');
                if (comma == std::string::npos)
                    throw ConfigError("field '" + key + "': uniform(a,b)");
                ia.law = Interarrival::Uniform{to_double(key, trim(largs.substr(0, comma))),
                                               to_double(key, trim(largs.substr(comma + 1)))};
            } else if (law == "gamma") {
                const auto comma = largs.find(',');
                if (comma == std::string::npos)
                    throw ConfigError("field '" + key + "': gamma(shape,rate)");
                ia.law = Interarrival::GammaInt{
                    static_cast<unsigned>(to_u64(key, trim(largs.substr(0, comma)))),
                    to_double(key, trim(largs.substr(comma + 1)))};
            } else if (law == "discrete") {
                Interarrival::Discrete d;
                std::stringstream ss(largs);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    const auto colon = tok.find(':');
                    if (colon == std::string::npos)
                        throw ConfigError("field '" + key + "': discrete entries are atom:p");
                    d.atoms.push_back(to_double(key, trim(tok.substr(0, colon))));
                    d.probabilities.push_back(to_double(key, trim(tok.substr(colon + 1))));
                }
                ia.law = std::move(d);
            } else {
                throw ConfigError("field '" + key + "': unsupported interarrival law '" + law + "'");
            }
            ia.validate();
            return ProcessModel::renewal(std::move(ia));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
    throw ConfigError("field '" + key + "': unknown model kind '" + name + "'");
}

} // namespace

std::string ExperimentConfig::serialize() const {
    std::string s;
    s += "[run]\n";
    s += "command = " + std::string(to_string(command)) + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    s += "workers = " + std::to_string(workers) + "\n";
    s += "out = " + out_dir + "\n";
    s += "\n[model]\n";
    s += "x = " + model_to_string(x_model) + "\n";
    s += "y = " + model_to_string(y_model) + "\n";
    s += "\n[score]\n";
    s += "f = " + f.canonical() + "\n";
    s += "\n[experiment]\n";
    s += "theta = " + join(theta) + "\n";
    s += "l_list = " + join(l_list) + "\n";
    s += "replicates = " + std::to_string(replicates) + "\n";
    s += "n_samples = " + std::to_string(n_samples) + "\n";
    s += "naive_samples = " + std::to_string(naive_samples) + "\n";
    s += "mode = " + std::string(exact_mode ? "exact" : "grid") + "\n";
    s += "step = " + format_double(step) + "\n";
    s += "horizon_c = " + format_double(horizon_c) + "\n";
    s += "horizon_cap = " + format_double(horizon_cap) + "\n";
    return s;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "run" && section != "model" && section != "score" &&
                section != "experiment")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = section + "." + trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

        if (key == "run.command") cfg.command = command_from_string(value);
        else if (key == "run.seed") cfg.seed = to_u64(key, value);
        else if (key == "run.workers") {
            cfg.workers = to_int(key, value);
            if (cfg.workers < 1) throw ConfigError("field 'run.workers': must be >= 1");
        } else if (key == "run.out") cfg.out_dir = value;
        else if (key == "model.x") cfg.x_model = model_from_string(key, value);
        else if (key == "model.y") cfg.y_model = model_from_string(key, value);
        else if (key == "score.f") {
            try {
                cfg.f = ScoreFn::parse(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("field 'score.f': " + std::string(e.what()));
            }
        } else if (key == "experiment.theta") cfg.theta = to_double_list(key, value);
        else if (key == "experiment.l_list") {
            cfg.l_list = to_double_list(key, value);
            for (double l : cfg.l_list)
                if (!(l > 0.0)) throw ConfigError("field 'experiment.l_list': l must be > 0");
        } else if (key == "experiment.replicates") {
            cfg.replicates = to_int(key, value);
            if (cfg.replicates < 0) throw ConfigError("field 'experiment.replicates': must be >= 0");
        } else if (key == "experiment.n_samples") {
            cfg.n_samples = to_u64(key, value);
        } else if (key == "experiment.naive_samples") {
            cfg.naive_samples = to_u64(key, value);
        } else if (key == "experiment.mode") {
            if (value == "exact") cfg.exact_mode = true;
            else if (value == "grid") cfg.exact_mode = false;
            else throw ConfigError("field 'experiment.mode': expected exact|grid");
        } else if (key == "experiment.step") {
            cfg.step = to_double(key, value);
            if (!(cfg.step > 0.0)) throw ConfigError("field 'experiment.step': must be > 0");
        } else if (key == "experiment.horizon_c") {
            cfg.horizon_c = to_double(key, value);
            if (!(cfg.horizon_c > 0.0)) throw ConfigError("field 'experiment.horizon_c': must be > 0");
        } else if (key == "experiment.horizon_cap") {
            cfg.horizon_cap = to_double(key, value);
            if (!(cfg.horizon_cap > 0.0))
                throw ConfigError("field 'experiment.horizon_cap': must be > 0");
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    for (double th : cfg.theta)
        if (!std::isfinite(th)) throw ConfigError("field 'experiment.theta': must be finite");
    if (cfg.theta.size() != cfg.f.dim())
        throw ConfigError("field 'experiment.theta': dimension must match score.f");
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace ppmatch
