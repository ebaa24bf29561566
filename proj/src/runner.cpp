#include "ppmatch/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppmatch/clt.hpp"
#include "ppmatch/procgen.hpp"
#include "ppmatch/rare.hpp"
#include "ppmatch/rates.hpp"
#include "ppmatch/waiting.hpp"

namespace ppmatch {

namespace {

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : path_(path.string()) {
        out_.open(path);
        if (!out_) throw std::runtime_error("cannot open for writing: " + path_);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ",";
            out_ << columns[i];
        }
        out_ << "\n";
    }

    CsvWriter& field(double x) {
        sep();
        out_ << format_double(x);
        return *this;
    }
    CsvWriter& field(std::uint64_t x) {
        sep();
        out_ << x;
        return *this;
    }
    CsvWriter& field(int x) {
        sep();
        out_ << x;
        return *this;
    }
    CsvWriter& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    void end_row() {
        out_ << "\n";
        first_ = true;
    }

    const std::string& path() const { return path_; }

private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }
    std::string path_;
    std::ofstream out_;
    bool first_ = true;
};

std::string indent_config(const std::string& serialized) {
    // [run] -> [config.run] so the echo nests inside the manifest
    std::istringstream in(serialized);
    std::string line, out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[')
            out += "[config." + line.substr(1) + "\n";
        else if (!line.empty())
            out += line + "\n";
    }
    return out;
}

struct ManifestBuilder {
    std::string text;

    void section(const std::string& name) { text += "\n[" + name + "]\n"; }
    void kv(const std::string& key, const std::string& value) { text += key + " = " + value + "\n"; }
    void kv(const std::string& key, double value) { kv(key, format_double(value)); }
    void kv(const std::string& key, std::uint64_t value) { kv(key, std::to_string(value)); }
    void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
};

void run_generate(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                  ManifestBuilder& mb, std::vector<std::string>& csvs) {
    const double l = cfg.l_list.front();
    const RngSeed seed{cfg.seed, 0};
    const PointSeq tmpl = sample_model(cfg.x_model, 0.0, l, seed.with_stream(1));
    const PointSeq data = sample_model(cfg.y_model, 0.0, l, seed.with_stream(2));

    auto dump = [&](const PointSeq& seq, const std::string& name) {
        CsvWriter csv(dir / name, seq.marked() ? std::vector<std::string>{"point", "mark"}
                                               : std::vector<std::string>{"point"});
        for (std::size_t i = 0; i < seq.size(); ++i) {
            csv.field(seq.points[i]);
            if (seq.marked()) csv.field(static_cast<std::uint64_t>(seq.marks[i]));
            csv.end_row();
        }
        csvs.push_back(csv.path());
    };
    dump(tmpl, "template.csv");
    dump(data, "data.csv");
    mb.section("result");
    mb.kv("template_points", static_cast<std::uint64_t>(tmpl.size()));
    mb.kv("data_points", static_cast<std::uint64_t>(data.size()));
    mb.kv("window_length", l);
}

void run_rate(const ExperimentConfig& cfg, ManifestBuilder& mb) {
    const RngSeed seed{cfg.seed, 0};
    const RateModel model = RateModel::from_models(cfg.x_model, cfg.y_model, cfg.f, seed);
    const std::vector<double> phi = model.phi();
    mb.section("result");
    for (std::size_t k = 0; k < phi.size(); ++k) mb.kv("phi." + std::to_string(k), phi[k]);
    if (cfg.f.scalar()) {
        const LegendreResult r = rate_star(model.scalar_cgf(), cfg.theta[0]);
        mb.kv("theta", cfg.theta[0]);
        mb.kv("t_star", r.t_star.empty() ? 0.0 : r.t());
        mb.kv("rate", r.rate);
        mb.kv("residual", r.residual);
        mb.kv("status", to_string(r.status));
        mb.kv("iterations", r.iterations);
        mb.kv("method", model.analytic_route() ? "analytic" : "empirical");
        mb.kv("tolerance_residual", SolverTolerances::scalar_residual);
        if (!r.diagnostic.empty()) mb.kv("diagnostic", r.diagnostic);
    } else {
        const LegendreResult r = vector_rate(model.vector_cgf(), cfg.theta);
        for (std::size_t k = 0; k < cfg.theta.size(); ++k)
            mb.kv("theta." + std::to_string(k), cfg.theta[k]);
        for (std::size_t k = 0; k < r.t_star.size(); ++k)
            mb.kv("t_star." + std::to_string(k), r.t_star[k]);
        mb.kv("rate", r.rate);
        mb.kv("residual", r.residual);
        mb.kv("status", to_string(r.status));
        mb.kv("iterations", r.iterations);
        mb.kv("method", "vector dual/primal cross-check");
        mb.kv("tolerance_gradient", SolverTolerances::vector_gradient);
        mb.kv("tolerance_duality_gap", SolverTolerances::duality_gap);
        if (!r.diagnostic.empty()) mb.kv("diagnostic", r.diagnostic);
    }
}

void run_wait(const ExperimentConfig& cfg, const std::filesystem::path& dir, ManifestBuilder& mb,
              std::vector<std::string>& csvs) {
    LadderConfig lc;
    lc.l_list = cfg.l_list;
    lc.replicates = cfg.replicates;
    lc.horizon_c = cfg.horizon_c;
    lc.horizon_cap = cfg.horizon_cap;
    if (cfg.exact_mode)
        lc.mode = ExactPLMode{};
    else
        lc.mode = GridMode{cfg.step};
    lc.workers = cfg.workers;

    const LadderResult ladder =
        ladder_experiment(cfg.x_model, cfg.y_model, cfg.f, cfg.theta, lc, RngSeed{cfg.seed, 0});

    {
        CsvWriter csv(dir / "ladder.csv", {"l", "replicate", "status", "w", "log_w"});
        for (const auto& row : ladder.rows) {
            csv.field(row.l).field(row.replicate).field(std::string(to_string(row.status)));
            csv.field(row.w).field(row.log_w);
            csv.end_row();
        }
        csvs.push_back(csv.path());
    }
    {
        CsvWriter csv(dir / "ladder_summary.csv", {"l", "mean_log_w", "se", "n_censored"});
        for (const auto& s : ladder.summary) {
            csv.field(s.l).field(s.mean_log_w).field(s.se).field(s.n_censored);
            csv.end_row();
        }
        csvs.push_back(csv.path());
    }
    mb.section("result");
    mb.kv("mode", cfg.exact_mode ? "exact" : "grid");
    if (!cfg.exact_mode) mb.kv("step", cfg.step);
    mb.kv("rate_reference", ladder.rate_reference);
    mb.kv("slope", ladder.slope);
    mb.kv("slope_valid", ladder.slope_valid ? "true" : "false");
    mb.kv("intercept", ladder.intercept);
    mb.kv("horizon_c", cfg.horizon_c);
    for (std::size_t i = 0; i < ladder.warnings.size(); ++i)
        mb.kv("warning." + std::to_string(i), ladder.warnings[i]);
}

void run_rare(const ExperimentConfig& cfg, const std::filesystem::path& dir, ManifestBuilder& mb,
              std::vector<std::string>& csvs) {
    const double lambda = cfg.y_model.density();
    if (cfg.y_model.is_marked())
        throw std::invalid_argument("rare: marked data processes are out of scope (Theorem 3)");
    const DeviationTable table =
        theorem3_deviation(cfg.x_model, cfg.f, lambda, cfg.theta[0], cfg.l_list, cfg.n_samples,
                           cfg.replicates, RngSeed{cfg.seed, 0}, cfg.workers);
    {
        CsvWriter csv(dir / "rare.csv", {"l", "p_hat", "log_p_hat", "stderr", "n", "hit_fraction",
                                         "t_star", "rate_empirical"});
        for (const auto& row : table.rows) {
            csv.field(row.l).field(row.est.p_hat).field(row.est.log_p_hat);
            csv.field(row.est.stderr_est).field(row.est.n_samples).field(row.est.hit_fraction);
            csv.field(row.est.t_star).field(row.est.rate_empirical);
            csv.end_row();
        }
        csvs.push_back(csv.path());
    }
    mb.section("result");
    for (const auto& s : table.summary) {
        const std::string prefix = "l_" + format_double(s.l) + ".";
        mb.kv(prefix + "mean_delta", s.mean_delta);
        mb.kv(prefix + "median_abs_delta", s.median_abs_delta);
        mb.kv(prefix + "replicates", s.n);
    }
    if (cfg.naive_samples > 0) {
        // naive cross-check on the first replicate's template at each l
        for (std::size_t li = 0; li < cfg.l_list.size(); ++li) {
            const double l = cfg.l_list[li];
            const std::uint64_t block = cfg.n_samples + 16;
            const std::size_t jid = li * static_cast<std::size_t>(cfg.replicates);
            const RngSeed tmpl_seed{cfg.seed, jid * block};
            const PointSeq tmpl = sample_model(cfg.x_model, 0.0, l, tmpl_seed);
            if (tmpl.empty()) continue;
            const ISEstimate naive =
                naive_mc_estimate(tmpl, cfg.f, lambda, cfg.theta[0], l, cfg.naive_samples,
                                  RngSeed{cfg.seed, 1u << 30}, cfg.workers);
            const std::string prefix = "naive.l_" + format_double(l) + ".";
            mb.kv(prefix + "p_hat", naive.p_hat);
            mb.kv(prefix + "stderr", naive.stderr_est);
            mb.kv(prefix + "n", naive.n_samples);
        }
    }
}

void run_clt(const ExperimentConfig& cfg, const std::filesystem::path& dir, ManifestBuilder& mb,
             std::vector<std::string>& csvs) {
    if (!cfg.x_model.is_poisson())
        throw std::invalid_argument("clt: Theorem 4 requires a Poisson template process");
    if (cfg.y_model.is_marked())
        throw std::invalid_argument("clt: marked data processes are out of scope (Theorem 4)");
    const CltSummary summary =
        clt_experiment(cfg.x_model.density(), cfg.y_model.density(), cfg.f, cfg.theta[0],
                       cfg.l_list.front(), cfg.replicates, RngSeed{cfg.seed, 0}, cfg.workers);
    {
        CsvWriter csv(dir / "clt.csv", {"replicate", "s_i", "gap_i", "t_star_i"});
        for (const auto& row : summary.rows) {
            csv.field(row.replicate).field(row.s_i).field(row.gap_i).field(row.t_star_i);
            csv.end_row();
        }
        csvs.push_back(csv.path());
    }
    mb.section("result");
    mb.kv("l", cfg.l_list.front());
    mb.kv("t0", summary.t0);
    mb.kv("rate", summary.rate);
    mb.kv("sigma2", summary.sigma2_value);
    mb.kv("target_variance", summary.target_variance);
    mb.kv("sample_mean", summary.sample_mean);
    mb.kv("sample_variance", summary.sample_variance);
    mb.kv("variance_ratio", summary.variance_ratio);
    mb.kv("ks_distance", summary.ks_distance);
    mb.kv("median_abs_gap", summary.median_abs_gap);
    mb.kv("n_failed", summary.n_failed);
}

} // namespace

RunOutcome run(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome outcome;
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    ManifestBuilder mb;
    mb.text = "[tool]\nname = ppmatch\nversion = " + std::string(kToolVersion) + "\n";
    mb.text += "\n" + indent_config(cfg.serialize());

    // every command starts from the condition report
    const ConditionReport report =
        validate_conditions(cfg.x_model, cfg.y_model, cfg.f, cfg.theta);
    mb.section("validation");
    mb.kv("hard_fail", report.hard_fail ? "true" : "false");
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const auto& c = report.checks[i];
        const char* verdict = c.verdict == ConditionCheck::Pass ? "pass"
                              : c.verdict == ConditionCheck::Warn ? "warn"
                                                                  : "fail";
        mb.kv("check." + std::to_string(i), std::string(verdict) + " | " + c.name + " | " + c.detail);
    }

    if (report.hard_fail && cfg.command != Command::Validate && cfg.command != Command::Rate) {
        // rate is allowed through: theta <= phi legitimately reports rate 0
        outcome.exit_code = 2;
    } else {
        switch (cfg.command) {
            case Command::Validate:
                outcome.exit_code = report.hard_fail ? 2 : 0;
                break;
            case Command::Generate:
                run_generate(cfg, dir, mb, outcome.csv_paths);
                break;
            case Command::Rate:
                run_rate(cfg, mb);
                break;
            case Command::Wait:
                run_wait(cfg, dir, mb, outcome.csv_paths);
                break;
            case Command::Rare:
                run_rare(cfg, dir, mb, outcome.csv_paths);
                break;
            case Command::Clt:
                run_clt(cfg, dir, mb, outcome.csv_paths);
                break;
        }
    }

    mb.section("artifacts");
    for (std::size_t i = 0; i < outcome.csv_paths.size(); ++i)
        mb.kv("csv." + std::to_string(i), outcome.csv_paths[i]);

    // volatile section last so determinism checks can strip it
    const auto wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    mb.section("timing");
    mb.kv("timestamp_utc", std::string(stamp));
    mb.kv("wall_clock_seconds", wall);

    outcome.manifest_text = mb.text;
    std::ofstream mf(dir / "manifest.txt");
    if (!mf) throw std::runtime_error("cannot write manifest");
    mf << mb.text;
    return outcome;
}

} // namespace ppmatch
