#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppmatch/config.hpp"
#include "ppmatch/runner.hpp"

using namespace ppmatch;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// manifest minus the volatile [timing] section
std::string stable_manifest(const std::string& text) {
    const auto pos = text.find("[timing]");
    return pos == std::string::npos ? text : text.substr(0, pos);
}

} // namespace

TEST_CASE("config: canonical round trip") {
    ExperimentConfig cfg;
    cfg.command = Command::Wait;
    cfg.seed = 99;
    cfg.workers = 4;
    cfg.out_dir = "runs/demo";
    cfg.x_model = ProcessModel::renewal(Interarrival{Interarrival::GammaInt{2, 2.0}});
    cfg.y_model = ProcessModel::marked_poisson(1.5, MarkDist{{1, 2}, {0.5, 0.5}});
    cfg.f = ScoreFn::parse("indicator(0.25)");
    cfg.theta = {1.0};
    cfg.l_list = {10, 20, 30};
    cfg.replicates = 7;
    cfg.exact_mode = false;
    cfg.step = 0.025;
    const ExperimentConfig back = ExperimentConfig::parse(cfg.serialize());
    CHECK(back == cfg);
    CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("config: minimal text populates defaults") {
    const ExperimentConfig cfg = ExperimentConfig::parse("[run]\ncommand = validate\n");
    CHECK(cfg.command == Command::Validate);
    CHECK(cfg.seed == 1);
    CHECK(cfg.workers == 1);
    CHECK(cfg.theta.size() == 1);
}

TEST_CASE("config: errors name the offending field") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[run]\nbogus = 1\n"),
                         doctest::Contains("unknown key 'run.bogus'"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[model]\nx = poisson(-2)\n"),
                         doctest::Contains("density"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse("[run]\nseed = 1\nseed = 2\n"),
                         doctest::Contains("duplicate key"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("[experiment]\nmode = sometimes\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("[score]\nf = indicator(0.2);indicator(0.3)\n"
                                            "\n[experiment]\ntheta = 1\n"),
                    ConfigError); // theta dimension mismatch
}

TEST_CASE("runner: validate command on a known-good config exits 0") {
    ExperimentConfig cfg;
    cfg.command = Command::Validate;
    cfg.out_dir = "test_out/validate_ok";
    const RunOutcome outcome = run(cfg);
    CHECK(outcome.exit_code == 0);
    CHECK(outcome.manifest_text.find("hard_fail = false") != std::string::npos);
}

TEST_CASE("runner: rate with theta <= phi records AtBoundary and exits 0") {
    ExperimentConfig cfg;
    cfg.command = Command::Rate;
    cfg.out_dir = "test_out/rate_boundary";
    cfg.theta = {0.1}; // below phi = 1 - e^{-0.5} ~ 0.3935
    const RunOutcome outcome = run(cfg);
    CHECK(outcome.exit_code == 0);
    CHECK(outcome.manifest_text.find("status = AtBoundary") != std::string::npos);
    CHECK(outcome.manifest_text.find("rate = 0") != std::string::npos);
}

TEST_CASE("runner: experiments refuse to run on hard validation failure") {
    ExperimentConfig cfg;
    cfg.command = Command::Wait;
    cfg.out_dir = "test_out/wait_refused";
    cfg.theta = {0.1};
    cfg.replicates = 2;
    cfg.l_list = {2.0};
    const RunOutcome outcome = run(cfg);
    CHECK(outcome.exit_code == 2);
}

TEST_CASE("runner: same config and seed give byte-identical CSVs; workers do not matter") {
    ExperimentConfig cfg;
    cfg.command = Command::Wait;
    cfg.seed = 1234;
    cfg.l_list = {3.0, 5.0};
    cfg.replicates = 12;
    cfg.exact_mode = true;
    cfg.theta = {1.0};

    cfg.workers = 1;
    cfg.out_dir = "test_out/det_a";
    const RunOutcome a = run(cfg);
    cfg.out_dir = "test_out/det_b";
    const RunOutcome b = run(cfg);
    cfg.workers = 4;
    cfg.out_dir = "test_out/det_c";
    const RunOutcome c = run(cfg);

    REQUIRE(a.csv_paths.size() == b.csv_paths.size());
    REQUIRE(a.csv_paths.size() == c.csv_paths.size());
    for (std::size_t i = 0; i < a.csv_paths.size(); ++i) {
        const std::string ta = slurp(a.csv_paths[i]);
        CHECK(ta == slurp(b.csv_paths[i]));
        CHECK(ta == slurp(c.csv_paths[i]));
        CHECK(!ta.empty());
    }
    // manifests agree apart from [timing] and the differing out dirs
    auto scrub = [](std::string s, const std::string& dir) {
        std::string::size_type pos;
        while ((pos = s.find(dir)) != std::string::npos) s.replace(pos, dir.size(), "OUT");
        return s;
    };
    CHECK(scrub(stable_manifest(a.manifest_text), "test_out/det_a") ==
          scrub(stable_manifest(b.manifest_text), "test_out/det_b"));
}

TEST_CASE("runner: generate writes template and data CSVs") {
    ExperimentConfig cfg;
    cfg.command = Command::Generate;
    cfg.seed = 5;
    cfg.out_dir = "test_out/generate";
    cfg.l_list = {10.0};
    const RunOutcome outcome = run(cfg);
    CHECK(outcome.exit_code == 0);
    REQUIRE(outcome.csv_paths.size() == 2);
    const std::string tmpl = slurp(outcome.csv_paths[0]);
    CHECK(tmpl.rfind("point", 0) == 0);
}
