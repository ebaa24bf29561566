#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ppmatch/procgen.hpp"
#include "ppmatch/rates.hpp"
#include "ppmatch/score.hpp"

namespace ppmatch {

struct UnsupportedMode : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GridMode {
    double step;
};
struct ExactPLMode {};

struct WaitingTimeQuery {
    std::vector<double> theta;
    double l = 0.0;
    double horizon = 0.0;
    std::variant<GridMode, ExactPLMode> mode = GridMode{0.01};

    void validate(std::size_t f_dim) const;
};

enum class WaitStatus { Hit, Censored, EmptyTemplate };

const char* to_string(WaitStatus s);

struct WaitingTimeResult {
    WaitStatus status = WaitStatus::Censored;
    double w = 0.0;                  // hit time (Hit only)
    std::uint64_t evaluations = 0;   // grid evaluations or scan events
    double horizon_used = 0.0;
    bool boundary_hit = false;       // exact mode: hit lands on an event time
};

// Grid scan: smallest t = k*step with score >= theta. Upper-bound biased
// (excursions shorter than one step can be skipped); bias documented in the
// run manifest via the step.
WaitingTimeResult waiting_time_grid(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                                    const WaitingTimeQuery& query);

// Exact first up-crossing for a scalar f in the piecewise-linear family:
// between window-membership and breakpoint events the unnormalized score is
// affine in t, so crossings are solved in closed form.
WaitingTimeResult waiting_time_exact_pl(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                                        const WaitingTimeQuery& query);

// Dispatch on query.mode.
WaitingTimeResult waiting_time(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                               const WaitingTimeQuery& query);

// Theorem 1 ladder: slope of mean log W_l against l, to compare with
// Lambda*(theta).
struct LadderConfig {
    std::vector<double> l_list;
    int replicates = 0;
    double horizon_c = 50.0;                 // T_max = C exp(l rate_hat)
    double horizon_cap = 1e18;               // user cap fallback
    std::variant<GridMode, ExactPLMode> mode = ExactPLMode{};
    int workers = 1;
};

struct LadderRow {
    double l;
    int replicate;
    WaitStatus status;
    double w;
    double log_w; // log(max(w, 1)), uncensored rows only
};

struct LadderSummary {
    double l;
    double mean_log_w;
    double se;
    int n_censored;
    int n_total;
};

struct LadderResult {
    std::vector<LadderRow> rows;
    std::vector<LadderSummary> summary;
    double slope = 0.0;
    double intercept = 0.0;
    double rate_reference = 0.0; // analytic Lambda*(theta)
    bool slope_valid = false;
    std::vector<std::string> warnings;
};

LadderResult ladder_experiment(const ProcessModel& x_model, const ProcessModel& y_model,
                               const ScoreFn& f, const std::vector<double>& theta,
                               const LadderConfig& config, RngSeed seed);

} // namespace ppmatch
