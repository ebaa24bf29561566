#include "ppmatch/waiting.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

#include "ppmatch/parallel.hpp"
#include "ppmatch/stats.hpp"

namespace ppmatch {

const char* to_string(WaitStatus s) {
    switch (s) {
        case WaitStatus::Hit: return "hit";
        case WaitStatus::Censored: return "censored";
        case WaitStatus::EmptyTemplate: return "empty_template";
    }
    return "?";
}

void WaitingTimeQuery::validate(std::size_t f_dim) const {
    if (theta.size() != f_dim)
        throw std::invalid_argument("WaitingTimeQuery: theta dimension mismatch");
    for (double th : theta)
        if (!std::isfinite(th)) throw std::invalid_argument("WaitingTimeQuery: theta must be finite");
    if (!(l > 0.0)) throw std::invalid_argument("WaitingTimeQuery: l must be > 0");
    if (horizon < 0.0) throw std::invalid_argument("WaitingTimeQuery: horizon must be >= 0");
    if (const auto* g = std::get_if<GridMode>(&mode))
        if (!(g->step > 0.0)) throw std::invalid_argument("WaitingTimeQuery: step must be > 0");
}

namespace {

void require_origin_template(const PointSeq& tmpl, double l) {
    if (tmpl.window_start != 0.0)
        throw std::invalid_argument("waiting: template window must start at 0");
    if (std::fabs(tmpl.length() - l) > 1e-9 * std::max(1.0, l))
        throw std::invalid_argument("waiting: template window length must equal l");
}

} // namespace

WaitingTimeResult waiting_time_grid(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                                    const WaitingTimeQuery& query) {
    query.validate(f.dim());
    const auto* grid = std::get_if<GridMode>(&query.mode);
    if (!grid) throw UnsupportedMode("waiting_time_grid: query is not in grid mode");
    WaitingTimeResult res;
    res.horizon_used = query.horizon;
    if (tmpl.empty()) {
        res.status = WaitStatus::EmptyTemplate;
        return res;
    }
    require_origin_template(tmpl, query.l);

    const double l = query.l;
    const std::size_t n = f.dim();
    std::vector<double> lth(n);
    for (std::size_t k = 0; k < n; ++k) lth[k] = query.theta[k] * l;

    std::deque<Arrival> window;
    std::optional<Arrival> pending = data.next();
    std::vector<double> sums(n), fx(n);

    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * grid->step;
        if (t > query.horizon) {
            res.status = WaitStatus::Censored;
            return res;
        }
        while (!window.empty() && window.front().time < t) window.pop_front();
        while (pending && pending->time < t + l) {
            window.push_back(*pending);
            pending = data.next();
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (const Arrival& a : window) {
            if (a.time < t) continue;
            const double d = dist_to_sorted(a.time - t, tmpl.points);
            f.eval(d, fx);
            const double m = static_cast<double>(a.mark);
            for (std::size_t c = 0; c < n; ++c) sums[c] += m * fx[c];
        }
        ++res.evaluations;
        bool ok = true;
        for (std::size_t c = 0; c < n; ++c)
            if (!(sums[c] >= lth[c])) {
                ok = false;
                break;
            }
        if (ok) {
            res.status = WaitStatus::Hit;
            res.w = t;
            return res;
        }
    }
}

namespace {

// Table of u-locations where u -> f(d(u, S)) is non-affine, with the affine
// pieces between them and exact values at the breaks. u in [0, l].
struct BreakTable {
    std::vector<double> breaks;  // breaks[0] = 0, breaks.back() = l
    std::vector<double> slope;   // interval k spans (breaks[k], breaks[k+1])
    std::vector<double> icept;
    std::vector<double> v_at;    // f(d(breaks[j], S)) exactly

    std::size_t intervals() const { return slope.size(); }
    double above(std::size_t j) const { return slope[j] * breaks[j] + icept[j]; }
    double below(std::size_t j) const { return slope[j - 1] * breaks[j] + icept[j - 1]; }
    double at_interval(std::size_t k, double u) const { return slope[k] * u + icept[k]; }
};

BreakTable build_break_table(const PointSeq& tmpl, const ScoreComponent& f, double l) {
    const auto profile_opt = f.linear_profile();
    if (!profile_opt)
        throw UnsupportedMode("waiting_time_exact_pl: score function is not piecewise linear");
    const auto& profile = *profile_opt;
    const auto& xs = tmpl.points;
    const std::size_t n = xs.size();

    std::vector<double> knots; // finite positive profile boundaries in d-space
    for (const auto& seg : profile)
        if (seg.lo > 0.0 && std::isfinite(seg.lo)) knots.push_back(seg.lo);

    std::vector<double> cuts;
    cuts.reserve(2 * n + knots.size() * 2 * n);
    auto push_cut = [&](double u) {
        if (u > 0.0 && u < l) cuts.push_back(u);
    };
    for (std::size_t i = 0; i < n; ++i) {
        push_cut(xs[i]);
        if (i + 1 < n) push_cut(0.5 * (xs[i] + xs[i + 1]));
        const double cell_lo = i == 0 ? 0.0 : 0.5 * (xs[i - 1] + xs[i]);
        const double cell_hi = i + 1 == n ? l : 0.5 * (xs[i] + xs[i + 1]);
        for (double kn : knots) {
            const double left = xs[i] - kn;
            const double right = xs[i] + kn;
            if (left > cell_lo && left < cell_hi) push_cut(left);
            if (right > cell_lo && right < cell_hi) push_cut(right);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    BreakTable table;
    table.breaks.reserve(cuts.size() + 2);
    table.breaks.push_back(0.0);
    for (double c : cuts) table.breaks.push_back(c);
    table.breaks.push_back(l);

    const std::size_t intervals = table.breaks.size() - 1;
    table.slope.resize(intervals);
    table.icept.resize(intervals);
    for (std::size_t k = 0; k < intervals; ++k) {
        const double um = 0.5 * (table.breaks[k] + table.breaks[k + 1]);
        auto it = std::lower_bound(xs.begin(), xs.end(), um);
        double nearest = kInf;
        if (it != xs.end()) nearest = *it;
        if (it != xs.begin() && um - *(it - 1) < nearest - um) nearest = *(it - 1);
        const double sigma = um >= nearest ? 1.0 : -1.0;
        const double dm = std::fabs(um - nearest);
        const LinearSegment* seg = nullptr;
        for (const auto& s : profile)
            if (s.lo <= dm && dm < s.hi) {
                seg = &s;
                break;
            }
        if (!seg) seg = &profile.back();
        table.slope[k] = seg->slope * sigma;
        table.icept[k] = seg->intercept + seg->slope * (-sigma * nearest);
    }
    table.v_at.resize(table.breaks.size());
    for (std::size_t j = 0; j < table.breaks.size(); ++j)
        table.v_at[j] = f.eval(dist_to_sorted(table.breaks[j], xs));

    // drop interior breaks across which the affine form and value agree;
    // merged intervals share one form, closed when the next break is kept
    BreakTable pruned;
    pruned.breaks.push_back(table.breaks.front());
    pruned.v_at.push_back(table.v_at.front());
    for (std::size_t j = 1; j + 1 < table.breaks.size(); ++j) {
        const bool same = table.slope[j - 1] == table.slope[j] &&
                          table.icept[j - 1] == table.icept[j] &&
                          table.v_at[j] == table.at_interval(j, table.breaks[j]);
        if (same) continue;
        pruned.slope.push_back(table.slope[j - 1]);
        pruned.icept.push_back(table.icept[j - 1]);
        pruned.breaks.push_back(table.breaks[j]);
        pruned.v_at.push_back(table.v_at[j]);
    }
    pruned.slope.push_back(table.slope.back());
    pruned.icept.push_back(table.icept.back());
    pruned.breaks.push_back(table.breaks.back());
    pruned.v_at.push_back(table.v_at.back());
    return pruned;
}

struct ScanPoint {
    double y;
    double mark;
    std::size_t next_break;
};

struct ScanEvent {
    double t;
    std::uint64_t id;
    bool operator>(const ScanEvent& o) const { return t > o.t; }
};

} // namespace

WaitingTimeResult waiting_time_exact_pl(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                                        const WaitingTimeQuery& query) {
    query.validate(f.dim());
    if (!std::holds_alternative<ExactPLMode>(query.mode))
        throw UnsupportedMode("waiting_time_exact_pl: query is not in exact mode");
    if (!f.scalar())
        throw UnsupportedMode("waiting_time_exact_pl: scalar score function required");

    WaitingTimeResult res;
    res.horizon_used = query.horizon;
    if (tmpl.empty()) {
        res.status = WaitStatus::EmptyTemplate;
        return res;
    }
    require_origin_template(tmpl, query.l);

    const double l = query.l;
    const double thr = query.theta[0] * l;
    const ScoreComponent& comp = f.only();
    const BreakTable table = build_break_table(tmpl, comp, l);
    const std::size_t top_interval = table.intervals() - 1;

    // live points sit in a power-of-two ring indexed by sequential id
    std::vector<ScanPoint> ring(256);
    std::size_t mask = ring.size() - 1;
    std::uint64_t base_id = 0, next_id = 0;
    auto grow_ring = [&] {
        std::vector<ScanPoint> bigger(ring.size() * 2);
        const std::size_t new_mask = bigger.size() - 1;
        for (std::uint64_t id = base_id; id < next_id; ++id)
            bigger[id & new_mask] = ring[id & mask];
        ring.swap(bigger);
        mask = new_mask;
    };

    std::vector<ScanEvent> heap_storage;
    heap_storage.reserve(1024);
    std::priority_queue<ScanEvent, std::vector<ScanEvent>, std::greater<ScanEvent>> heap(
        std::greater<ScanEvent>{}, std::move(heap_storage));

    std::optional<Arrival> pending = data.next();

    // load points already inside [0, l) and do the exact t = 0 check
    double exact0 = 0.0;
    std::vector<ScanPoint> initial;
    while (pending && pending->time < l) {
        exact0 += static_cast<double>(pending->mark) *
                  comp.eval(dist_to_sorted(pending->time, tmpl.points));
        initial.push_back({pending->time, static_cast<double>(pending->mark), 0});
        pending = data.next();
    }
    if (exact0 >= thr || 0.0 >= thr) {
        res.status = WaitStatus::Hit;
        res.w = 0.0;
        res.boundary_hit = true;
        return res;
    }

    double state_u = 0.0; // unnormalized score sum at current time
    double state_b = 0.0; // its slope in t
    for (auto& p : initial) {
        if (p.y <= 0.0) continue; // exits at t = 0, already covered by the check above
        const auto it = std::lower_bound(table.breaks.begin(), table.breaks.end(), p.y);
        std::size_t idx = static_cast<std::size_t>(it - table.breaks.begin());
        p.next_break = idx - 1; // interval below / next lower break
        state_u += p.mark * table.at_interval(p.next_break, p.y);
        state_b -= p.mark * table.slope[p.next_break];
        if (next_id - base_id == ring.size()) grow_ring();
        heap.push({p.y - table.breaks[p.next_break], next_id});
        ring[next_id & mask] = p;
        ++next_id;
    }

    // points sitting exactly on a break at t = 0 can make the right-limit
    // state already meet the threshold even though the t = 0 value does not
    if (state_u >= thr) {
        res.status = WaitStatus::Hit;
        res.w = 0.0;
        res.boundary_hit = true;
        return res;
    }

    double t_cur = 0.0;
    std::uint64_t since_resync = 0;
    std::vector<std::uint64_t> moved;

    auto exact_here = [&](double t) {
        double s = 0.0;
        for (std::uint64_t id = base_id; id < next_id; ++id) {
            const ScanPoint& p = ring[id & mask];
            s += p.mark * table.at_interval(p.next_break, p.y - t);
        }
        return s;
    };

    // crossing inside (t_lo, t_hi], assuming state_u(t_lo) < thr and the
    // caller already established reachability
    auto solve_crossing = [&](double t_lo, double t_hi) -> std::optional<double> {
        double tx = t_lo + (thr - state_u) / state_b;
        if (!(tx <= t_hi)) return std::nullopt;
        for (int it = 0; it < 3; ++it) { // polish on the exact affine model
            const double err = thr - exact_here(tx);
            if (err == 0.0) break;
            tx += err / state_b;
        }
        if (tx < t_lo) tx = t_lo;
        for (int bump = 0; bump < 16 && exact_here(tx) < thr; ++bump)
            tx = std::nextafter(tx, kInf);
        if (tx > t_hi + 1e-12 * std::max(1.0, t_hi)) return std::nullopt;
        return tx;
    };

    while (true) {
        const double t_break = heap.empty() ? kInf : heap.top().t;
        const double t_entry = pending ? pending->time - l : kInf;
        const double t_next = std::min(t_break, t_entry);
        const double t_reach = std::min(t_next, query.horizon);

        // interior crossing before the next event (or the horizon)
        if (state_b > 0.0 && state_u + state_b * (t_reach - t_cur) >= thr) {
            if (auto tx = solve_crossing(t_cur, t_reach)) {
                res.status = WaitStatus::Hit;
                res.w = *tx;
                res.boundary_hit = false;
                return res;
            }
        }
        if (t_next > query.horizon) {
            res.status = WaitStatus::Censored;
            return res;
        }

        // advance the affine state to t_next
        state_u += state_b * (t_next - t_cur);
        t_cur = t_next;

        // phase 1: break events at t_cur (value at the instant, then transition)
        if (t_break == t_cur) {
            double at_delta = 0.0, post_delta = 0.0, slope_delta = 0.0;
            moved.clear();
            while (!heap.empty() && heap.top().t == t_cur) {
                const std::uint64_t id = heap.top().id;
                heap.pop();
                ++res.evaluations;
                ScanPoint& p = ring[id & mask];
                const std::size_t j = p.next_break;
                at_delta += p.mark * (table.v_at[j] - table.above(j));
                if (j > 0) {
                    post_delta += p.mark * (table.below(j) - table.above(j));
                    slope_delta += p.mark * (table.slope[j] - table.slope[j - 1]);
                } else {
                    post_delta += p.mark * (0.0 - table.above(j));
                    slope_delta += p.mark * table.slope[j];
                }
                moved.push_back(id);
            }
            if (state_u + at_delta >= thr) {
                res.status = WaitStatus::Hit;
                res.w = t_cur;
                res.boundary_hit = true;
                return res;
            }
            state_u += post_delta;
            state_b += slope_delta;
            for (std::uint64_t id : moved) {
                ScanPoint& p = ring[id & mask];
                if (p.next_break == 0) continue; // exits handled below
                --p.next_break;
                heap.push({p.y - table.breaks[p.next_break], id});
            }
            // retire exited points (window is FIFO in y)
            while (base_id < next_id) {
                const ScanPoint& front = ring[base_id & mask];
                if (front.y <= t_cur && front.next_break == 0)
                    ++base_id;
                else
                    break;
            }
        }

        // phase 2: window entries at t_cur (they count only for t > t_cur)
        while (pending && pending->time - l == t_cur) {
            const double m = static_cast<double>(pending->mark);
            ScanPoint p{pending->time, m, top_interval};
            state_u += m * table.at_interval(top_interval, l);
            state_b -= m * table.slope[top_interval];
            if (next_id - base_id == ring.size()) grow_ring();
            heap.push({p.y - table.breaks[top_interval], next_id});
            ring[next_id & mask] = p;
            ++next_id;
            pending = data.next();
            ++res.evaluations;
        }

        // upward jumps at the event make every t just after t_cur a hit
        if (state_u >= thr) {
            res.status = WaitStatus::Hit;
            res.w = t_cur;
            res.boundary_hit = true;
            return res;
        }

        if (++since_resync >= 8192) { // bound floating-point drift
            since_resync = 0;
            state_u = exact_here(t_cur);
            double b = 0.0;
            for (std::uint64_t id = base_id; id < next_id; ++id) {
                const ScanPoint& p = ring[id & mask];
                b -= p.mark * table.slope[p.next_break];
            }
            state_b = b;
        }
    }
}

WaitingTimeResult waiting_time(const PointSeq& tmpl, ArrivalStream& data, const ScoreFn& f,
                               const WaitingTimeQuery& query) {
    if (std::holds_alternative<GridMode>(query.mode))
        return waiting_time_grid(tmpl, data, f, query);
    return waiting_time_exact_pl(tmpl, data, f, query);
}

LadderResult ladder_experiment(const ProcessModel& x_model, const ProcessModel& y_model,
                               const ScoreFn& f, const std::vector<double>& theta,
                               const LadderConfig& config, RngSeed seed) {
    if (config.replicates < 0) throw std::invalid_argument("ladder: replicates must be >= 0");
    if (config.l_list.empty()) throw std::invalid_argument("ladder: l_list must not be empty");
    for (std::size_t i = 1; i < config.l_list.size(); ++i)
        if (!(config.l_list[i] > config.l_list[i - 1]))
            throw std::invalid_argument("ladder: l_list must be ascending");

    LadderResult out;
    const RateModel model = RateModel::from_models(x_model, y_model, f, seed);

    // theta must exceed phi componentwise for a positive rate
    const std::vector<double> phi = model.phi();
    for (std::size_t k = 0; k < theta.size(); ++k)
        if (!(theta[k] > phi[k]))
            throw std::invalid_argument("ladder: theta must exceed phi componentwise");

    if (f.scalar()) {
        out.rate_reference = rate_star(model.scalar_cgf(), theta[0]).rate;
    } else {
        out.rate_reference = vector_rate(model.vector_cgf(), theta).rate;
    }

    const std::size_t jobs = config.l_list.size() * static_cast<std::size_t>(config.replicates);
    out.rows.resize(jobs);
    const MarkDist* marks = y_model.marks();
    const double lambda = y_model.density();

    parallel_for(jobs, config.workers, [&](std::size_t jid) {
        const std::size_t li = jid / static_cast<std::size_t>(config.replicates);
        const int rep = static_cast<int>(jid % static_cast<std::size_t>(config.replicates));
        const double l = config.l_list[li];

        const RngSeed tmpl_seed = seed.with_stream(seed.stream_index + 2 * jid + 1);
        const RngSeed data_seed = seed.with_stream(seed.stream_index + 2 * jid + 2);
        const PointSeq tmpl = sample_model(x_model, 0.0, l, tmpl_seed);

        // per-template horizon: C exp(l * rate_hat), from the empirical rate
        // when available, else the analytic reference
        double rate_hat = out.rate_reference;
        if (f.scalar() && !tmpl.empty()) {
            std::shared_ptr<const ScalarCgf> cgf =
                std::make_shared<EmpiricalCgf>(tmpl, lambda, f.only());
            if (marks) cgf = std::make_shared<CompoundCgf>(cgf, *marks);
            const LegendreResult r = rate_star(*cgf, theta[0]);
            if (r.status == SolveStatus::Converged) rate_hat = r.rate;
        }
        const double horizon =
            std::min(config.horizon_c * std::exp(l * rate_hat), config.horizon_cap);

        WaitingTimeQuery query;
        query.theta = theta;
        query.l = l;
        query.horizon = horizon;
        query.mode = config.mode;

        auto stream = make_stream(y_model, 0.0, data_seed);
        const WaitingTimeResult r = waiting_time(tmpl, *stream, f, query);

        LadderRow row;
        row.l = l;
        row.replicate = rep;
        row.status = r.status;
        row.w = r.status == WaitStatus::Hit ? r.w : 0.0;
        row.log_w = r.status == WaitStatus::Hit ? std::log(std::max(r.w, 1.0)) : 0.0;
        out.rows[jid] = row;
    });

    std::vector<double> fit_l, fit_mean;
    for (std::size_t li = 0; li < config.l_list.size(); ++li) {
        std::vector<double> logs;
        int censored = 0;
        for (int rep = 0; rep < config.replicates; ++rep) {
            const LadderRow& row = out.rows[li * config.replicates + rep];
            if (row.status == WaitStatus::Hit)
                logs.push_back(row.log_w);
            else
                ++censored;
        }
        const SummaryStats s = summarize(logs);
        out.summary.push_back({config.l_list[li], s.mean, s.stderr_mean, censored,
                               config.replicates});
        if (!logs.empty()) {
            fit_l.push_back(config.l_list[li]);
            fit_mean.push_back(s.mean);
        } else if (config.replicates > 0) {
            out.warnings.push_back("all replicates censored at l=" +
                                   format_double(config.l_list[li]) + "; excluded from slope fit");
        }
    }
    if (fit_l.size() >= 2) {
        const OlsFit fit = ols_fit(fit_l, fit_mean);
        out.slope = fit.slope;
        out.intercept = fit.intercept;
        out.slope_valid = true;
    } else if (config.replicates > 0) {
        out.warnings.push_back("slope fit skipped: fewer than two usable l values");
    }
    return out;
}

} // namespace ppmatch
