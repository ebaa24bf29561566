#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "ppmatch/point_seq.hpp"
#include "ppmatch/process_model.hpp"
#include "ppmatch/rng.hpp"

namespace ppmatch {

struct UnsupportedModel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EnvelopeViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Arrival {
    double time;
    std::uint32_t mark = 1;
};

// Incremental arrival source so waiting-time scans can cover horizons of
// order e^{l Lambda*} without materializing points. Single consumer.
class ArrivalStream {
public:
    virtual ~ArrivalStream() = default;
    // Next arrival, strictly after all previous ones. Unbounded sources
    // always return a value; replays return nullopt when exhausted.
    virtual std::optional<Arrival> next() = 0;
};

// Stream for any ProcessModel, starting at `start`.
std::unique_ptr<ArrivalStream> make_stream(const ProcessModel& model, double start, RngSeed seed);

// Replays a materialized PointSeq (points >= from).
std::unique_ptr<ArrivalStream> make_replay_stream(const PointSeq& seq, double from);

// Homogeneous Poisson on [a, b) via exponential gaps; the same construction
// backs the streaming source, so windowed and streaming draws agree
// bit-for-bit on a fixed seed.
PointSeq sample_poisson(double density, double window_start, double window_end, RngSeed seed);

// Locations exactly as sample_poisson on the same seed; marks i.i.d. from a
// separate substream.
PointSeq sample_marked_poisson(double density, const MarkDist& marks, double window_start,
                               double window_end, RngSeed seed);

// Equilibrium renewal: first point at a stationary-excess delay from the
// window start, then i.i.d. interarrival gaps.
PointSeq sample_equilibrium_renewal(const Interarrival& interarrival, double window_start,
                                    double window_end, RngSeed seed);

// Inhomogeneous Poisson via thinning of a homogeneous Poisson(intensity_bound)
// proposal. An observed intensity above the bound is a hard failure.
PointSeq sample_inhomogeneous(const std::function<double(double)>& intensity,
                              double intensity_bound, double window_start, double window_end,
                              RngSeed seed);

// Model sampler used by experiments.
PointSeq sample_model(const ProcessModel& model, double window_start, double window_end,
                      RngSeed seed);

} // namespace ppmatch
