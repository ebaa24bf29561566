#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ppmatch {

// Identifies one reproducible random stream. (master_seed, stream_index)
// fully determines every draw; replicate i of an experiment uses
// stream_index = base + i so parallel and serial runs are identical.
struct RngSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    RngSeed with_stream(std::uint64_t s) const { return RngSeed{master_seed, s}; }
};

// Substream roles, salted into the stream selector so e.g. mark draws do
// not disturb point locations generated from the same RngSeed.
enum class RngRole : std::uint64_t {
    location = 1,
    mark = 2,
    thinning = 3,
    equilibrium = 4,
    generic = 5,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

// PCG XSL-RR 128/64. Distinct (seed, stream, role) triples select distinct
// state/increment pairs, giving statistically independent streams.
class Pcg64 {
public:
    Pcg64(RngSeed seed, RngRole role = RngRole::location) {
        std::uint64_t h = seed.master_seed;
        std::uint64_t s0 = detail::splitmix64(h);
        std::uint64_t s1 = detail::splitmix64(h);
        h ^= seed.stream_index * 0xda942042e4dd58b5ULL + static_cast<std::uint64_t>(role);
        std::uint64_t i0 = detail::splitmix64(h);
        std::uint64_t i1 = detail::splitmix64(h);
        const u128 state_seed = (u128{s0} << 64) | s1;
        const u128 inc_seed = (u128{i0} << 64) | i1;
        inc_ = (inc_seed << 1) | 1u; // increment must be odd
        state_ = 0;
        step();
        state_ += state_seed;
        step();
    }

    std::uint64_t next_u64() {
        step();
        const std::uint64_t xored = static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
        const unsigned rot = static_cast<unsigned>(state_ >> 122);
        return (xored >> rot) | (xored << (-rot & 63u));
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Exponential with the given rate; strictly positive.
    double exponential(double rate) {
        double u;
        do {
            u = uniform01();
        } while (u == 0.0);
        return -std::log(u) / rate;
    }

private:
    using u128 = unsigned __int128;
    static constexpr u128 mult_ = (u128{2549297995355413924ULL} << 64) | 4865540595714422341ULL;

    void step() { state_ = state_ * mult_ + inc_; }

    u128 state_ = 0;
    u128 inc_ = 0;
};

// Samples an index from a finite discrete distribution by inverted CDF.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const std::vector<double>& probabilities) {
        if (probabilities.empty()) throw std::invalid_argument("DiscreteSampler: empty support");
        double total = 0.0;
        cdf_.reserve(probabilities.size());
        for (double p : probabilities) {
            if (p < 0.0) throw std::invalid_argument("DiscreteSampler: negative probability");
            total += p;
            cdf_.push_back(total);
        }
        if (total <= 0.0) throw std::invalid_argument("DiscreteSampler: probabilities sum to zero");
        for (double& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    std::size_t sample(Pcg64& rng) const {
        const double u = rng.uniform01();
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cdf_[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

private:
    std::vector<double> cdf_;
};

} // namespace ppmatch
