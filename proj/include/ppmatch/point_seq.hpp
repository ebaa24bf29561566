#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ppmatch {

// A sorted finite realization of a point process on [window_start, window_end),
// optionally carrying positive integer marks (one per point).
struct PointSeq {
    std::vector<double> points;
    double window_start = 0.0;
    double window_end = 0.0;
    std::vector<std::uint32_t> marks; // empty unless generated from a marked model

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
    double length() const { return window_end - window_start; }
    bool marked() const { return !marks.empty(); }

    // Invariants: strict ascent, window containment, mark length.
    void validate() const {
        if (window_start > window_end) throw std::invalid_argument("PointSeq: inverted window");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i] < window_start || points[i] >= window_end)
                throw std::invalid_argument("PointSeq: point outside window");
            if (i > 0 && points[i] <= points[i - 1])
                throw std::invalid_argument("PointSeq: points not strictly increasing");
        }
        if (!marks.empty() && marks.size() != points.size())
            throw std::invalid_argument("PointSeq: mark count mismatch");
        for (std::uint32_t m : marks)
            if (m == 0) throw std::invalid_argument("PointSeq: marks must be positive");
    }
};

} // namespace ppmatch
