#pragma once

#include "qlbdf/bdf_core.hpp"
#include "qlbdf/grid.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qlbdf {

enum class Variant { fully_implicit, linearly_implicit };

inline std::string to_string(Variant v) {
    return v == Variant::fully_implicit ? "fully" : "linear";
}

/// Trajectory on the uniform partition t_n = n tau. When a run keeps only every
/// `stride`-th state, states[m] holds u_{m * stride} and times[m] its time.
struct SolutionHistory {
    Grid grid = Grid::unit_interval(1);
    BdfScheme scheme;
    Variant variant = Variant::linearly_implicit;
    double tau = 0.0;
    std::size_t steps = 0;  // N
    std::size_t stride = 1;
    std::vector<double> times;
    std::vector<StateVector> states;

    bool has_step(std::size_t n) const noexcept { return n % stride == 0 && n / stride < states.size(); }
    const StateVector& at_step(std::size_t n) const { return states.at(n / stride); }
};

}  // namespace qlbdf
