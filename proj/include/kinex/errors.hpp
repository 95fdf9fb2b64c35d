#pragma once

#include <stdexcept>
#include <string>

namespace kinex {

// An iterative solver ran out of its iteration budget.
struct convergence_error : std::runtime_error {
    explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A time integrator was asked to take an inadmissible step (CFL violation,
// candidate budget exceeded, and the like).
struct step_error : std::runtime_error {
    explicit step_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kinex
