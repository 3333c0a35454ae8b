#pragma once

#include <stdexcept>
#include <string>

namespace calabi {

// The flow left the space of Kahler potentials: some nodal eigenvalue of
// g_phi dropped to zero or below. Callers reject the offending step.
struct PositivityViolation : std::runtime_error {
    double margin;
    explicit PositivityViolation(double m)
        : std::runtime_error("potential is not Kahler (positivity margin " +
                             std::to_string(m) + " <= 0)"),
          margin(m) {}
};

// An iterative solver hit its iteration cap before reaching tolerance.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input data violates a compatibility requirement (e.g. a Poisson
// right-hand side with nonzero mean, or an empty sample set).
struct IncompatibleData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive step size underflowed.
struct StepCollapse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values appeared in the evolved state.
struct NanEncountered : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A trace does not cover the requested time span or record count.
struct InsufficientTrace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace calabi
