#pragma once

#if defined(__clang__)
#define CMCSLAB_NOINLINE [[gnu::noinline]]
#elif defined(__GNUC__)
#define CMCSLAB_NOINLINE [[gnu::noipa]]
#else
#define CMCSLAB_NOINLINE
#endif

#include <stdexcept>
#include <string>

namespace cmcslab {

// Precondition violations raise std::domain_error / std::invalid_argument.
// Everything below is a failure of a numerical procedure on valid input.

class numerical_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigen or linear solver could not meet its residual contract.
class solver_failure : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

/// Profile integration reached the rotation axis (r -> 0, or r -> pi on the sphere).
class axis_crossing : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

/// Adaptive step size collapsed away from the axis.
class stiffness_failure : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

/// An orbit of zero radius inside the parameter interval.
class degenerate_orbit : public numerical_failure {
public:
    using numerical_failure::numerical_failure;
};

/// Shooting bracket contains no sign change of the residual.
class no_solution : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cmcslab
