#pragma once

#include <stdexcept>
#include <string>

namespace convex_tail {

/// Raised when a tail event {Y > s} (or {Y >= s}) has probability zero.
class empty_tail : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to converge or to bracket a root.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class divergent_integral : public numerical_error {
public:
    using numerical_error::numerical_error;
};

/// A mathematical hypothesis required by a bound failed its numerical probe.
/// Carries both sides of the violated inequality so callers can report them.
class hypothesis_error : public std::runtime_error {
public:
    hypothesis_error(const std::string& what, double lhs, double rhs)
        : std::runtime_error(what), lhs_(lhs), rhs_(rhs) {}

    double lhs() const noexcept { return lhs_; }
    double rhs() const noexcept { return rhs_; }

private:
    double lhs_;
    double rhs_;
};

/// Malformed distribution spec strings and input files.
class spec_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace convex_tail
