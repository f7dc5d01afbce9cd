#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace elab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Input outside the domain of a formula (log of a non-positive number, infeasible energy, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid parameters detected before any computation starts.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite state during time integration.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

}  // namespace elab
