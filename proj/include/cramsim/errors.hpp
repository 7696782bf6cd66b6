#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cramsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical or numeric parameter is outside its domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Inconsistent experiment or gate configuration (arity, missing bindings, empty grids).
class ConfigError : public Error {
public:
    using Error::Error;
};

class ScheduleError : public Error {
public:
    using Error::Error;
};

/// Problem size exceeds what an exact method can represent.
class CapacityError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

}  // namespace cramsim
