#pragma once

#include <stdexcept>
#include <string>

namespace mcs {

// Base for all library errors; CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain: " + msg) {}
};

class InvalidGridError : public Error {
public:
    explicit InvalidGridError(const std::string& msg) : Error("grid: " + msg) {}
};

class SingularVolatilityError : public Error {
public:
    explicit SingularVolatilityError(double t, const std::string& msg)
        : Error("singular volatility at t=" + std::to_string(t) + ": " + msg), t_(t) {}
    double at_time() const { return t_; }

private:
    double t_;
};

class BreakpointError : public Error {
public:
    explicit BreakpointError(const std::string& msg) : Error("breakpoint: " + msg) {}
};

class PreferenceError : public Error {
public:
    explicit PreferenceError(const std::string& msg) : Error("preferences: " + msg) {}
};

class RuleError : public Error {
public:
    explicit RuleError(const std::string& msg) : Error("consumption rule: " + msg) {}
};

class NumericalBlowupError : public Error {
public:
    NumericalBlowupError(long path_id, const std::string& msg)
        : Error("numerical blowup on path " + std::to_string(path_id) + ": " + msg),
          path_id_(path_id) {}
    long path_id() const { return path_id_; }

private:
    long path_id_;
};

class NonlinearIterationError : public Error {
public:
    NonlinearIterationError(int time_step, double residual, const std::string& msg)
        : Error("nonlinear iteration failed at time step " + std::to_string(time_step) +
                " (residual " + std::to_string(residual) + "): " + msg),
          time_step_(time_step), residual_(residual) {}
    int time_step() const { return time_step_; }
    double residual() const { return residual_; }

private:
    int time_step_;
    double residual_;
};

class PositivityLossError : public Error {
public:
    explicit PositivityLossError(const std::string& msg) : Error("positivity loss: " + msg) {}
};

class DegenerateReturnError : public Error {
public:
    explicit DegenerateReturnError(const std::string& msg)
        : Error("degenerate return: " + msg) {}
};

class SpanningError : public Error {
public:
    explicit SpanningError(const std::string& msg) : Error("spanning: " + msg) {}
};

} // namespace mcs
