// error.hpp: exception types shared by every module

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinboson {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed model parameters. index() is the offending mode, or -1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg, int index = -1)
        : Error(msg), index_(index) {}
    int index() const noexcept { return index_; }

private:
    int index_;
};

// Raised when max_j g_j/omega_j >= 1 and the caller did not force the G-function path.
class ConvergenceGateError : public Error {
public:
    ConvergenceGateError(const std::string& msg, double max_ratio)
        : Error(msg), max_ratio_(max_ratio) {}
    double max_ratio() const noexcept { return max_ratio_; }

private:
    double max_ratio_;
};

class PoleProximity : public Error {
public:
    PoleProximity(double x, double pole, double guard)
        : Error("X = " + std::to_string(x) + " lies within " + std::to_string(guard) +
                " of the pole at " + std::to_string(pole)),
          x_(x), pole_(pole) {}
    double x() const noexcept { return x_; }
    double pole() const noexcept { return pole_; }

private:
    double x_;
    double pole_;
};

class RankDeficient : public Error {
public:
    explicit RankDeficient(int level)
        : Error("coefficient system at level " + std::to_string(level) +
                " is singular after adding tie constraints"),
          level_(level) {}
    int level() const noexcept { return level_; }

private:
    int level_;
};

class ResidualTooLarge : public Error {
public:
    ResidualTooLarge(int level, double residual)
        : Error("coefficient system at level " + std::to_string(level) +
                " has residual " + std::to_string(residual)),
          level_(level), residual_(residual) {}
    int level() const noexcept { return level_; }
    double residual() const noexcept { return residual_; }

private:
    int level_;
    double residual_;
};

class NotConverged : public Error {
public:
    NotConverged(double x, int max_level, double tail)
        : Error("G series not converged at X = " + std::to_string(x) + " after " +
                std::to_string(max_level) + " levels (tail " + std::to_string(tail) + ")"),
          x_(x), max_level_(max_level), tail_(tail) {}
    double x() const noexcept { return x_; }
    int max_level() const noexcept { return max_level_; }
    double tail() const noexcept { return tail_; }

private:
    double x_;
    int max_level_;
    double tail_;
};

class BracketInvalid : public Error {
public:
    using Error::Error;
};

class DimensionTooLarge : public Error {
public:
    DimensionTooLarge(std::size_t dim, std::size_t limit)
        : Error("Fock dimension " + std::to_string(dim) + " exceeds the limit " +
                std::to_string(limit)),
          dimension_(dim), limit_(limit) {}
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t dimension_;
    std::size_t limit_;
};

class EigenConvergenceError : public Error {
public:
    EigenConvergenceError(const std::string& msg, double residual)
        : Error(msg + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Configuration problems: unknown keys, wrong types, malformed ranges.
class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, std::string key = {})
        : Error(msg), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace spinboson
