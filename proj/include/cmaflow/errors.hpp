#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmaflow/vec.hpp"

namespace cmaflow {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& msg)
        : Error(msg), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Cholesky failure on a matrix that must lie in the PD cone.
class NotPlurisubharmonic : public Error {
public:
    NotPlurisubharmonic(const std::string& msg, double min_eig_estimate)
        : Error(msg), min_eig_(min_eig_estimate) {}
    NotPlurisubharmonic(const std::string& msg, double min_eig_estimate, const Vec& point)
        : Error(msg + " at " + to_string(point)), min_eig_(min_eig_estimate), point_(point),
          has_point_(true) {}
    double min_eig_estimate() const { return min_eig_; }
    bool has_point() const { return has_point_; }
    const Vec& point() const { return point_; }

private:
    double min_eig_;
    Vec point_{};
    bool has_point_ = false;
};

class DomainNotPseudoconvex : public Error {
public:
    DomainNotPseudoconvex(const Vec& point, double min_eig)
        : Error("defining function is not strictly plurisubharmonic at " + to_string(point) +
                " (min complex-Hessian eigenvalue " + std::to_string(min_eig) + ")"),
          point_(point), min_eig_(min_eig) {}
    const Vec& point() const { return point_; }
    double min_eig() const { return min_eig_; }

private:
    Vec point_;
    double min_eig_;
};

class GridBudgetExceeded : public Error {
public:
    GridBudgetExceeded(std::int64_t required, std::int64_t budget)
        : Error("grid requires " + std::to_string(required) + " lattice points, budget is " +
                std::to_string(budget) + "; raise the budget to at least " +
                std::to_string(required)),
          required_(required), budget_(budget) {}
    std::int64_t required() const { return required_; }
    std::int64_t budget() const { return budget_; }

private:
    std::int64_t required_, budget_;
};

class ProjectionStall : public Error {
public:
    ProjectionStall(const Vec& last_iterate, double residual)
        : Error("boundary projection did not converge; last iterate " + to_string(last_iterate) +
                ", residual " + std::to_string(residual)),
          last_(last_iterate) {}
    const Vec& last_iterate() const { return last_; }

private:
    Vec last_;
};

class DomainTooTight : public Error {
public:
    using Error::Error;
};

class RampInfeasible : public Error {
public:
    using Error::Error;
};

class SubsolutionInfeasible : public Error {
public:
    SubsolutionInfeasible(const std::string& which, const Vec& point, double t)
        : Error("subsolution search exhausted its doubling budget; failing inequality: " + which +
                " at " + to_string(point) + ", t=" + std::to_string(t)),
          which_(which), point_(point), t_(t) {}
    const std::string& which() const { return which_; }
    const Vec& point() const { return point_; }
    double time() const { return t_; }

private:
    std::string which_;
    Vec point_;
    double t_;
};

class SolverStall : public Error {
public:
    SolverStall(const std::string& msg, std::vector<double> residual_history)
        : Error(msg), history_(std::move(residual_history)) {}
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

class WindowEmpty : public Error {
public:
    using Error::Error;
};

class CollarEmpty : public Error {
public:
    using Error::Error;
};

class NotRadial : public Error {
public:
    using Error::Error;
};

class PremiseViolated : public Error {
public:
    PremiseViolated(const std::string& side, const Vec& point, double t, double defect)
        : Error(side + " premise fails at " + to_string(point) + ", t=" + std::to_string(t) +
                " (defect " + std::to_string(defect) + ")"),
          side_(side), point_(point), t_(t), defect_(defect) {}
    const std::string& side() const { return side_; }
    const Vec& point() const { return point_; }
    double time() const { return t_; }
    double defect() const { return defect_; }

private:
    std::string side_;
    Vec point_;
    double t_;
    double defect_;
};

}  // namespace cmaflow
