#pragma once

#include <stdexcept>
#include <string>

namespace plab {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Index below the equation's start offset, window outside a stored range, ...
class RangeError : public Error {
public:
    using Error::Error;
};

// a_0(nu) = 0 where an inverse step was required.
class NonInvertibleStepError : public Error {
public:
    explicit NonInvertibleStepError(long nu)
        : Error("a_0 vanishes at nu=" + std::to_string(nu) +
                ", backward step undefined"),
          nu_(nu) {}
    long nu() const { return nu_; }

private:
    long nu_ = 0;
};

// Eigen/Jordan transform condition number above the configured gate.
class IllConditionedStructureError : public Error {
public:
    IllConditionedStructureError(double cond, double gate)
        : Error("similarity transform condition " + std::to_string(cond) +
                " exceeds gate " + std::to_string(gate)),
          cond_(cond) {}
    double condition() const { return cond_; }

private:
    double cond_ = 0;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

// Precondition ||A^{-1}||_sp^{-1} > sign(k-1) eps failed.
class EnvelopeGapError : public Error {
public:
    using Error::Error;
};

// Right division left a remainder above tolerance.
class InexactDivisionError : public Error {
public:
    InexactDivisionError(double residual, double tol)
        : Error("right division residual " + std::to_string(residual) +
                " above tolerance " + std::to_string(tol)),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_ = 0;
};

class CasoratianDegenerateError : public Error {
public:
    CasoratianDegenerateError(long nu, double cond)
        : Error("Casorati matrix degenerate at nu=" + std::to_string(nu) +
                " (condition " + std::to_string(cond) + ")"),
          nu_(nu) {}
    long nu() const { return nu_; }

private:
    long nu_ = 0;
};

// Subspace iteration did not reach the requested angle threshold.
class NonConvergedError : public Error {
public:
    NonConvergedError(const std::string& what, double angle)
        : Error(what + " (residual angle " + std::to_string(angle) + ")"),
          angle_(angle) {}
    double angle() const { return angle_; }

private:
    double angle_ = 0;
};

// Lower-envelope fit against an identically zero series.
class DegenerateSeriesError : public Error {
public:
    using Error::Error;
};

// Requested subspace is not transversal to the next filtration level.
class InvalidSubspaceError : public Error {
public:
    using Error::Error;
};

// Operator lacks a declared limit / wrong class flags for the operation.
class ClassError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

}  // namespace plab
