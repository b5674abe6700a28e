#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace specsplit {

/// Base class of every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad matrix files, invalid arguments, broken preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

/// The eigen-solver (or SVD) did not converge within its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Numerical abort: the requested quantity is not well defined at working
/// precision (contour touching the spectrum, ambiguous rank, eigenvalue on a
/// region boundary). Callers are expected to refine the geometry and retry.
class NumericalAbort : public Error {
public:
    using Error::Error;
};

class ContourTouchesSpectrum : public NumericalAbort {
public:
    ContourTouchesSpectrum(std::complex<double> z, double smallest_sv)
        : NumericalAbort("contour touches spectrum at z = (" + std::to_string(z.real()) + ", "
                         + std::to_string(z.imag()) + "), smallest singular value of z - T is "
                         + std::to_string(smallest_sv)),
          z_(z) {}

    std::complex<double> point() const noexcept { return z_; }

private:
    std::complex<double> z_;
};

class AmbiguousRank : public NumericalAbort {
public:
    using NumericalAbort::NumericalAbort;
};

class AmbiguousClassification : public NumericalAbort {
public:
    struct Offender {
        std::complex<double> eigenvalue;
        double boundary_distance;
    };

    AmbiguousClassification(std::string what, std::vector<Offender> offenders)
        : NumericalAbort(std::move(what)), offenders_(std::move(offenders)) {}

    const std::vector<Offender>& offenders() const noexcept { return offenders_; }

private:
    std::vector<Offender> offenders_;
};

/// A flag whose cumulative projections fail T-invariance.
class InvarianceViolation : public Error {
public:
    InvarianceViolation(std::size_t first_cut, double residual)
        : Error("flag projection q_" + std::to_string(first_cut) + " is not T-invariant (residual "
                + std::to_string(residual) + ")"),
          cut_(first_cut) {}

    std::size_t first_failing_cut() const noexcept { return cut_; }

private:
    std::size_t cut_;
};

} // namespace specsplit
