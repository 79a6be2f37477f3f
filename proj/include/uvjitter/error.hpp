#pragma once

#include <stdexcept>
#include <string>

namespace uvjitter {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad config value, negative sd, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Geometry left its valid domain, e.g. a jittered elevation outside (0, pi/2).
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, double det)
        : Error(what), det_(det) {}
    double determinant() const noexcept { return det_; }

private:
    double det_;
};

/// The received-power surface is not smooth inside the finite-difference
/// stencil (empty common volume or invalid geometry at a stencil point).
class NonSmoothPointError : public Error {
public:
    using Error::Error;
};

/// The quadratic model cannot be put in shifted form (singular Hessian).
class DegenerateFormError : public Error {
public:
    using Error::Error;
};

} // namespace uvjitter
