#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace ma3d {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A scalar field over the domain (right-hand sides, boundary data).
using ScalarField = std::function<double(const Vec3&)>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input or an inconsistent configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed mesh file; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class OutsideDomainError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Sign-preserving real cube root.
inline double realcbrt(double x) { return std::cbrt(x); }

} // namespace ma3d
