#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pmmap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Names the violated inequality and the grid point where it first failed.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(std::string constraint, double x, double theta, const std::string& detail)
      : Error("admissibility violated: " + constraint + " at (x=" + std::to_string(x) +
              ", theta=" + std::to_string(theta) + "): " + detail),
        constraint_(std::move(constraint)), x_(x), theta_(theta) {}
  const std::string& constraint() const noexcept { return constraint_; }
  double x() const noexcept { return x_; }
  double theta() const noexcept { return theta_; }

 private:
  std::string constraint_;
  double x_, theta_;
};

class BranchBoundaryError : public Error {
 public:
  using Error::Error;
};

class RootBracketError : public Error {
 public:
  using Error::Error;
};

class NotInYError : public Error {
 public:
  using Error::Error;
};

class ReturnOverflowError : public Error {
 public:
  explicit ReturnOverflowError(std::int64_t cap)
      : Error("first return exceeded cap of " + std::to_string(cap) + " steps"), cap_(cap) {}
  std::int64_t cap() const noexcept { return cap_; }

 private:
  std::int64_t cap_;
};

class ExcursionOverflowError : public Error {
 public:
  explicit ExcursionOverflowError(std::int64_t cap)
      : Error("excursion exceeded cap of " + std::to_string(cap) + " F-steps"), cap_(cap) {}
  std::int64_t cap() const noexcept { return cap_; }

 private:
  std::int64_t cap_;
};

class PhiUnavailable : public Error {
 public:
  PhiUnavailable() : Error("operator carries no return-time data; build it with build_ulam_F") {}
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual)
      : Error(what + " did not converge (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IVZeroError : public Error {
 public:
  IVZeroError() : Error("observable has zero theta-average at x=0; stable limit hypothesis fails") {}
};

class WindowTooNoisy : public Error {
 public:
  WindowTooNoisy(std::int64_t n, double value, double stderr_)
      : Error("|rho(" + std::to_string(n) + ")| = " + std::to_string(value) +
              " is within 3 standard errors (" + std::to_string(stderr_) + ") of zero"),
        n_(n) {}
  std::int64_t n() const noexcept { return n_; }

 private:
  std::int64_t n_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : Error(key.empty() ? msg : "config key '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace pmmap
