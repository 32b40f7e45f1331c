#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsmass {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-readable name written into reports ("error" key).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Bad user configuration or violated argument contract. Maps to exit code 2.
class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what)
      : Error("ConfigurationError", what) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what)
      : Error("ContractViolation", what) {}
};

class NonPositiveCurvature : public Error {
 public:
  explicit NonPositiveCurvature(const std::string& what)
      : Error("NonPositiveCurvature", what) {}
};

class NegativeCurvature : public Error {
 public:
  explicit NegativeCurvature(const std::string& what)
      : Error("NegativeCurvature", what) {}
};

class SolverDiverged : public Error {
 public:
  SolverDiverged(const std::string& what, std::vector<double> history)
      : Error("SolverDiverged", what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

class GaugeSolveFailed : public Error {
 public:
  explicit GaugeSolveFailed(const std::string& what)
      : Error("GaugeSolveFailed", what) {}
};

class PathCurvatureViolation : public Error {
 public:
  explicit PathCurvatureViolation(const std::string& what)
      : Error("PathCurvatureViolation", what) {}
};

class NonIntegrableZeta : public Error {
 public:
  explicit NonIntegrableZeta(const std::string& what)
      : Error("NonIntegrableZeta", what) {}
};

class InvalidReparameterization : public Error {
 public:
  explicit InvalidReparameterization(const std::string& what)
      : Error("InvalidReparameterization", what) {}
};

class StepSizeUnderflow : public Error {
 public:
  explicit StepSizeUnderflow(const std::string& what)
      : Error("StepSizeUnderflow", what) {}
};

class InsufficientTail : public Error {
 public:
  explicit InsufficientTail(const std::string& what)
      : Error("InsufficientTail", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("IoError", what) {}
};

}  // namespace qsmass
