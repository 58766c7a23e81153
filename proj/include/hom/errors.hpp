#pragma once

#include <stdexcept>
#include <string>

namespace hom {

/// Invalid physical parameters or malformed run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Physical parameter outside its admissible domain.
struct DomainError : ConfigError {
  using ConfigError::ConfigError;
};

/// A differenced parameter sits on its domain edge, where central
/// differences would step outside the domain.
struct BoundaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Likelihood carries no information about the requested parameter
/// (e.g. every recorded trial was a zero-click event).
struct FlatLikelihoodError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The Fisher information restricted to the requested parameters is
/// rank-deficient at the optimum: the joint request is not identifiable.
struct SingularInformationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Counts histogram does not match the configuration it is evaluated against.
struct IncompatibleConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical routine failed to reach its tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hom
