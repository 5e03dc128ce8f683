#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace clebsch {

// Point outside the domain where a formula is defined (r = 0, alpha branch set, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Coordinate inversion (toroidal -> Cartesian) failed or the level set is not a torus there.
class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Jacobian below the trust threshold or singular metric.
class DegenerateCoordinatesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strict ellipticity violated at a grid node.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(const std::string& what, int i, int j, double mu, double nu)
      : std::runtime_error(what), node_mu(i), node_nu(j), mu(mu), nu(nu) {}
  int node_mu, node_nu;
  double mu, nu;
};

// Source term does not integrate to zero over the periodic cell.
class CompatibilityError : public std::runtime_error {
 public:
  CompatibilityError(const std::string& what, double mean)
      : std::runtime_error(what), mean(mean) {}
  double mean;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

// Evaluation requested outside the Psi-range covered by a field stack.
class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solve artifacts missing, unreadable, or written for a different configuration.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while solving one surface of a run; wraps the original message.
class SurfaceSolveError : public std::runtime_error {
 public:
  SurfaceSolveError(const std::string& what, int level, double psi)
      : std::runtime_error(what), level(level), psi(psi) {}
  int level;
  double psi;
};

}  // namespace clebsch
