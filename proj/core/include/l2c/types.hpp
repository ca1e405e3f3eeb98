#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace l2c {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorSeq = std::vector<Vector>;
using MatrixSeq = std::vector<Matrix>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, missing fields, inconsistent layouts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce an acceptable result.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered while rolling out dynamics.
class RolloutError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// No strictly feasible point for a static stage problem.
class InfeasibleError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// States x_0..x_N and controls u_0..u_{N-1}.
struct Trajectory {
  VectorSeq states;
  VectorSeq controls;

  int horizon() const { return static_cast<int>(controls.size()); }
  int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  int control_dim() const { return controls.empty() ? 0 : static_cast<int>(controls.front().size()); }

  static Trajectory zeros(int n, int m, int N);
  /// Throws ConfigError unless there are exactly N+1 states and N controls of uniform size.
  void validate() const;
};

inline Trajectory Trajectory::zeros(int n, int m, int N) {
  Trajectory t;
  t.states.assign(N + 1, Vector::Zero(n));
  t.controls.assign(N, Vector::Zero(m));
  return t;
}

inline void Trajectory::validate() const {
  if (states.size() != controls.size() + 1) {
    throw ConfigError("trajectory needs N+1 states for N controls");
  }
  for (const auto& x : states) {
    if (x.size() != states.front().size()) throw ConfigError("ragged state sequence");
  }
  for (const auto& u : controls) {
    if (u.size() != controls.front().size()) throw ConfigError("ragged control sequence");
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace l2c
