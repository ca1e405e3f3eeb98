#pragma once

#include "l2c/types.hpp"

namespace l2c {

/// 1/2 |x - x_ref|_Q^2 + 1/2 |u - u_ref|_R^2 per stage, 1/2 |x_N - x_ref_N|_QN^2 at the end.
struct QuadraticCost {
  Vector q;    // diagonal of Q
  Vector r;    // diagonal of R
  Vector qN;   // diagonal of Q_N
  VectorSeq x_ref;  // N+1
  VectorSeq u_ref;  // N

  int horizon() const { return static_cast<int>(u_ref.size()); }
  double stage(int k, const Vector& x, const Vector& u) const;
  double terminal(const Vector& x) const;
  double total(const Trajectory& t) const;
  void validate(int n, int m) const;

  /// Constant references over N steps.
  static QuadraticCost tracking(const Vector& q, const Vector& r, const Vector& qN,
                                const Vector& x_ref, const Vector& u_ref, int N);
};

/// Offsets of an agent's cost weights and penalty inside theta; -1 means "not learned".
struct CostBinding {
  int q = -1;
  int r = -1;
  int qN = -1;
  int rho = -1;
};

}  // namespace l2c
