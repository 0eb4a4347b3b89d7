#pragma once

// Cached tree message passing over PlanFactors (library internal).

#include <vector>

#include "mgw/sinkhorn.hpp"

namespace mgw::detail {

/// out[b] = log sum_a exp(E(a,b) + v[a])
Vector lse_cols(const Matrix& E, const Vector& v);
/// out[a] = log sum_b exp(E(a,b) + v[b])
Vector lse_rows(const Matrix& E, const Vector& v);
/// Same contractions through exp(E) with a 1e-300 floor.
Vector linear_cols(const Matrix& E, const Vector& v);
Vector linear_rows(const Matrix& E, const Vector& v);

/// Log-sum-exp of a vector; -inf for an empty or all -inf input.
double lse(const Vector& v);

/// Log-domain contraction through a cached, rescaled kernel
/// K(a,b) = exp(E(a,b) + v0[a] - c[b]); the cache is rebuilt once the
/// incoming weights move more than `kMaxShift` from v0.
class AbsorbedKernel {
 public:
  static constexpr double kMaxShift = 20.0;

  /// out[b] = log sum_a exp(E(a,b) + v[a]); `transpose` swaps the roles of a and b.
  Vector apply(const Matrix& E, const Vector& v, bool transpose);
  int rebuilds() const { return rebuilds_; }

 private:
  bool stale(const Vector& v) const;
  void rebuild(const Matrix& E, const Vector& v, bool transpose);

  Vector v0_, c_;
  Matrix k_;  // stored with the contracted index along rows
  int rebuilds_ = 0;
};

class Messages {
 public:
  /// `absorb` routes log-domain messages through AbsorbedKernel caches,
  /// which pays off when the same plan is swept many times.
  explicit Messages(const PlanFactors& plan, bool absorb = false);

  /// log message from `from` to its neighbour `to`.
  const Vector& message(int from, int to);

  /// f/eps + base + incoming messages except the one from `exclude` (-1: none).
  Vector node_log_weight(int node, int exclude);
  /// base + all incoming messages (no potential).
  Vector log_scaling(int node);
  Vector log_marginal(int node) { return node_log_weight(node, -1); }

  /// Drops every cached message that depends on `node`'s potential.
  void invalidate_from(int node);

 private:
  int slot(int from, int to, int& edge) const;

  const PlanFactors& plan_;
  std::vector<Vector> msg_;
  std::vector<char> valid_;
  bool absorb_;
  std::vector<AbsorbedKernel> kernels_;
};

}  // namespace mgw::detail
