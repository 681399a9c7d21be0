#pragma once

#include <cstddef>
#include <vector>

#include "hydrocla/network.hpp"
#include "hydrocla/numerics.hpp"
#include "hydrocla/topology.hpp"

namespace hydrocla {

inline constexpr double kHazenWilliamsExponent = 1.852;
inline constexpr double kHazenWilliamsConstant = 10.67;
inline constexpr double kHazenWilliamsDiameterExponent = 4.8704;
/// Flow below which |q|^(s-1) is frozen, m^3/s.
inline constexpr double kDefaultFlowEpsilon = 1e-6;

/// k = 10.67 L / (C^1.852 D^4.8704), SI.
double hazen_williams_k(const Pipe& pipe);

/// h = k |q|^(s-1) q, positive along the pipe's stored direction.
double pipe_head_loss(const Pipe& pipe, double q);

/// s k |q|^(s-1), with |q| floored at epsilon.
double head_loss_derivative(const Pipe& pipe, double q, double epsilon = kDefaultFlowEpsilon);

/// A - B (1000 q)^C, or A - C (1000 q)^2 for the quadratic form. q is clamped
/// at zero so reverse flow sees the shutoff head.
double pump_head_gain(const Pump& pump, double q, PumpCurve curve = PumpCurve::power);

/// d(-gain)/dq >= 0. Evaluated at max(q, epsilon); never exactly zero so a
/// flat curve still leaves the loop Jacobian invertible.
double pump_gain_derivative(const Pump& pump, double q, double epsilon = kDefaultFlowEpsilon,
                            PumpCurve curve = PumpCurve::power);

/// Per-link head-loss laws of a network, indexed by link index.
/// Head changes are losses in the link's stored direction; a pump contributes
/// minus its gain.
class LinkHydraulics {
 public:
  explicit LinkHydraulics(const Network& net, double epsilon = kDefaultFlowEpsilon);

  std::size_t link_count() const noexcept { return kinds_.size(); }
  LinkKind kind(std::size_t link) const { return kinds_[link]; }
  /// Hazen-Williams k for pipes, 0 for pumps.
  double resistance(std::size_t link) const { return k_[link]; }
  double epsilon() const noexcept { return epsilon_; }
  double exponent() const noexcept { return kHazenWilliamsExponent; }
  PumpCurve pump_curve() const noexcept { return curve_; }

  double head_change(std::size_t link, double q) const;
  double derivative(std::size_t link, double q) const;

  /// Vectorised over a network-order flow vector.
  DenseVector head_changes(const DenseVector& flows) const;
  DenseVector derivatives(const DenseVector& flows) const;

 private:
  std::vector<LinkKind> kinds_;
  std::vector<double> k_;
  std::vector<Pump> pumps_;  // indexed like links; unused for pipes
  PumpCurve curve_;
  double epsilon_;
};

/// Right-hand side of the loop energy equations: zero for physical loops,
/// H_fixed - H_root for each pseudo-loop. `fixed_heads` is in file order.
DenseVector loop_head_targets(const Network& net, const TreeDecomposition& dec,
                              const DenseVector& fixed_heads);

/// Loop residuals for network-order flows. Physical rows sum the signed head
/// changes around the loop. Pseudo-loop rows sum them along the tree path from
/// the fixed-head node to the root and subtract H_fixed - H_root.
DenseVector loop_residuals(const Network& net, const TreeDecomposition& dec,
                           const LinkHydraulics& hyd, const DenseVector& flows,
                           const DenseVector& fixed_heads);

/// J = M diag(dh/dq) M^T, l x l, symmetric positive definite.
DenseMatrix loop_jacobian(const TreeDecomposition& dec, const LinkHydraulics& hyd,
                          const DenseVector& flows);

}  // namespace hydrocla
