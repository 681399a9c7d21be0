#include "hydrocla/hydraulics.hpp"

#include <algorithm>
#include <cmath>

#include "hydrocla/errors.hpp"

namespace hydrocla {

namespace {

// Keeps a flat pump curve from contributing an exactly zero diagonal entry.
constexpr double kPumpDerivativeFloor = 1e-9;

}  // namespace

double hazen_williams_k(const Pipe& pipe) {
  return kHazenWilliamsConstant * pipe.length /
         (std::pow(pipe.chw, kHazenWilliamsExponent) *
          std::pow(pipe.diameter, kHazenWilliamsDiameterExponent));
}

double pipe_head_loss(const Pipe& pipe, double q) {
  return hazen_williams_k(pipe) * std::pow(std::abs(q), kHazenWilliamsExponent - 1.0) * q;
}

double head_loss_derivative(const Pipe& pipe, double q, double epsilon) {
  const double aq = std::max(std::abs(q), epsilon);
  return kHazenWilliamsExponent * hazen_williams_k(pipe) *
         std::pow(aq, kHazenWilliamsExponent - 1.0);
}

double pump_head_gain(const Pump& pump, double q, PumpCurve curve) {
  const double q_lps = std::max(q, 0.0) * kLitresPerCubicMetre;
  if (curve == PumpCurve::quadratic) return pump.a - pump.c * q_lps * q_lps;
  return pump.a - pump.b * std::pow(q_lps, pump.c);
}

double pump_gain_derivative(const Pump& pump, double q, double epsilon, PumpCurve curve) {
  const double qe = std::max(q, epsilon);
  double d = 0.0;
  if (curve == PumpCurve::quadratic) {
    d = 2.0 * pump.c * kLitresPerCubicMetre * kLitresPerCubicMetre * qe;
  } else {
    d = pump.b * pump.c * std::pow(kLitresPerCubicMetre, pump.c) * std::pow(qe, pump.c - 1.0);
  }
  return std::max(d, kPumpDerivativeFloor);
}

LinkHydraulics::LinkHydraulics(const Network& net, double epsilon)
    : curve_(net.pump_curve()), epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw Error("flow regularisation epsilon must be positive");
  const std::size_t p = net.link_count();
  kinds_.reserve(p);
  k_.reserve(p);
  pumps_.reserve(p);
  for (const Pipe& pipe : net.pipes()) {
    kinds_.push_back(LinkKind::pipe);
    k_.push_back(hazen_williams_k(pipe));
    pumps_.emplace_back();
  }
  for (const Pump& pump : net.pumps()) {
    kinds_.push_back(LinkKind::pump);
    k_.push_back(0.0);
    pumps_.push_back(pump);
  }
}

double LinkHydraulics::head_change(std::size_t link, double q) const {
  if (kinds_[link] == LinkKind::pump) return -pump_head_gain(pumps_[link], q, curve_);
  return k_[link] * std::pow(std::abs(q), kHazenWilliamsExponent - 1.0) * q;
}

double LinkHydraulics::derivative(std::size_t link, double q) const {
  if (kinds_[link] == LinkKind::pump) return pump_gain_derivative(pumps_[link], q, epsilon_, curve_);
  const double aq = std::max(std::abs(q), epsilon_);
  return kHazenWilliamsExponent * k_[link] * std::pow(aq, kHazenWilliamsExponent - 1.0);
}

DenseVector LinkHydraulics::head_changes(const DenseVector& flows) const {
  DenseVector h(flows.size());
  for (Eigen::Index e = 0; e < flows.size(); ++e) {
    h(e) = head_change(static_cast<std::size_t>(e), flows(e));
  }
  return h;
}

DenseVector LinkHydraulics::derivatives(const DenseVector& flows) const {
  DenseVector d(flows.size());
  for (Eigen::Index e = 0; e < flows.size(); ++e) {
    d(e) = derivative(static_cast<std::size_t>(e), flows(e));
  }
  return d;
}

DenseVector loop_head_targets(const Network& net, const TreeDecomposition& dec,
                              const DenseVector& fixed_heads) {
  DenseVector b = DenseVector::Zero(static_cast<Eigen::Index>(dec.loop_count()));
  const auto root_slot = net.fixed_head_slot(dec.root);
  const double h_root = fixed_heads(static_cast<Eigen::Index>(*root_slot));
  for (std::size_t k = 0; k < dec.pseudo_loops.size(); ++k) {
    b(static_cast<Eigen::Index>(dec.physical_loop_count() + k)) =
        fixed_heads(static_cast<Eigen::Index>(dec.pseudo_loops[k])) - h_root;
  }
  return b;
}

DenseVector loop_residuals(const Network& net, const TreeDecomposition& dec,
                           const LinkHydraulics& hyd, const DenseVector& flows,
                           const DenseVector& fixed_heads) {
  const DenseVector h = dec.to_decomposition_links(hyd.head_changes(flows));
  return dec.loop_incidence * h - loop_head_targets(net, dec, fixed_heads);
}

DenseMatrix loop_jacobian(const TreeDecomposition& dec, const LinkHydraulics& hyd,
                          const DenseVector& flows) {
  const DenseVector a = dec.to_decomposition_links(hyd.derivatives(flows));
  return dec.loop_incidence * a.asDiagonal() * dec.loop_incidence.transpose();
}

}  // namespace hydrocla
