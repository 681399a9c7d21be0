#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "hydrocla/cla.hpp"
#include "hydrocla/errors.hpp"

namespace hydrocla {

TTestResult paired_t_test(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw Error("paired_t_test: samples differ in size");
  if (a.size() < 2) throw Error("paired_t_test: needs at least two pairs");
  const DenseVector d = a - b;
  const auto n = static_cast<double>(d.size());
  TTestResult out;
  out.degrees_of_freedom = static_cast<std::size_t>(d.size() - 1);
  out.mean_difference = d.mean();
  const double var = (d.array() - out.mean_difference).square().sum() / (n - 1.0);
  const double se = std::sqrt(var / n);
  if (se == 0.0) {
    // Constant differences: no spread to test against.
    out.t = out.mean_difference == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(),
                                                              out.mean_difference);
    out.p_value = out.mean_difference == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = out.mean_difference / se;
  const boost::math::students_t dist(static_cast<double>(out.degrees_of_freedom));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

}  // namespace hydrocla
