#include <cmath>
#include <sstream>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/picard/picard.hpp"

namespace mkvlab {
namespace {

double inv(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

std::string show(double x) {
  if (std::isinf(x)) return "inf";
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

std::string ExponentParams::inequality() const {
  std::ostringstream os;
  os << "class D needs 1/k - 1/d < 1/p; for d=" << d << ", p=" << show(p) << ", k=" << show(k) << ": 1/k - 1/d = "
     << show(inv(k) - 1.0 / d) << (in_class_D ? " < " : " >= ") << "1/p = " << show(inv(p));
  return os.str();
}

ExponentParams class_d_check(int d, double p, double k) {
  if (d < 1 || d > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
  if (std::isnan(p) || std::isnan(k)) throw ParameterError("exponents p and k must be numbers");
  if (!(k >= 1.0)) throw ParameterError("exponent k must be >= 1 (got " + show(k) + ")");
  if (!(p >= k)) throw ParameterError("exponents must satisfy k <= p (got p=" + show(p) + ", k=" + show(k) + ")");
  ExponentParams e;
  e.d = d;
  e.p = p;
  e.k = k;
  if (std::isinf(p))
    e.decay_exponent = std::isinf(k) ? 0.0 : d / (2.0 * k);
  else
    e.decay_exponent = d * (inv(k) - inv(p)) / 2.0;
  e.theta = 0.5 - e.decay_exponent;
  // Strict, with slack so that boundary triples such as (3, 3, 1.5) stay out under rounding.
  e.in_class_D = inv(k) - 1.0 / d < inv(p) - 1e-12;
  return e;
}

double tau_n(double gamma_pstar_norm, int n, const ExponentParams& exponents, double beta0, bool b0_present) {
  if (std::isinf(exponents.p) || !b0_present) return double(n);
  if (!(exponents.theta > 0.0))
    throw ParameterError("theta = " + show(exponents.theta) + " is not positive; the horizon formula is inadmissible");
  if (!(gamma_pstar_norm > 0.0)) throw ParameterError("the initial p*-norm must be positive");
  if (!(beta0 > 0.0)) throw ParameterError("beta0 must be positive");
  return beta0 * std::pow(gamma_pstar_norm, -1.0 / exponents.theta);
}

}  // namespace mkvlab
