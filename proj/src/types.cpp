#include "sdirac/types.hpp"

#include <string>

namespace sdirac {

void Params::validate() const {
  if (!(std::isfinite(m) && std::isfinite(omega)))
    throw DomainError("m and omega must be finite");
  if (!(omega > 0.0 && omega < m))
    throw DomainError("parameters must satisfy 0 < omega < m (got m=" + std::to_string(m) +
                      ", omega=" + std::to_string(omega) + ")");
}

Tolerances Tolerances::defaults(const Params& p) {
  Tolerances t;
  t.delta = 1e-8 * p.gap() * p.gap();
  t.rmax = 40.0 / p.gap();
  return t;
}

void Tolerances::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!(positive(rel) && positive(abs) && positive(r0) && positive(eta) && positive(delta) &&
        positive(rmax)))
    throw DomainError("tolerances must all be positive and finite");
  if (r0 >= 0.1) throw DomainError("Taylor-start radius r0 must be small (< 0.1)");
}

}  // namespace sdirac
