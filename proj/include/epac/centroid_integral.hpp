#pragma once

#include <functional>
#include <span>

#include "epac/oracle.hpp"

namespace epac {

/// w(J) = (1/beta) log[ sqrt(m / 2 pi beta) * integral exp(-beta (V(q) - J q)) dq ]
/// for V(q) = sum_k a_k q^k, with its source derivatives w' = <q> and
/// w'' = beta Var(q) under the tilted centroid density. Adaptive
/// Gauss-Kronrod on the interval where the integrand exceeds e^-40 of its
/// peak. Throws IntegrandNotLocalized unless the polynomial confines.
TiltedResponse centroid_generating_function(std::span<const double> coeffs, double beta, double mass, double source);

/// Same for an arbitrary centroid potential. The global minimum of
/// V(q) - J q is searched on [lo, hi]; IntegrandNotLocalized if it sits on
/// the edge of that bracket or the integrand never decays.
TiltedResponse centroid_generating_function(const std::function<double(double)>& potential, double lo, double hi,
                                            double beta, double mass, double source);

}  // namespace epac
