#pragma once

#include <span>
#include <string_view>
#include <vector>

// Data-parallel inner loops. Every kernel has a scalar reference version;
// vector versions are compiled per ISA and chosen once at startup. Set
// EPAC_SIMD=scalar (or avx2, neon) to force a particular table.

namespace epac::kernels {

struct PotentialSums {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

/// For polynomial coefficients c (c[0] + c[1] q + ...): writes V'(q_k) into
/// `slope` and returns the sums of V, V' and V'' over all points.
using PotentialFn = PotentialSums (*)(std::span<const double> coeffs, std::span<const double> q,
                                      std::span<double> slope);

/// Accumulates C(t_k) = sum_j amp_j exp(-i freq_j t_k) on the uniform grid
/// t_k = t0 + k dt. Phasors advance by complex multiplication and are
/// re-anchored with libm cos/sin every kPhasorBlock steps.
using PhasorFn = void (*)(std::span<const double> amp, std::span<const double> freq, double t0, double dt,
                          std::span<double> re, std::span<double> im);

inline constexpr int kPhasorBlock = 64;

struct KernelTable {
  std::string_view name;
  PotentialFn potential;
  PhasorFn phasor_sum;
};

const KernelTable& scalar_table();
/// nullptr when the ISA was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library (best available unless EPAC_SIMD says otherwise).
const KernelTable& active();

}  // namespace epac::kernels
