#include <algorithm>
#include <cmath>

#include "epac/kernels.hpp"

namespace epac::kernels {

namespace {

PotentialSums potential_scalar(std::span<const double> c, std::span<const double> q, std::span<double> slope) {
  PotentialSums sums;
  const int top = static_cast<int>(c.size()) - 1;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double x = q[k];
    double v = top >= 0 ? c[top] : 0.0, d = 0.0, dd = 0.0;
    for (int i = top - 1; i >= 0; --i) {
      dd = dd * x + d;
      d = d * x + v;
      v = v * x + c[i];
    }
    slope[k] = d;
    sums.value += v;
    sums.slope += d;
    sums.curvature += 2.0 * dd;
  }
  return sums;
}

void phasor_scalar(std::span<const double> amp, std::span<const double> freq, double t0, double dt,
                   std::span<double> re, std::span<double> im) {
  const std::size_t nt = re.size();
  std::fill(re.begin(), re.end(), 0.0);
  std::fill(im.begin(), im.end(), 0.0);
  for (std::size_t start = 0; start < nt; start += kPhasorBlock) {
    const std::size_t len = std::min<std::size_t>(kPhasorBlock, nt - start);
    const double t = t0 + static_cast<double>(start) * dt;
    for (std::size_t j = 0; j < amp.size(); ++j) {
      double zr = amp[j] * std::cos(freq[j] * t);
      double zi = -amp[j] * std::sin(freq[j] * t);
      const double rr = std::cos(freq[j] * dt);
      const double ri = -std::sin(freq[j] * dt);
      for (std::size_t k = 0; k < len; ++k) {
        re[start + k] += zr;
        im[start + k] += zi;
        const double nr = zr * rr - zi * ri;
        zi = zr * ri + zi * rr;
        zr = nr;
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &potential_scalar, &phasor_scalar};
  return table;
}

}  // namespace epac::kernels
