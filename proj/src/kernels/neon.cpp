#include <algorithm>
#include <cmath>

#include "epac/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace epac::kernels {

namespace {

PotentialSums potential_neon(std::span<const double> c, std::span<const double> q, std::span<double> slope) {
  const int top = static_cast<int>(c.size()) - 1;
  const std::size_t n = q.size();
  float64x2_t sv = vdupq_n_f64(0.0), sd = vdupq_n_f64(0.0), sdd = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t x = vld1q_f64(q.data() + k);
    float64x2_t v = vdupq_n_f64(top >= 0 ? c[top] : 0.0);
    float64x2_t d = vdupq_n_f64(0.0), dd = vdupq_n_f64(0.0);
    for (int i = top - 1; i >= 0; --i) {
      dd = vfmaq_f64(d, dd, x);
      d = vfmaq_f64(v, d, x);
      v = vfmaq_f64(vdupq_n_f64(c[i]), v, x);
    }
    vst1q_f64(slope.data() + k, d);
    sv = vaddq_f64(sv, v);
    sd = vaddq_f64(sd, d);
    sdd = vfmaq_f64(sdd, vdupq_n_f64(2.0), dd);
  }
  PotentialSums sums{vaddvq_f64(sv), vaddvq_f64(sd), vaddvq_f64(sdd)};
  for (; k < n; ++k) {
    const double x = q[k];
    double v = top >= 0 ? c[top] : 0.0, d = 0.0, dd = 0.0;
    for (int i = top - 1; i >= 0; --i) {
      dd = std::fma(dd, x, d);
      d = std::fma(d, x, v);
      v = std::fma(v, x, c[i]);
    }
    slope[k] = d;
    sums.value += v;
    sums.slope += d;
    sums.curvature += 2.0 * dd;
  }
  return sums;
}

void phasor_neon(std::span<const double> amp, std::span<const double> freq, double t0, double dt,
                 std::span<double> re, std::span<double> im) {
  const std::size_t nt = re.size();
  const std::size_t np = amp.size();
  std::fill(re.begin(), re.end(), 0.0);
  std::fill(im.begin(), im.end(), 0.0);
  float64x2_t acc_r[kPhasorBlock];
  float64x2_t acc_i[kPhasorBlock];
  for (std::size_t start = 0; start < nt; start += kPhasorBlock) {
    const std::size_t len = std::min<std::size_t>(kPhasorBlock, nt - start);
    const double t = t0 + static_cast<double>(start) * dt;
    for (std::size_t k = 0; k < len; ++k) acc_r[k] = acc_i[k] = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= np; j += 2) {
      double zr0[2], zi0[2], rr0[2], ri0[2];
      for (int l = 0; l < 2; ++l) {
        zr0[l] = amp[j + l] * std::cos(freq[j + l] * t);
        zi0[l] = -amp[j + l] * std::sin(freq[j + l] * t);
        rr0[l] = std::cos(freq[j + l] * dt);
        ri0[l] = -std::sin(freq[j + l] * dt);
      }
      float64x2_t zr = vld1q_f64(zr0), zi = vld1q_f64(zi0);
      const float64x2_t rr = vld1q_f64(rr0), ri = vld1q_f64(ri0);
      for (std::size_t k = 0; k < len; ++k) {
        acc_r[k] = vaddq_f64(acc_r[k], zr);
        acc_i[k] = vaddq_f64(acc_i[k], zi);
        const float64x2_t nr = vfmsq_f64(vmulq_f64(zr, rr), zi, ri);
        zi = vfmaq_f64(vmulq_f64(zi, rr), zr, ri);
        zr = nr;
      }
    }
    for (std::size_t k = 0; k < len; ++k) {
      re[start + k] += vaddvq_f64(acc_r[k]);
      im[start + k] += vaddvq_f64(acc_i[k]);
    }
    for (; j < np; ++j) {
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

const KernelTable* neon_table() {
  static const KernelTable table{"neon", &potential_neon, &phasor_neon};
  return &table;
}

}  // namespace epac::kernels

#else

namespace epac::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace epac::kernels

#endif
