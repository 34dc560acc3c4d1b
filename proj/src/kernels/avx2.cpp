// Compiled with -mavx2 -mfma; only reached after a cpuid check.
#include <algorithm>
#include <array>
#include <cmath>

#include "epac/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace epac::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

PotentialSums potential_avx2(std::span<const double> c, std::span<const double> q, std::span<double> slope) {
  const int top = static_cast<int>(c.size()) - 1;
  const std::size_t n = q.size();
  const __m256d two = _mm256_set1_pd(2.0);
  __m256d sv = _mm256_setzero_pd(), sd = _mm256_setzero_pd(), sdd = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d x = _mm256_loadu_pd(q.data() + k);
    __m256d v = _mm256_set1_pd(top >= 0 ? c[top] : 0.0);
    __m256d d = _mm256_setzero_pd(), dd = _mm256_setzero_pd();
    for (int i = top - 1; i >= 0; --i) {
      dd = _mm256_fmadd_pd(dd, x, d);
      d = _mm256_fmadd_pd(d, x, v);
      v = _mm256_fmadd_pd(v, x, _mm256_set1_pd(c[i]));
    }
    _mm256_storeu_pd(slope.data() + k, d);
    sv = _mm256_add_pd(sv, v);
    sd = _mm256_add_pd(sd, d);
    sdd = _mm256_fmadd_pd(two, dd, sdd);
  }
  PotentialSums sums{hsum(sv), hsum(sd), hsum(sdd)};
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

void phasor_avx2(std::span<const double> amp, std::span<const double> freq, double t0, double dt,
                 std::span<double> re, std::span<double> im) {
  const std::size_t nt = re.size();
  const std::size_t np = amp.size();
  std::fill(re.begin(), re.end(), 0.0);
  std::fill(im.begin(), im.end(), 0.0);
  alignas(32) std::array<__m256d, kPhasorBlock> acc_r;
  alignas(32) std::array<__m256d, kPhasorBlock> acc_i;
  alignas(32) double zr0[4], zi0[4], rr0[4], ri0[4];
  for (std::size_t start = 0; start < nt; start += kPhasorBlock) {
    const std::size_t len = std::min<std::size_t>(kPhasorBlock, nt - start);
    const double t = t0 + static_cast<double>(start) * dt;
    for (std::size_t k = 0; k < len; ++k) acc_r[k] = acc_i[k] = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= np; j += 4) {
      for (int l = 0; l < 4; ++l) {
        zr0[l] = amp[j + l] * std::cos(freq[j + l] * t);
        zi0[l] = -amp[j + l] * std::sin(freq[j + l] * t);
        rr0[l] = std::cos(freq[j + l] * dt);
        ri0[l] = -std::sin(freq[j + l] * dt);
      }
      __m256d zr = _mm256_load_pd(zr0), zi = _mm256_load_pd(zi0);
      const __m256d rr = _mm256_load_pd(rr0), ri = _mm256_load_pd(ri0);
      for (std::size_t k = 0; k < len; ++k) {
        acc_r[k] = _mm256_add_pd(acc_r[k], zr);
        acc_i[k] = _mm256_add_pd(acc_i[k], zi);
        const __m256d nr = _mm256_fmsub_pd(zr, rr, _mm256_mul_pd(zi, ri));
        zi = _mm256_fmadd_pd(zr, ri, _mm256_mul_pd(zi, rr));
        zr = nr;
      }
    }
    for (std::size_t k = 0; k < len; ++k) {
      re[start + k] += hsum(acc_r[k]);
      im[start + k] += hsum(acc_i[k]);
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

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", &potential_avx2, &phasor_avx2};
  __builtin_cpu_init();
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  return &table;
}

}  // namespace epac::kernels

#else

namespace epac::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace epac::kernels

#endif
