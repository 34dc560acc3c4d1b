#include "epac/stats.hpp"

#include <cmath>

#include "epac/errors.hpp"

namespace epac {

BlockEstimate block_average(std::span<const double> samples, std::size_t block_size) {
  if (block_size == 0) raise(ErrorKind::InvalidArgument, "block size must be positive");
  const std::size_t nblocks = samples.size() / block_size;
  if (nblocks < 2) raise(ErrorKind::InvalidArgument, "need at least two blocks for an error estimate");
  std::vector<double> means(nblocks, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < block_size; ++i) s += samples[b * block_size + i];
    means[b] = s / static_cast<double>(block_size);
  }
  MeanStd ms = mean_std(means);
  return {ms.mean, ms.std / std::sqrt(static_cast<double>(nblocks)), nblocks};
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double s = 0.0;
  for (double v : values) s += v;
  out.mean = s / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace epac
