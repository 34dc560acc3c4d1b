#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace epac {

struct BlockEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t blocks = 0;
};

/// Mean and standard error from non-overlapping blocks of `block_size`
/// consecutive samples. Samples beyond the last full block are dropped.
BlockEstimate block_average(std::span<const double> samples, std::size_t block_size);

/// Sample mean and (n-1)-normalized standard deviation.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace epac
