#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace precopt {

// Standard-normal sampler with a fixed Box-Muller implementation.
// std::normal_distribution is implementation-defined; this one produces the
// same stream everywhere for a given seed.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  double next();

  /// Fills column by column.
  Eigen::MatrixXd matrix(int rows, int cols);

  /// Uniform in [0, 1).
  double uniform();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace precopt
