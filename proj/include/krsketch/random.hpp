#pragma once

// Counter-based Gaussian streams.
//
// Every random quantity in the library is addressed as (seed, stream, index):
// the seed is the Philox key, the stream id selects an independent counter
// range, and normal number k of a stream comes from Philox block k/2. Any
// entry can therefore be regenerated without state, which is what lets the
// dense Gaussian sketch stream its rows and lets parallel trials run
// race-free.
//
// Seed splitting: trial t of a run with master seed s uses seed s + t.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace krs {

enum class StreamTag : std::uint16_t {
  Case1P = 1,
  Case1Q = 2,
  Case2P = 3,
  Case2Q = 4,
  DenseRow = 5,
  ProblemFactorF = 16,
  ProblemFactorG = 17,
  ProblemRightF = 18,
  ProblemRightG = 19,
  ProblemSingularF = 20,
  ProblemSingularG = 21,
  ProblemReference = 22,
  ProblemNoise = 23,
  SphereSample = 32,
  ZetaXi = 33,
  ZetaEta = 34,
  TestVector = 35,
  EitNoise = 48,
};

inline constexpr std::uint64_t kStreamIndexBits = 48;

constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t index = 0) {
  return (static_cast<std::uint64_t>(tag) << kStreamIndexBits) |
         (index & ((std::uint64_t{1} << kStreamIndexBits) - 1));
}

constexpr std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
  return master_seed + trial;
}

class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
  GaussianStream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0)
      : GaussianStream(seed, stream_id(tag, index)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Normals first_index, first_index + 1, ... into out.
  void fill(std::uint64_t first_index, std::span<double> out) const;

  double at(std::uint64_t index) const;

  std::vector<double> take(std::uint64_t first_index, std::size_t count) const;

  // rows x cols matrix, entry (i, j) = normal (i * cols + j) of the stream,
  // multiplied by scale.
  Eigen::MatrixXd matrix_row_major_index(Eigen::Index rows, Eigen::Index cols,
                                         double scale = 1.0) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace krs
