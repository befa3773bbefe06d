#include "krsketch/random.hpp"

#include <array>

#include "krsketch/kernels.hpp"

namespace krs {

void GaussianStream::fill(std::uint64_t first_index, std::span<double> out) const {
  if (out.empty()) return;
  const auto& k = simd::kernels();
  std::size_t pos = 0;
  std::uint64_t index = first_index;

  if (index % 2 == 1) {
    std::array<double, 2> pair{};
    k.gaussian_pairs(seed_, stream_, index / 2, pair);
    out[pos++] = pair[1];
    ++index;
  }
  const std::size_t even = (out.size() - pos) & ~std::size_t{1};
  if (even > 0) {
    k.gaussian_pairs(seed_, stream_, index / 2, out.subspan(pos, even));
    pos += even;
    index += even;
  }
  if (pos < out.size()) {
    std::array<double, 2> pair{};
    k.gaussian_pairs(seed_, stream_, index / 2, pair);
    out[pos] = pair[0];
  }
}

double GaussianStream::at(std::uint64_t index) const {
  double v = 0.0;
  fill(index, std::span<double>(&v, 1));
  return v;
}

std::vector<double> GaussianStream::take(std::uint64_t first_index, std::size_t count) const {
  std::vector<double> v(count);
  fill(first_index, v);
  return v;
}

Eigen::MatrixXd GaussianStream::matrix_row_major_index(Eigen::Index rows, Eigen::Index cols,
                                                       double scale) const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor m(rows, cols);
  fill(0, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  if (scale != 1.0) m *= scale;
  return m;
}

}  // namespace krs
