#include "fixtures.hpp"

#include <filesystem>
#include <numeric>
#include <vector>

#include "mlbalance/random.hpp"

namespace fixtures {

using mlbalance::Index;
using mlbalance::LabelMatrix;
using mlbalance::Matrix;
using mlbalance::Rng;

mlbalance::MultiLabelDataset toy_dataset(std::uint64_t seed) {
  const Index n = 64, d = 8, q = 4;
  Rng rng(seed);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index f = 0; f < d; ++f) x(i, f) = rng.normal();
  }
  Matrix w(d, q);
  for (Index f = 0; f < d; ++f) {
    for (Index j = 0; j < q; ++j) w(f, j) = rng.normal();
  }
  LabelMatrix y(n, q);
  const Matrix z = x * w;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) y(i, j) = z(i, j) + 0.3 * rng.normal() > 0.0 ? 1 : 0;
  }
  return {x, y};
}

mlbalance::MultiLabelDataset imbalanced_dataset(std::uint64_t seed) {
  const Index n = 500, d = 20, q = 6;
  const double prevalence[4] = {0.40, 0.30, 0.25, 0.20};
  Rng rng(seed);
  LabelMatrix y = LabelMatrix::Zero(n, q);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 4; ++j) y(i, j) = rng.uniform01() < prevalence[j] ? 1 : 0;
  }
  for (Index j = 4; j < 6; ++j) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    rng.shuffle(rows);
    for (std::size_t r = 0; r < 20; ++r) y(static_cast<Index>(rows[r]), j) = 1;
  }

  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index f = 0; f < d; ++f) x(i, f) = rng.normal();
  }
  // Majority labels nudge features 3j..3j+2; the rare labels push their own block harder.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (y(i, j) == 1) x.row(i).segment(3 * j, 3).array() += 1.0;
    }
    if (y(i, 4) == 1) x.row(i).segment(12, 4).array() += 2.0;
    if (y(i, 5) == 1) x.row(i).segment(16, 4).array() += 2.0;
  }
  return {x, y};
}

std::string temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mlbalance_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace fixtures
