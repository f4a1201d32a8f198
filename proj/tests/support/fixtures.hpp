#pragma once

#include <cstdint>
#include <string>

#include "mlbalance/dataset.hpp"

namespace fixtures {

// n=64, d=8, q=4. Labels are noisy linear functions of the features.
mlbalance::MultiLabelDataset toy_dataset(std::uint64_t seed = 3);

// n=500, d=20, q=6. Labels L1..L4 at roughly 40/30/25/20% prevalence, L5 and L6 at exactly
// 4% (20 positives each). Each label shifts the mean of a few features.
mlbalance::MultiLabelDataset imbalanced_dataset(std::uint64_t seed = 11);

// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& name);

}  // namespace fixtures
