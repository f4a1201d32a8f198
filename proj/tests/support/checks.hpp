#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace checks {

// Max relative error of the analytic gradient against central differences for each loss term
// on a random batch (b=8, d=10, q=5, l=4). Order: embedding, reconstruction, similarity,
// label surrogate, weighted total.
Eigen::VectorXd gradient_errors(std::uint64_t seed, double epsilon = 0x1p-17);

inline constexpr const char* kTermNames[5] = {"embedding", "reconstruction", "similarity",
                                              "label", "total"};

}  // namespace checks
