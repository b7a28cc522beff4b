#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mtl/matrix.hpp"

namespace mtl {

struct TaskLossGrad {
  double loss = 0.0;  // mean over the batch
  Matrix dlogits;     // d(loss)/d(logits), same shape as the logits
};

/// Softmax cross-entropy, mean over rows. Labels are class indices in [0, C).
/// The softmax is computed with per-row max subtraction; the gradient is
/// (softmax - onehot) / B.
TaskLossGrad nominal_loss(const Matrix& logits, std::span<const int> labels);

/// Rank y in [1..K] -> K-1 bits, bit k (1-based) set iff y > k.
std::vector<uint8_t> ordinal_encode(int rank, int num_ranks);

/// Rank = 1 + number of logits strictly above zero (sigmoid > 0.5).
/// Ties at exactly zero count as 0, so decoding is deterministic.
int ordinal_decode(std::span<const double> logits);

/// Sum over the K-1 binary subproblems of the stable logistic cross-entropy,
/// mean over rows. Logits are B x (K-1); labels are ranks in [1..K].
TaskLossGrad ordinal_loss(const Matrix& logits, std::span<const int> labels);

}  // namespace mtl
