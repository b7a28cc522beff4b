#include "mtl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mtl {

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-|z|)) + max(z, 0) - z*y, the overflow-free logistic loss
double bce_with_logit(double z, int y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

TaskLossGrad nominal_loss(const Matrix& logits, std::span<const int> labels) {
  const int b = logits.rows();
  const int c = logits.cols();
  if (b < 1) throw std::invalid_argument("nominal_loss: empty batch");
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("nominal_loss: " + std::to_string(labels.size()) +
                                " labels for a batch of " + std::to_string(b));

  TaskLossGrad out;
  out.dlogits = Matrix(b, c);
  const double inv_b = 1.0 / b;
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c)
      throw std::invalid_argument("nominal_loss: label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(c) + ") at row " +
                                  std::to_string(i));
    const double* z = logits.row(i);
    double m = z[0];
    for (int j = 1; j < c; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(z[j] - m);
    total += std::log(sum) - (z[y] - m);
    double* g = out.dlogits.row(i);
    for (int j = 0; j < c; ++j) g[j] = std::exp(z[j] - m) / sum * inv_b;
    g[y] -= inv_b;
  }
  out.loss = total * inv_b;
  return out;
}

std::vector<uint8_t> ordinal_encode(int rank, int num_ranks) {
  if (num_ranks < 2)
    throw std::invalid_argument("ordinal_encode: need at least 2 ranks, got " +
                                std::to_string(num_ranks));
  if (rank < 1 || rank > num_ranks)
    throw std::invalid_argument("ordinal_encode: rank " + std::to_string(rank) +
                                " out of range [1," + std::to_string(num_ranks) + "]");
  std::vector<uint8_t> bits(num_ranks - 1);
  for (int k = 1; k < num_ranks; ++k) bits[k - 1] = rank > k ? 1 : 0;
  return bits;
}

int ordinal_decode(std::span<const double> logits) {
  int rank = 1;
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument("ordinal_decode: non-finite logit");
    if (z > 0.0) ++rank;
  }
  return rank;
}

TaskLossGrad ordinal_loss(const Matrix& logits, std::span<const int> labels) {
  const int b = logits.rows();
  const int sub = logits.cols();  // K-1 binary subproblems
  const int num_ranks = sub + 1;
  if (b < 1) throw std::invalid_argument("ordinal_loss: empty batch");
  if (sub < 1) throw std::invalid_argument("ordinal_loss: logits need at least one column");
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("ordinal_loss: " + std::to_string(labels.size()) +
                                " labels for a batch of " + std::to_string(b));

  TaskLossGrad out;
  out.dlogits = Matrix(b, sub);
  const double inv_b = 1.0 / b;
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 1 || y > num_ranks)
      throw std::invalid_argument("ordinal_loss: rank " + std::to_string(y) +
                                  " out of range [1," + std::to_string(num_ranks) + "] at row " +
                                  std::to_string(i));
    const double* z = logits.row(i);
    double* g = out.dlogits.row(i);
    for (int k = 0; k < sub; ++k) {
      const int bit = y > k + 1 ? 1 : 0;
      total += bce_with_logit(z[k], bit);
      g[k] = (stable_sigmoid(z[k]) - bit) * inv_b;
    }
  }
  out.loss = total * inv_b;
  return out;
}

}  // namespace mtl
