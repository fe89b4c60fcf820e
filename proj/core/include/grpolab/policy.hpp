#pragma once

#include <span>
#include <vector>

#include "grpolab/matrix.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

// Toy analogue of the policy parameters: one logit row per difficulty
// bucket, one column per response template. A response is a single action,
// so the policy is a bucketed softmax bandit.
struct PolicyParams {
  Matrix logits;

  PolicyParams() = default;
  PolicyParams(int num_buckets, int num_templates) : logits(num_buckets, num_templates) {}

  static PolicyParams uniform(int num_buckets, int num_templates) {
    return PolicyParams(num_buckets, num_templates);
  }

  int num_buckets() const { return logits.rows; }
  int num_templates() const { return logits.cols; }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

// Numerically stable softmax; out must have the same extent as in.
void softmax_into(std::span<const double> in, std::span<double> out);

std::vector<double> softmax(std::span<const double> in);

// Sample an index from a probability vector using one uniform draw.
int sample_categorical(std::span<const double> probs, RngStream& stream);

}  // namespace grpolab
