#include "grpolab/policy.hpp"

#include <algorithm>
#include <cmath>

#include "grpolab/errors.hpp"

namespace grpolab {

void softmax_into(std::span<const double> in, std::span<double> out) {
  if (in.empty() || in.size() != out.size()) throw_invalid_input("softmax: bad extent");
  double max_logit = in[0];
  for (double v : in) max_logit = std::max(max_logit, v);
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - max_logit);
    total += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= total;
}

std::vector<double> softmax(std::span<const double> in) {
  std::vector<double> out(in.size());
  softmax_into(in, out);
  return out;
}

int sample_categorical(std::span<const double> probs, RngStream& stream) {
  const double u = stream.next_unit();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;  // guard against rounding at u ~ 1
}

}  // namespace grpolab
