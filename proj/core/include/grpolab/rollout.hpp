#pragma once

#include <cstdint>
#include <vector>

#include "grpolab/rewards.hpp"

namespace grpolab {

// Inputs to the conciseness rubric for one sampled response.
struct ConcisenessFeatures {
  int repetition_units = 0;
  int irrelevant_steps = 0;
  int length_tokens = 1;
  double optimal_length = 1.0;
};

// One of the G responses sampled for a question.
struct SampleRecord {
  int template_index = 0;
  double old_prob = 1.0;  // probability under the snapshot policy that sampled it
  bool correct = false;
  int length_tokens = 1;
  ConcisenessFeatures features;
  ConcisenessScore score;
};

// A question plus its group of G sampled responses.
struct GroupRollout {
  std::uint64_t question_id = 0;
  int bucket = 0;
  std::vector<SampleRecord> samples;

  int group_size() const { return static_cast<int>(samples.size()); }
};

}  // namespace grpolab
