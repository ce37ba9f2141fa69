#pragma once

#include <string>
#include <vector>

#include "mesc/corpus/document.hpp"
#include "mesc/nn/tensor.hpp"

namespace mesc {

// Which loss each task kind trains with. `conventional` pairs binary and
// multi-label with sigmoid BCE and multi-class with softmax CE. `paper`
// follows the source table's wording instead: multi-label trained with
// categorical cross-entropy against the normalized multi-hot distribution,
// multi-class with per-class BCE.
enum class LossWiring { conventional, paper };

std::string loss_wiring_name(LossWiring w);
LossWiring loss_wiring_from_name(const std::string& name);

// logits: [B, u] (u = task logit width); labels: one Document-encoded label
// vector per row. Scalar loss, mean over rows.
nn::TensorPtr task_loss(const nn::TensorPtr& logits,
                        const std::vector<const std::vector<int>*>& labels,
                        const corpus::CorpusTask& task, LossWiring wiring);

// Decision rule on one logit row: binary -> sign, multi-class -> argmax
// (lowest index wins ties), multi-label -> per-label sigmoid threshold.
// Returns the Document label encoding.
std::vector<int> predict_labels(const float* logits, size_t width,
                                const corpus::CorpusTask& task,
                                float threshold = 0.5f);

}  // namespace mesc
