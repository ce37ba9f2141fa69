#include "mesc/task_loss.hpp"

#include <stdexcept>

#include "mesc/nn/losses.hpp"

namespace mesc {

std::string loss_wiring_name(LossWiring w) {
  return w == LossWiring::conventional ? "conventional" : "paper";
}

LossWiring loss_wiring_from_name(const std::string& name) {
  if (name == "conventional") return LossWiring::conventional;
  if (name == "paper") return LossWiring::paper;
  throw std::invalid_argument("unknown loss wiring '" + name +
                              "' (expected conventional|paper)");
}

nn::TensorPtr task_loss(const nn::TensorPtr& logits,
                        const std::vector<const std::vector<int>*>& labels,
                        const corpus::CorpusTask& task, LossWiring wiring) {
  using corpus::TaskKind;
  const size_t rows = logits->rows(), cols = logits->cols();
  if (labels.size() != rows)
    throw std::invalid_argument("task_loss: label rows mismatch");
  if (cols != task.logit_width())
    throw std::invalid_argument("task_loss: logit width " + std::to_string(cols) +
                                " != task width " +
                                std::to_string(task.logit_width()));

  switch (task.kind) {
    case TaskKind::binary: {
      std::vector<float> targets(rows);
      for (size_t i = 0; i < rows; ++i) targets[i] = static_cast<float>(labels[i]->at(0));
      return nn::bce_with_logits(logits, std::move(targets));
    }
    case TaskKind::multi_class: {
      if (wiring == LossWiring::paper) {
        std::vector<float> targets(rows * cols, 0.0f);
        for (size_t i = 0; i < rows; ++i)
          targets[i * cols + static_cast<size_t>(labels[i]->at(0))] = 1.0f;
        return nn::bce_with_logits(logits, std::move(targets));
      }
      std::vector<int> ids(rows);
      for (size_t i = 0; i < rows; ++i) ids[i] = labels[i]->at(0);
      return nn::softmax_ce(logits, std::move(ids));
    }
    case TaskKind::multi_label: {
      std::vector<float> targets(rows * cols);
      for (size_t i = 0; i < rows; ++i) {
        if (labels[i]->size() != cols)
          throw std::invalid_argument("task_loss: multi-label arity mismatch");
        for (size_t j = 0; j < cols; ++j)
          targets[i * cols + j] = static_cast<float>((*labels[i])[j]);
      }
      if (wiring == LossWiring::paper) {
        // Categorical CE over the normalized multi-hot target.
        for (size_t i = 0; i < rows; ++i) {
          float sum = 0.0f;
          for (size_t j = 0; j < cols; ++j) sum += targets[i * cols + j];
          if (sum > 0.0f)
            for (size_t j = 0; j < cols; ++j) targets[i * cols + j] /= sum;
        }
        return nn::soft_ce(logits, std::move(targets));
      }
      return nn::bce_with_logits(logits, std::move(targets));
    }
  }
  throw std::logic_error("task_loss: unhandled task kind");
}

std::vector<int> predict_labels(const float* logits, size_t width,
                                const corpus::CorpusTask& task, float threshold) {
  using corpus::TaskKind;
  switch (task.kind) {
    case TaskKind::binary:
      return {nn::sigmoid(logits[0]) > threshold ? 1 : 0};
    case TaskKind::multi_class: {
      size_t best = 0;
      for (size_t j = 1; j < width; ++j)
        if (logits[j] > logits[best]) best = j;
      return {static_cast<int>(best)};
    }
    case TaskKind::multi_label: {
      std::vector<int> out(width);
      for (size_t j = 0; j < width; ++j)
        out[j] = nn::sigmoid(logits[j]) > threshold ? 1 : 0;
      return out;
    }
  }
  throw std::logic_error("predict_labels: unhandled task kind");
}

}  // namespace mesc
