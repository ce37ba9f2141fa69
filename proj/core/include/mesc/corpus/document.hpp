#pragma once

#include <map>
#include <string>
#include <vector>

namespace mesc::corpus {

enum class TaskKind { binary, multi_class, multi_label };

std::string task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

struct CorpusTask {
  TaskKind kind = TaskKind::binary;
  size_t num_labels = 2;  // u; output width is 1 for binary
  std::vector<std::string> label_names;

  // Width of the classifier output layer for this task.
  size_t logit_width() const { return kind == TaskKind::binary ? 1 : num_labels; }
};

// labels encoding depends on the task:
//   binary       -> {y} with y in {0,1}
//   multi-class  -> {k} with 0 <= k < u
//   multi-label  -> indicator vector of length u over {0,1}
struct Document {
  std::string id;
  std::string text;
  std::vector<int> labels;
  std::string split;  // train | val | test
};

struct Corpus {
  CorpusTask task;
  std::vector<Document> docs;

  std::vector<const Document*> split_docs(const std::string& split) const;
  std::map<std::string, size_t> split_counts() const;
};

// Throws std::invalid_argument with a description when a document is invalid
// for the task (label arity/range, bad split tag, empty id).
void validate_document(const Document& doc, const CorpusTask& task);

// JSONL: one {"id","text","labels","split"} object per line.
Corpus load_corpus(const std::string& path, const CorpusTask& task);
void save_corpus(const std::string& path, const Corpus& corpus);

struct TokenSequence {
  std::string doc_id;
  std::vector<int> ids;
};

}  // namespace mesc::corpus
