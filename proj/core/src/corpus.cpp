#include "mesc/corpus/document.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace mesc::corpus {

std::string task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::binary: return "binary";
    case TaskKind::multi_class: return "multi_class";
    case TaskKind::multi_label: return "multi_label";
  }
  return "?";
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "binary") return TaskKind::binary;
  if (name == "multi_class") return TaskKind::multi_class;
  if (name == "multi_label") return TaskKind::multi_label;
  throw std::invalid_argument("unknown task kind '" + name +
                              "' (expected binary|multi_class|multi_label)");
}

std::vector<const Document*> Corpus::split_docs(const std::string& split) const {
  std::vector<const Document*> out;
  for (const auto& d : docs)
    if (d.split == split) out.push_back(&d);
  return out;
}

std::map<std::string, size_t> Corpus::split_counts() const {
  std::map<std::string, size_t> out;
  for (const auto& d : docs) ++out[d.split];
  return out;
}

void validate_document(const Document& doc, const CorpusTask& task) {
  if (doc.id.empty()) throw std::invalid_argument("document id is empty");
  if (doc.split != "train" && doc.split != "val" && doc.split != "test")
    throw std::invalid_argument("document " + doc.id + ": bad split '" + doc.split +
                                "'");
  switch (task.kind) {
    case TaskKind::binary:
      if (doc.labels.size() != 1 || (doc.labels[0] != 0 && doc.labels[0] != 1))
        throw std::invalid_argument("document " + doc.id +
                                    ": binary task needs a single 0/1 label");
      break;
    case TaskKind::multi_class:
      if (doc.labels.size() != 1 || doc.labels[0] < 0 ||
          static_cast<size_t>(doc.labels[0]) >= task.num_labels)
        throw std::invalid_argument("document " + doc.id +
                                    ": class index out of range [0," +
                                    std::to_string(task.num_labels) + ")");
      break;
    case TaskKind::multi_label:
      if (doc.labels.size() != task.num_labels)
        throw std::invalid_argument("document " + doc.id + ": label vector length " +
                                    std::to_string(doc.labels.size()) + " != u=" +
                                    std::to_string(task.num_labels));
      for (int v : doc.labels)
        if (v != 0 && v != 1)
          throw std::invalid_argument("document " + doc.id +
                                      ": multi-label entries must be 0/1");
      break;
  }
}

Corpus load_corpus(const std::string& path, const CorpusTask& task) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open corpus " + path);
  Corpus corpus;
  corpus.task = task;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed JSON: " + e.what());
    }
    try {
      for (const char* field : {"id", "text", "labels", "split"})
        if (!j.contains(field))
          throw std::invalid_argument(std::string("missing field \"") + field + "\"");
      Document d;
      d.id = j.at("id").get<std::string>();
      d.text = j.at("text").get<std::string>();
      d.split = j.at("split").get<std::string>();
      const auto& labels = j.at("labels");
      if (labels.is_number_integer())
        d.labels = {labels.get<int>()};
      else if (labels.is_array())
        d.labels = labels.get<std::vector<int>>();
      else
        throw std::invalid_argument("\"labels\" must be an integer or integer array");
      validate_document(d, task);
      if (!seen_ids.insert(d.id).second)
        throw std::invalid_argument("duplicate document id '" + d.id + "'");
      corpus.docs.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.docs.empty()) throw std::runtime_error(path + ": empty corpus");
  return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write corpus " + path);
  for (const auto& d : corpus.docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (corpus.task.kind == TaskKind::multi_label)
      j["labels"] = d.labels;
    else
      j["labels"] = d.labels.at(0);
    j["split"] = d.split;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failure on corpus " + path);
}

}  // namespace mesc::corpus
