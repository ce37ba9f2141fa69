#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mesc/corpus/document.hpp"

namespace mesc::corpus {

// Word-level vocabulary: lower-cased alphanumeric runs, ranked by training
// frequency (ties lexicographic), with PAD/UNK/CLS reserved at ids 0..2.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;

  std::vector<std::string> id_to_token;  // [0..2] are the specials
  std::unordered_map<std::string, int> token_to_id;

  size_t size() const { return id_to_token.size(); }
  // UNK for unknown words; never returns PAD/CLS for text input.
  int id_of(const std::string& token) const;
};

// Lower-cases and splits text into maximal [a-z0-9] runs.
std::vector<std::string> split_words(const std::string& text);

Vocabulary build_vocab(const std::vector<const Document*>& train_docs,
                       size_t max_size, size_t min_frequency);

TokenSequence tokenize(const Document& doc, const Vocabulary& vocab);
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

// One token per line in id order; the first 3 lines are the specials.
void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

}  // namespace mesc::corpus
