#include "mesc/corpus/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace mesc::corpus {

namespace {
const char* kSpecials[3] = {"<pad>", "<unk>", "<cls>"};
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

Vocabulary build_vocab(const std::vector<const Document*>& train_docs,
                       size_t max_size, size_t min_frequency) {
  if (train_docs.empty()) throw std::invalid_argument("build_vocab: empty training split");
  if (max_size < 4)
    throw std::invalid_argument("build_vocab: max_size must leave room beyond specials");

  std::unordered_map<std::string, size_t> freq;
  for (const Document* d : train_docs)
    for (auto& w : split_words(d->text)) ++freq[w];

  std::vector<std::pair<std::string, size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const char* s : kSpecials) {
    v.token_to_id[s] = static_cast<int>(v.id_to_token.size());
    v.id_to_token.push_back(s);
  }
  for (const auto& [token, count] : ranked) {
    if (v.size() >= max_size) break;
    if (count < min_frequency) break;
    v.token_to_id[token] = static_cast<int>(v.id_to_token.size());
    v.id_to_token.push_back(token);
  }
  return v;
}

TokenSequence tokenize(const Document& doc, const Vocabulary& vocab) {
  const auto words = split_words(doc.text);
  if (words.empty())
    throw std::invalid_argument("tokenize: document " + doc.id + " has no tokens");
  TokenSequence ts;
  ts.doc_id = doc.id;
  ts.ids.reserve(words.size());
  for (const auto& w : words) ts.ids.push_back(vocab.id_of(w));
  return ts;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= vocab.size())
      throw std::out_of_range("detokenize: id " + std::to_string(ids[i]) +
                              " outside vocabulary");
    if (i) out.push_back(' ');
    out += vocab.id_to_token[ids[i]];
  }
  return out;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write vocabulary " + path);
  for (const auto& t : vocab.id_to_token) os << t << "\n";
  if (!os) throw std::runtime_error("write failure on vocabulary " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open vocabulary " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) {
    v.token_to_id[line] = static_cast<int>(v.id_to_token.size());
    v.id_to_token.push_back(line);
  }
  if (v.size() < 3)
    throw std::runtime_error(path + ": vocabulary missing the 3-line special header");
  for (int i = 0; i < 3; ++i)
    if (v.id_to_token[i] != kSpecials[i])
      throw std::runtime_error(path + ": special header line " + std::to_string(i + 1) +
                               " is '" + v.id_to_token[i] + "', expected '" +
                               kSpecials[i] + "'");
  return v;
}

}  // namespace mesc::corpus
