#include "lcd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace lcd {

namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

}  // namespace

std::vector<Token> tokenize(const std::string& raw) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    if (i == start) break;
    std::size_t lo = start;
    std::size_t hi = i;  // one past the end of the piece
    while (lo < hi && std::ispunct(static_cast<unsigned char>(raw[lo]))) ++lo;
    while (hi > lo && std::ispunct(static_cast<unsigned char>(raw[hi - 1]))) --hi;
    if (lo == hi) continue;
    Token tok;
    tok.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      tok.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(raw[k]))));
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::vector<Sentence> block;
  bool block_has_tokens = false;

  auto flush = [&] {
    if (block.empty()) return;
    if (!block_has_tokens) {
      ++corpus.skipped_blocks;
    } else {
      Document doc;
      doc.id = "doc-" + std::to_string(corpus.documents.size());
      doc.sentences = std::move(block);
      corpus.documents.push_back(std::move(doc));
    }
    block.clear();
    block_has_tokens = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    Sentence s;
    s.tokens = tokenize(line);
    s.raw = std::move(line);
    if (!s.tokens.empty()) block_has_tokens = true;
    block.push_back(std::move(s));
  }
  if (in.bad()) throw std::runtime_error("corpus read failed");
  flush();

  if (corpus.documents.empty()) throw std::runtime_error("empty corpus");
  return corpus;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (d > 0) out << '\n';
    for (const Sentence& s : corpus.documents[d].sentences) out << s.raw << '\n';
  }
}

Permutation identity_permutation(std::size_t n) {
  Permutation p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  return p;
}

Permutation inverse(const Permutation& p) {
  Permutation inv;
  inv.order.resize(p.order.size());
  for (std::size_t k = 0; k < p.order.size(); ++k) inv.order[p.order[k]] = k;
  return inv;
}

Document apply_permutation(const Document& doc, const Permutation& p) {
  if (p.order.size() != doc.sentences.size()) {
    throw std::invalid_argument("permutation length does not match document");
  }
  Document out;
  out.id = doc.id;
  out.sentences.reserve(doc.sentences.size());
  for (std::size_t src : p.order) out.sentences.push_back(doc.sentences[src]);
  return out;
}

Permutation sample_nonidentity_permutation(std::size_t n, std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("document too short to permute");
  Permutation p = identity_permutation(n);
  do {
    std::shuffle(p.order.begin(), p.order.end(), rng);
  } while (std::is_sorted(p.order.begin(), p.order.end()));
  return p;
}

std::pair<Permutation, Document> generate_permutation(const Document& doc,
                                                      std::mt19937_64& rng) {
  Permutation p = sample_nonidentity_permutation(doc.sentences.size(), rng);
  Document shuffled = apply_permutation(doc, p);
  return {std::move(p), std::move(shuffled)};
}

std::array<Corpus, 3> split_dataset(const Corpus& corpus,
                                    std::array<double, 3> ratios,
                                    std::mt19937_64& rng) {
  for (double r : ratios) {
    if (r <= 0.0) throw std::invalid_argument("ratios must be positive");
  }
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("ratios must sum to 1");
  }
  std::size_t n = corpus.documents.size();
  if (n < 3) throw std::invalid_argument("corpus too small to split");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);

  // cumulative floor rule keeps the partition exact for any ratios
  std::size_t c1 = static_cast<std::size_t>(ratios[0] * static_cast<double>(n));
  std::size_t c2 =
      static_cast<std::size_t>((ratios[0] + ratios[1]) * static_cast<double>(n));
  c1 = std::min(c1, n);
  c2 = std::min(std::max(c2, c1), n);

  std::array<Corpus, 3> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t part = k < c1 ? 0 : (k < c2 ? 1 : 2);
    out[part].documents.push_back(corpus.documents[idx[k]]);
  }
  return out;
}

}  // namespace lcd
