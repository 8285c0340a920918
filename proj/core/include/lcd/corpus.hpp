#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lcd {

using Token = std::string;  // lowercased, no whitespace

struct Sentence {
  std::vector<Token> tokens;
  std::string raw;  // original line, non-empty
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
};

struct Corpus {
  std::vector<Document> documents;
  // blocks dropped because no line in them produced any token
  std::size_t skipped_blocks = 0;
};

// order[k] = source index of the sentence placed at position k
struct Permutation {
  std::vector<std::size_t> order;

  std::size_t size() const { return order.size(); }
};

// Lowercase, split on whitespace, strip leading/trailing punctuation from
// each piece, drop pieces left empty. Interior punctuation survives.
std::vector<Token> tokenize(const std::string& raw);

// One sentence per line, one or more blank lines between documents.
// Documents are numbered doc-0, doc-1, ... in input order.
// Throws on an empty result or a failed read.
Corpus parse_corpus(std::istream& in);

// Inverse convenience for fixtures and round-trip checks: one line per
// sentence, one blank line between documents.
void write_corpus(const Corpus& corpus, std::ostream& out);

Permutation identity_permutation(std::size_t n);
Permutation inverse(const Permutation& p);
Document apply_permutation(const Document& doc, const Permutation& p);

// Uniform over the n!-1 non-identity permutations (identity draws are
// rejected and resampled). Requires n >= 2.
Permutation sample_nonidentity_permutation(std::size_t n, std::mt19937_64& rng);
std::pair<Permutation, Document> generate_permutation(const Document& doc,
                                                      std::mt19937_64& rng);

// Shuffle documents, then cut contiguously at the cumulative ratio marks.
// Ratios must be positive and sum to 1; needs at least 3 documents.
std::array<Corpus, 3> split_dataset(const Corpus& corpus,
                                    std::array<double, 3> ratios,
                                    std::mt19937_64& rng);

}  // namespace lcd
