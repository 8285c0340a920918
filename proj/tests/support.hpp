// Shared fixtures: hand-built documents, random tables, the planted-coherence
// synthetic corpus, and oracle scorers.
#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcd/corpus.hpp"
#include "lcd/encoder.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/model.hpp"

namespace lcdtest {

inline lcd::Sentence make_sentence(const std::string& raw) {
  lcd::Sentence s;
  s.raw = raw;
  s.tokens = lcd::tokenize(raw);
  return s;
}

inline lcd::Document make_document(const std::string& id,
                                   const std::vector<std::string>& raws) {
  lcd::Document doc;
  doc.id = id;
  for (const auto& raw : raws) doc.sentences.push_back(make_sentence(raw));
  return doc;
}

inline lcd::EmbeddingTable random_table(const std::vector<std::string>& tokens,
                                        Eigen::Index dim, std::uint64_t seed) {
  lcd::EmbeddingTable table;
  table.dim = dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (const auto& tok : tokens) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = unif(rng);
    table.entries.emplace(tok, std::move(v));
  }
  return table;
}

// Coherence is planted: adjacent sentences of a document share two marker
// tokens unique to that boundary; every sentence carries its own filler
// tokens. All tokens get random embeddings, so only the shared markers tie
// neighbors together. More fillers dilute the signal.
struct SyntheticSpec {
  std::size_t num_docs = 1000;
  std::size_t min_sentences = 8;
  std::size_t max_sentences = 12;
  Eigen::Index dim = 50;
  int fillers_per_sentence = 4;
  std::uint64_t seed = 20260816;
};

struct SyntheticData {
  lcd::Corpus corpus;
  lcd::EmbeddingTable table;
};

inline SyntheticData make_synthetic(const SyntheticSpec& spec) {
  SyntheticData data;
  data.table.dim = spec.dim;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(spec.min_sentences,
                                                    spec.max_sentences);
  auto add_token = [&](const std::string& tok) {
    Eigen::VectorXd v(spec.dim);
    for (Eigen::Index i = 0; i < spec.dim; ++i) v[i] = unif(rng);
    data.table.entries.emplace(tok, std::move(v));
  };

  data.corpus.documents.reserve(spec.num_docs);
  for (std::size_t g = 0; g < spec.num_docs; ++g) {
    const std::size_t n = length(rng);
    std::vector<std::vector<std::string>> sentence_tokens(n);
    char buf[64];
    for (std::size_t b = 0; b + 1 < n; ++b) {
      for (int m = 0; m < 2; ++m) {
        std::snprintf(buf, sizeof buf, "m%zu_%zu_%d", g, b, m);
        add_token(buf);
        sentence_tokens[b].push_back(buf);
        sentence_tokens[b + 1].push_back(buf);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < spec.fillers_per_sentence; ++t) {
        std::snprintf(buf, sizeof buf, "f%zu_%zu_%d", g, i, t);
        add_token(buf);
        sentence_tokens[i].push_back(buf);
      }
    }
    lcd::Document doc;
    doc.id = "doc-" + std::to_string(g);
    for (std::size_t i = 0; i < n; ++i) {
      lcd::Sentence s;
      s.tokens = sentence_tokens[i];
      for (const auto& tok : sentence_tokens[i]) {
        if (!s.raw.empty()) s.raw += ' ';
        s.raw += tok;
      }
      doc.sentences.push_back(std::move(s));
    }
    data.corpus.documents.push_back(std::move(doc));
  }
  return data;
}

inline void write_embeddings(const lcd::EmbeddingTable& table, std::ostream& out) {
  char buf[40];
  for (const auto& [tok, vec] : table.entries) {
    out << tok;
    for (Eigen::Index i = 0; i < vec.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", vec[i]);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

// Counts consecutive pairs that were adjacent in the original document, at
// full strength only in the original order. Sentences are matched by raw
// text, so originals need pairwise-distinct sentences.
inline lcd::DocumentScorer make_adjacency_oracle(const lcd::Corpus& originals) {
  auto positions = std::make_shared<
      std::unordered_map<std::string, std::unordered_map<std::string, int>>>();
  for (const lcd::Document& doc : originals.documents) {
    auto& by_raw = (*positions)[doc.id];
    for (std::size_t i = 0; i < doc.size(); ++i) {
      by_raw[doc.sentences[i].raw] = static_cast<int>(i);
    }
  }
  return [positions](const lcd::Document& doc) {
    const auto& by_raw = positions->at(doc.id);
    int count = 0;
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
      int a = by_raw.at(doc.sentences[i].raw);
      int b = by_raw.at(doc.sentences[i + 1].raw);
      if (b == a + 1) ++count;
    }
    return static_cast<double>(count);
  };
}

}  // namespace lcdtest
