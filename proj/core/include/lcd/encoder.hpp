#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>

#include "lcd/corpus.hpp"

namespace lcd {

using SentenceVector = Eigen::VectorXd;

// Sentence vectors stacked as columns: column 0 is the start marker, columns
// 1..n the sentences, column n+1 the end marker. Shape d x (n+2).
using EncodedDocument = Eigen::MatrixXd;

// Frozen after load; lookups never mutate.
struct EmbeddingTable {
  Eigen::Index dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> entries;
  std::size_t duplicate_warnings = 0;
};

// Each line is "token v1 v2 ... vd". The dimension comes from the first line
// unless expected_dim pins it. Duplicate tokens keep the first vector and
// bump duplicate_warnings. Errors name the offending line.
EmbeddingTable load_embeddings(std::istream& in,
                               std::optional<Eigen::Index> expected_dim = {});

// Mean of the in-vocabulary token vectors; zero vector when nothing matches.
SentenceVector encode_sentence(const EmbeddingTable& table, const Sentence& s);

// Interior sentence vectors only, as columns of a d x n matrix. Useful as a
// cache: the table is frozen, so these never change while boundary vectors do.
Eigen::MatrixXd encode_sentences(const EmbeddingTable& table, const Document& doc);

// [start | enc(s_1) .. enc(s_n) | end]; start/end must have dimension d.
EncodedDocument encode_document(const EmbeddingTable& table, const Document& doc,
                                const SentenceVector& start_vec,
                                const SentenceVector& end_vec);

// Same assembly from a precomputed interior matrix.
EncodedDocument assemble_encoded(const Eigen::MatrixXd& interior,
                                 const SentenceVector& start_vec,
                                 const SentenceVector& end_vec);

}  // namespace lcd
