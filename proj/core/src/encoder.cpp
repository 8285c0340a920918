#include "lcd/encoder.hpp"

#include <charconv>
#include <istream>
#include <stdexcept>
#include <vector>

namespace lcd {

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

EmbeddingTable load_embeddings(std::istream& in,
                               std::optional<Eigen::Index> expected_dim) {
  EmbeddingTable table;
  if (expected_dim) {
    if (*expected_dim < 1) throw std::invalid_argument("embedding dimension must be positive");
    table.dim = *expected_dim;
  }

  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end && *p == ' ') ++p;
    const char* tok_begin = p;
    while (p < end && *p != ' ') ++p;
    if (p == tok_begin) line_error(line_no, "missing token");
    std::string token(tok_begin, p);

    values.clear();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      const char* num_begin = p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || (next < end && *next != ' ')) {
        while (p < end && *p != ' ') ++p;
        line_error(line_no, "bad number '" + std::string(num_begin, p) + "'");
      }
      values.push_back(v);
      p = next;
    }

    if (values.empty()) line_error(line_no, "no values");
    auto count = static_cast<Eigen::Index>(values.size());
    if (table.dim == 0) {
      table.dim = count;
    } else if (count != table.dim) {
      line_error(line_no, "expected " + std::to_string(table.dim) + " values, got " +
                              std::to_string(values.size()));
    }

    if (table.entries.count(token)) {
      ++table.duplicate_warnings;
      continue;
    }
    table.entries.emplace(std::move(token),
                          Eigen::Map<const Eigen::VectorXd>(values.data(), count));
  }
  if (in.bad()) throw std::runtime_error("embeddings read failed");
  if (table.entries.empty()) throw std::runtime_error("empty embeddings");
  return table;
}

SentenceVector encode_sentence(const EmbeddingTable& table, const Sentence& s) {
  SentenceVector acc = SentenceVector::Zero(table.dim);
  std::size_t hits = 0;
  for (const Token& tok : s.tokens) {
    auto it = table.entries.find(tok);
    if (it == table.entries.end()) continue;
    acc += it->second;
    ++hits;
  }
  if (hits > 0) acc /= static_cast<double>(hits);
  return acc;
}

Eigen::MatrixXd encode_sentences(const EmbeddingTable& table, const Document& doc) {
  Eigen::MatrixXd interior(table.dim, static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    interior.col(static_cast<Eigen::Index>(i)) = encode_sentence(table, doc.sentences[i]);
  }
  return interior;
}

EncodedDocument assemble_encoded(const Eigen::MatrixXd& interior,
                                 const SentenceVector& start_vec,
                                 const SentenceVector& end_vec) {
  if (start_vec.size() != interior.rows() || end_vec.size() != interior.rows()) {
    throw std::invalid_argument("start/end vector dimension mismatch");
  }
  EncodedDocument enc(interior.rows(), interior.cols() + 2);
  enc.col(0) = start_vec;
  if (interior.cols() > 0) enc.middleCols(1, interior.cols()) = interior;
  enc.col(enc.cols() - 1) = end_vec;
  return enc;
}

EncodedDocument encode_document(const EmbeddingTable& table, const Document& doc,
                                const SentenceVector& start_vec,
                                const SentenceVector& end_vec) {
  if (start_vec.size() != table.dim || end_vec.size() != table.dim) {
    throw std::invalid_argument("start/end vector dimension mismatch");
  }
  return assemble_encoded(encode_sentences(table, doc), start_vec, end_vec);
}

}  // namespace lcd
