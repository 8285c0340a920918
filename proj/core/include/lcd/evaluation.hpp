#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "lcd/corpus.hpp"
#include "lcd/encoder.hpp"
#include "lcd/model.hpp"
#include "lcd/training.hpp"

namespace lcd {

// Any document scorer where higher means more coherent; lets stubs and
// oracles stand in for a trained model.
using DocumentScorer = std::function<double(const Document&)>;

// The returned scorer borrows model and table; both must outlive it.
DocumentScorer make_model_scorer(const BidirectionalModel& model,
                                 const EmbeddingTable& table);

struct EvalRow {
  std::string id;
  int correct = 0;
  int total = 0;
  double value = 0.0;
};

struct EvalReport {
  std::string task;
  std::uint64_t seed = 0;  // filled by callers that own the seed
  std::vector<EvalRow> items;
  double aggregate = 0.0;
  std::size_t skipped = 0;  // documents too short for the task
};

// One comparison per document per sampled non-identity permutation; correct
// iff the original strictly outscores the permuted copy (ties lose).
// Aggregate = correct comparisons / all comparisons.
EvalReport discrimination(const DocumentScorer& scorer, const Corpus& docs,
                          int num_perms, std::mt19937_64& rng);
EvalReport discrimination(const BidirectionalModel& model, const Corpus& docs,
                          const EmbeddingTable& table, int num_perms,
                          std::mt19937_64& rng);

// Every sentence is removed and rescored at every position (boundary rows
// reapplied); the highest-scoring position wins, earliest position on ties.
// Per-document value = correctly replaced / n; aggregate = mean over docs.
EvalReport insertion(const DocumentScorer& scorer, const Corpus& docs);
EvalReport insertion(const BidirectionalModel& model, const Corpus& docs,
                     const EmbeddingTable& table);

// Tau-a over all index pairs: (concordant - discordant) / (n(n-1)/2).
// Arguments are position assignments of the same n items.
double kendall_tau(const Permutation& pred, const Permutation& truth);

// Beam search over orderings of rows 1..n of a pair score matrix, where
// pair_scores(u, v) scores v directly following u, row 0 is the start marker
// and row n+1 the end marker. Prefixes are ranked by summed edge scores with
// lexicographic tie-break on the sequence; the end edge joins on completion.
// first (1..n) is the fixed initial row. Returns the winning row sequence.
std::vector<int> beam_search_order(const Eigen::MatrixXd& pair_scores, int first,
                                   int beam_width);

// Bidirectional consecutive-pair scores for all row pairs of an encoded
// document; feeds beam_search_order.
Eigen::MatrixXd pair_score_matrix(const BidirectionalModel& model,
                                  const EncodedDocument& enc);

struct ReconstructionResult {
  Permutation predicted;  // predicted.order[k] = shuffled index placed at k
  double tau = 0.0;
};

// original_positions.order[k] = original position of shuffled sentence k.
// The known starting sentence is pinned to position 0.
ReconstructionResult reconstruct(const BidirectionalModel& model,
                                 const Document& shuffled, int first_index,
                                 const Permutation& original_positions,
                                 const EmbeddingTable& table, int beam_width);

// Task driver: shuffles each document, reveals the true first sentence, and
// reports mean tau between reconstructed and original orders.
EvalReport reconstruction(const BidirectionalModel& model, const Corpus& docs,
                          const EmbeddingTable& table, int beam_width,
                          std::mt19937_64& rng);

struct CoveragePoint {
  double phi = 1.0;
  double accuracy = 0.0;
};

// One full training run per fraction, identical seed throughout, scored by
// test-set discrimination.
std::vector<CoveragePoint> coverage_sweep(const TrainConfig& config,
                                          const Corpus& train_corpus,
                                          const Corpus& dev_corpus,
                                          const Corpus& test_corpus,
                                          const EmbeddingTable& table,
                                          const std::vector<double>& fractions);

// Two-step mean: per-paragraph document score, then an unweighted mean over
// the paragraphs with at least two sentences.
double aggregate_article_score(const DocumentScorer& scorer,
                               const std::vector<Document>& paragraphs);
double aggregate_article_score(const BidirectionalModel& model,
                               const std::vector<Document>& paragraphs,
                               const EmbeddingTable& table);

// I_x(a, b), the regularized incomplete beta function (continued fraction).
double regularized_incomplete_beta(double a, double b, double x);

struct WelchResult {
  double t = 0.0;
  double p = 0.0;   // one-tailed, alternative mean(a) > mean(b)
  double df = 0.0;  // Welch-Satterthwaite degrees of freedom
};

WelchResult welch_one_tailed_t(const std::vector<double>& a,
                               const std::vector<double>& b);

// Header "id,correct,total,value", one row per item.
void write_eval_csv(const EvalReport& report, std::ostream& out);
// Header "phi,accuracy".
void write_coverage_csv(const std::vector<CoveragePoint>& points, std::ostream& out);
// One human-readable aggregate line.
std::string summary_line(const EvalReport& report);

}  // namespace lcd
