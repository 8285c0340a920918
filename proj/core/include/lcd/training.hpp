#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lcd/corpus.hpp"
#include "lcd/encoder.hpp"
#include "lcd/model.hpp"

namespace lcd {

// Indices live in the encoded row space of one document: row 0 is START,
// rows 1..n the sentences, row n+1 END. The positive pair is (i, i+1); the
// negative pair replaces the pair's real-sentence element with row j.
struct Triplet {
  int i;  // anchor, 0..n
  int j;  // negative sentence row, 1..n with j != i and j != i+1
};

// Row pairs actually scored for a triplet: {positive, negative}. total_rows
// is n+2. For the (s_n, END) anchor the negative is (j, END); everywhere else
// it is (i, j).
std::pair<std::pair<int, int>, std::pair<int, int>> triplet_pairs(const Triplet& t,
                                                                  int total_rows);

double margin_loss(double f_pos, double f_neg, double margin);

// Interior anchors only (i in 1..n-1), negatives j in 1..n minus {i, i+1}.
// (n-1)(n-2) pairs; empty for n < 3.
std::vector<std::pair<int, int>> enumerate_negatives(int n);

// Candidate negative rows per anchor, boundary anchors included.
struct NegativeSet {
  std::vector<std::vector<int>> by_anchor;  // size n+1
};

NegativeSet full_negative_set(int n);

// Keeps ceil(phi * (n-1)(n-2)) uniformly chosen interior pairs (at least
// one); each boundary anchor's candidate list is cut to the same fraction,
// keeping at least one candidate so the (START, s_1) and (s_n, END) anchors
// stay trainable at any phi. Drawn once per run and reused across epochs.
NegativeSet restrict_coverage(const Document& doc, double phi, std::mt19937_64& rng);

// k draws with replacement: anchor uniform over anchors that have candidates,
// then negative uniform over that anchor's candidates. Requires n >= 3.
std::vector<Triplet> sample_triplets(const Document& doc, int k, std::mt19937_64& rng,
                                     const NegativeSet* allowed = nullptr);

// Gradient (or moment) storage shaped like the trainable parameters.
struct ModelGradients {
  ScorerParams forward;
  ScorerParams backward;
  SentenceVector start_vec;
  SentenceVector end_vec;
};

ModelGradients zero_gradients(const BidirectionalModel& model);

// Mean over the batch of the forward-scorer hinge plus the backward-scorer
// hinge (forward hinge alone in forward_only mode). No dropout. Built from
// the single-pair scoring path so it can serve as a finite-difference oracle
// for compute_gradients.
double triplet_batch_loss(const BidirectionalModel& model, const EncodedDocument& enc,
                          const std::vector<Triplet>& batch);

// Analytic gradients of the batch loss through both scorers and into
// start_vec/end_vec wherever a boundary row participates; interior sentence
// rows are frozen. A satisfied hinge contributes no gradient (subgradient 0
// at the boundary). With dropout_rng the pass applies inverted dropout and
// the gradients match that sampled pass exactly. Returns the batch loss.
double compute_gradients(const BidirectionalModel& model, const EncodedDocument& enc,
                         const std::vector<Triplet>& batch, ModelGradients& grads,
                         std::mt19937_64* dropout_rng = nullptr);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  ModelGradients m;  // first moments
  ModelGradients v;  // second moments
};

AdamState make_adam_state(const BidirectionalModel& model, double lr);

// Bias-corrected Adam, no weight decay.
void adam_step(AdamState& state, BidirectionalModel& model,
               const ModelGradients& grads);

struct TrainConfig {
  double lr = 0.001;
  double margin = 5.0;
  Eigen::Index d_h = 500;
  double p_input = 0.6;
  double p_hidden = 0.3;
  int triplets_per_doc = 50;
  int max_epochs = 20;
  int patience = 3;  // 0 stops after the first epoch
  std::uint64_t seed = 0;
  double coverage = 1.0;  // phi, fraction of each document's negative space
  int dev_permutations = 20;
  FeatureMode feature_mode = FeatureMode::full;
  DirectionMode direction_mode = DirectionMode::bidirectional;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::string stop_reason;  // "early_stop" or "max_epochs"
};

// Header "epoch,loss,dev_accuracy", one row per epoch.
void write_train_csv(const TrainReport& report, std::ostream& out);

// One Adam step per document batch of triplets_per_doc triplets, documents
// visited in shuffled order. After each epoch dev discrimination accuracy is
// measured with a fixed permutation stream; the best snapshot is kept and
// training stops once (epoch - best_epoch) >= patience or at max_epochs.
std::pair<BidirectionalModel, TrainReport> train(const TrainConfig& config,
                                                 const Corpus& train_corpus,
                                                 const Corpus& dev_corpus,
                                                 const EmbeddingTable& table);

}  // namespace lcd
