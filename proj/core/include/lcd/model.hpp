#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <random>
#include <string>

#include "lcd/encoder.hpp"

namespace lcd {

// Ablation switches. Flag spellings: --feature-mode {full,concat},
// --direction {bi,forward}.
enum class FeatureMode { full, concat_only };
enum class DirectionMode { bidirectional, forward_only };

std::string to_flag(FeatureMode mode);
std::string to_flag(DirectionMode mode);
FeatureMode parse_feature_mode(const std::string& flag);
DirectionMode parse_direction_mode(const std::string& flag);

// One directional pair scorer: h = relu(W1 x + b1), score = w2.h + b2.
struct ScorerParams {
  Eigen::MatrixXd W1;  // d_h x feature_dim
  Eigen::VectorXd b1;  // d_h
  Eigen::VectorXd w2;  // d_h
  double b2 = 0.0;
};

struct BidirectionalModel {
  ScorerParams forward;   // scores (S, T)
  ScorerParams backward;  // scores (T, S)
  SentenceVector start_vec;  // trainable, zero at init
  SentenceVector end_vec;
  Eigen::Index d = 0;
  Eigen::Index d_h = 0;
  double margin = 5.0;
  double p_input = 0.6;
  double p_hidden = 0.3;
  FeatureMode feature_mode = FeatureMode::full;
  DirectionMode direction_mode = DirectionMode::bidirectional;
};

// 5d for full ([S | T | S-T | S*T | |S-T|]), 2d for concat_only ([S | T]).
Eigen::Index feature_dim(FeatureMode mode, Eigen::Index d);

Eigen::VectorXd pair_features(const Eigen::VectorXd& S, const Eigen::VectorXd& T,
                              FeatureMode mode);

// Columnwise variant: column k of the result is pair_features(S.col(k), T.col(k)).
Eigen::MatrixXd pair_features_batch(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                    const Eigen::Ref<const Eigen::MatrixXd>& T,
                                    FeatureMode mode);

// Deterministic evaluation-mode score.
double score_pair(const ScorerParams& params, const Eigen::VectorXd& feats);

// Training-mode score with inverted dropout: survivors of the input mask are
// scaled by 1/(1-p_input), survivors of the hidden mask by 1/(1-p_hidden), so
// expected pre-activations match the deterministic pass.
double score_pair(const ScorerParams& params, const Eigen::VectorXd& feats,
                  double p_input, double p_hidden, std::mt19937_64& rng);

// One score per column of feats.
Eigen::VectorXd score_pairs(const ScorerParams& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& feats);

// Mean forward score over consecutive column pairs, averaged with the mean
// backward score on the reversed pairs (forward mean alone in forward_only
// mode). No dropout.
double score_document(const BidirectionalModel& model, const EncodedDocument& enc);

// W1 and w2 uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
ScorerParams init_params(std::mt19937_64& rng, Eigen::Index feature_dim,
                         Eigen::Index d_h);

BidirectionalModel init_model(std::mt19937_64& rng, Eigen::Index d, Eigen::Index d_h,
                              double margin, double p_input, double p_hidden,
                              FeatureMode feature_mode, DirectionMode direction_mode);

// Model file layout, every multi-byte value little-endian:
//   bytes 0..3  magic "LCDM"
//   u32         format version (1)
//   u32 d, u32 d_h, u32 feature mode (0 full, 1 concat), u32 direction mode
//               (0 bidirectional, 1 forward_only)
//   f64 margin, f64 p_input, f64 p_hidden
//   4 arrays    forward scorer [W1 column-major | b1 | w2 | b2], backward
//               scorer, start_vec, end_vec
// where an array is a u64 element count followed by that many f64. Round-trip
// is bit exact.
void save_model(const BidirectionalModel& model, std::ostream& out);
BidirectionalModel load_model(std::istream& in);
void save_model_file(const BidirectionalModel& model, const std::string& path);
BidirectionalModel load_model_file(const std::string& path);

}  // namespace lcd
