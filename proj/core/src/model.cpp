#include "lcd/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace lcd {

std::string to_flag(FeatureMode mode) {
  return mode == FeatureMode::full ? "full" : "concat";
}

std::string to_flag(DirectionMode mode) {
  return mode == DirectionMode::bidirectional ? "bi" : "forward";
}

FeatureMode parse_feature_mode(const std::string& flag) {
  if (flag == "full") return FeatureMode::full;
  if (flag == "concat") return FeatureMode::concat_only;
  throw std::invalid_argument("unknown feature mode '" + flag + "'");
}

DirectionMode parse_direction_mode(const std::string& flag) {
  if (flag == "bi") return DirectionMode::bidirectional;
  if (flag == "forward") return DirectionMode::forward_only;
  throw std::invalid_argument("unknown direction mode '" + flag + "'");
}

Eigen::Index feature_dim(FeatureMode mode, Eigen::Index d) {
  return mode == FeatureMode::full ? 5 * d : 2 * d;
}

Eigen::VectorXd pair_features(const Eigen::VectorXd& S, const Eigen::VectorXd& T,
                              FeatureMode mode) {
  return pair_features_batch(S, T, mode).col(0);
}

Eigen::MatrixXd pair_features_batch(const Eigen::Ref<const Eigen::MatrixXd>& S,
                                    const Eigen::Ref<const Eigen::MatrixXd>& T,
                                    FeatureMode mode) {
  if (S.rows() != T.rows() || S.cols() != T.cols()) {
    throw std::invalid_argument("pair feature dimension mismatch");
  }
  Eigen::Index d = S.rows();
  Eigen::MatrixXd X(feature_dim(mode, d), S.cols());
  X.topRows(d) = S;
  X.middleRows(d, d) = T;
  if (mode == FeatureMode::full) {
    X.middleRows(2 * d, d) = S - T;
    X.middleRows(3 * d, d) = S.cwiseProduct(T);
    X.middleRows(4 * d, d) = (S - T).cwiseAbs();
  }
  return X;
}

double score_pair(const ScorerParams& params, const Eigen::VectorXd& feats) {
  if (params.W1.cols() != feats.size()) {
    throw std::invalid_argument("feature shape mismatch");
  }
  Eigen::VectorXd h = (params.W1 * feats + params.b1).cwiseMax(0.0);
  return params.w2.dot(h) + params.b2;
}

double score_pair(const ScorerParams& params, const Eigen::VectorXd& feats,
                  double p_input, double p_hidden, std::mt19937_64& rng) {
  if (p_input < 0.0 || p_input >= 1.0 || p_hidden < 0.0 || p_hidden >= 1.0) {
    throw std::invalid_argument("dropout probability must be in [0,1)");
  }
  if (params.W1.cols() != feats.size()) {
    throw std::invalid_argument("feature shape mismatch");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_x = 1.0 - p_input;
  Eigen::VectorXd x = feats;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = unif(rng) < keep_x ? x[i] / keep_x : 0.0;
  }
  Eigen::VectorXd h = (params.W1 * x + params.b1).cwiseMax(0.0);
  const double keep_h = 1.0 - p_hidden;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    h[i] = unif(rng) < keep_h ? h[i] / keep_h : 0.0;
  }
  return params.w2.dot(h) + params.b2;
}

Eigen::VectorXd score_pairs(const ScorerParams& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& feats) {
  if (params.W1.cols() != feats.rows()) {
    throw std::invalid_argument("feature shape mismatch");
  }
  Eigen::MatrixXd h = ((params.W1 * feats).colwise() + params.b1).cwiseMax(0.0);
  return (h.transpose() * params.w2).array() + params.b2;
}

double score_document(const BidirectionalModel& model, const EncodedDocument& enc) {
  if (enc.cols() < 2) {
    throw std::invalid_argument("encoded document needs at least 2 rows");
  }
  Eigen::Index npairs = enc.cols() - 1;
  auto S = enc.leftCols(npairs);
  auto T = enc.rightCols(npairs);
  double fwd =
      score_pairs(model.forward, pair_features_batch(S, T, model.feature_mode)).mean();
  if (model.direction_mode == DirectionMode::forward_only) return fwd;
  double bwd =
      score_pairs(model.backward, pair_features_batch(T, S, model.feature_mode)).mean();
  return 0.5 * (fwd + bwd);
}

ScorerParams init_params(std::mt19937_64& rng, Eigen::Index feature_dim,
                         Eigen::Index d_h) {
  if (feature_dim < 1 || d_h < 1) throw std::invalid_argument("bad scorer shape");
  ScorerParams p;
  p.W1.resize(d_h, feature_dim);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(feature_dim + d_h));
  std::uniform_real_distribution<double> u1(-lim1, lim1);
  for (Eigen::Index i = 0; i < p.W1.size(); ++i) p.W1.data()[i] = u1(rng);
  p.b1 = Eigen::VectorXd::Zero(d_h);
  const double lim2 = std::sqrt(6.0 / static_cast<double>(d_h + 1));
  std::uniform_real_distribution<double> u2(-lim2, lim2);
  p.w2.resize(d_h);
  for (Eigen::Index i = 0; i < d_h; ++i) p.w2[i] = u2(rng);
  p.b2 = 0.0;
  return p;
}

BidirectionalModel init_model(std::mt19937_64& rng, Eigen::Index d, Eigen::Index d_h,
                              double margin, double p_input, double p_hidden,
                              FeatureMode feature_mode, DirectionMode direction_mode) {
  if (d < 1 || d_h < 1) throw std::invalid_argument("bad model shape");
  if (margin <= 0.0) throw std::invalid_argument("margin must be positive");
  if (p_input < 0.0 || p_input >= 1.0 || p_hidden < 0.0 || p_hidden >= 1.0) {
    throw std::invalid_argument("dropout probability must be in [0,1)");
  }
  BidirectionalModel m;
  m.d = d;
  m.d_h = d_h;
  m.margin = margin;
  m.p_input = p_input;
  m.p_hidden = p_hidden;
  m.feature_mode = feature_mode;
  m.direction_mode = direction_mode;
  m.forward = init_params(rng, feature_dim(feature_mode, d), d_h);
  m.backward = init_params(rng, feature_dim(feature_mode, d), d_h);
  m.start_vec = SentenceVector::Zero(d);
  m.end_vec = SentenceVector::Zero(d);
  return m;
}

namespace {

constexpr char kMagic[4] = {'L', 'C', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("unexpected end of model file");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error("unexpected end of model file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void write_array(std::ostream& out, const double* data, std::uint64_t count) {
  write_u64(out, count);
  for (std::uint64_t i = 0; i < count; ++i) write_f64(out, data[i]);
}

void write_scorer(std::ostream& out, const ScorerParams& p) {
  std::uint64_t count = static_cast<std::uint64_t>(p.W1.size() + p.b1.size() +
                                                   p.w2.size()) + 1;
  write_u64(out, count);
  for (Eigen::Index i = 0; i < p.W1.size(); ++i) write_f64(out, p.W1.data()[i]);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) write_f64(out, p.b1[i]);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) write_f64(out, p.w2[i]);
  write_f64(out, p.b2);
}

void read_into(std::istream& in, double* data, std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) data[i] = read_f64(in);
}

ScorerParams read_scorer(std::istream& in, Eigen::Index feature_dim,
                         Eigen::Index d_h) {
  std::uint64_t count = read_u64(in);
  std::uint64_t expected =
      static_cast<std::uint64_t>(d_h) * static_cast<std::uint64_t>(feature_dim) +
      2 * static_cast<std::uint64_t>(d_h) + 1;
  if (count != expected) {
    throw std::runtime_error("model file is corrupt (parameter count mismatch)");
  }
  ScorerParams p;
  p.W1.resize(d_h, feature_dim);
  p.b1.resize(d_h);
  p.w2.resize(d_h);
  read_into(in, p.W1.data(), static_cast<std::uint64_t>(p.W1.size()));
  read_into(in, p.b1.data(), static_cast<std::uint64_t>(d_h));
  read_into(in, p.w2.data(), static_cast<std::uint64_t>(d_h));
  p.b2 = read_f64(in);
  return p;
}

Eigen::VectorXd read_vector(std::istream& in, Eigen::Index expected) {
  std::uint64_t count = read_u64(in);
  if (count != static_cast<std::uint64_t>(expected)) {
    throw std::runtime_error("model file is corrupt (parameter count mismatch)");
  }
  Eigen::VectorXd v(expected);
  read_into(in, v.data(), count);
  return v;
}

}  // namespace

void save_model(const BidirectionalModel& model, std::ostream& out) {
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(model.d));
  write_u32(out, static_cast<std::uint32_t>(model.d_h));
  write_u32(out, model.feature_mode == FeatureMode::full ? 0u : 1u);
  write_u32(out, model.direction_mode == DirectionMode::bidirectional ? 0u : 1u);
  write_f64(out, model.margin);
  write_f64(out, model.p_input);
  write_f64(out, model.p_hidden);
  write_scorer(out, model.forward);
  write_scorer(out, model.backward);
  write_array(out, model.start_vec.data(),
              static_cast<std::uint64_t>(model.start_vec.size()));
  write_array(out, model.end_vec.data(),
              static_cast<std::uint64_t>(model.end_vec.size()));
  if (!out) throw std::runtime_error("model write failed");
}

BidirectionalModel load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not an LCD model file");
  }
  std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported model file version " +
                             std::to_string(version));
  }
  BidirectionalModel m;
  m.d = static_cast<Eigen::Index>(read_u32(in));
  m.d_h = static_cast<Eigen::Index>(read_u32(in));
  std::uint32_t fmode = read_u32(in);
  std::uint32_t dmode = read_u32(in);
  if (m.d < 1 || m.d_h < 1 || fmode > 1 || dmode > 1) {
    throw std::runtime_error("model file is corrupt (bad header)");
  }
  m.feature_mode = fmode == 0 ? FeatureMode::full : FeatureMode::concat_only;
  m.direction_mode = dmode == 0 ? DirectionMode::bidirectional
                                : DirectionMode::forward_only;
  m.margin = read_f64(in);
  m.p_input = read_f64(in);
  m.p_hidden = read_f64(in);
  Eigen::Index fdim = feature_dim(m.feature_mode, m.d);
  m.forward = read_scorer(in, fdim, m.d_h);
  m.backward = read_scorer(in, fdim, m.d_h);
  m.start_vec = read_vector(in, m.d);
  m.end_vec = read_vector(in, m.d);
  return m;
}

void save_model_file(const BidirectionalModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  save_model(model, out);
}

BidirectionalModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace lcd
