#include "lcd/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "format.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/rng.hpp"

namespace lcd {

std::pair<std::pair<int, int>, std::pair<int, int>> triplet_pairs(const Triplet& t,
                                                                  int total_rows) {
  const int end_row = total_rows - 1;
  std::pair<int, int> pos{t.i, t.i + 1};
  std::pair<int, int> neg =
      t.i + 1 == end_row ? std::pair<int, int>{t.j, end_row}
                         : std::pair<int, int>{t.i, t.j};
  return {pos, neg};
}

double margin_loss(double f_pos, double f_neg, double margin) {
  if (margin <= 0.0) throw std::invalid_argument("margin must be positive");
  return std::max(0.0, margin - f_pos + f_neg);
}

std::vector<std::pair<int, int>> enumerate_negatives(int n) {
  std::vector<std::pair<int, int>> pairs;
  if (n < 3) return pairs;
  pairs.reserve(static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n - 2));
  for (int i = 1; i <= n - 1; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (j == i || j == i + 1) continue;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

NegativeSet full_negative_set(int n) {
  NegativeSet set;
  if (n < 1) return set;
  set.by_anchor.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (j == i || j == i + 1) continue;
      set.by_anchor[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  return set;
}

NegativeSet restrict_coverage(const Document& doc, double phi, std::mt19937_64& rng) {
  if (!(phi > 0.0) || phi > 1.0) {
    throw std::invalid_argument("coverage fraction must be in (0,1]");
  }
  const int n = static_cast<int>(doc.size());
  NegativeSet set = full_negative_set(n);
  auto all = enumerate_negatives(n);
  if (phi >= 1.0 || all.empty()) return set;

  // tolerance keeps ceil from rounding an exact product up
  auto keep = [phi](std::size_t count) {
    auto want = static_cast<std::size_t>(
        std::ceil(phi * static_cast<double>(count) - 1e-9));
    return std::clamp<std::size_t>(want, 1, count);
  };

  std::shuffle(all.begin(), all.end(), rng);
  all.resize(keep(all.size()));
  for (int i = 1; i <= n - 1; ++i) set.by_anchor[static_cast<std::size_t>(i)].clear();
  for (auto [i, j] : all) set.by_anchor[static_cast<std::size_t>(i)].push_back(j);
  for (int i = 1; i <= n - 1; ++i) {
    auto& v = set.by_anchor[static_cast<std::size_t>(i)];
    std::sort(v.begin(), v.end());
  }

  // boundary anchors are cut by the same fraction of their own candidates
  for (int i : {0, n}) {
    auto& v = set.by_anchor[static_cast<std::size_t>(i)];
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(keep(v.size()));
    std::sort(v.begin(), v.end());
  }
  return set;
}

std::vector<Triplet> sample_triplets(const Document& doc, int k, std::mt19937_64& rng,
                                     const NegativeSet* allowed) {
  const int n = static_cast<int>(doc.size());
  if (n < 3) {
    throw std::invalid_argument("document too short for negative sampling: " + doc.id);
  }
  if (k < 1) throw std::invalid_argument("triplet count must be positive");

  NegativeSet full;
  if (!allowed) {
    full = full_negative_set(n);
    allowed = &full;
  }
  if (allowed->by_anchor.size() != static_cast<std::size_t>(n) + 1) {
    throw std::invalid_argument("negative set does not match document: " + doc.id);
  }

  std::vector<int> anchors;
  for (int i = 0; i <= n; ++i) {
    if (!allowed->by_anchor[static_cast<std::size_t>(i)].empty()) anchors.push_back(i);
  }
  if (anchors.empty()) {
    throw std::runtime_error("no valid negatives for document " + doc.id);
  }

  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    int i = anchors[pick_anchor(rng)];
    const auto& cands = allowed->by_anchor[static_cast<std::size_t>(i)];
    std::uniform_int_distribution<std::size_t> pick_neg(0, cands.size() - 1);
    out.push_back(Triplet{i, cands[pick_neg(rng)]});
  }
  return out;
}

ModelGradients zero_gradients(const BidirectionalModel& model) {
  ModelGradients g;
  auto zero_scorer = [](const ScorerParams& p) {
    ScorerParams z;
    z.W1 = Eigen::MatrixXd::Zero(p.W1.rows(), p.W1.cols());
    z.b1 = Eigen::VectorXd::Zero(p.b1.size());
    z.w2 = Eigen::VectorXd::Zero(p.w2.size());
    z.b2 = 0.0;
    return z;
  };
  g.forward = zero_scorer(model.forward);
  g.backward = zero_scorer(model.backward);
  g.start_vec = SentenceVector::Zero(model.start_vec.size());
  g.end_vec = SentenceVector::Zero(model.end_vec.size());
  return g;
}

namespace {

void validate_batch(const BidirectionalModel& model, const EncodedDocument& enc,
                    const std::vector<Triplet>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty triplet batch");
  if (enc.rows() != model.d) throw std::invalid_argument("encoded dimension mismatch");
  const int end_row = static_cast<int>(enc.cols()) - 1;
  for (const Triplet& t : batch) {
    if (t.i < 0 || t.i >= end_row || t.j < 1 || t.j >= end_row || t.j == t.i ||
        t.j == t.i + 1) {
      throw std::invalid_argument("triplet indices out of range");
    }
  }
}

}  // namespace

double triplet_batch_loss(const BidirectionalModel& model, const EncodedDocument& enc,
                          const std::vector<Triplet>& batch) {
  validate_batch(model, enc, batch);
  const int total_rows = static_cast<int>(enc.cols());
  const bool bi = model.direction_mode == DirectionMode::bidirectional;
  double total = 0.0;
  for (const Triplet& t : batch) {
    auto [pos, neg] = triplet_pairs(t, total_rows);
    double fp = score_pair(model.forward, pair_features(enc.col(pos.first),
                                                        enc.col(pos.second),
                                                        model.feature_mode));
    double fn = score_pair(model.forward, pair_features(enc.col(neg.first),
                                                        enc.col(neg.second),
                                                        model.feature_mode));
    total += margin_loss(fp, fn, model.margin);
    if (bi) {
      double bp = score_pair(model.backward, pair_features(enc.col(pos.second),
                                                           enc.col(pos.first),
                                                           model.feature_mode));
      double bn = score_pair(model.backward, pair_features(enc.col(neg.second),
                                                           enc.col(neg.first),
                                                           model.feature_mode));
      total += margin_loss(bp, bn, model.margin);
    }
  }
  return total / static_cast<double>(batch.size());
}

double compute_gradients(const BidirectionalModel& model, const EncodedDocument& enc,
                         const std::vector<Triplet>& batch, ModelGradients& grads,
                         std::mt19937_64* dropout_rng) {
  validate_batch(model, enc, batch);
  grads = zero_gradients(model);

  const int total_rows = static_cast<int>(enc.cols());
  const int end_row = total_rows - 1;
  const int k = static_cast<int>(batch.size());
  const Eigen::Index d = enc.rows();
  const Eigen::Index cols = 2 * static_cast<Eigen::Index>(k);

  // columns 0..k-1 hold the positive pairs, k..2k-1 the negatives
  std::vector<int> first(static_cast<std::size_t>(cols));
  std::vector<int> second(static_cast<std::size_t>(cols));
  for (int t = 0; t < k; ++t) {
    auto [pos, neg] = triplet_pairs(batch[static_cast<std::size_t>(t)], total_rows);
    first[static_cast<std::size_t>(t)] = pos.first;
    second[static_cast<std::size_t>(t)] = pos.second;
    first[static_cast<std::size_t>(k + t)] = neg.first;
    second[static_cast<std::size_t>(k + t)] = neg.second;
  }

  auto fill_mask = [&](Eigen::MatrixXd& mask, Eigen::Index rows, double keep) {
    mask.resize(rows, cols);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inv = 1.0 / keep;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      mask.data()[i] = unif(*dropout_rng) < keep ? inv : 0.0;
    }
  };

  // One directional pass: S/T column c comes from rows srows[c]/trows[c].
  auto run_direction = [&](const ScorerParams& params, ScorerParams& gp,
                           const std::vector<int>& srows,
                           const std::vector<int>& trows) -> double {
    Eigen::MatrixXd S(d, cols), T(d, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      S.col(c) = enc.col(srows[static_cast<std::size_t>(c)]);
      T.col(c) = enc.col(trows[static_cast<std::size_t>(c)]);
    }
    Eigen::MatrixXd X = pair_features_batch(S, T, model.feature_mode);

    Eigen::MatrixXd mask_x, mask_h;
    if (dropout_rng) {
      fill_mask(mask_x, X.rows(), 1.0 - model.p_input);
      X = X.cwiseProduct(mask_x);
      fill_mask(mask_h, model.d_h, 1.0 - model.p_hidden);
    }

    Eigen::MatrixXd A = (params.W1 * X).colwise() + params.b1;
    Eigen::MatrixXd H = A.cwiseMax(0.0);
    if (dropout_rng) H = H.cwiseProduct(mask_h);
    Eigen::VectorXd s = (H.transpose() * params.w2).array() + params.b2;

    Eigen::VectorXd ds = Eigen::VectorXd::Zero(cols);
    double dir_loss = 0.0;
    const double inv_k = 1.0 / static_cast<double>(k);
    for (int t = 0; t < k; ++t) {
      double m = model.margin - s[t] + s[k + t];
      if (m > 0.0) {
        dir_loss += m;
        ds[t] -= inv_k;
        ds[k + t] += inv_k;
      }
    }

    gp.w2 += H * ds;
    gp.b2 += ds.sum();
    Eigen::MatrixXd dH = params.w2 * ds.transpose();
    if (dropout_rng) dH = dH.cwiseProduct(mask_h);
    Eigen::MatrixXd dA = (A.array() > 0.0).select(dH, 0.0);
    gp.W1 += dA * X.transpose();
    gp.b1 += dA.rowwise().sum();
    Eigen::MatrixXd dX = params.W1.transpose() * dA;
    if (dropout_rng) dX = dX.cwiseProduct(mask_x);

    // route feature gradients into the trainable boundary rows
    const bool full = model.feature_mode == FeatureMode::full;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const int u = srows[static_cast<std::size_t>(c)];
      const int v = trows[static_cast<std::size_t>(c)];
      const bool ub = u == 0 || u == end_row;
      const bool vb = v == 0 || v == end_row;
      if (!ub && !vb) continue;
      auto g0 = dX.block(0, c, d, 1);
      auto g1 = dX.block(d, c, d, 1);
      if (ub) {
        Eigen::VectorXd dS = g0;
        if (full) {
          auto g2 = dX.block(2 * d, c, d, 1);
          auto g3 = dX.block(3 * d, c, d, 1);
          auto g4 = dX.block(4 * d, c, d, 1);
          Eigen::ArrayXd sgn = (S.col(c) - T.col(c)).array().sign();
          dS += g2 + g3.cwiseProduct(T.col(c)) +
                (g4.array() * sgn).matrix();
        }
        (u == 0 ? grads.start_vec : grads.end_vec) += dS;
      }
      if (vb) {
        Eigen::VectorXd dT = g1;
        if (full) {
          auto g2 = dX.block(2 * d, c, d, 1);
          auto g3 = dX.block(3 * d, c, d, 1);
          auto g4 = dX.block(4 * d, c, d, 1);
          Eigen::ArrayXd sgn = (S.col(c) - T.col(c)).array().sign();
          dT += -g2 + g3.cwiseProduct(S.col(c)) -
                (g4.array() * sgn).matrix();
        }
        (v == 0 ? grads.start_vec : grads.end_vec) += dT;
      }
    }
    return dir_loss * inv_k;
  };

  double loss = run_direction(model.forward, grads.forward, first, second);
  if (model.direction_mode == DirectionMode::bidirectional) {
    loss += run_direction(model.backward, grads.backward, second, first);
  }
  return loss;
}

AdamState make_adam_state(const BidirectionalModel& model, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
  AdamState state;
  state.lr = lr;
  state.m = zero_gradients(model);
  state.v = zero_gradients(model);
  return state;
}

void adam_step(AdamState& state, BidirectionalModel& model,
               const ModelGradients& grads) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = (state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square()).matrix();
    param.array() -=
        state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  };
  auto update_scalar = [&](double& param, double& m, double& v, double g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    param -= state.lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
  };

  update(model.forward.W1, state.m.forward.W1, state.v.forward.W1, grads.forward.W1);
  update(model.forward.b1, state.m.forward.b1, state.v.forward.b1, grads.forward.b1);
  update(model.forward.w2, state.m.forward.w2, state.v.forward.w2, grads.forward.w2);
  update_scalar(model.forward.b2, state.m.forward.b2, state.v.forward.b2,
                grads.forward.b2);
  update(model.backward.W1, state.m.backward.W1, state.v.backward.W1,
         grads.backward.W1);
  update(model.backward.b1, state.m.backward.b1, state.v.backward.b1,
         grads.backward.b1);
  update(model.backward.w2, state.m.backward.w2, state.v.backward.w2,
         grads.backward.w2);
  update_scalar(model.backward.b2, state.m.backward.b2, state.v.backward.b2,
                grads.backward.b2);
  update(model.start_vec, state.m.start_vec, state.v.start_vec, grads.start_vec);
  update(model.end_vec, state.m.end_vec, state.v.end_vec, grads.end_vec);
}

void write_train_csv(const TrainReport& report, std::ostream& out) {
  out << "epoch,loss,dev_accuracy\n";
  for (const EpochStats& e : report.epochs) {
    out << e.epoch << ',' << format_double(e.loss) << ','
        << format_double(e.dev_accuracy) << '\n';
  }
}

std::pair<BidirectionalModel, TrainReport> train(const TrainConfig& config,
                                                 const Corpus& train_corpus,
                                                 const Corpus& dev_corpus,
                                                 const EmbeddingTable& table) {
  if (table.dim < 1) throw std::invalid_argument("embedding table is empty");
  if (config.triplets_per_doc < 1) {
    throw std::invalid_argument("triplets per document must be positive");
  }
  if (config.max_epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (config.patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (config.dev_permutations < 1) {
    throw std::invalid_argument("dev permutations must be positive");
  }
  if (dev_corpus.documents.empty()) throw std::invalid_argument("dev corpus is empty");

  std::vector<const Document*> docs;
  for (const Document& doc : train_corpus.documents) {
    if (doc.size() >= 3) docs.push_back(&doc);
  }
  if (docs.empty()) {
    throw std::runtime_error("no trainable documents (need at least 3 sentences)");
  }

  auto rng_init = make_rng(config.seed, RngStream::init);
  BidirectionalModel model =
      init_model(rng_init, table.dim, config.d_h, config.margin, config.p_input,
                 config.p_hidden, config.feature_mode, config.direction_mode);

  // the table is frozen, so interior encodings never change across epochs
  std::vector<Eigen::MatrixXd> interiors;
  interiors.reserve(docs.size());
  for (const Document* doc : docs) interiors.push_back(encode_sentences(table, *doc));

  std::vector<NegativeSet> allowed;
  if (config.coverage < 1.0) {
    auto rng_cov = make_rng(config.seed, RngStream::coverage);
    allowed.reserve(docs.size());
    for (const Document* doc : docs) {
      allowed.push_back(restrict_coverage(*doc, config.coverage, rng_cov));
    }
  }

  AdamState adam = make_adam_state(model, config.lr);
  auto rng_sample = make_rng(config.seed, RngStream::sampling);
  auto rng_dropout = make_rng(config.seed, RngStream::dropout);
  const bool use_dropout = config.p_input > 0.0 || config.p_hidden > 0.0;

  TrainReport report;
  BidirectionalModel best = model;
  double best_acc = -1.0;
  int best_epoch = 0;
  ModelGradients grads;

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_sample);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      auto batch = sample_triplets(*docs[idx], config.triplets_per_doc, rng_sample,
                                   allowed.empty() ? nullptr : &allowed[idx]);
      EncodedDocument enc =
          assemble_encoded(interiors[idx], model.start_vec, model.end_vec);
      loss_sum += compute_gradients(model, enc, batch, grads,
                                    use_dropout ? &rng_dropout : nullptr);
      adam_step(adam, model, grads);
    }
    double epoch_loss = loss_sum / static_cast<double>(docs.size());

    // fresh generator per epoch keeps the dev permutations identical across
    // epochs, so accuracies are comparable
    auto rng_perm = make_rng(config.seed, RngStream::permutations);
    EvalReport dev = discrimination(model, dev_corpus, table,
                                    config.dev_permutations, rng_perm);
    report.epochs.push_back(EpochStats{epoch, epoch_loss, dev.aggregate});

    if (dev.aggregate > best_acc) {
      best_acc = dev.aggregate;
      best = model;
      best_epoch = epoch;
    }
    if (epoch - best_epoch >= config.patience) {
      report.stop_reason = "early_stop";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
  report.best_epoch = best_epoch;
  report.best_dev_accuracy = best_acc;
  return {std::move(best), std::move(report)};
}

}  // namespace lcd
