#include "lcd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "format.hpp"
#include "lcd/rng.hpp"

namespace lcd {

DocumentScorer make_model_scorer(const BidirectionalModel& model,
                                 const EmbeddingTable& table) {
  return [&model, &table](const Document& doc) {
    return score_document(model,
                          encode_document(table, doc, model.start_vec, model.end_vec));
  };
}

namespace {

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& src,
                               const std::vector<std::size_t>& order) {
  Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) =
        src.col(static_cast<Eigen::Index>(order[k]));
  }
  return out;
}

template <class ScoreOriginal, class ScorePermuted>
EvalReport discrimination_core(const Corpus& docs, int num_perms,
                               std::mt19937_64& rng, ScoreOriginal&& score_original,
                               ScorePermuted&& score_permuted) {
  if (num_perms < 1) throw std::invalid_argument("permutation count must be positive");
  EvalReport report;
  report.task = "discrimination";
  long total_correct = 0;
  for (std::size_t di = 0; di < docs.documents.size(); ++di) {
    const Document& doc = docs.documents[di];
    if (doc.size() < 2) {
      ++report.skipped;
      continue;
    }
    double original = score_original(di);
    int correct = 0;
    for (int p = 0; p < num_perms; ++p) {
      Permutation perm = sample_nonidentity_permutation(doc.size(), rng);
      if (original > score_permuted(di, perm)) ++correct;
    }
    total_correct += correct;
    report.items.push_back(EvalRow{doc.id, correct, num_perms,
                                   static_cast<double>(correct) / num_perms});
  }
  if (report.items.empty()) {
    throw std::runtime_error("all documents too short for discrimination");
  }
  report.aggregate = static_cast<double>(total_correct) /
                     (static_cast<double>(report.items.size()) * num_perms);
  return report;
}

// order of sentence indices after moving position p to position q
std::vector<std::size_t> insertion_order(std::size_t n, std::size_t p,
                                         std::size_t q) {
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k != p) order.push_back(k);
  }
  order.insert(order.begin() + static_cast<std::ptrdiff_t>(q), p);
  return order;
}

template <class ScoreCandidate>
EvalReport insertion_core(const Corpus& docs, ScoreCandidate&& score_candidate) {
  EvalReport report;
  report.task = "insertion";
  double value_sum = 0.0;
  for (std::size_t di = 0; di < docs.documents.size(); ++di) {
    const Document& doc = docs.documents[di];
    const std::size_t n = doc.size();
    if (n < 2) {
      ++report.skipped;
      continue;
    }
    int correct = 0;
    for (std::size_t p = 0; p < n; ++p) {
      std::size_t best_q = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < n; ++q) {
        double s = score_candidate(di, p, q);
        if (s > best) {
          best = s;
          best_q = q;
        }
      }
      if (best_q == p) ++correct;
    }
    double frac = static_cast<double>(correct) / static_cast<double>(n);
    value_sum += frac;
    report.items.push_back(EvalRow{doc.id, correct, static_cast<int>(n), frac});
  }
  if (report.items.empty()) {
    throw std::runtime_error("all documents too short for insertion");
  }
  report.aggregate = value_sum / static_cast<double>(report.items.size());
  return report;
}

}  // namespace

EvalReport discrimination(const DocumentScorer& scorer, const Corpus& docs,
                          int num_perms, std::mt19937_64& rng) {
  return discrimination_core(
      docs, num_perms, rng,
      [&](std::size_t di) { return scorer(docs.documents[di]); },
      [&](std::size_t di, const Permutation& perm) {
        return scorer(apply_permutation(docs.documents[di], perm));
      });
}

EvalReport discrimination(const BidirectionalModel& model, const Corpus& docs,
                          const EmbeddingTable& table, int num_perms,
                          std::mt19937_64& rng) {
  if (table.dim != model.d) {
    throw std::invalid_argument("embedding dimension does not match model");
  }
  std::vector<Eigen::MatrixXd> interiors(docs.documents.size());
  for (std::size_t di = 0; di < docs.documents.size(); ++di) {
    if (docs.documents[di].size() >= 2) {
      interiors[di] = encode_sentences(table, docs.documents[di]);
    }
  }
  return discrimination_core(
      docs, num_perms, rng,
      [&](std::size_t di) {
        return score_document(
            model, assemble_encoded(interiors[di], model.start_vec, model.end_vec));
      },
      [&](std::size_t di, const Permutation& perm) {
        return score_document(
            model, assemble_encoded(gather_columns(interiors[di], perm.order),
                                    model.start_vec, model.end_vec));
      });
}

EvalReport insertion(const DocumentScorer& scorer, const Corpus& docs) {
  return insertion_core(docs, [&](std::size_t di, std::size_t p, std::size_t q) {
    const Document& doc = docs.documents[di];
    Permutation perm{insertion_order(doc.size(), p, q)};
    return scorer(apply_permutation(doc, perm));
  });
}

EvalReport insertion(const BidirectionalModel& model, const Corpus& docs,
                     const EmbeddingTable& table) {
  if (table.dim != model.d) {
    throw std::invalid_argument("embedding dimension does not match model");
  }
  std::vector<Eigen::MatrixXd> interiors(docs.documents.size());
  for (std::size_t di = 0; di < docs.documents.size(); ++di) {
    if (docs.documents[di].size() >= 2) {
      interiors[di] = encode_sentences(table, docs.documents[di]);
    }
  }
  return insertion_core(docs, [&](std::size_t di, std::size_t p, std::size_t q) {
    auto order = insertion_order(docs.documents[di].size(), p, q);
    return score_document(
        model, assemble_encoded(gather_columns(interiors[di], order),
                                model.start_vec, model.end_vec));
  });
}

double kendall_tau(const Permutation& pred, const Permutation& truth) {
  const std::size_t n = pred.order.size();
  if (truth.order.size() != n) {
    throw std::invalid_argument("kendall tau length mismatch");
  }
  if (n < 2) throw std::invalid_argument("kendall tau needs at least 2 items");
  long concordant = 0;
  long discordant = 0;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    for (std::size_t t = s + 1; t < n; ++t) {
      const bool ps = pred.order[s] < pred.order[t];
      const bool ts = truth.order[s] < truth.order[t];
      if (ps == ts) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

std::vector<int> beam_search_order(const Eigen::MatrixXd& pair_scores, int first,
                                   int beam_width) {
  const Eigen::Index rows = pair_scores.rows();
  if (pair_scores.cols() != rows || rows < 3) {
    throw std::invalid_argument("pair score matrix must be square with n+2 rows");
  }
  const int n = static_cast<int>(rows) - 2;
  if (first < 1 || first > n) {
    throw std::invalid_argument("first sentence index out of range");
  }
  if (beam_width < 1) throw std::invalid_argument("beam width must be positive");

  struct State {
    double score;
    std::vector<int> seq;
    std::vector<char> used;  // indexed by row 1..n
  };
  auto better = [](const State& a, const State& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.seq < b.seq;
  };

  State init;
  init.score = pair_scores(0, first);
  init.seq = {first};
  init.used.assign(static_cast<std::size_t>(n) + 1, 0);
  init.used[static_cast<std::size_t>(first)] = 1;

  std::vector<State> beam{std::move(init)};
  std::vector<State> next;
  for (int step = 1; step < n; ++step) {
    next.clear();
    for (const State& state : beam) {
      const int last = state.seq.back();
      for (int v = 1; v <= n; ++v) {
        if (state.used[static_cast<std::size_t>(v)]) continue;
        State child;
        child.score = state.score + pair_scores(last, v);
        child.seq = state.seq;
        child.seq.push_back(v);
        child.used = state.used;
        child.used[static_cast<std::size_t>(v)] = 1;
        next.push_back(std::move(child));
      }
    }
    std::sort(next.begin(), next.end(), better);
    if (static_cast<int>(next.size()) > beam_width) {
      next.resize(static_cast<std::size_t>(beam_width));
    }
    beam.swap(next);
  }

  for (State& state : beam) {
    state.score += pair_scores(state.seq.back(), rows - 1);
  }
  const State& top = *std::min_element(
      beam.begin(), beam.end(),
      [&](const State& a, const State& b) { return better(a, b); });
  return top.seq;
}

Eigen::MatrixXd pair_score_matrix(const BidirectionalModel& model,
                                  const EncodedDocument& enc) {
  const Eigen::Index rows = enc.cols();
  if (rows < 2) throw std::invalid_argument("encoded document needs at least 2 rows");
  Eigen::MatrixXd S(enc.rows(), rows * rows);
  Eigen::MatrixXd T(enc.rows(), rows * rows);
  for (Eigen::Index u = 0; u < rows; ++u) {
    for (Eigen::Index v = 0; v < rows; ++v) {
      S.col(u * rows + v) = enc.col(u);
      T.col(u * rows + v) = enc.col(v);
    }
  }
  Eigen::MatrixXd X = pair_features_batch(S, T, model.feature_mode);
  Eigen::VectorXd f = score_pairs(model.forward, X);
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXd forward_scores = Eigen::Map<RowMajor>(f.data(), rows, rows);
  if (model.direction_mode == DirectionMode::forward_only) return forward_scores;
  Eigen::VectorXd b = score_pairs(model.backward, X);
  Eigen::MatrixXd backward_scores = Eigen::Map<RowMajor>(b.data(), rows, rows);
  return 0.5 * (forward_scores + backward_scores.transpose());
}

ReconstructionResult reconstruct(const BidirectionalModel& model,
                                 const Document& shuffled, int first_index,
                                 const Permutation& original_positions,
                                 const EmbeddingTable& table, int beam_width) {
  const std::size_t n = shuffled.size();
  if (n < 2) throw std::invalid_argument("document too short to reconstruct");
  if (first_index < 0 || static_cast<std::size_t>(first_index) >= n) {
    throw std::invalid_argument("first sentence index out of range");
  }
  if (original_positions.order.size() != n) {
    throw std::invalid_argument("original positions do not match document");
  }
  EncodedDocument enc =
      encode_document(table, shuffled, model.start_vec, model.end_vec);
  Eigen::MatrixXd scores = pair_score_matrix(model, enc);
  std::vector<int> rows = beam_search_order(scores, first_index + 1, beam_width);

  ReconstructionResult result;
  result.predicted.order.reserve(n);
  for (int row : rows) {
    result.predicted.order.push_back(static_cast<std::size_t>(row - 1));
  }
  result.tau = kendall_tau(inverse(result.predicted), original_positions);
  return result;
}

EvalReport reconstruction(const BidirectionalModel& model, const Corpus& docs,
                          const EmbeddingTable& table, int beam_width,
                          std::mt19937_64& rng) {
  EvalReport report;
  report.task = "reconstruction";
  double tau_sum = 0.0;
  for (const Document& doc : docs.documents) {
    if (doc.size() < 2) {
      ++report.skipped;
      continue;
    }
    auto [perm, shuffled] = generate_permutation(doc, rng);
    const int first = static_cast<int>(inverse(perm).order[0]);
    ReconstructionResult res =
        reconstruct(model, shuffled, first, perm, table, beam_width);
    tau_sum += res.tau;
    report.items.push_back(
        EvalRow{doc.id, res.tau == 1.0 ? 1 : 0, 1, res.tau});
  }
  if (report.items.empty()) {
    throw std::runtime_error("all documents too short for reconstruction");
  }
  report.aggregate = tau_sum / static_cast<double>(report.items.size());
  return report;
}

std::vector<CoveragePoint> coverage_sweep(const TrainConfig& config,
                                          const Corpus& train_corpus,
                                          const Corpus& dev_corpus,
                                          const Corpus& test_corpus,
                                          const EmbeddingTable& table,
                                          const std::vector<double>& fractions) {
  if (fractions.empty()) throw std::invalid_argument("no coverage fractions given");
  std::vector<CoveragePoint> points;
  points.reserve(fractions.size());
  for (double phi : fractions) {
    TrainConfig run = config;
    run.coverage = phi;
    auto [model, report] = train(run, train_corpus, dev_corpus, table);
    auto rng_perm = make_rng(config.seed, RngStream::permutations);
    EvalReport eval = discrimination(model, test_corpus, table,
                                     config.dev_permutations, rng_perm);
    points.push_back(CoveragePoint{phi, eval.aggregate});
  }
  return points;
}

double aggregate_article_score(const DocumentScorer& scorer,
                               const std::vector<Document>& paragraphs) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Document& para : paragraphs) {
    if (para.size() < 2) continue;
    sum += scorer(para);
    ++count;
  }
  if (count == 0) throw std::runtime_error("no scorable paragraph");
  return sum / static_cast<double>(count);
}

double aggregate_article_score(const BidirectionalModel& model,
                               const std::vector<Document>& paragraphs,
                               const EmbeddingTable& table) {
  return aggregate_article_score(make_model_scorer(model, table), paragraphs);
}

namespace {

// continued fraction for the incomplete beta, modified Lentz iteration
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-30;
  constexpr double eps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw std::runtime_error("incomplete beta did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) {
    throw std::invalid_argument("incomplete beta needs positive shape parameters");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // the continued fraction converges fast only below the mean; mirror above
  if (x > (a + 1.0) / (a + b + 2.0)) {
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
  }
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  return std::exp(ln_front) * beta_cf(a, b, x) / a;
}

WelchResult welch_one_tailed_t(const std::vector<double>& a,
                               const std::vector<double>& b) {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  if (na < 2 || nb < 2) {
    throw std::invalid_argument("need at least two samples per group");
  }
  auto mean_var = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>{mean, var};
  };
  auto [ma, va] = mean_var(a);
  auto [mb, vb] = mean_var(b);
  if (va == 0.0 && vb == 0.0) throw std::runtime_error("degenerate samples");

  const double sa = va / static_cast<double>(na);
  const double sb = vb / static_cast<double>(nb);
  const double se2 = sa + sb;
  WelchResult result;
  result.t = (ma - mb) / std::sqrt(se2);
  result.df = se2 * se2 /
              (sa * sa / static_cast<double>(na - 1) +
               sb * sb / static_cast<double>(nb - 1));
  const double x = result.df / (result.df + result.t * result.t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * result.df, 0.5, x);
  result.p = result.t >= 0.0 ? tail : 1.0 - tail;
  return result;
}

void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "id,correct,total,value\n";
  for (const EvalRow& row : report.items) {
    out << row.id << ',' << row.correct << ',' << row.total << ','
        << format_double(row.value) << '\n';
  }
}

void write_coverage_csv(const std::vector<CoveragePoint>& points,
                        std::ostream& out) {
  out << "phi,accuracy\n";
  for (const CoveragePoint& p : points) {
    out << format_double(p.phi) << ',' << format_double(p.accuracy) << '\n';
  }
}

std::string summary_line(const EvalReport& report) {
  char buf[256];
  if (report.task == "discrimination") {
    long correct = 0;
    long total = 0;
    for (const EvalRow& row : report.items) {
      correct += row.correct;
      total += row.total;
    }
    std::snprintf(buf, sizeof buf,
                  "discrimination accuracy = %.4f (%ld/%ld comparisons, %zu "
                  "documents, %zu skipped)",
                  report.aggregate, correct, total, report.items.size(),
                  report.skipped);
  } else if (report.task == "insertion") {
    std::snprintf(buf, sizeof buf,
                  "insertion score = %.4f (%zu documents, %zu skipped)",
                  report.aggregate, report.items.size(), report.skipped);
  } else if (report.task == "reconstruction") {
    std::snprintf(buf, sizeof buf,
                  "reconstruction mean tau = %.4f (%zu documents, %zu skipped)",
                  report.aggregate, report.items.size(), report.skipped);
  } else {
    std::snprintf(buf, sizeof buf, "%s aggregate = %.4f", report.task.c_str(),
                  report.aggregate);
  }
  return buf;
}

}  // namespace lcd
