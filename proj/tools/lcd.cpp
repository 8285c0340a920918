// Command line front end: train, eval, score.
// Exit codes: 0 success, 1 data or runtime error, 2 usage error.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcd/corpus.hpp"
#include "lcd/encoder.hpp"
#include "lcd/evaluation.hpp"
#include "lcd/model.hpp"
#include "lcd/rng.hpp"
#include "lcd/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct HyperOpts {
  double lr = 0.001;
  double margin = 5.0;
  long hidden = 500;
  double dropout_input = 0.6;
  double dropout_hidden = 0.3;
  int triplets_per_doc = 50;
  int epochs = 20;
  int patience = 3;
  double coverage = 1.0;
  std::string feature_mode = "full";
  std::string direction = "bi";
};

void add_hyper_flags(CLI::App* cmd, HyperOpts& h) {
  cmd->add_option("--lr", h.lr, "learning rate")->capture_default_str();
  cmd->add_option("--margin", h.margin, "ranking margin")->capture_default_str();
  cmd->add_option("--hidden", h.hidden, "hidden layer width")->capture_default_str();
  cmd->add_option("--dropout-input", h.dropout_input, "input dropout probability")
      ->capture_default_str();
  cmd->add_option("--dropout-hidden", h.dropout_hidden, "hidden dropout probability")
      ->capture_default_str();
  cmd->add_option("--triplets-per-doc", h.triplets_per_doc,
                  "triplets sampled per document per epoch")
      ->capture_default_str();
  cmd->add_option("--epochs", h.epochs, "maximum training epochs")
      ->capture_default_str();
  cmd->add_option("--patience", h.patience,
                  "epochs without dev improvement before stopping")
      ->capture_default_str();
  cmd->add_option("--coverage", h.coverage,
                  "fraction of each document's negative space to train on")
      ->capture_default_str();
  cmd->add_option("--feature-mode", h.feature_mode, "pair features: full or concat")
      ->check(CLI::IsMember({"full", "concat"}))
      ->capture_default_str();
  cmd->add_option("--direction", h.direction, "scoring direction: bi or forward")
      ->check(CLI::IsMember({"bi", "forward"}))
      ->capture_default_str();
}

// Returns an error message, or empty when valid.
std::string check_hyper(const HyperOpts& h) {
  if (h.lr <= 0.0) return "--lr must be positive";
  if (h.margin <= 0.0) return "--margin must be positive";
  if (h.hidden < 1) return "--hidden must be at least 1";
  if (h.dropout_input < 0.0 || h.dropout_input >= 1.0) {
    return "--dropout-input must be in [0,1)";
  }
  if (h.dropout_hidden < 0.0 || h.dropout_hidden >= 1.0) {
    return "--dropout-hidden must be in [0,1)";
  }
  if (h.triplets_per_doc < 1) return "--triplets-per-doc must be at least 1";
  if (h.epochs < 1) return "--epochs must be at least 1";
  if (h.patience < 0) return "--patience must be >= 0";
  if (!(h.coverage > 0.0) || h.coverage > 1.0) return "--coverage must be in (0,1]";
  return {};
}

lcd::TrainConfig to_train_config(const HyperOpts& h, std::uint64_t seed,
                                 int permutations) {
  lcd::TrainConfig cfg;
  cfg.lr = h.lr;
  cfg.margin = h.margin;
  cfg.d_h = static_cast<Eigen::Index>(h.hidden);
  cfg.p_input = h.dropout_input;
  cfg.p_hidden = h.dropout_hidden;
  cfg.triplets_per_doc = h.triplets_per_doc;
  cfg.max_epochs = h.epochs;
  cfg.patience = h.patience;
  cfg.seed = seed;
  cfg.coverage = h.coverage;
  cfg.dev_permutations = permutations;
  cfg.feature_mode = lcd::parse_feature_mode(h.feature_mode);
  cfg.direction_mode = lcd::parse_direction_mode(h.direction);
  return cfg;
}

using EchoList = std::vector<std::pair<std::string, std::string>>;

void print_config(const EchoList& entries) {
  std::cout << "config:\n";
  for (const auto& [key, value] : entries) {
    std::cout << "  " << key << " = " << (value.empty() ? "(none)" : value) << "\n";
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void echo_hyper(EchoList& echo, const HyperOpts& h) {
  echo.emplace_back("lr", fmt(h.lr));
  echo.emplace_back("margin", fmt(h.margin));
  echo.emplace_back("hidden", std::to_string(h.hidden));
  echo.emplace_back("dropout-input", fmt(h.dropout_input));
  echo.emplace_back("dropout-hidden", fmt(h.dropout_hidden));
  echo.emplace_back("triplets-per-doc", std::to_string(h.triplets_per_doc));
  echo.emplace_back("epochs", std::to_string(h.epochs));
  echo.emplace_back("patience", std::to_string(h.patience));
  echo.emplace_back("coverage", fmt(h.coverage));
  echo.emplace_back("feature-mode", h.feature_mode);
  echo.emplace_back("direction", h.direction);
}

lcd::Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return lcd::parse_corpus(in);
}

lcd::EmbeddingTable read_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
  return lcd::load_embeddings(in);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct TrainOpts {
  std::string train_path, dev_path, embeddings_path, model_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int permutations = 20;
  HyperOpts hyper;
};

int run_train(const TrainOpts& opt) {
  if (auto msg = check_hyper(opt.hyper); !msg.empty()) {
    std::cerr << "error: " << msg << "\n";
    return kExitUsage;
  }
  if (opt.permutations < 1) {
    std::cerr << "error: --permutations must be at least 1\n";
    return kExitUsage;
  }

  EchoList echo;
  echo.emplace_back("command", "train");
  echo.emplace_back("train", opt.train_path);
  echo.emplace_back("dev", opt.dev_path);
  echo.emplace_back("embeddings", opt.embeddings_path);
  echo.emplace_back("model", opt.model_path);
  echo.emplace_back("out", opt.out_dir);
  echo.emplace_back("seed", std::to_string(opt.seed));
  echo.emplace_back("permutations", std::to_string(opt.permutations));
  echo_hyper(echo, opt.hyper);
  print_config(echo);

  lcd::Corpus train_corpus = read_corpus_file(opt.train_path);
  lcd::Corpus dev_corpus = read_corpus_file(opt.dev_path);
  lcd::EmbeddingTable table = read_embeddings_file(opt.embeddings_path);

  lcd::TrainConfig cfg = to_train_config(opt.hyper, opt.seed, opt.permutations);
  auto [model, report] = lcd::train(cfg, train_corpus, dev_corpus, table);

  for (const lcd::EpochStats& e : report.epochs) {
    std::printf("epoch %d: loss %.6f, dev accuracy %.4f\n", e.epoch, e.loss,
                e.dev_accuracy);
  }
  std::printf("best dev accuracy = %.4f (epoch %d, %s)\n",
              report.best_dev_accuracy, report.best_epoch,
              report.stop_reason.c_str());

  lcd::save_model_file(model, opt.model_path);
  std::cout << "model written to " << opt.model_path << "\n";

  std::ostringstream csv;
  lcd::write_train_csv(report, csv);
  auto csv_path =
      (std::filesystem::path(opt.out_dir) / "train_report.csv").string();
  write_text_file(csv_path, csv.str());
  std::cout << "train report written to " << csv_path << "\n";
  return kExitOk;
}

struct EvalOpts {
  std::string task;
  std::string model_path, test_path, embeddings_path;
  std::string train_path, dev_path;  // coverage only
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int permutations = 20;
  int beam_width = 8;
  std::vector<double> fractions = {0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  HyperOpts hyper;
};

int run_eval(const EvalOpts& opt) {
  if (opt.permutations < 1) {
    std::cerr << "error: --permutations must be at least 1\n";
    return kExitUsage;
  }
  if (opt.beam_width < 1) {
    std::cerr << "error: --beam-width must be at least 1\n";
    return kExitUsage;
  }
  const bool coverage_task = opt.task == "coverage";
  if (coverage_task) {
    if (opt.train_path.empty() || opt.dev_path.empty()) {
      std::cerr << "error: --task coverage needs --train and --dev\n";
      return kExitUsage;
    }
    if (auto msg = check_hyper(opt.hyper); !msg.empty()) {
      std::cerr << "error: " << msg << "\n";
      return kExitUsage;
    }
    for (double phi : opt.fractions) {
      if (!(phi > 0.0) || phi > 1.0) {
        std::cerr << "error: --fractions entries must be in (0,1]\n";
        return kExitUsage;
      }
    }
  } else if (opt.model_path.empty()) {
    std::cerr << "error: --model is required for --task " << opt.task << "\n";
    return kExitUsage;
  }

  EchoList echo;
  echo.emplace_back("command", "eval");
  echo.emplace_back("task", opt.task);
  echo.emplace_back("model", opt.model_path);
  echo.emplace_back("test", opt.test_path);
  echo.emplace_back("embeddings", opt.embeddings_path);
  echo.emplace_back("out", opt.out_dir);
  echo.emplace_back("seed", std::to_string(opt.seed));
  echo.emplace_back("permutations", std::to_string(opt.permutations));
  echo.emplace_back("beam-width", std::to_string(opt.beam_width));
  if (coverage_task) {
    echo.emplace_back("train", opt.train_path);
    echo.emplace_back("dev", opt.dev_path);
    std::string fr;
    for (double phi : opt.fractions) {
      if (!fr.empty()) fr += ",";
      fr += fmt(phi);
    }
    echo.emplace_back("fractions", fr);
    echo_hyper(echo, opt.hyper);
  }
  print_config(echo);

  lcd::Corpus test_corpus = read_corpus_file(opt.test_path);
  lcd::EmbeddingTable table = read_embeddings_file(opt.embeddings_path);
  std::filesystem::path out_dir(opt.out_dir);

  if (coverage_task) {
    lcd::Corpus train_corpus = read_corpus_file(opt.train_path);
    lcd::Corpus dev_corpus = read_corpus_file(opt.dev_path);
    lcd::TrainConfig cfg = to_train_config(opt.hyper, opt.seed, opt.permutations);
    auto points = lcd::coverage_sweep(cfg, train_corpus, dev_corpus, test_corpus,
                                      table, opt.fractions);
    for (const lcd::CoveragePoint& p : points) {
      std::printf("phi %.4f: discrimination accuracy %.4f\n", p.phi, p.accuracy);
    }
    std::ostringstream csv;
    lcd::write_coverage_csv(points, csv);
    auto csv_path = (out_dir / "coverage.csv").string();
    write_text_file(csv_path, csv.str());
    std::cout << "coverage report written to " << csv_path << "\n";
    return kExitOk;
  }

  lcd::BidirectionalModel model = lcd::load_model_file(opt.model_path);
  lcd::EvalReport report;
  if (opt.task == "discrimination") {
    auto rng = lcd::make_rng(opt.seed, lcd::RngStream::permutations);
    report = lcd::discrimination(model, test_corpus, table, opt.permutations, rng);
  } else if (opt.task == "insertion") {
    report = lcd::insertion(model, test_corpus, table);
  } else {  // reconstruct
    auto rng = lcd::make_rng(opt.seed, lcd::RngStream::permutations);
    report = lcd::reconstruction(model, test_corpus, table, opt.beam_width, rng);
  }
  report.seed = opt.seed;

  std::cout << lcd::summary_line(report) << "\n";
  std::ostringstream csv;
  lcd::write_eval_csv(report, csv);
  auto csv_path = (out_dir / (opt.task + "_report.csv")).string();
  write_text_file(csv_path, csv.str());
  std::cout << "report written to " << csv_path << "\n";
  return kExitOk;
}

struct ScoreOpts {
  std::string model_path, embeddings_path;
  std::string doc_path, article_path;
};

int run_score(const ScoreOpts& opt) {
  const bool have_doc = !opt.doc_path.empty();
  const bool have_article = !opt.article_path.empty();
  if (have_doc == have_article) {
    std::cerr << "error: pass exactly one of --doc or --article\n";
    return kExitUsage;
  }

  EchoList echo;
  echo.emplace_back("command", "score");
  echo.emplace_back("model", opt.model_path);
  echo.emplace_back("embeddings", opt.embeddings_path);
  echo.emplace_back(have_doc ? "doc" : "article",
                    have_doc ? opt.doc_path : opt.article_path);
  print_config(echo);

  lcd::BidirectionalModel model = lcd::load_model_file(opt.model_path);
  lcd::EmbeddingTable table = read_embeddings_file(opt.embeddings_path);
  if (table.dim != model.d) {
    throw std::runtime_error("embedding dimension does not match model");
  }

  double score = 0.0;
  if (have_doc) {
    lcd::Corpus corpus = read_corpus_file(opt.doc_path);
    if (corpus.documents.size() != 1) {
      throw std::runtime_error("expected exactly one document in --doc file, found " +
                               std::to_string(corpus.documents.size()));
    }
    const lcd::Document& doc = corpus.documents[0];
    if (doc.size() < 2) throw std::runtime_error("document too short to score");
    score = lcd::score_document(
        model, lcd::encode_document(table, doc, model.start_vec, model.end_vec));
  } else {
    lcd::Corpus corpus = read_corpus_file(opt.article_path);
    score = lcd::aggregate_article_score(model, corpus.documents, table);
  }
  std::cout << "score = " << fmt_exact(score) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local coherence discriminator: pairwise sentence coherence "
               "scoring, training, and evaluation"};
  app.require_subcommand(1);

  TrainOpts train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--train", train_opt.train_path, "training corpus")
      ->required();
  train_cmd->add_option("--dev", train_opt.dev_path, "dev corpus")->required();
  train_cmd
      ->add_option("--embeddings", train_opt.embeddings_path, "embedding text file")
      ->required();
  train_cmd->add_option("--model", train_opt.model_path, "output model file")
      ->required();
  train_cmd->add_option("--out", train_opt.out_dir, "report directory")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opt.seed, "random seed")
      ->capture_default_str();
  train_cmd
      ->add_option("--permutations", train_opt.permutations,
                   "permutations per dev document")
      ->capture_default_str();
  add_hyper_flags(train_cmd, train_opt.hyper);

  EvalOpts eval_opt;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a model");
  eval_cmd
      ->add_option("--task", eval_opt.task,
                   "discrimination, insertion, reconstruct, or coverage")
      ->check(CLI::IsMember({"discrimination", "insertion", "reconstruct",
                             "coverage"}))
      ->required();
  eval_cmd->add_option("--model", eval_opt.model_path, "model file");
  eval_cmd->add_option("--test", eval_opt.test_path, "test corpus")->required();
  eval_cmd
      ->add_option("--embeddings", eval_opt.embeddings_path, "embedding text file")
      ->required();
  eval_cmd->add_option("--train", eval_opt.train_path, "training corpus (coverage)");
  eval_cmd->add_option("--dev", eval_opt.dev_path, "dev corpus (coverage)");
  eval_cmd->add_option("--out", eval_opt.out_dir, "report directory")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_opt.seed, "random seed")
      ->capture_default_str();
  eval_cmd
      ->add_option("--permutations", eval_opt.permutations,
                   "permutations per document")
      ->capture_default_str();
  eval_cmd->add_option("--beam-width", eval_opt.beam_width, "beam width")
      ->capture_default_str();
  eval_cmd
      ->add_option("--fractions", eval_opt.fractions,
                   "coverage fractions, comma separated")
      ->delimiter(',');
  add_hyper_flags(eval_cmd, eval_opt.hyper);

  ScoreOpts score_opt;
  CLI::App* score_cmd = app.add_subcommand("score", "score a document or article");
  score_cmd->add_option("--model", score_opt.model_path, "model file")->required();
  score_cmd
      ->add_option("--embeddings", score_opt.embeddings_path, "embedding text file")
      ->required();
  score_cmd->add_option("--doc", score_opt.doc_path, "single-document corpus file");
  score_cmd->add_option("--article", score_opt.article_path,
                        "article file, one paragraph per block");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_opt);
    if (eval_cmd->parsed()) return run_eval(eval_opt);
    return run_score(score_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
