// Drives the installed binary end to end through popen. LCD_CLI_PATH is
// injected by the build.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <doctest.h>

#include "lcd/corpus.hpp"
#include "lcd/model.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(LCD_CLI_PATH) + " " + args + " 2>&1";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return res;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) {
    res.output.append(buf, got);
  }
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_subset(const lcdtest::SyntheticData& data, std::size_t lo, std::size_t hi,
                  const fs::path& path) {
  lcd::Corpus part;
  for (std::size_t g = lo; g < hi; ++g) part.documents.push_back(data.corpus.documents[g]);
  std::ofstream out(path);
  lcd::write_corpus(part, out);
}

struct CliFixture {
  fs::path dir;
  std::string train_path, dev_path, test_path, emb_path;
  std::string single_doc, single_sentence, two_docs, article;

  CliFixture() {
    dir = fs::temp_directory_path() / ("lcd-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir);

    lcdtest::SyntheticSpec spec;
    spec.num_docs = 26;
    spec.min_sentences = 4;
    spec.max_sentences = 6;
    spec.dim = 8;
    spec.fillers_per_sentence = 2;
    spec.seed = 91;
    auto data = lcdtest::make_synthetic(spec);

    train_path = (dir / "train.txt").string();
    dev_path = (dir / "dev.txt").string();
    test_path = (dir / "test.txt").string();
    write_subset(data, 0, 18, train_path);
    write_subset(data, 18, 22, dev_path);
    write_subset(data, 22, 26, test_path);

    emb_path = (dir / "emb.txt").string();
    std::ofstream emb(emb_path);
    lcdtest::write_embeddings(data.table, emb);

    single_doc = (dir / "single_doc.txt").string();
    write_subset(data, 22, 23, single_doc);
    two_docs = (dir / "two_docs.txt").string();
    write_subset(data, 23, 25, two_docs);
    article = (dir / "article.txt").string();
    write_subset(data, 23, 26, article);

    single_sentence = (dir / "single_sentence.txt").string();
    std::ofstream one(single_sentence);
    one << data.corpus.documents[22].sentences[0].raw << "\n";
  }

  ~CliFixture() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  std::string hyper_flags() const {
    return "--hidden 12 --triplets-per-doc 8 --epochs 2 --patience 2 "
           "--permutations 4";
  }

  std::string train_cmd(const std::string& model, const std::string& out,
                        std::uint64_t seed) const {
    return "train --train " + train_path + " --dev " + dev_path + " --embeddings " +
           emb_path + " --model " + model + " --out " + out + " --seed " +
           std::to_string(seed) + " " + hyper_flags();
  }
};

CliFixture& fixture() {
  static CliFixture f;
  return f;
}

struct Trained {
  RunResult result;
  std::string model_path;
  fs::path out_dir;
};

const Trained& trained() {
  static Trained t = [] {
    Trained tr;
    tr.out_dir = fixture().dir / "train-out";
    fs::create_directories(tr.out_dir);
    tr.model_path = (tr.out_dir / "model.lcd").string();
    tr.result = run_cli(fixture().train_cmd(tr.model_path, tr.out_dir.string(), 7));
    return tr;
  }();
  return t;
}

}  // namespace

TEST_CASE("train writes a loadable model and a per-epoch report") {
  const Trained& t = trained();
  INFO(t.result.output);
  REQUIRE(t.result.exit_code == 0);
  CHECK(contains(t.result.output, "config:"));
  CHECK(contains(t.result.output, "command = train"));
  CHECK(contains(t.result.output, "seed = 7"));
  CHECK(contains(t.result.output, "best dev accuracy = "));
  CHECK(contains(t.result.output, "model written to " + t.model_path));

  lcd::BidirectionalModel model = lcd::load_model_file(t.model_path);
  CHECK(model.d == 8);
  CHECK(model.forward.W1.rows() == 12);

  auto lines = read_lines(t.out_dir / "train_report.csv");
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "epoch,loss,dev_accuracy");
  std::size_t epoch_lines = 0;
  std::istringstream out(t.result.output);
  std::string line;
  while (std::getline(out, line)) {
    if (line.rfind("epoch ", 0) == 0) ++epoch_lines;
  }
  CHECK(lines.size() == 1 + epoch_lines);
}

TEST_CASE("train rejects missing flags and bad hyperparameters") {
  const CliFixture& f = fixture();
  std::string model = (f.dir / "unused.lcd").string();

  RunResult missing = run_cli("train --train " + f.train_path + " --dev " + f.dev_path +
                              " --model " + model);
  CHECK(missing.exit_code == 2);

  RunResult bad_cov =
      run_cli(f.train_cmd(model, f.dir.string(), 1) + " --coverage 0");
  CHECK(bad_cov.exit_code == 2);
  CHECK(contains(bad_cov.output, "--coverage must be in (0,1]"));

  RunResult bad_epochs = run_cli("train --train " + f.train_path + " --dev " +
                                 f.dev_path + " --embeddings " + f.emb_path +
                                 " --model " + model + " --epochs 0");
  CHECK(bad_epochs.exit_code == 2);
  CHECK(contains(bad_epochs.output, "--epochs must be at least 1"));

  RunResult bad_perms = run_cli("train --train " + f.train_path + " --dev " +
                                f.dev_path + " --embeddings " + f.emb_path +
                                " --model " + model + " --permutations 0");
  CHECK(bad_perms.exit_code == 2);
  CHECK(contains(bad_perms.output, "--permutations must be at least 1"));
}

TEST_CASE("training is reproducible from the seed") {
  const CliFixture& f = fixture();
  fs::path out_a = f.dir / "repro-a";
  fs::path out_b = f.dir / "repro-b";
  fs::create_directories(out_a);
  fs::create_directories(out_b);
  std::string model_a = (out_a / "model.lcd").string();
  std::string model_b = (out_b / "model.lcd").string();

  RunResult ra = run_cli(f.train_cmd(model_a, out_a.string(), 7));
  RunResult rb = run_cli(f.train_cmd(model_b, out_b.string(), 7));
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  const std::string bytes_a = read_bytes(model_a);
  CHECK(bytes_a == read_bytes(model_b));
  CHECK(bytes_a == read_bytes(trained().model_path));

  std::string model_c = (out_a / "model-c.lcd").string();
  RunResult rc = run_cli(f.train_cmd(model_c, out_a.string(), 8));
  REQUIRE(rc.exit_code == 0);
  CHECK(bytes_a != read_bytes(model_c));
}

TEST_CASE("eval discrimination prints a summary and writes per-document rows") {
  const CliFixture& f = fixture();
  const Trained& t = trained();
  REQUIRE(t.result.exit_code == 0);
  fs::path out = f.dir / "eval-disc";
  fs::create_directories(out);

  RunResult r = run_cli("eval --task discrimination --model " + t.model_path +
                        " --test " + f.test_path + " --embeddings " + f.emb_path +
                        " --out " + out.string() + " --permutations 6 --seed 3");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(contains(r.output, "discrimination accuracy = "));

  auto lines = read_lines(out / "discrimination_report.csv");
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "id,correct,total,value");
  CHECK(lines.size() == 1 + 4);  // one row per test document
}

TEST_CASE("eval insertion and reconstruct run end to end") {
  const CliFixture& f = fixture();
  const Trained& t = trained();
  REQUIRE(t.result.exit_code == 0);
  fs::path out = f.dir / "eval-more";
  fs::create_directories(out);
  const std::string common = " --model " + t.model_path + " --test " + f.test_path +
                             " --embeddings " + f.emb_path + " --out " + out.string();

  RunResult ins = run_cli("eval --task insertion" + common);
  INFO(ins.output);
  REQUIRE(ins.exit_code == 0);
  CHECK(contains(ins.output, "insertion score = "));
  CHECK(fs::exists(out / "insertion_report.csv"));

  RunResult rec = run_cli("eval --task reconstruct" + common +
                          " --beam-width 8 --seed 5");
  INFO(rec.output);
  REQUIRE(rec.exit_code == 0);
  CHECK(contains(rec.output, "reconstruction mean tau = "));
  CHECK(fs::exists(out / "reconstruct_report.csv"));

  RunResult bad_width = run_cli("eval --task reconstruct" + common + " --beam-width 0");
  CHECK(bad_width.exit_code == 2);
}

TEST_CASE("eval rejects unknown tasks and missing inputs") {
  const CliFixture& f = fixture();
  const std::string tail =
      " --test " + f.test_path + " --embeddings " + f.emb_path;

  RunResult unknown = run_cli("eval --task ordering" + tail);
  CHECK(unknown.exit_code == 2);

  RunResult no_model = run_cli("eval --task discrimination" + tail);
  CHECK(no_model.exit_code == 2);
  CHECK(contains(no_model.output, "--model is required"));

  RunResult cov = run_cli("eval --task coverage" + tail);
  CHECK(cov.exit_code == 2);
  CHECK(contains(cov.output, "needs --train and --dev"));
}

TEST_CASE("the coverage task writes one row per fraction") {
  const CliFixture& f = fixture();
  fs::path out = f.dir / "eval-cov";
  fs::create_directories(out);
  const std::string common = "eval --task coverage --test " + f.test_path +
                             " --embeddings " + f.emb_path + " --train " +
                             f.train_path + " --dev " + f.dev_path + " --out " +
                             out.string() + " --seed 7 " + f.hyper_flags();

  RunResult r = run_cli(common + " --fractions 0.5,1");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  std::size_t phi_lines = 0;
  std::istringstream os(r.output);
  std::string line;
  while (std::getline(os, line)) {
    if (line.rfind("phi ", 0) == 0) ++phi_lines;
  }
  CHECK(phi_lines == 2);
  auto lines = read_lines(out / "coverage.csv");
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "phi,accuracy");
  CHECK(lines.size() == 3);

  RunResult bad = run_cli(common + " --fractions 0,0.5");
  CHECK(bad.exit_code == 2);
  CHECK(contains(bad.output, "--fractions entries must be in (0,1]"));
}

TEST_CASE("score agrees between --doc and a one-paragraph --article") {
  const CliFixture& f = fixture();
  const Trained& t = trained();
  REQUIRE(t.result.exit_code == 0);
  const std::string base =
      "score --model " + t.model_path + " --embeddings " + f.emb_path;

  RunResult doc = run_cli(base + " --doc " + f.single_doc);
  INFO(doc.output);
  REQUIRE(doc.exit_code == 0);
  auto score_of = [](const std::string& out) {
    auto pos = out.find("score = ");
    REQUIRE(pos != std::string::npos);
    return out.substr(pos);
  };
  const std::string doc_score = score_of(doc.output);

  RunResult art = run_cli(base + " --article " + f.single_doc);
  REQUIRE(art.exit_code == 0);
  CHECK(score_of(art.output) == doc_score);

  RunResult again = run_cli(base + " --doc " + f.single_doc);
  REQUIRE(again.exit_code == 0);
  CHECK(score_of(again.output) == doc_score);

  RunResult multi = run_cli(base + " --article " + f.article);
  INFO(multi.output);
  CHECK(multi.exit_code == 0);
}

TEST_CASE("score validates its inputs") {
  const CliFixture& f = fixture();
  const Trained& t = trained();
  REQUIRE(t.result.exit_code == 0);
  const std::string base =
      "score --model " + t.model_path + " --embeddings " + f.emb_path;

  RunResult both = run_cli(base + " --doc " + f.single_doc + " --article " + f.article);
  CHECK(both.exit_code == 2);
  CHECK(contains(both.output, "exactly one of --doc or --article"));

  RunResult neither = run_cli(base);
  CHECK(neither.exit_code == 2);

  RunResult two = run_cli(base + " --doc " + f.two_docs);
  CHECK(two.exit_code == 1);
  CHECK(contains(two.output, "expected exactly one document"));

  RunResult tiny = run_cli(base + " --doc " + f.single_sentence);
  CHECK(tiny.exit_code == 1);
  CHECK(contains(tiny.output, "document too short to score"));

  RunResult missing = run_cli("score --model " + (f.dir / "nope.lcd").string() +
                              " --embeddings " + f.emb_path + " --doc " + f.single_doc);
  CHECK(missing.exit_code == 1);
  CHECK(contains(missing.output, "cannot open model file"));
}

TEST_CASE("a corrupted model file is reported as such") {
  const CliFixture& f = fixture();
  const Trained& t = trained();
  REQUIRE(t.result.exit_code == 0);
  std::string bytes = read_bytes(t.model_path);
  REQUIRE(bytes.size() > 4);
  bytes[0] = 'X';
  const std::string corrupt = (f.dir / "corrupt.lcd").string();
  std::ofstream(corrupt, std::ios::binary) << bytes;

  RunResult r = run_cli("score --model " + corrupt + " --embeddings " + f.emb_path +
                        " --doc " + f.single_doc);
  CHECK(r.exit_code == 1);
  CHECK(contains(r.output, "not an LCD model file"));
}
