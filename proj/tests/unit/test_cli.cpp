#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sdgkit/analyze.hpp"
#include "sdgkit/corpus.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = SDGKIT_DATA_DIR;

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("sdgkit_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// Runs the CLI with the given argument string; returns its exit status.
int run(const Sandbox& box, const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + std::string(SDGKIT_CLI) + "\" --out-dir \"" + box.dir.string() + "\" " + args + " > \"" +
                          (box / "stdout.txt") + "\" 2> \"" + (box / "stderr.txt") + "\"";
  const int raw = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(raw));
  return WEXITSTATUS(raw);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST_CASE("help and usage errors") {
  Sandbox box;
  CHECK(run(box, "--help") == 0);
  CHECK(run(box, "frobnicate") == 1);
  CHECK(run(box, "ingest") == 1);  // --in is required
  CHECK(run(box, "ingest --in x.jsonl --bogus") == 1);
  CHECK(run(box, "filter --in x.jsonl --min-tokens 0") == 1);
  CHECK(run(box, "report --a a.csv --b b.csv --format pdf") == 1);
}

TEST_CASE("missing or malformed input exits 2") {
  Sandbox box;
  CHECK(run(box, "ingest --in \"" + (box / "nope.jsonl") + "\"") == 2);
  write(box / "bad.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"labels\":[18]}\n");
  CHECK(run(box, "ingest --in \"" + (box / "bad.jsonl") + "\"") == 2);
  CHECK(slurp(box / "stderr.txt").find("error:") != std::string::npos);
}

TEST_CASE("classifier pipeline on the toy corpus") {
  Sandbox box;
  const std::string corpus = kData + "/toy_corpus.jsonl";
  REQUIRE(run(box, "ingest --in \"" + corpus + "\"") == 0);
  CHECK(sdgkit::load_corpus(box / "corpus.jsonl").size() == 200);

  REQUIRE(run(box, "filter --in \"" + (box / "corpus.jsonl") + "\" --min-tokens 10") == 0);
  const auto eligible = sdgkit::load_corpus(box / "eligible.jsonl");
  const auto rejected = sdgkit::load_corpus(box / "rejected.jsonl");
  CHECK(eligible.size() + rejected.size() == 200);

  REQUIRE(run(box, "split --in \"" + (box / "eligible.jsonl") + "\" --seed 5") == 0);
  const auto train = sdgkit::load_corpus(box / "train.jsonl");
  const auto test = sdgkit::load_corpus(box / "test.jsonl");
  CHECK(train.size() + test.size() == eligible.size());
  CHECK(test.size() > 0);

  REQUIRE(run(box, "train --in \"" + (box / "train.jsonl") + "\" --method lr --seed 1") == 0);
  REQUIRE(fs::exists(box / "model.sdgm"));
  const auto model_bytes = slurp(box / "model.sdgm");
  REQUIRE(run(box, "train --in \"" + (box / "train.jsonl") + "\" --method lr --seed 1") == 0);
  CHECK(slurp(box / "model.sdgm") == model_bytes);

  REQUIRE(run(box, "evaluate --model \"" + (box / "model.sdgm") + "\" --in \"" + (box / "test.jsonl") + "\"") == 0);
  CHECK(slurp(box / "evaluation.json").find("accuracy") != std::string::npos);

  REQUIRE(run(box, "predict --model \"" + (box / "model.sdgm") + "\" --in \"" + (box / "test.jsonl") + "\"") == 0);
  const auto preds = sdgkit::load_detections(box / "detections.csv");
  CHECK(preds.size() == test.size());

  // compare the classifier against the held-out truth labels
  std::ostringstream truth;
  truth << "id,labels\n";
  for (const auto& d : test) truth << d.id << ',' << d.labels.to_string() << '\n';
  write(box / "truth.csv", truth.str());
  REQUIRE(run(box, "compare --a \"" + (box / "detections.csv") + "\" --b \"" + (box / "truth.csv") +
                       "\" --name-a Model --name-b Truth") == 0);
  CHECK(fs::exists(box / "overlap.json"));
  CHECK(fs::exists(box / "overlap_records.csv"));
  CHECK(slurp(box / "stdout.txt").find("Model vs Truth") != std::string::npos);

  REQUIRE(run(box, "report --a \"" + (box / "detections.csv") + "\" --b \"" + (box / "truth.csv") + "\"") == 0);
  CHECK(slurp(box / "detection_rates.svg").rfind("<svg", 0) == 0);
  CHECK(fs::exists(box / "detection_rates.json"));
  CHECK(fs::exists(box / "rates_a.csv"));

  REQUIRE(run(box, "compare-methods --in \"" + (box / "eligible.jsonl") + "\" --methods lr,nb --vectorizers tfidf") == 0);
  const auto ranked = slurp(box / "compare_methods.csv");
  CHECK(std::count(ranked.begin(), ranked.end(), '\n') == 3);
}

TEST_CASE("taxonomy search writes matches and queries") {
  Sandbox box;
  REQUIRE(run(box, "taxo-search --in \"" + kData + "/toy_corpus.jsonl\" --taxonomy \"" + kData +
                       "/sdg_taxonomy.csv\" --expand-k 0") == 0);
  const auto matches = slurp(box / "matches.csv");
  CHECK(matches.find("toy-") != std::string::npos);
  CHECK(fs::exists(box / "queries.json"));
}

TEST_CASE("fewshot table from a predictions file") {
  Sandbox box;
  std::ostringstream preds;
  preds << "id,labels\n";
  for (int i = 1; i <= 10; ++i) preds << "ex-" << (i < 10 ? "0" : "") << i << ',' << (i <= 5 ? "2" : "7") << '\n';
  write(box / "preds.csv", preds.str());
  REQUIRE(run(box, "fewshot --truth \"" + kData + "/fewshot_examples.jsonl\" --pred \"" + (box / "preds.csv") + "\" --tags 2,7") == 0);
  const auto table = slurp(box / "fewshot.csv");
  CHECK(table.find("Total,10,10,10,100.00") != std::string::npos);
}

TEST_CASE("llm-run exit codes") {
  Sandbox box;
  write(box / "names.txt", "Acme Solar\nBlue Water\n");
  // default endpoint without a key is a usage error, before any network traffic
  CHECK(run(box, "llm-run --in \"" + (box / "names.txt") + "\"", "env -u OPENAI_API_KEY") == 1);
  CHECK(slurp(box / "stderr.txt").find("OPENAI_API_KEY") != std::string::npos);

  // unreachable endpoint: every record fails, records are still written
  CHECK(run(box, "llm-run --in \"" + (box / "names.txt") +
                     "\" --endpoint http://127.0.0.1:1/v1/chat/completions --max-retries 0 --protocol experiment2") == 3);
  const auto records = slurp(box / "records.jsonl");
  CHECK(std::count(records.begin(), records.end(), '\n') == 2);

  // replay against an empty cache fails per record without touching the network
  CHECK(run(box, "llm-run --replay --in \"" + (box / "names.txt") + "\" --protocol experiment2") == 3);
}
