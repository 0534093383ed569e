// sdgkit command-line tool. Each subcommand is a thin adapter over one
// library operation; see README.md for flags and config keys.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdgkit/analyze.hpp"
#include "sdgkit/classify.hpp"
#include "sdgkit/corpus.hpp"
#include "sdgkit/http_transport.hpp"
#include "sdgkit/llm.hpp"
#include "sdgkit/report.hpp"
#include "sdgkit/taxonomy.hpp"

namespace fs = std::filesystem;
using namespace sdgkit;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct PrepArgs {
  std::string stopwords_path;
  std::size_t min_token_len = 2;
  bool keep_case = false;
  bool keep_punctuation = false;

  void add_to(CLI::App* sub) {
    sub->add_option("--stopwords", stopwords_path, "Stopword file, one term per line (default: bundled English list)");
    sub->add_option("--min-token-len", min_token_len, "Minimum token length in characters")->check(CLI::PositiveNumber);
    sub->add_flag("--keep-case", keep_case, "Do not lowercase tokens");
    sub->add_flag("--keep-punctuation", keep_punctuation, "Do not split on punctuation");
  }

  PrepConfig build() const {
    PrepConfig c;
    c.lowercase = !keep_case;
    c.strip_punctuation = !keep_punctuation;
    c.min_token_len = min_token_len;
    if (!stopwords_path.empty()) c.stopwords = load_stopwords(stopwords_path);
    c.validate();
    return c;
  }
};

struct SgnsArgs {
  SgnsConfig c;

  void add_to(CLI::App* sub) {
    sub->add_option("--dim", c.dimension, "Embedding dimension");
    sub->add_option("--window", c.window, "Skip-gram window");
    sub->add_option("--negatives", c.negatives, "Negative samples per pair");
    sub->add_option("--sgns-lr", c.learning_rate, "Initial embedding learning rate");
    sub->add_option("--sgns-epochs", c.epochs, "Embedding training epochs");
    sub->add_option("--subsample", c.subsample, "Frequent-word subsampling threshold");
  }
};

void require_files(std::initializer_list<std::string> paths) {
  for (const auto& p : paths)
    if (!p.empty() && !fs::exists(p)) throw InputError("input file not found: " + p);
}

std::string out_path(const std::string& out_dir, const std::string& explicit_path, const std::string& default_name) {
  if (!explicit_path.empty()) {
    const fs::path p(explicit_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return explicit_path;
  }
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / default_name).string();
}

/// Corpus from JSONL/CSV, or a plain list of names (.txt, one per line) whose
/// id and text are the name itself.
Corpus load_inputs(const std::string& path) {
  if (fs::path(path).extension() != ".txt") return load_corpus(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input list: " + path);
  std::vector<LabeledDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    docs.push_back({line, line, {}, Source::other});
  }
  return Corpus(std::move(docs));
}

void write_detections_csv(const std::string& path, const Corpus& corpus, const std::vector<SdgLabelSet>& labels) {
  std::ostringstream out;
  csv::write_row(out, {"id", "labels"});
  for (std::size_t i = 0; i < corpus.size(); ++i) csv::write_row(out, {corpus[i].id, labels[i].to_string()});
  write_text_file(path, out.str());
}

std::string eval_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  csv::write_row(out, {"rank", "method", "vectorizer", "macro_f1", "micro_f1", "micro_precision", "micro_recall", "accuracy"});
  char buf[32];
  auto f = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv::write_row(out, {std::to_string(i + 1), r.method, r.vectorizer, f(r.macro_f1), f(r.micro_f1), f(r.micro_precision),
                         f(r.micro_recall), f(r.accuracy)});
  }
  return out.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  return out;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"sdgkit: SDG text detection, LLM protocol runs and comparison statistics"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  std::string out_dir = "out";
  app.add_option("--out-dir", out_dir, "Directory for generated artifacts (created if absent)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL/CSV corpus and write canonical JSONL");
  std::string in_path, out_file, format;
  ingest->add_option("--in", in_path, "Input corpus")->required();
  ingest->add_option("--format", format, "jsonl or csv (default: by extension)");
  ingest->add_option("--out", out_file, "Output JSONL (default: <out-dir>/corpus.jsonl)");

  // filter
  auto* filter = app.add_subcommand("filter", "Split a corpus into eligible and rejected documents by token count");
  std::size_t min_tokens = 10;
  std::string eligible_out, rejected_out;
  PrepArgs filter_prep;
  filter->add_option("--in", in_path, "Input corpus")->required();
  filter->add_option("--min-tokens", min_tokens, "Minimum tokens after preprocessing")->check(CLI::PositiveNumber);
  filter->add_option("--eligible", eligible_out, "Eligible output (default: <out-dir>/eligible.jsonl)");
  filter->add_option("--rejected", rejected_out, "Rejected output (default: <out-dir>/rejected.jsonl)");
  filter_prep.add_to(filter);

  // split
  auto* split = app.add_subcommand("split", "Seeded train/test split, stratified by default");
  SplitSpec split_spec;
  bool no_stratify = false;
  std::string train_out, test_out;
  split->add_option("--in", in_path, "Input corpus")->required();
  split->add_option("--train-fraction", split_spec.train_fraction, "Fraction of documents for training");
  split->add_option("--seed", split_spec.seed, "Shuffle seed");
  split->add_flag("--no-stratify", no_stratify, "Plain shuffle instead of per-label strata");
  split->add_option("--train", train_out, "Train output (default: <out-dir>/train.jsonl)");
  split->add_option("--test", test_out, "Test output (default: <out-dir>/test.jsonl)");

  // taxo-search
  auto* taxo = app.add_subcommand("taxo-search", "Compile taxonomy queries and search a corpus");
  std::string taxonomy_path, embeddings_path, queries_out;
  int expand_k = 0;
  double min_sim = 0.6;
  PrepArgs taxo_prep;
  SgnsArgs taxo_sgns;
  taxo->add_option("--in", in_path, "Corpus to search")->required();
  taxo->add_option("--taxonomy", taxonomy_path, "Terminology CSV (sdg,term)")->required();
  taxo->add_option("--expand-k", expand_k, "Expansions per term (0 disables expansion)");
  taxo->add_option("--min-sim", min_sim, "Minimum cosine similarity for an expansion");
  taxo->add_option("--embeddings", embeddings_path, "word2vec text embeddings; trained on --in when absent");
  taxo->add_option("--out", out_file, "Matches CSV (default: <out-dir>/matches.csv)");
  taxo->add_option("--queries-out", queries_out, "Compiled queries JSON (default: <out-dir>/queries.json)");
  taxo_prep.add_to(taxo);
  taxo_sgns.add_to(taxo);

  // train
  auto* train = app.add_subcommand("train", "Fit a vectorizer and one-vs-rest classifier");
  std::string method_name = "logistic_regression", vectorizer_name = "tfidf", model_out, pretrained;
  std::uint64_t seed = 1;
  std::optional<double> threshold;
  TrainingOptions train_opts;
  PrepArgs train_prep;
  SgnsArgs train_sgns;
  train->add_option("--in", in_path, "Training corpus")->required();
  train->add_option("--method", method_name, "logistic_regression|multinomial_nb|linear_svm (or lr|nb|svm)");
  train->add_option("--vectorizer", vectorizer_name, "tfidf|word2vec|doc2vec");
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--pretrained", pretrained, "word2vec text embeddings for the word2vec vectorizer");
  train->add_option("--threshold", threshold, "Decision threshold for every class");
  train->add_option("--lr", train_opts.learning_rate, "Logistic regression learning rate");
  train->add_option("--epochs", train_opts.epochs, "Classifier epochs");
  train->add_option("--l2", train_opts.l2, "L2 penalty");
  train->add_option("--svm-lr", train_opts.svm_learning_rate, "Linear SVM learning rate");
  train->add_option("--nb-alpha", train_opts.nb_alpha, "Naive Bayes smoothing");
  train->add_option("--model", model_out, "Model output (default: <out-dir>/model.sdgm)");
  train_prep.add_to(train);
  train_sgns.add_to(train);

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on a labeled test corpus");
  std::string model_path;
  evaluate_cmd->add_option("--model", model_path, "Model file")->required();
  evaluate_cmd->add_option("--in", in_path, "Labeled test corpus")->required();
  evaluate_cmd->add_option("--threshold", threshold, "Override every decision threshold");
  evaluate_cmd->add_option("--out", out_file, "Report JSON (default: <out-dir>/evaluation.json)");

  // compare-methods
  auto* cmp_methods = app.add_subcommand("compare-methods", "Rank classifier x vectorizer combinations on one split");
  std::string methods_list = "logistic_regression,multinomial_nb,linear_svm", vectorizers_list = "tfidf,word2vec";
  PrepArgs cmp_prep;
  SgnsArgs cmp_sgns;
  cmp_methods->add_option("--in", in_path, "Labeled corpus")->required();
  cmp_methods->add_option("--methods", methods_list, "Comma-separated methods");
  cmp_methods->add_option("--vectorizers", vectorizers_list, "Comma-separated vectorizers");
  cmp_methods->add_option("--train-fraction", split_spec.train_fraction, "Fraction of documents for training");
  cmp_methods->add_option("--seed", split_spec.seed, "Split and training seed");
  cmp_methods->add_flag("--no-stratify", no_stratify, "Plain shuffle instead of per-label strata");
  cmp_methods->add_option("--pretrained", pretrained, "word2vec text embeddings for the word2vec vectorizer");
  cmp_methods->add_option("--epochs", train_opts.epochs, "Classifier epochs");
  cmp_methods->add_option("--out", out_file, "Ranked CSV (default: <out-dir>/compare_methods.csv)");
  cmp_prep.add_to(cmp_methods);
  cmp_sgns.add_to(cmp_methods);

  // predict
  auto* predict = app.add_subcommand("predict", "Write per-document SDG label sets");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--in", in_path, "Documents")->required();
  predict->add_option("--threshold", threshold, "Override every decision threshold");
  predict->add_option("--out", out_file, "Detections CSV (default: <out-dir>/detections.csv)");

  // llm-run
  auto* llm = app.add_subcommand("llm-run", "Run a prompt protocol against a chat-completions endpoint");
  std::string protocol = "experiment1", cache_path, endpoint = kDefaultEndpoint, model_name = "gpt-3.5-turbo";
  std::string cleaning = "remote", examples_path, tags_list;
  double temperature = 0.0, rate = 0.0;
  std::optional<int> max_tokens;
  std::size_t parallelism = 4, token_budget = 4096;
  int max_retries = 5;
  bool replay = false;
  llm->add_option("--protocol", protocol, "experiment1|experiment2|fewshot_tag");
  llm->add_option("--in", in_path, "Inputs: corpus JSONL/CSV, or .txt with one company name per line")->required();
  llm->add_option("--cache", cache_path, "Exchange cache JSONL (default: <out-dir>/cache.jsonl)");
  llm->add_option("--out", out_file, "Records JSONL (default: <out-dir>/records.jsonl)");
  llm->add_option("--endpoint", endpoint, "Chat-completions URL");
  llm->add_option("--model-name", model_name, "Model identifier sent with each request");
  llm->add_option("--temperature", temperature, "Sampling temperature")->check(CLI::Range(0.0, 2.0));
  llm->add_option("--max-tokens", max_tokens, "Completion token cap (default: none)");
  llm->add_option("--parallelism", parallelism, "Concurrent requests")->check(CLI::PositiveNumber);
  llm->add_option("--rate", rate, "Requests per second (0: unlimited)");
  llm->add_option("--max-retries", max_retries, "Retries for timeouts, 429 and 5xx");
  llm->add_option("--cleaning", cleaning, "experiment1 cleaning: remote (second call) or local")
      ->check(CLI::IsMember({"remote", "local"}));
  llm->add_option("--examples", examples_path, "fewshot_tag examples corpus (text + labels)");
  llm->add_option("--tags", tags_list, "fewshot_tag tag list, e.g. 2,7 (default: example labels)");
  llm->add_option("--token-budget", token_budget, "fewshot_tag prompt token ceiling");
  llm->add_flag("--replay", replay, "Serve from the cache only; never touch the network");

  // compare
  auto* compare = app.add_subcommand("compare", "Overlap statistics between two detection sets");
  std::string a_path, b_path, name_a = "A", name_b = "B";
  bool include_empty = false;
  compare->add_option("--a", a_path, "Side A detections (CSV id,labels or records JSONL)")->required();
  compare->add_option("--b", b_path, "Side B detections")->required();
  compare->add_option("--name-a", name_a, "Display name for side A");
  compare->add_option("--name-b", name_b, "Display name for side B");
  compare->add_flag("--include-empty", include_empty, "Per-record overlap column counts two empty sets as agreement");

  // fewshot
  auto* fewshot = app.add_subcommand("fewshot", "Few-shot identification table against single-label truth");
  std::string truth_path, pred_path;
  fewshot->add_option("--truth", truth_path, "Single-label truth corpus")->required();
  fewshot->add_option("--pred", pred_path, "Predictions (records JSONL or CSV id,labels)")->required();
  fewshot->add_option("--tags", tags_list, "Tags given to the model, e.g. 2,7")->required();

  // report
  auto* report = app.add_subcommand("report", "Per-SDG detection rates for two sides as CSV, JSON and SVG");
  std::string report_format = "all", title = "Detection Rate by SDG";
  report->add_option("--a", a_path, "Side A detections")->required();
  report->add_option("--b", b_path, "Side B detections")->required();
  report->add_option("--name-a", name_a, "Display name for side A");
  report->add_option("--name-b", name_b, "Display name for side B");
  report->add_option("--format", report_format, "csv|json|svg|all")->check(CLI::IsMember({"csv", "json", "svg", "all"}));
  report->add_option("--title", title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*ingest) {
    require_files({in_path});
    const Corpus c = format.empty() ? load_corpus(in_path) : load_corpus(in_path, parse_corpus_format(format));
    const auto dst = out_path(out_dir, out_file, "corpus.jsonl");
    save_corpus(dst, c);
    std::cout << "ingested " << c.size() << " documents -> " << dst << '\n';
  } else if (*filter) {
    require_files({in_path});
    const auto parts = eligibility_filter(load_corpus(in_path), min_tokens, filter_prep.build());
    save_corpus(out_path(out_dir, eligible_out, "eligible.jsonl"), parts.eligible);
    save_corpus(out_path(out_dir, rejected_out, "rejected.jsonl"), parts.rejected);
    std::cout << "eligible " << parts.eligible.size() << ", rejected " << parts.rejected.size() << '\n';
  } else if (*split) {
    require_files({in_path});
    split_spec.stratified = !no_stratify;
    const auto parts = split_train_test(load_corpus(in_path), split_spec);
    save_corpus(out_path(out_dir, train_out, "train.jsonl"), parts.train);
    save_corpus(out_path(out_dir, test_out, "test.jsonl"), parts.test);
    std::cout << "train " << parts.train.size() << ", test " << parts.test.size() << '\n';
  } else if (*taxo) {
    require_files({in_path, taxonomy_path, embeddings_path});
    const PrepConfig prep = taxo_prep.build();
    const Corpus corpus = load_corpus(in_path);
    auto entries = load_taxonomy(taxonomy_path);
    if (expand_k > 0) {
      const EmbeddingTable table =
          embeddings_path.empty() ? train_skipgram(corpus, taxo_sgns.c, prep) : load_pretrained_embeddings(embeddings_path);
      for (auto& e : entries) e = expand_terms(e, table, expand_k, min_sim, prep);
    }
    const auto queries = compile_queries(entries, prep);
    nlohmann::ordered_json qj = nlohmann::ordered_json::array();
    for (const auto& q : queries) qj.push_back(q.to_json());
    write_text_file(out_path(out_dir, queries_out, "queries.json"), qj.dump(2) + "\n");
    const auto matches = search_all(corpus, queries, prep);
    const auto dst = out_path(out_dir, out_file, "matches.csv");
    write_detections_csv(dst, corpus, matches);
    std::size_t hit = 0;
    for (const auto& m : matches) hit += !m.empty();
    std::cout << queries.size() << " queries, " << hit << " of " << corpus.size() << " documents matched -> " << dst << '\n';
  } else if (*train) {
    require_files({in_path, pretrained});
    VectorizerSettings vs{train_prep.build(), train_sgns.c, std::nullopt};
    vs.sgns.seed = seed;
    if (!pretrained.empty()) vs.pretrained_path = pretrained;
    const Corpus corpus = load_corpus(in_path);
    auto model = fit_classifier(corpus, parse_method(method_name), fit_vectorizer(parse_vectorizer_kind(vectorizer_name), corpus, vs),
                                seed, train_opts);
    if (threshold) model.thresholds.set_all(*threshold);
    const auto dst = out_path(out_dir, model_out, "model.sdgm");
    save_classifier(dst, model);
    std::cout << "trained " << to_string(model.method) << " over " << vectorizer_kind(model.vectorizer) << " on "
              << corpus.size() << " documents -> " << dst << '\n';
  } else if (*evaluate_cmd) {
    require_files({model_path, in_path});
    const auto model = load_classifier(model_path);
    DecisionThresholds t = model.thresholds;
    if (threshold) t.set_all(*threshold);
    const auto r = evaluate(model, load_corpus(in_path), t);
    const auto dst = out_path(out_dir, out_file, "evaluation.json");
    write_text_file(dst, r.to_json().dump(2) + "\n");
    std::cout << "accuracy " << r.accuracy << ", micro-F1 " << r.micro_f1 << ", macro-F1 " << r.macro_f1 << " -> " << dst << '\n';
  } else if (*cmp_methods) {
    require_files({in_path, pretrained});
    split_spec.stratified = !no_stratify;
    VectorizerSettings vs{cmp_prep.build(), cmp_sgns.c, std::nullopt};
    vs.sgns.seed = split_spec.seed;
    if (!pretrained.empty()) vs.pretrained_path = pretrained;
    std::vector<Method> methods;
    for (const auto& m : split_list(methods_list)) methods.push_back(parse_method(m));
    std::vector<VectorizerKind> kinds;
    for (const auto& v : split_list(vectorizers_list)) kinds.push_back(parse_vectorizer_kind(v));
    const auto reports = compare_methods(load_corpus(in_path), methods, kinds, split_spec, vs, train_opts);
    const auto table = eval_csv(reports);
    const auto dst = out_path(out_dir, out_file, "compare_methods.csv");
    write_text_file(dst, table);
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : reports) j.push_back(r.to_json());
    write_text_file((fs::path(dst).parent_path() / "compare_methods.json").string(), j.dump(2) + "\n");
    std::cout << table;
  } else if (*predict) {
    require_files({model_path, in_path});
    const auto model = load_classifier(model_path);
    DecisionThresholds t = model.thresholds;
    if (threshold) t.set_all(*threshold);
    const Corpus docs = load_corpus(in_path);
    std::vector<SdgLabelSet> labels;
    for (const auto& d : docs) labels.push_back(model.predict_labels(t, d.text));
    const auto dst = out_path(out_dir, out_file, "detections.csv");
    write_detections_csv(dst, docs, labels);
    std::cout << "predicted " << docs.size() << " documents -> " << dst << '\n';
  } else if (*llm) {
    require_files({in_path, examples_path});
    const auto kind = parse_protocol_kind(protocol);
    ProtocolSpec spec = ProtocolSpec::for_kind(kind);
    if (kind == ProtocolKind::fewshot_tag) {
      if (examples_path.empty()) throw UsageError("fewshot_tag needs --examples");
      const Corpus ex = load_corpus(examples_path);
      SdgLabelSet tags;
      for (const auto& d : ex) {
        spec.examples.push_back({d.text, d.labels});
        tags = tags | d.labels;
      }
      spec.tags = tags_list.empty() ? tags : SdgLabelSet::parse(tags_list);
    }
    spec.model_name = model_name;
    spec.temperature = temperature;
    spec.max_tokens = max_tokens;
    spec.cleaning = cleaning == "local" ? Cleaning::local : Cleaning::remote;
    spec.token_budget = token_budget;

    RunOptions ro;
    ro.parallelism = parallelism;
    ro.requests_per_second = rate;
    ro.retry.max_retries = max_retries;
    ro.replay = replay;

    std::optional<HttpTransport> http;
    if (!replay) {
      const std::string key = api_key_from_env();
      if (key.empty() && endpoint == kDefaultEndpoint)
        throw UsageError(std::string("live runs against the default endpoint need the ") + kApiKeyEnv + " environment variable");
      http.emplace(endpoint, key);
    }
    const auto cpath = out_path(out_dir, cache_path, "cache.jsonl");
    ResponseCache cache(cpath);
    const Corpus inputs = load_inputs(in_path);
    const auto result = run_protocol(spec, inputs, http ? &*http : nullptr, cache, ro);
    std::ostringstream lines;
    for (const auto& r : result.records) lines << r.to_jsonl_line() << '\n';
    const auto dst = out_path(out_dir, out_file, "records.jsonl");
    write_text_file(dst, lines.str());
    std::cout << result.records.size() << " records (" << result.cache_hits << " from cache, " << result.failed_ids.size()
              << " failed) -> " << dst << '\n';
    if (!result.failed_ids.empty()) {
      std::cerr << "failed inputs:\n";
      for (const auto& r : result.records)
        if (r.error) std::cerr << "  " << r.id << ": " << *r.error << '\n';
      return 3;
    }
  } else if (*compare) {
    require_files({a_path, b_path});
    const auto records = join_detections(load_detections(a_path), load_detections(b_path));
    const auto r = overlap_report(records);
    const SideNames names{name_a, name_b};
    write_text_file(out_path(out_dir, "", "overlap.json"), overlap_report_json(r, names).dump(2) + "\n");
    const auto csv_text = overlap_report_csv(r, names);
    write_text_file(out_path(out_dir, "", "overlap.csv"), csv_text);
    std::ostringstream per;
    csv::write_row(per, {"id", "labels_a", "labels_b", "overlap"});
    for (const auto& rec : records)
      csv::write_row(per, {rec.id, rec.side_a.to_string(), rec.side_b.to_string(),
                           nonrestrictive_overlap(rec.side_a, rec.side_b, include_empty) ? "1" : "0"});
    write_text_file(out_path(out_dir, "", "overlap_records.csv"), per.str());
    std::cout << csv_text;
  } else if (*fewshot) {
    require_files({truth_path, pred_path});
    const auto preds = load_detections(pred_path);
    const auto r = fewshot_report(load_corpus(truth_path), std::map<std::string, SdgLabelSet>(preds.begin(), preds.end()),
                                  SdgLabelSet::parse(tags_list));
    write_text_file(out_path(out_dir, "", "fewshot.csv"), fewshot_report_csv(r));
    write_text_file(out_path(out_dir, "", "fewshot.json"), fewshot_report_json(r).dump(2) + "\n");
    std::cout << fewshot_report_text(r);
  } else if (*report) {
    require_files({a_path, b_path});
    const auto records = join_detections(load_detections(a_path), load_detections(b_path));
    const auto ta = detection_rates(records, Side::a);
    const auto tb = detection_rates(records, Side::b);
    const SideNames names{name_a, name_b};
    const bool all = report_format == "all";
    if (all || report_format == "csv") {
      write_text_file(out_path(out_dir, "", "detection_rates.csv"), detection_rates_csv(ta, tb, names));
      write_text_file(out_path(out_dir, "", "rates_a.csv"), detection_rates_plot_csv(ta));
      write_text_file(out_path(out_dir, "", "rates_b.csv"), detection_rates_plot_csv(tb));
    }
    if (all || report_format == "json") {
      nlohmann::ordered_json j;
      j["side_a"] = names.a;
      j["side_b"] = names.b;
      j["a"] = detection_rates_json(ta);
      j["b"] = detection_rates_json(tb);
      write_text_file(out_path(out_dir, "", "detection_rates.json"), j.dump(2) + "\n");
    }
    if (all || report_format == "svg") write_text_file(out_path(out_dir, "", "detection_rates.svg"), detection_rates_svg(ta, tb, names, title));
    auto top3 = [](const DetectionRateTable& t) {
      std::string s;
      for (int x : t.top(3)) s += (s.empty() ? "" : ", ") + std::string("SDG") + std::to_string(x);
      return s.empty() ? std::string("none") : s;
    };
    std::cout << "top SDGs " << names.a << ": " << top3(ta) << "; " << names.b << ": " << top3(tb) << '\n';
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const TransportError& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
