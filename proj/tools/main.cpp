// causalreg command-line tool.
//
// Exit codes: 0 success, 1 usage or configuration, 2 data error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "causalreg/dataset.hpp"
#include "causalreg/detector.hpp"
#include "causalreg/errors.hpp"
#include "causalreg/experiment.hpp"
#include "causalreg/glm.hpp"
#include "causalreg/metrics.hpp"
#include "causalreg/nonlin.hpp"
#include "causalreg/random.hpp"
#include "causalreg/scenario.hpp"
#include "causalreg/theory.hpp"
#include "json_config.hpp"
#include "report_schema.hpp"

namespace fs = std::filesystem;
using namespace causalreg;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string config;
};

std::string out_path(const Globals& g, const std::string& explicit_path, const std::string& fallback) {
  if (!explicit_path.empty()) return explicit_path;
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / fallback).string();
}

void write_json(const std::string& path, const json& j) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(10);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0, "");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0, "");
  }
}

std::vector<int> to_labels(const Eigen::VectorXd& y) {
  std::vector<int> v(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) v[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
  return v;
}

double auc_of(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
  std::vector<double> s(p.data(), p.data() + p.size());
  return metrics::auc(s, to_labels(y));
}

// ------------------------------------------------------------ numeric tables

struct NumericTable {
  std::vector<std::string> names;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Real-valued features, 0/1 label column.
NumericTable read_numeric_csv(const std::string& path, const std::string& label_col) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0, "");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1, "");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  const auto lit = std::find(header.begin(), header.end(), label_col);
  if (lit == header.end()) throw ParseError("label column '" + label_col + "' not found in " + path, 1, label_col);
  const auto label_idx = static_cast<std::size_t>(lit - header.begin());
  NumericTable t;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_idx) t.names.push_back(header[j]);
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields", lineno, "");
    std::vector<double> row;
    for (std::size_t j = 0; j < f.size(); ++j) {
      double v = 0.0;
      const char* b = f[j].data();
      const char* e = b + f[j].size();
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e || !std::isfinite(v))
        throw ParseError("non-numeric cell '" + f[j] + "' at row " + std::to_string(lineno) + ", column '" +
                             header[j] + "'",
                         lineno, header[j]);
      if (j == label_idx) {
        if (v != 0.0 && v != 1.0)
          throw ParseError("label must be 0 or 1 at row " + std::to_string(lineno), lineno, label_col);
        ys.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows in " + path, 2, "");
  t.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  t.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    t.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return t;
}

void write_numeric_csv(const std::string& path, const nonlin::PlantedData& d) {
  auto out = open_csv(path);
  for (const auto& n : d.names) out << n << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) out << d.X(i, j) << ',';
    out << static_cast<int>(d.y(i)) << '\n';
  }
}

void write_planted_truth(const std::string& path, const nonlin::PlantedData& d, const std::string& kind,
                         std::uint64_t seed) {
  json vars = json::array();
  for (std::size_t i = 0; i < d.names.size(); ++i)
    vars.push_back({{"name", d.names[i]}, {"role", d.roles[i]}, {"truth", d.truth[i]}});
  write_json(path, {{"schema_version", "planted-truth-v1"}, {"kind", kind}, {"seed", seed}, {"variables", vars}});
}

struct Split3 {
  Eigen::MatrixXd Xtr, Xva, Xte;
  Eigen::VectorXd ytr, yva, yte;
};

Eigen::VectorXd take_vec(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

/// 75/10/15 stratified; optionally standardized with training statistics.
Split3 split_numeric(const NumericTable& t, std::uint64_t seed, bool standardize) {
  const auto s = data::stratified_split(to_labels(t.y), 0.75, 0.10, seed);
  Split3 r{data::take_rows(t.X, s.train), data::take_rows(t.X, s.valid), data::take_rows(t.X, s.test),
           take_vec(t.y, s.train),        take_vec(t.y, s.valid),        take_vec(t.y, s.test)};
  if (r.ytr.minCoeff() == r.ytr.maxCoeff()) throw UndefinedError("training split holds a single class");
  if (standardize) {
    const Eigen::RowVectorXd mu = r.Xtr.colwise().mean();
    Eigen::RowVectorXd sd = ((r.Xtr.rowwise() - mu).array().square().colwise().sum() /
                             std::max<double>(1.0, static_cast<double>(r.Xtr.rows()) - 1.0))
                                .sqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
      if (!(sd(j) > 0.0)) sd(j) = 1.0;
    for (Eigen::MatrixXd* M : {&r.Xtr, &r.Xva, &r.Xte})
      *M = ((M->rowwise() - mu).array().rowwise() / sd.array()).matrix();
  }
  return r;
}

// ------------------------------------------------------------ scores

/// "uniform" gives all ones. Otherwise a JSON file whose "scores" member (or
/// the top-level object) maps column name to c.
std::vector<double> load_scores(const std::string& spec, const std::vector<std::string>& names) {
  if (spec.empty() || spec == "uniform") return std::vector<double>(names.size(), 1.0);
  const json j = read_json_file(spec);
  const json& map = j.contains("scores") ? j.at("scores") : j;
  if (!map.is_object()) throw ParseError(spec + ": scores must be an object", 0, "");
  std::vector<double> c;
  for (const auto& n : names) {
    if (!map.contains(n)) throw ParseError(spec + ": no score for column '" + n + "'", 0, n);
    const auto& v = map.at(n);
    if (!v.is_number()) throw ParseError(spec + ": score for '" + n + "' is not a number", 0, n);
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("score for '" + n + "' outside [0, 1]");
    c.push_back(x);
  }
  return c;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> v;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    int x = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || p != tok.data() + tok.size() || x < 1)
      throw ConfigError("layer list '" + s + "': expected positive integers");
    v.push_back(x);
  }
  return v;
}

/// Patience never exceeds the epoch budget.
void set_epochs(nn::TrainConfig& t, int epochs) {
  t.max_epochs = epochs;
  t.patience = std::min(t.patience, epochs);
}

// ------------------------------------------------------------ subcommands

struct GenSynthArgs {
  std::string kind = "benchmark";
  int m = 200, n = 10000, K = scenario::kDefaultSupport;
  double frac_causal = 0.2, frac_confounded = 0.3, prevalence = 0.5;
  int n_per_case = 100, draws = 10000;
};

int run_gen_synth(const Globals& g, const GenSynthArgs& a) {
  if (a.kind == "benchmark") {
    scenario::BenchmarkSpec spec;
    spec.m = a.m;
    spec.n = a.n;
    spec.K = a.K;
    spec.frac_causal = a.frac_causal;
    spec.frac_confounded = a.frac_confounded;
    spec.prevalence = a.prevalence;
    spec.seed = g.seed;
    spec.validate();
    const auto bench = scenario::generate_semisynthetic_benchmark(spec);
    const auto csv = out_path(g, "", "benchmark.csv");
    const auto truth = out_path(g, "", "benchmark_truth.json");
    scenario::write_benchmark(csv, truth, bench, spec);
    std::cout << "wrote " << csv << " and " << truth << "\n";
  } else if (a.kind == "corpus") {
    Rng rng = stream_rng(g.seed, 0);
    scenario::ScenarioOptions opts;
    opts.keep_draws = false;
    const auto corpus = scenario::generate_detector_corpus(rng, a.n_per_case, a.K, a.draws, opts);
    const auto dir = out_path(g, "", "corpus");
    scenario::write_corpus(dir, corpus, g.seed);
    std::cout << "wrote " << corpus.size() << " samples to " << dir << "\n";
  } else if (a.kind == "interaction" || a.kind == "multicause") {
    nonlin::PlantedData d;
    if (a.kind == "interaction") {
      nonlin::InteractionSpec s;
      s.n = a.n;
      s.seed = g.seed;
      d = nonlin::planted_interaction(s);
    } else {
      nonlin::MultiCauseSpec s;
      s.n = a.n;
      s.seed = g.seed;
      d = nonlin::planted_multicause(s);
    }
    const auto csv = out_path(g, "", a.kind + ".csv");
    const auto truth = out_path(g, "", a.kind + "_truth.json");
    write_numeric_csv(csv, d);
    write_planted_truth(truth, d, a.kind, g.seed);
    std::cout << "wrote " << csv << " and " << truth << "\n";
  } else {
    throw ConfigError("gen-synth: unknown kind '" + a.kind + "'");
  }
  return kOk;
}

struct TrainDetectorArgs {
  std::string kind = "bivariate";
  std::string corpus;
  int scenarios = 10000, draws = 10000;
  std::string layers;
  int epochs = 0;
  std::string out;
};

int run_train_detector(const Globals& g, const TrainDetectorArgs& a) {
  if (a.kind == "anticausal") {
    nonlin::GConfig cfg;
    cfg.train.seed = g.seed;
    if (!a.layers.empty()) cfg.head_hidden = parse_int_list(a.layers);
    if (a.epochs > 0) set_epochs(cfg.train, a.epochs);
    const auto r = nonlin::train_anticausal_detector_beta(cfg);
    const auto path = out_path(g, a.out, "anticausal_g.json");
    write_json(path, r.model.to_json());
    std::cout << "anti-causality detector: held-out error " << r.model.heldout_error
              << (r.model.target_met ? "" : " (above target)") << "\nwrote " << path << "\n";
    return kOk;
  }
  if (a.kind != "bivariate") throw ConfigError("train-detector: unknown kind '" + a.kind + "'");

  std::vector<scenario::ScenarioSample> corpus;
  if (!a.corpus.empty()) {
    corpus = scenario::read_corpus(a.corpus);
  } else {
    Rng rng = stream_rng(g.seed, 0);
    scenario::ScenarioOptions opts;
    opts.keep_draws = false;
    const int per_case = std::max(1, a.scenarios / static_cast<int>(scenario::kAllScenarios.size()));
    corpus = scenario::generate_detector_corpus(rng, per_case, scenario::kDefaultSupport, a.draws, opts);
  }
  detector::DetectorConfig cfg;
  cfg.train.seed = g.seed;
  if (!a.layers.empty()) cfg.hidden = parse_int_list(a.layers);
  if (a.epochs > 0) set_epochs(cfg.train, a.epochs);
  const auto model = detector::train_detector(corpus, cfg, g.seed);
  const auto path = out_path(g, a.out, "detector.json");
  write_json(path, model.to_json());
  const auto& m = model.meta;
  const auto lo_hi = metrics::wilson_interval(std::llround(m.heldout_error * m.n_heldout), m.n_heldout);
  json eval = {{"schema_version", "detector-eval-v1"},
               {"heldout_error", m.heldout_error},
               {"heldout_error_ci95", {lo_hi.lo, lo_hi.hi}},
               {"heldout_auc", m.heldout_auc},
               {"n_train", m.n_train},
               {"n_valid", m.n_valid},
               {"n_heldout", m.n_heldout},
               {"best_epoch", m.best_epoch}};
  write_json(out_path(g, "", "detector_eval.json"), eval);
  std::cout << "detector: held-out error " << m.heldout_error << " [" << lo_hi.lo << ", " << lo_hi.hi
            << "], AUC " << m.heldout_auc << "\nwrote " << path << "\n";
  return kOk;
}

struct DataArgs {
  std::string data;
  std::string label_col = "label";
  bool bin = false;
};

data::DatasetTable load_counts(const DataArgs& d) {
  auto t = data::ingest_csv(d.data, d.label_col);
  if (d.bin) data::log_bin_counts(t, scenario::kDefaultSupport);
  return t;
}

struct ScoreArgs {
  DataArgs data;
  std::string model;
  std::string out;
};

int run_score(const Globals& g, const ScoreArgs& a) {
  const auto model = detector::DetectorModel::from_json(read_json_file(a.model));
  const auto t = load_counts(a.data);
  if (t.X.size() > 0 && (t.X.minCoeff() < 0 || t.X.maxCoeff() >= model.K))
    throw DomainError("score: column values must be bin indices in [0, " + std::to_string(model.K - 1) +
                      "]; pass --bin to log-bin raw counts");
  const auto w = detector::score_all(model, t.X, t.y);
  json scores = json::object(), mi = json::object();
  json degenerate = json::array();
  auto csv = open_csv(out_path(g, "", "scores.csv"));
  csv << "name,c,degenerate,mi\n";
  for (std::size_t j = 0; j < t.names.size(); ++j) {
    const double m = metrics::mutual_information(t.column(static_cast<Eigen::Index>(j)), t.y);
    scores[t.names[j]] = w.c[j];
    mi[t.names[j]] = m;
    if (w.degenerate[j]) degenerate.push_back(t.names[j]);
    csv << t.names[j] << ',' << w.c[j] << ',' << (w.degenerate[j] ? 1 : 0) << ',' << m << '\n';
  }
  const auto path = out_path(g, a.out, "scores.json");
  write_json(path, {{"schema_version", "scores-v1"},
                    {"source", a.data.data},
                    {"binned", a.data.bin},
                    {"scores", scores},
                    {"mi", mi},
                    {"degenerate", degenerate}});
  std::cout << "scored " << t.names.size() << " columns\nwrote " << path << "\n";
  return kOk;
}

struct FitArgs {
  DataArgs data;
  std::string scores = "uniform";
  double lambda = 1e-2;
  std::string norm = "l1";
  std::string mode = "causal";
  double cutoff = 0.5;
  bool standardize = false;
  int max_iters = 5000;
  double kkt_tol = 1e-6;
  std::string out;
};

int run_fit(const Globals& g, const FitArgs& a) {
  const auto t = load_counts(a.data);
  const Eigen::MatrixXd X = t.features();
  Eigen::VectorXd y(static_cast<Eigen::Index>(t.y.size()));
  for (std::size_t i = 0; i < t.y.size(); ++i) y(static_cast<Eigen::Index>(i)) = t.y[i];
  const auto c = load_scores(a.scores, t.names);
  glm::FitConfig cfg;
  cfg.lambda = a.lambda;
  cfg.norm = glm::norm_from_string(a.norm);
  cfg.standardize = a.standardize;
  cfg.max_iters = a.max_iters;
  cfg.kkt_tol = a.kkt_tol;
  cfg.seed = g.seed;
  glm::GlmFit fit;
  if (a.mode == "causal") {
    cfg.weights = c;
    fit = glm::fit_causal_logistic(X, y, cfg);
  } else if (a.mode == "l1") {
    fit = glm::fit_l1(X, y, cfg);
  } else if (a.mode == "two-step") {
    fit = glm::fit_two_step(X, y, c, a.cutoff, cfg);
  } else {
    throw ConfigError("fit: unknown mode '" + a.mode + "'");
  }
  if (!fit.w.allFinite() || !std::isfinite(fit.b)) throw NumericalError("fit: non-finite coefficients");
  json j = fit.to_json(t.names);
  j["schema_version"] = "fit-v1";
  j["mode"] = a.mode;
  j["scores"] = a.scores;
  j["train_auc"] = auc_of(glm::predict(fit, X), y);
  const auto path = out_path(g, a.out, "fit.json");
  write_json(path, j);
  auto csv = open_csv(out_path(g, "", "coefficients.csv"));
  csv << "name,c,coefficient\n";
  for (std::size_t i = 0; i < t.names.size(); ++i)
    csv << t.names[i] << ',' << c[i] << ',' << fit.w(static_cast<Eigen::Index>(i)) << '\n';
  std::cout << a.mode << " fit: " << fit.nonzero_count << " nonzero, stopped on " << fit.stop_reason
            << (fit.converged ? "" : " (not converged)") << "\nwrote " << path << "\n";
  return kOk;
}

struct NonlinArgs {
  DataArgs data;
  std::string scores = "uniform";
  double lambda = 0.0;
  std::string arch = "32,32";
  int q = 16;
  int epochs = 200;
  bool standardize = true;
  std::string out;
};

int run_fit_nonlin(const Globals& g, const NonlinArgs& a) {
  const auto t = read_numeric_csv(a.data.data, a.data.label_col);
  const auto c = load_scores(a.scores, t.names);
  const auto s = split_numeric(t, g.seed, a.standardize);
  nonlin::NonlinConfig cfg;
  cfg.lambda = a.lambda;
  cfg.q = a.q;
  cfg.alpha_hidden = parse_int_list(a.arch);
  set_epochs(cfg.train, a.epochs);
  cfg.train.seed = g.seed;
  cfg.validate();
  const auto r = nonlin::train_nonlincause(s.Xtr, s.ytr, s.Xva, s.yva, c, cfg);
  const auto out = nonlin::nonlincause_forward(r.model, s.Xte);
  const double identity = nonlin::omega_identity_residual(out);
  json metrics_j = {{"test_auc_nonlin", auc_of(out.prob, s.yte)},
                    {"test_auc_logcause_init", auc_of(glm::predict(r.init_fit, s.Xte), s.yte)},
                    {"omega_identity_residual_test", identity},
                    {"omega_identity_residual_valid_max", r.max_identity_residual},
                    {"mean_omega_sq_test", nonlin::mean_omega_sq(r.model, s.Xte)},
                    {"best_epoch", r.best_epoch},
                    {"stopped_early", r.stopped_early}};
  json j = {{"schema_version", "nonlin-run-v1"},
            {"config", cfg.to_json()},
            {"columns", t.names},
            {"metrics", metrics_j},
            {"model", r.model.to_json()}};
  const auto path = out_path(g, a.out, "nonlin.json");
  write_json(path, j);
  auto csv = open_csv(out_path(g, "", "nonlin_history.csv"));
  csv << "epoch,train_objective,valid_log_loss,valid_objective\n";
  for (const auto& e : r.history)
    csv << e.epoch << ',' << e.train_objective << ',' << e.valid_log_loss << ',' << e.valid_objective << '\n';
  std::cout << "nonlinCause: test AUC " << metrics_j["test_auc_nonlin"].get<double>() << " (LogCause init "
            << metrics_j["test_auc_logcause_init"].get<double>() << "), identity residual " << identity
            << "\nwrote " << path << "\n";
  return kOk;
}

struct HypArgs {
  DataArgs data;
  std::string g_model;
  double lambda = 0.1;
  std::string arch = "32";
  int k_h = 16;
  int top_k = 10;
  int epochs = 100;
  double l1_lower = 1e-4;
  bool standardize = false;
  std::string out;
};

int run_hypgen(const Globals& g, const HypArgs& a) {
  const auto t = read_numeric_csv(a.data.data, a.data.label_col);
  const auto s = split_numeric(t, g.seed, a.standardize);
  nonlin::GModel gm;
  if (!a.g_model.empty()) {
    gm = nonlin::GModel::from_json(read_json_file(a.g_model));
  } else {
    nonlin::GConfig gc;
    gc.train.seed = g.seed;
    std::cout << "training anti-causality detector (pass --g to reuse one)\n";
    gm = nonlin::train_anticausal_detector_beta(gc).model;
  }
  nonlin::HypConfig cfg;
  cfg.lambda = a.lambda;
  cfg.k_h = a.k_h;
  cfg.h_hidden = parse_int_list(a.arch);
  cfg.l1_lower = a.l1_lower;
  set_epochs(cfg.train, a.epochs);
  cfg.train.seed = g.seed;
  cfg.validate();
  const auto r = nonlin::train_hypothesis_generator(s.Xtr, s.ytr, s.Xva, s.yva, gm, cfg);
  const auto list = nonlin::extract_hypotheses(r.model, s.Xtr, s.ytr, a.top_k);
  const auto out = nonlin::hyp_forward(r.model, s.Xte);
  json j = nonlin::hypotheses_to_json(list, t.names);
  j["schema_version"] = "hypotheses-v1";
  j["config"] = cfg.to_json();
  j["metrics"] = {{"test_auc", auc_of(out.prob, s.yte)},
                  {"best_epoch", r.best_epoch},
                  {"stopped_early", r.stopped_early},
                  {"dropped_tail_rows", r.dropped_tail_rows},
                  {"g_heldout_error", gm.heldout_error}};
  const auto path = out_path(g, a.out, "hypotheses.json");
  write_json(path, j);
  write_json(out_path(g, "", "causehyp_model.json"), r.model.to_json());
  auto csv = open_csv(out_path(g, "", "hypotheses.csv"));
  csv << "rank,coordinate,weight,anti_causal_score,score,top_inputs\n";
  for (std::size_t k = 0; k < list.items.size(); ++k) {
    const auto& h = list.items[k];
    csv << k + 1 << ',' << h.coordinate << ',' << h.weight << ',' << h.anti_causal_score << ',' << h.score << ',';
    for (std::size_t i = 0; i < h.top_inputs.size(); ++i)
      csv << (i ? ";" : "") << t.names[static_cast<std::size_t>(h.top_inputs[i])];
    csv << '\n';
  }
  std::cout << "CauseHyp: " << list.items.size() << " hypotheses, test AUC " << j["metrics"]["test_auc"].get<double>()
            << "\nwrote " << path << "\n";
  return kOk;
}

struct TheoremArgs {
  theory::TheoremConfig cfg;
  std::string noise = "gaussian";
  std::string estimator = "causal";
  double k_se = 3.0;
  bool sweep = false;
  std::vector<int> ns = {200, 1000};
  std::vector<double> lambdas = {0.0, 1.0, 10.0};
  std::vector<double> epsilons = {0.0, 0.25, 0.5};
  std::string out;
};

theory::Estimator estimator_from(const std::string& s) {
  if (s == "causal") return theory::Estimator::causal;
  if (s == "ridge") return theory::Estimator::ridge;
  throw ConfigError("unknown estimator '" + s + "'");
}

int run_theorem_check(const Globals& g, TheoremArgs a) {
  a.cfg.noise = theory::noise_from_string(a.noise);
  a.cfg.seed = g.seed;
  a.cfg.validate();
  const auto which = estimator_from(a.estimator);
  const auto row = theory::check_cell(a.cfg, which, a.k_se);
  json j = {{"schema_version", "theorem-check-v1"},
            {"config", a.cfg.to_json()},
            {"estimator", theory::to_string(which)},
            {"closed_form", row.closed_form},
            {"empirical", row.mc.empirical},
            {"se", row.mc.se},
            {"hits", row.mc.hits},
            {"z", row.z},
            {"k_se", a.k_se},
            {"pass", row.pass},
            {"closed_form_lambda_inf", theory::closed_form_limit_lambda_inf(a.cfg)}};
  if (a.sweep) {
    const auto rows = theory::sweep(a.cfg, a.ns, a.lambdas, a.epsilons, which, a.k_se);
    const auto csv_path = out_path(g, "", "theorem_sweep.csv");
    auto csv = open_csv(csv_path);
    csv << "estimator,noise,n,lambda,epsilon,closed_form,empirical,se,z,pass\n";
    int passed = 0;
    for (const auto& r : rows) {
      passed += r.pass;
      csv << theory::to_string(r.which) << ',' << theory::to_string(r.cfg.noise) << ',' << r.cfg.n << ','
          << r.cfg.lambda << ',' << r.cfg.epsilon << ',' << r.closed_form << ',' << r.mc.empirical << ','
          << r.mc.se << ',' << r.z << ',' << (r.pass ? 1 : 0) << '\n';
    }
    j["sweep"] = {{"csv", csv_path}, {"cells", rows.size()}, {"passed", passed}};
  }
  const auto path = out_path(g, a.out, "theorem_check.json");
  write_json(path, j);
  std::cout << "closed form " << row.closed_form << ", empirical " << row.mc.empirical << " (se " << row.mc.se
            << "): " << (row.pass ? "pass" : "FAIL") << "\nwrote " << path << "\n";
  return kOk;
}

struct BenchmarkArgs {
  std::string experiment;
  std::string detector;
  int m = 0, n = 0;
  int detector_scenarios = 0, detector_draws = 0;
  std::string lambda_rule;
};

int run_benchmark(const Globals& g, const BenchmarkArgs& a) {
  experiment::ExperimentConfig cfg;
  if (!a.experiment.empty()) cfg = experiment::ExperimentConfig::from_json(read_json_file(a.experiment));
  cfg.benchmark.seed = g.seed;
  cfg.split_seed = g.seed;
  if (!a.detector.empty()) cfg.detector_path = a.detector;
  if (a.m > 0) cfg.benchmark.m = a.m;
  if (a.n > 0) cfg.benchmark.n = a.n;
  if (a.detector_scenarios > 0) cfg.detector_scenarios = a.detector_scenarios;
  if (a.detector_draws > 0) cfg.detector_draws = a.detector_draws;
  if (!a.lambda_rule.empty()) cfg.lambda_rule = experiment::lambda_rule_from_string(a.lambda_rule);
  fs::create_directories(g.out_dir);
  cfg.out_dir = g.out_dir;
  cfg.validate();
  if (!cfg.detector_path.empty() && !fs::exists(cfg.detector_path))
    throw ConfigError("detector model '" + cfg.detector_path + "' does not exist");

  const auto rep = experiment::run_experiment(cfg);
  const json j = rep.to_json();
  const auto path = out_path(g, "", "report.json");
  write_json(path, j);
  if (!rep.benchmark.roles.empty()) {
    experiment::write_variables_csv(out_path(g, "", "variables.csv"), rep);
    experiment::write_path_csv(out_path(g, "", "path.csv"), rep);
  }
  for (const auto& e : tools::validate_report(j.dump())) std::cerr << "warning: report schema: " << e << "\n";
  for (const auto& m : rep.methods) {
    auto it = m.causality_at_k.find(25);
    std::cout << m.name << ": test AUC " << (m.test_auc ? std::to_string(*m.test_auc) : "n/a") << ", causality@25 "
              << (it != m.causality_at_k.end() ? std::to_string(it->second) : "n/a") << "\n";
  }
  std::cout << "wrote " << path << "\n";
  if (!rep.ok()) {
    for (const auto& s : rep.stages)
      if (!s.ok) std::cerr << "stage " << s.name << " failed: " << s.error << "\n";
    return kNumerical;
  }
  return kOk;
}

struct ReportArgs {
  std::string input;
  std::string out;
};

std::string metric_cell(const json& v, std::string& reason) {
  if (v.is_number()) return v.dump();
  if (v.is_object() && v.contains("reason")) reason = v.at("reason").get<std::string>();
  return "";
}

int run_report(const Globals& g, const ReportArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw ParseError("cannot open " + a.input, 0, "");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto errors = tools::validate_report(text);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << a.input << ": " << e << "\n";
    return kData;
  }
  const json j = json::parse(text);
  const auto path = out_path(g, a.out, "summary.csv");
  auto csv = open_csv(path);
  csv << "method,metric,value,reason\n";
  auto row = [&](const std::string& method, const std::string& metric, const json& v) {
    std::string reason;
    const auto cell = metric_cell(v, reason);
    csv << method << ',' << metric << ',' << cell << ',' << reason << '\n';
  };
  row("all", "spearman_rho", j["metrics"]["spearman_rho"]);
  for (const auto& [name, m] : j["metrics"]["methods"].items()) {
    row(name, "lambda", m["lambda"]);
    row(name, "valid_auc", m["valid_auc"]);
    row(name, "test_auc", m["test_auc"]);
    row(name, "test_f1", m["test_f1"]);
    row(name, "sparsity", m["sparsity"]);
    row(name, "auc_range", m["auc_range"]);
    for (const auto& [k, v] : m["causality_at_k"].items()) row(name, "causality_at_" + k, v);
  }
  std::cout << a.input << ": valid " << j.at("schema_version").get<std::string>() << " report, ok="
            << (j.at("ok").get<bool>() ? "true" : "false") << "\nwrote " << path << "\n";
  return kOk;
}

/// --config decides the reader by extension: .json uses JsonConfig, anything else TOML.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == "--config" && i + 1 < argc) return argv[i + 1];
    if (s.rfind("--config=", 0) == 0) return s.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causally regularized regression: synthetic scenarios, causality detector, weighted-penalty fits"};
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for output artifacts")->capture_default_str();
  const std::string cfg_arg = find_config_arg(argc, argv);
  if (cfg_arg.size() >= 5 && cfg_arg.substr(cfg_arg.size() - 5) == ".json")
    app.config_formatter(std::make_shared<tools::JsonConfig>());
  app.set_config("--config", "", "TOML or JSON file with option values; sections name subcommands");

  auto add_data = [](CLI::App* sub, DataArgs& d, bool with_bin) {
    sub->add_option("--data", d.data, "Input CSV with a header row")->required();
    sub->add_option("--label-col", d.label_col, "Binary label column")->capture_default_str();
    if (with_bin) sub->add_flag("--bin", d.bin, "Log-bin raw counts into 16 bins first");
  };

  GenSynthArgs gs;
  auto* c_gen = app.add_subcommand("gen-synth", "Generate a detector corpus, semi-synthetic benchmark or planted data");
  c_gen->add_option("--kind", gs.kind, "benchmark | corpus | interaction | multicause")
      ->check(CLI::IsMember({"benchmark", "corpus", "interaction", "multicause"}))
      ->capture_default_str();
  c_gen->add_option("--m", gs.m, "Variables (benchmark)")->capture_default_str();
  c_gen->add_option("--n", gs.n, "Rows (benchmark, planted)")->capture_default_str();
  c_gen->add_option("--K", gs.K, "Support size")->capture_default_str();
  c_gen->add_option("--frac-causal", gs.frac_causal)->capture_default_str();
  c_gen->add_option("--frac-confounded", gs.frac_confounded)->capture_default_str();
  c_gen->add_option("--prevalence", gs.prevalence)->capture_default_str();
  c_gen->add_option("--n-per-case", gs.n_per_case, "Samples per scenario (corpus)")->capture_default_str();
  c_gen->add_option("--draws", gs.draws, "Draws per sample (corpus)")->capture_default_str();

  TrainDetectorArgs td;
  auto* c_td = app.add_subcommand("train-detector", "Train the bivariate causality detector or the anti-causality set detector");
  c_td->add_option("--kind", td.kind, "bivariate | anticausal")
      ->check(CLI::IsMember({"bivariate", "anticausal"}))
      ->capture_default_str();
  c_td->add_option("--corpus", td.corpus, "Corpus directory from gen-synth; generated when absent");
  c_td->add_option("--scenarios", td.scenarios, "Scenarios to generate without --corpus")->capture_default_str();
  c_td->add_option("--draws", td.draws, "Draws per generated scenario")->capture_default_str();
  c_td->add_option("--layers", td.layers, "Hidden widths, comma separated");
  c_td->add_option("--epochs", td.epochs, "Maximum epochs (0 keeps the default)");
  c_td->add_option("--out", td.out, "Model JSON path");

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "Score every column with a trained detector");
  c_sc->add_option("--model", sc.model, "Detector JSON")->required();
  add_data(c_sc, sc.data, true);
  c_sc->add_option("--out", sc.out, "Scores JSON path");

  FitArgs ft;
  auto* c_fit = app.add_subcommand("fit", "Weighted-penalty logistic regression");
  add_data(c_fit, ft.data, true);
  c_fit->add_option("--scores", ft.scores, "Scores JSON or 'uniform'")->capture_default_str();
  c_fit->add_option("--lambda", ft.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_fit->add_option("--norm", ft.norm)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  c_fit->add_option("--mode", ft.mode)->check(CLI::IsMember({"causal", "l1", "two-step"}))->capture_default_str();
  c_fit->add_option("--cutoff", ft.cutoff, "Two-step exclusion cutoff")->capture_default_str();
  c_fit->add_flag("--standardize", ft.standardize, "Fit on standardized columns");
  c_fit->add_option("--max-iters", ft.max_iters)->capture_default_str();
  c_fit->add_option("--kkt-tol", ft.kkt_tol)->capture_default_str();
  c_fit->add_option("--out", ft.out, "Fit JSON path");

  NonlinArgs nl;
  auto* c_nl = app.add_subcommand("fit-nonlin", "Non-linear causally regularized model (nonlinCause)");
  add_data(c_nl, nl.data, false);
  c_nl->add_option("--scores", nl.scores, "Scores JSON or 'uniform'")->capture_default_str();
  c_nl->add_option("--lambda", nl.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_nl->add_option("--arch", nl.arch, "alpha-net hidden widths")->capture_default_str();
  c_nl->add_option("--q", nl.q, "Embedding dimension")->capture_default_str();
  c_nl->add_option("--epochs", nl.epochs)->capture_default_str();
  c_nl->add_option("--standardize", nl.standardize, "Standardize with training statistics")->capture_default_str();
  c_nl->add_option("--out", nl.out, "Result JSON path");

  HypArgs hy;
  auto* c_hy = app.add_subcommand("hypgen", "Multivariate causal hypothesis generation (CauseHyp)");
  add_data(c_hy, hy.data, false);
  c_hy->add_option("--g", hy.g_model, "Anti-causality detector JSON; trained when absent");
  c_hy->add_option("--lambda", hy.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_hy->add_option("--arch", hy.arch, "h-net hidden widths")->capture_default_str();
  c_hy->add_option("--k-h", hy.k_h, "Representation size")->capture_default_str();
  c_hy->add_option("--top-k", hy.top_k)->capture_default_str();
  c_hy->add_option("--epochs", hy.epochs)->capture_default_str();
  c_hy->add_option("--l1-lower", hy.l1_lower)->capture_default_str();
  c_hy->add_option("--standardize", hy.standardize)->capture_default_str();
  c_hy->add_option("--out", hy.out, "Hypotheses JSON path");

  TheoremArgs th;
  auto* c_th = app.add_subcommand("theorem-check", "Monte Carlo check of the closed-form causal accuracy");
  c_th->add_option("--n", th.cfg.n)->capture_default_str();
  c_th->add_option("--gamma", th.cfg.gamma)->capture_default_str();
  c_th->add_option("--beta1", th.cfg.beta1)->capture_default_str();
  c_th->add_option("--beta2", th.cfg.beta2)->capture_default_str();
  c_th->add_option("--lambda", th.cfg.lambda)->capture_default_str();
  c_th->add_option("--epsilon", th.cfg.epsilon)->capture_default_str();
  c_th->add_option("--noise", th.noise)->check(CLI::IsMember({"gaussian", "laplace"}))->capture_default_str();
  c_th->add_option("--trials", th.cfg.trials)->capture_default_str();
  c_th->add_option("--estimator", th.estimator)->check(CLI::IsMember({"causal", "ridge"}))->capture_default_str();
  c_th->add_option("--k-se", th.k_se, "Pass band in binomial standard errors")->capture_default_str();
  c_th->add_flag("--sweep", th.sweep, "Also write a sweep CSV over --ns x --lambdas x --epsilons");
  c_th->add_option("--ns", th.ns)->delimiter(',')->capture_default_str();
  c_th->add_option("--lambdas", th.lambdas)->delimiter(',')->capture_default_str();
  c_th->add_option("--epsilons", th.epsilons)->delimiter(',')->capture_default_str();
  c_th->add_option("--out", th.out, "Result JSON path");

  BenchmarkArgs bm;
  auto* c_bm = app.add_subcommand("benchmark", "End-to-end semi-synthetic experiment");
  c_bm->add_option("--experiment", bm.experiment, "Experiment config JSON");
  c_bm->add_option("--detector", bm.detector, "Detector JSON; trained when absent");
  c_bm->add_option("--m", bm.m, "Override benchmark variables");
  c_bm->add_option("--n", bm.n, "Override benchmark rows");
  c_bm->add_option("--detector-scenarios", bm.detector_scenarios);
  c_bm->add_option("--detector-draws", bm.detector_draws);
  c_bm->add_option("--lambda-rule", bm.lambda_rule)->check(CLI::IsMember({"one_se", "max_auc"}));

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Validate a report against the schema and summarize it");
  c_rp->add_option("--input", rp.input, "report.json from benchmark")->required();
  c_rp->add_option("--out", rp.out, "Summary CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c_gen->parsed()) return run_gen_synth(g, gs);
    if (c_td->parsed()) return run_train_detector(g, td);
    if (c_sc->parsed()) return run_score(g, sc);
    if (c_fit->parsed()) return run_fit(g, ft);
    if (c_nl->parsed()) return run_fit_nonlin(g, nl);
    if (c_hy->parsed()) return run_hypgen(g, hy);
    if (c_th->parsed()) return run_theorem_check(g, th);
    if (c_bm->parsed()) return run_benchmark(g, bm);
    if (c_rp->parsed()) return run_report(g, rp);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
