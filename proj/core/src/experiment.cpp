#include "causalreg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "causalreg/dataset.hpp"
#include "causalreg/errors.hpp"
#include "causalreg/metrics.hpp"

namespace causalreg::experiment {

std::string to_string(LambdaRule r) { return r == LambdaRule::one_se ? "one_se" : "max_auc"; }

LambdaRule lambda_rule_from_string(const std::string& s) {
  if (s == "one_se") return LambdaRule::one_se;
  if (s == "max_auc") return LambdaRule::max_auc;
  throw ConfigError("unknown lambda rule '" + s + "'");
}

void ExperimentConfig::validate() const {
  benchmark.validate();
  if (lambda_grid.empty()) throw ConfigError("ExperimentConfig: empty lambda grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i]))
      throw ConfigError("ExperimentConfig: lambda grid values must be finite and >= 0");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw ConfigError("ExperimentConfig: lambda grid must be strictly ascending");
  }
  if (ks.empty()) throw ConfigError("ExperimentConfig: no causality@k values");
  for (int k : ks)
    if (k < 1) throw ConfigError("ExperimentConfig: k must be >= 1");
  if (!(frac_train > 0.0 && frac_valid > 0.0 && frac_train + frac_valid < 1.0))
    throw ConfigError("ExperimentConfig: need 0 < frac_train, frac_valid and frac_train + frac_valid < 1");
  if (!(two_step_cutoff >= 0.0 && two_step_cutoff <= 1.0))
    throw ConfigError("ExperimentConfig: two_step_cutoff must lie in [0, 1]");
  if (detector_path.empty() && (detector_scenarios < 10 || detector_draws < 1))
    throw ConfigError("ExperimentConfig: detector corpus too small");
  if (!(kkt_tol >= 0.0) || max_iters < 1) throw ConfigError("ExperimentConfig: invalid solver settings");
}

nlohmann::json ExperimentConfig::to_json() const {
  const auto& b = benchmark;
  return {{"benchmark",
           {{"m", b.m},
            {"n", b.n},
            {"frac_causal", b.frac_causal},
            {"frac_confounded", b.frac_confounded},
            {"confounder_count", b.confounder_count},
            {"effect_scale", b.effect_scale},
            {"confounder_strength", b.confounder_strength},
            {"confounder_levels_max", b.confounder_levels_max},
            {"prevalence", b.prevalence},
            {"K", b.K},
            {"seed", b.seed}}},
          {"detector_path", detector_path},
          {"detector_scenarios", detector_scenarios},
          {"detector_draws", detector_draws},
          {"detector_seed", detector_seed},
          {"lambda_grid", lambda_grid},
          {"lambda_rule", to_string(lambda_rule)},
          {"two_step_cutoff", two_step_cutoff},
          {"f1_threshold", f1_threshold},
          {"ks", ks},
          {"frac_train", frac_train},
          {"frac_valid", frac_valid},
          {"standardize", standardize},
          {"kkt_tol", kkt_tol},
          {"max_iters", max_iters},
          {"split_seed", split_seed},
          {"out_dir", out_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  static const std::set<std::string> top = {
      "benchmark", "detector_path", "detector_scenarios", "detector_draws", "detector_seed", "lambda_grid",
      "lambda_rule", "two_step_cutoff", "f1_threshold", "ks", "frac_train", "frac_valid", "standardize",
      "kkt_tol", "max_iters", "split_seed", "out_dir", "schema_version"};
  static const std::set<std::string> bench = {"m", "n", "frac_causal", "frac_confounded", "confounder_count",
                                              "effect_scale", "confounder_strength", "confounder_levels_max",
                                              "prevalence", "K", "seed"};
  for (const auto& [k, _] : j.items())
    if (!top.count(k)) throw ConfigError("experiment config: unknown key '" + k + "'");
  ExperimentConfig c;
  try {
    if (j.contains("benchmark")) {
      const auto& b = j.at("benchmark");
      for (const auto& [k, _] : b.items())
        if (!bench.count(k)) throw ConfigError("experiment config: unknown benchmark key '" + k + "'");
      auto& s = c.benchmark;
      s.m = b.value("m", s.m);
      s.n = b.value("n", s.n);
      s.frac_causal = b.value("frac_causal", s.frac_causal);
      s.frac_confounded = b.value("frac_confounded", s.frac_confounded);
      s.confounder_count = b.value("confounder_count", s.confounder_count);
      s.effect_scale = b.value("effect_scale", s.effect_scale);
      s.confounder_strength = b.value("confounder_strength", s.confounder_strength);
      s.confounder_levels_max = b.value("confounder_levels_max", s.confounder_levels_max);
      s.prevalence = b.value("prevalence", s.prevalence);
      s.K = b.value("K", s.K);
      s.seed = b.value("seed", s.seed);
    }
    c.detector_path = j.value("detector_path", c.detector_path);
    c.detector_scenarios = j.value("detector_scenarios", c.detector_scenarios);
    c.detector_draws = j.value("detector_draws", c.detector_draws);
    c.detector_seed = j.value("detector_seed", c.detector_seed);
    c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
    if (j.contains("lambda_rule")) c.lambda_rule = lambda_rule_from_string(j.at("lambda_rule").get<std::string>());
    c.two_step_cutoff = j.value("two_step_cutoff", c.two_step_cutoff);
    c.f1_threshold = j.value("f1_threshold", c.f1_threshold);
    c.ks = j.value("ks", c.ks);
    c.frac_train = j.value("frac_train", c.frac_train);
    c.frac_valid = j.value("frac_valid", c.frac_valid);
    c.standardize = j.value("standardize", c.standardize);
    c.kkt_tol = j.value("kkt_tol", c.kkt_tol);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.split_seed = j.value("split_seed", c.split_seed);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<int> rank_variables(const Eigen::VectorXd& w, const Eigen::VectorXd& sd) {
  if (w.size() != sd.size()) throw ShapeError("rank_variables: w and sd lengths differ");
  std::vector<int> idx(static_cast<std::size_t>(w.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(w(a)) * sd(a) > std::abs(w(b)) * sd(b); });
  return idx;
}

double auc_standard_error(double auc, double n_pos, double n_neg) {
  if (!(n_pos >= 1.0 && n_neg >= 1.0)) throw DomainError("auc_standard_error: need both classes");
  const double q1 = auc / (2.0 - auc);
  const double q2 = 2.0 * auc * auc / (1.0 + auc);
  const double v = (auc * (1.0 - auc) + (n_pos - 1.0) * (q1 - auc * auc) + (n_neg - 1.0) * (q2 - auc * auc)) /
                   (n_pos * n_neg);
  return std::sqrt(std::max(v, 0.0));
}

std::size_t select_lambda(const std::vector<double>& valid_aucs, LambdaRule rule, double n_pos, double n_neg) {
  if (valid_aucs.empty()) throw ConfigError("select_lambda: empty grid");
  const auto best_it = std::max_element(valid_aucs.begin(), valid_aucs.end());
  std::size_t chosen = static_cast<std::size_t>(best_it - valid_aucs.begin());
  if (rule == LambdaRule::max_auc) return chosen;
  const double floor = *best_it - auc_standard_error(*best_it, n_pos, n_neg);
  for (std::size_t g = 0; g < valid_aucs.size(); ++g)
    if (valid_aucs[g] >= floor) chosen = g;
  return chosen;
}

detector::DetectorModel train_config_detector(const ExperimentConfig& config) {
  Rng rng = stream_rng(config.detector_seed, 0);
  scenario::ScenarioOptions opts;
  opts.keep_draws = false;
  const int per_case = std::max(1, config.detector_scenarios / static_cast<int>(scenario::kAllScenarios.size()));
  const auto corpus =
      scenario::generate_detector_corpus(rng, per_case, config.benchmark.K, config.detector_draws, opts);
  return detector::train_detector(corpus, config.detector, config.detector_seed);
}

bool Report::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.ok; });
}

const MethodResult* Report::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

Eigen::VectorXd as_vec(const std::vector<int>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// finite value or null with a reason
nlohmann::json metric(const std::optional<double>& v, const std::string& reason) {
  if (v && std::isfinite(*v)) return *v;
  return {{"value", nullptr}, {"reason", reason.empty() ? "not computed" : reason}};
}

template <class F>
bool run_stage(std::vector<StageRecord>& stages, const std::string& name, F&& f) {
  StageRecord rec{name, true, {}};
  try {
    f();
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  stages.push_back(rec);
  return rec.ok;
}

struct SplitData {
  Eigen::MatrixXd Xtr, Xva, Xte;
  Eigen::VectorXd ytr, yva, yte;
  Eigen::MatrixXi Xtr_bins;
  std::vector<int> ytr_i, yva_i, yte_i;
  Eigen::VectorXd sd;
};

MethodResult run_method(const std::string& name, const SplitData& d, const ExperimentConfig& cfg,
                        const std::vector<double>& c, const std::vector<double>& truth) {
  MethodResult r;
  r.name = name;
  glm::FitConfig base;
  base.standardize = cfg.standardize;
  base.kkt_tol = cfg.kkt_tol;
  base.max_iters = cfg.max_iters;
  if (name == "LogCause") base.weights = c;
  const bool two = name == "TwoStep";

  std::vector<glm::GlmFit> fits;
  std::vector<double> vaucs;
  fits.reserve(cfg.lambda_grid.size());
  for (double lambda : cfg.lambda_grid) {
    glm::FitConfig fc = base;
    fc.lambda = lambda;
    const glm::GlmFit* warm = fits.empty() || two ? nullptr : &fits.back();
    glm::GlmFit f = two ? glm::fit_two_step(d.Xtr, d.ytr, c, cfg.two_step_cutoff, fc) : glm::fit(d.Xtr, d.ytr, fc, warm);
    const Eigen::VectorXd pv = glm::predict(f, d.Xva);
    const Eigen::VectorXd pt = glm::predict(f, d.Xte);
    GridPoint gp;
    gp.lambda = lambda;
    gp.valid_auc = metrics::auc(std::span<const double>(pv.data(), pv.size()), d.yva_i);
    gp.test_auc = metrics::auc(std::span<const double>(pt.data(), pt.size()), d.yte_i);
    gp.nonzero = f.nonzero_count;
    r.path.push_back(gp);
    vaucs.push_back(gp.valid_auc);
    fits.push_back(std::move(f));
  }
  const double npos = d.yva.sum();
  const std::size_t pick = select_lambda(vaucs, cfg.lambda_rule, npos, static_cast<double>(d.yva.size()) - npos);
  r.fit = fits[pick];
  r.lambda = cfg.lambda_grid[pick];
  r.valid_auc = r.path[pick].valid_auc;
  r.test_auc = r.path[pick].test_auc;
  const Eigen::VectorXd pt = glm::predict(r.fit, d.Xte);
  r.test_f1 = metrics::f1(std::span<const double>(pt.data(), pt.size()), d.yte_i, cfg.f1_threshold).value;
  r.ranking = rank_variables(r.fit.w, d.sd);
  for (int k : cfg.ks) r.causality_at_k[k] = metrics::causality_at_k(r.ranking, truth, k).value;
  double lo = r.path.front().test_auc, hi = lo;
  for (const auto& gp : r.path) {
    lo = std::min(lo, gp.test_auc);
    hi = std::max(hi, gp.test_auc);
  }
  r.auc_range = hi - lo;
  return r;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config, const detector::DetectorModel* model) {
  Report rep;
  rep.config = config;
  if (!run_stage(rep.stages, "validate_config", [&] { config.validate(); })) return rep;

  if (!run_stage(rep.stages, "generate_benchmark",
                 [&] { rep.benchmark = scenario::generate_semisynthetic_benchmark(config.benchmark); }))
    return rep;

  SplitData d;
  if (!run_stage(rep.stages, "split", [&] {
        const auto split = data::stratified_split(rep.benchmark.y, config.frac_train, config.frac_valid,
                                                  config.split_seed);
        const Eigen::MatrixXd X = rep.benchmark.X.cast<double>();
        d.Xtr = data::take_rows(X, split.train);
        d.Xva = data::take_rows(X, split.valid);
        d.Xte = data::take_rows(X, split.test);
        d.ytr_i = data::take(rep.benchmark.y, split.train);
        d.yva_i = data::take(rep.benchmark.y, split.valid);
        d.yte_i = data::take(rep.benchmark.y, split.test);
        d.ytr = as_vec(d.ytr_i);
        d.yva = as_vec(d.yva_i);
        d.yte = as_vec(d.yte_i);
        d.Xtr_bins = d.Xtr.cast<int>();
        d.sd = (d.Xtr.rowwise() - d.Xtr.colwise().mean()).array().square().colwise().mean().sqrt().transpose();
      }))
    return rep;

  detector::DetectorModel trained;
  if (!run_stage(rep.stages, "detector", [&] {
        if (model) return;
        if (!config.detector_path.empty()) {
          std::ifstream in(config.detector_path);
          if (!in) throw ConfigError("cannot open detector model '" + config.detector_path + "'");
          trained = detector::DetectorModel::from_json(nlohmann::json::parse(in));
        } else {
          trained = train_config_detector(config);
        }
      }))
    return rep;
  const detector::DetectorModel& det = model ? *model : trained;
  rep.detector_meta = det.meta;

  // scores and MI use the training split only
  if (!run_stage(rep.stages, "score", [&] {
        rep.weights = detector::score_all(det, d.Xtr_bins, d.ytr_i);
        rep.mi.clear();
        for (Eigen::Index j = 0; j < d.Xtr_bins.cols(); ++j) {
          std::vector<int> col(d.Xtr_bins.col(j).data(), d.Xtr_bins.col(j).data() + d.Xtr_bins.rows());
          rep.mi.push_back(metrics::mutual_information(col, d.ytr_i));
        }
        try {
          rep.spearman_rho = detector::spearman_mi_check(rep.weights.c, d.Xtr_bins, d.ytr_i);
        } catch (const UndefinedError& e) {
          rep.spearman_note = e.what();
        }
      }))
    return rep;

  const auto truth = rep.benchmark.causal_scores();
  for (const char* name : {"LogCause", "LogL1", "TwoStep"}) {
    MethodResult mr;
    if (!run_stage(rep.stages, std::string("fit_") + name,
                   [&] { mr = run_method(name, d, config, rep.weights.c, truth); })) {
      mr.name = name;
      mr.error = rep.stages.back().error;
    }
    rep.methods.push_back(std::move(mr));
  }
  return rep;
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kReportSchema;
  j["config"] = config.to_json();
  j["versions"] = {{"library", "causalreg 0.1.0"}, {"detector", "detector-v1"}};
  j["decisions"] = {{"bin_rule", "min(floor(log2(count + 1)), 15)"},
                    {"f1_threshold", config.f1_threshold},
                    {"mi_units", "nats"},
                    {"lambda_rule", to_string(config.lambda_rule)},
                    {"variable_ranking", "abs(coefficient) * training sd"},
                    {"two_step_cutoff", config.two_step_cutoff}};
  nlohmann::json stages_j = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json sj = {{"name", s.name}, {"ok", s.ok}};
    if (!s.ok) sj["error"] = s.error;
    stages_j.push_back(sj);
  }
  j["stages"] = stages_j;
  j["ok"] = ok();

  const auto& b = benchmark;
  int n_causal = 0;
  for (auto r : b.roles) n_causal += r == scenario::VariableRole::causal;
  double prevalence = 0.0;
  for (int v : b.y) prevalence += v;
  j["benchmark"] = {{"n", static_cast<long>(b.y.size())},
                    {"m", static_cast<long>(b.roles.size())},
                    {"n_causal", n_causal},
                    {"prevalence", b.y.empty() ? 0.0 : prevalence / static_cast<double>(b.y.size())},
                    {"intercept", b.intercept}};
  j["detector"] = {{"source", config.detector_path.empty() ? "trained" : config.detector_path},
                   {"heldout_error", detector_meta.heldout_error},
                   {"heldout_auc", detector_meta.heldout_auc},
                   {"corpus_seed", detector_meta.corpus_seed}};

  nlohmann::json mj = nlohmann::json::object();
  mj["spearman_rho"] = metric(spearman_rho, spearman_note);
  nlohmann::json methods_j = nlohmann::json::object();
  for (const auto& m : methods) {
    nlohmann::json x;
    const std::string why = m.error.empty() ? "" : m.error;
    x["lambda"] = m.error.empty() ? nlohmann::json(m.lambda) : nlohmann::json(nullptr);
    x["valid_auc"] = metric(m.valid_auc, why);
    x["test_auc"] = metric(m.test_auc, why);
    x["test_f1"] = metric(m.test_f1, why);
    x["sparsity"] = m.error.empty() ? nlohmann::json(m.fit.nonzero_count) : nlohmann::json(nullptr);
    x["auc_range"] = metric(m.auc_range, why);
    nlohmann::json ck = nlohmann::json::object();
    for (int k : config.ks) {
      auto it = m.causality_at_k.find(k);
      ck[std::to_string(k)] = metric(it == m.causality_at_k.end() ? std::nullopt : std::optional<double>(it->second), why);
    }
    x["causality_at_k"] = ck;
    nlohmann::json path = nlohmann::json::array();
    for (const auto& gp : m.path)
      path.push_back({{"lambda", gp.lambda}, {"valid_auc", gp.valid_auc}, {"test_auc", gp.test_auc}, {"nonzero", gp.nonzero}});
    x["path"] = path;
    if (!m.error.empty()) x["error"] = m.error;
    methods_j[m.name] = x;
  }
  mj["methods"] = methods_j;
  j["metrics"] = mj;

  nlohmann::json vars = nlohmann::json::array();
  const std::size_t m = b.roles.size();
  std::vector<std::vector<int>> rank_of;
  for (const auto& meth : methods) {
    std::vector<int> r(m, -1);
    for (std::size_t pos = 0; pos < meth.ranking.size(); ++pos) r[static_cast<std::size_t>(meth.ranking[pos])] = static_cast<int>(pos) + 1;
    rank_of.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < m; ++i) {
    nlohmann::json v = {{"name", b.names[i]},
                        {"role", std::string(scenario::to_string(b.roles[i]))},
                        {"truth", b.roles[i] == scenario::VariableRole::causal ? 1.0 : 0.0}};
    v["c"] = i < weights.c.size() ? nlohmann::json(weights.c[i]) : nlohmann::json(nullptr);
    v["mi"] = i < mi.size() ? nlohmann::json(mi[i]) : nlohmann::json(nullptr);
    nlohmann::json coef = nlohmann::json::object(), rank = nlohmann::json::object();
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto& meth = methods[k];
      const bool have = meth.error.empty() && static_cast<Eigen::Index>(i) < meth.fit.w.size();
      coef[meth.name] = have ? nlohmann::json(meth.fit.w(static_cast<Eigen::Index>(i))) : nlohmann::json(nullptr);
      rank[meth.name] = have && rank_of[k][i] > 0 ? nlohmann::json(rank_of[k][i]) : nlohmann::json(nullptr);
    }
    v["coefficient"] = coef;
    v["rank"] = rank;
    vars.push_back(v);
  }
  j["variables"] = vars;
  return j;
}

void write_variables_csv(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.precision(10);
  out << "name,role,truth,c,mi";
  for (const auto& m : report.methods) out << ",coef_" << m.name << ",rank_" << m.name;
  out << "\n";
  const auto& b = report.benchmark;
  std::vector<std::vector<int>> rank_of;
  for (const auto& meth : report.methods) {
    std::vector<int> r(b.roles.size(), 0);
    for (std::size_t pos = 0; pos < meth.ranking.size(); ++pos) r[static_cast<std::size_t>(meth.ranking[pos])] = static_cast<int>(pos) + 1;
    rank_of.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < b.roles.size(); ++i) {
    out << b.names[i] << "," << scenario::to_string(b.roles[i]) << ","
        << (b.roles[i] == scenario::VariableRole::causal ? 1 : 0) << ",";
    if (i < report.weights.c.size()) out << report.weights.c[i];
    out << ",";
    if (i < report.mi.size()) out << report.mi[i];
    for (std::size_t k = 0; k < report.methods.size(); ++k) {
      const auto& meth = report.methods[k];
      out << ",";
      if (meth.error.empty() && static_cast<Eigen::Index>(i) < meth.fit.w.size()) out << meth.fit.w(static_cast<Eigen::Index>(i));
      out << ",";
      if (rank_of[k][i] > 0) out << rank_of[k][i];
    }
    out << "\n";
  }
}

void write_path_csv(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.precision(10);
  out << "method,lambda,valid_auc,test_auc,nonzero\n";
  for (const auto& m : report.methods)
    for (const auto& gp : m.path)
      out << m.name << "," << gp.lambda << "," << gp.valid_auc << "," << gp.test_auc << "," << gp.nonzero << "\n";
}

}  // namespace causalreg::experiment
