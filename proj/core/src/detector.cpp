#include "causalreg/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "causalreg/errors.hpp"

namespace causalreg::detector {

EmpiricalJoint empirical_joint(std::span<const Draw> draws, int K) {
  if (K < 2) throw DomainError("empirical_joint: K must be >= 2");
  if (draws.empty()) throw DomainError("empirical_joint: no draws");
  std::vector<std::uint32_t> counts(2 * static_cast<std::size_t>(K), 0);
  for (const Draw& d : draws) {
    if (d.x < 1 || d.x > K || (d.y != 0 && d.y != 1))
      throw DomainError("empirical_joint: draw outside the support");
    ++counts[scenario::joint_index(d.x, d.y, K)];
  }
  return empirical_joint_from_counts(counts, K);
}

EmpiricalJoint empirical_joint_from_counts(std::span<const std::uint32_t> counts, int K) {
  if (counts.size() != 2 * static_cast<std::size_t>(K))
    throw ShapeError("empirical_joint_from_counts: expected 2K counts");
  double total = 0.0;
  for (auto c : counts) total += c;
  if (total == 0.0) throw DomainError("empirical_joint_from_counts: no draws");
  EmpiricalJoint j;
  j.K = K;
  j.probs.reserve(counts.size());
  for (auto c : counts) j.probs.push_back(static_cast<double>(c) / total);
  return j;
}

Eigen::MatrixXd corpus_matrix(const std::vector<ScenarioSample>& corpus) {
  if (corpus.empty()) return {};
  const int K = corpus.front().K;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(corpus.size()), 2 * K);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].K != K) throw ShapeError("corpus_matrix: mixed support sizes");
    const auto j = empirical_joint_from_counts(corpus[i].counts, K);
    for (int t = 0; t < 2 * K; ++t) M(static_cast<Eigen::Index>(i), t) = j.probs[static_cast<std::size_t>(t)];
  }
  return M;
}

std::string to_string(FeatureMap f) {
  return f == FeatureMap::raw ? "raw" : "log_dependence";
}

FeatureMap feature_map_from_string(const std::string& s) {
  if (s == "raw") return FeatureMap::raw;
  if (s == "log_dependence") return FeatureMap::log_dependence;
  throw ConfigError("unknown feature map '" + s + "'");
}

int feature_dim(FeatureMap f, int K) { return f == FeatureMap::raw ? 2 * K : 3 * K + 4; }

Eigen::MatrixXd featurize(const Eigen::MatrixXd& joints, int K, FeatureMap f) {
  if (joints.cols() != 2 * K) throw ShapeError("featurize: expected 2K columns");
  if (f == FeatureMap::raw) return joints;
  constexpr double kOffset = 1e-5;
  Eigen::MatrixXd F(joints.rows(), feature_dim(f, K));
  for (Eigen::Index i = 0; i < joints.rows(); ++i) {
    const auto row = joints.row(i);
    double py1 = 0.0;
    for (int x = 0; x < K; ++x) py1 += row(K + x);
    const double py0 = 1.0 - py1;
    double mi = 0.0, spread = 0.0;
    for (int t = 0; t < 2 * K; ++t) F(i, t) = std::log(row(t) + kOffset);
    for (int x = 0; x < K; ++x) {
      const double p0 = row(x), p1 = row(K + x), px = p0 + p1;
      F(i, 2 * K + x) = std::log(px + kOffset);
      if (px <= 0.0) continue;
      const double q = p1 / px;
      spread += px * (q - py1) * (q - py1);
      if (p0 > 0.0) mi += p0 * std::log(p0 / (px * py0));
      if (p1 > 0.0) mi += p1 * std::log(p1 / (px * py1));
    }
    F(i, 3 * K) = std::log(std::max(mi, 0.0) + 1e-6);
    F(i, 3 * K + 1) = std::log(spread + 1e-8);
    F(i, 3 * K + 2) = std::abs(py1 - 0.5);
    F(i, 3 * K + 3) = std::log(spread / (py1 * py0 + 1e-12) + 1e-8);
  }
  return F;
}

Eigen::MatrixXd relabel_y(const Eigen::MatrixXd& joints, int K) {
  if (joints.cols() != 2 * K) throw ShapeError("relabel_y: expected 2K columns");
  Eigen::MatrixXd out(joints.rows(), joints.cols());
  out << joints.rightCols(K), joints.leftCols(K);
  return out;
}

nlohmann::json DetectorModel::to_json() const {
  nlohmann::json j;
  j["schema_version"] = "detector-v1";
  j["K"] = K;
  j["features"] = to_string(features);
  j["relabel_symmetric"] = relabel_symmetric;
  j["metadata"] = {{"corpus_seed", meta.corpus_seed},   {"train_seed", meta.train_seed},
                   {"heldout_error", meta.heldout_error}, {"heldout_auc", meta.heldout_auc},
                   {"n_train", meta.n_train},             {"n_valid", meta.n_valid},
                   {"n_heldout", meta.n_heldout},         {"best_epoch", meta.best_epoch}};
  j["net"] = net.to_json();
  return j;
}

DetectorModel DetectorModel::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", "") != "detector-v1")
    throw ConfigError("detector model: unsupported schema_version");
  DetectorModel m;
  m.K = j.at("K").get<int>();
  m.features = feature_map_from_string(j.at("features").get<std::string>());
  m.relabel_symmetric = j.at("relabel_symmetric").get<bool>();
  const auto& md = j.at("metadata");
  m.meta.corpus_seed = md.at("corpus_seed").get<std::uint64_t>();
  m.meta.train_seed = md.at("train_seed").get<std::uint64_t>();
  m.meta.heldout_error = md.at("heldout_error").get<double>();
  m.meta.heldout_auc = md.at("heldout_auc").get<double>();
  m.meta.n_train = md.at("n_train").get<int>();
  m.meta.n_valid = md.at("n_valid").get<int>();
  m.meta.n_heldout = md.at("n_heldout").get<int>();
  m.meta.best_epoch = md.at("best_epoch").get<int>();
  m.net = nn::Network::from_json(j.at("net"));
  if (m.net.spec().input_dim != feature_dim(m.features, m.K) || m.net.spec().output_dim() != 1)
    throw ConfigError("detector model: network dimensions do not match K");
  return m;
}

DetectorModel train_detector(const std::vector<ScenarioSample>& corpus, const DetectorConfig& config,
                             std::uint64_t corpus_seed) {
  if (corpus.empty()) throw ConfigError("train_detector: empty corpus");
  bool has0 = false, has1 = false;
  for (const auto& s : corpus) (s.label == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw ConfigError("train_detector: corpus must contain both labels");
  if (config.valid_frac <= 0 || config.heldout_frac <= 0 ||
      config.valid_frac + config.heldout_frac >= 1)
    throw ConfigError("train_detector: invalid split fractions");

  const int K = corpus.front().K;
  const Eigen::MatrixXd joints = corpus_matrix(corpus);

  // Stratify by scenario so every case appears in each part.
  Rng split_rng = stream_rng(config.train.seed, 0xD37);
  std::vector<int> tr, va, ho;
  for (auto id : scenario::kAllScenarios) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].scenario == id) idx.push_back(static_cast<int>(i));
    shuffle_in_place(idx, split_rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_ho = static_cast<std::size_t>(std::lround(config.heldout_frac * n));
    const auto n_va = static_cast<std::size_t>(std::lround(config.valid_frac * n));
    for (std::size_t t = 0; t < idx.size(); ++t) {
      if (t < n_ho) ho.push_back(idx[t]);
      else if (t < n_ho + n_va) va.push_back(idx[t]);
      else tr.push_back(idx[t]);
    }
  }
  if (tr.empty() || va.empty() || ho.empty())
    throw ConfigError("train_detector: corpus too small for the requested split");
  std::sort(tr.begin(), tr.end());
  std::sort(va.begin(), va.end());
  std::sort(ho.begin(), ho.end());

  auto make_set = [&](const std::vector<int>& rows, bool augment) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd J(n, joints.cols());
    nn::LabeledSet s;
    s.Y.resize(augment ? 2 * n : n, 1);
    for (Eigen::Index r = 0; r < n; ++r) {
      J.row(r) = joints.row(rows[static_cast<std::size_t>(r)]);
      s.Y(r, 0) = corpus[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])].label;
    }
    if (augment) {
      s.Y.bottomRows(n) = s.Y.topRows(n);
      Eigen::MatrixXd both(2 * n, J.cols());
      both << J, relabel_y(J, K);
      J = std::move(both);
    }
    s.X = featurize(J, K, config.features);
    return s;
  };
  const auto train_set = make_set(tr, config.relabel_symmetric);
  const auto valid_set = make_set(va, false);

  const auto spec = nn::NetSpec::mlp(feature_dim(config.features, K), config.hidden, 1, nn::Activation::relu,
                                     nn::Activation::sigmoid, config.batch_norm);
  Rng init_rng = stream_rng(config.train.seed, 0);
  auto net = nn::Network::initialize(spec, init_rng);
  auto result = nn::train(std::move(net), train_set, valid_set, nn::Loss::cross_entropy, config.train);

  DetectorModel model;
  model.net = std::move(result.net);
  model.K = K;
  model.features = config.features;
  model.relabel_symmetric = config.relabel_symmetric;
  model.meta.corpus_seed = corpus_seed;
  model.meta.train_seed = config.train.seed;
  model.meta.n_train = static_cast<int>(tr.size());
  model.meta.n_valid = static_cast<int>(va.size());
  model.meta.n_heldout = static_cast<int>(ho.size());
  model.meta.best_epoch = result.best_epoch;

  std::vector<ScenarioSample> heldout;
  heldout.reserve(ho.size());
  for (int i : ho) heldout.push_back(corpus[static_cast<std::size_t>(i)]);
  const auto ev = evaluate_detector(model, heldout);
  model.meta.heldout_error = ev.error;
  model.meta.heldout_auc = ev.auc;
  return model;
}

Eigen::VectorXd score_joints(const DetectorModel& model, const Eigen::MatrixXd& joints) {
  if (joints.cols() != 2 * model.K) throw ShapeError("score_joints: expected 2K columns");
  Eigen::VectorXd s =
      nn::forward(model.net, featurize(joints, model.K, model.features), nn::Mode::infer).col(0);
  if (model.relabel_symmetric) {
    const Eigen::MatrixXd flipped = featurize(relabel_y(joints, model.K), model.K, model.features);
    s = 0.5 * (s + nn::forward(model.net, flipped, nn::Mode::infer).col(0));
  }
  return s;
}

double score_joint(const DetectorModel& model, const EmpiricalJoint& joint) {
  if (joint.K != model.K) throw ShapeError("score_joint: support size differs from the model");
  const Eigen::Map<const Eigen::RowVectorXd> row(joint.probs.data(),
                                                 static_cast<Eigen::Index>(joint.probs.size()));
  return score_joints(model, Eigen::MatrixXd(row))(0);
}

double score_noncausality(const DetectorModel& model, std::span<const Draw> draws) {
  return score_joint(model, empirical_joint(draws, model.K));
}

CausalWeights score_all(const DetectorModel& model, const Eigen::MatrixXi& X,
                        std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ShapeError("score_all: X/y row mismatch");
  if (X.rows() == 0) throw DomainError("score_all: no rows");
  const int K = model.K;
  Eigen::MatrixXd joints = Eigen::MatrixXd::Zero(X.cols(), 2 * K);
  CausalWeights w;
  w.degenerate.assign(static_cast<std::size_t>(X.cols()), false);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    std::vector<std::uint32_t> counts(2 * static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int v = X(i, j);
      const int yi = y[static_cast<std::size_t>(i)];
      if (v < 0 || v >= K) throw DomainError("score_all: bin index outside [0, K-1]");
      if (yi != 0 && yi != 1) throw DomainError("score_all: y must be 0 or 1");
      ++counts[scenario::joint_index(v + 1, yi, K)];
    }
    w.degenerate[static_cast<std::size_t>(j)] = (X.col(j).array() == X(0, j)).all();
    const auto ej = empirical_joint_from_counts(counts, K);
    for (int t = 0; t < 2 * K; ++t) joints(j, t) = ej.probs[static_cast<std::size_t>(t)];
  }
  const Eigen::VectorXd s = score_joints(model, joints);
  w.c.assign(s.data(), s.data() + s.size());
  return w;
}

DetectorEvaluation evaluate_scores(std::span<const double> scores,
                                   const std::vector<ScenarioSample>& corpus) {
  if (scores.size() != corpus.size()) throw ShapeError("evaluate_scores: length mismatch");
  if (corpus.empty()) throw DomainError("evaluate_scores: empty corpus");
  DetectorEvaluation ev;
  ev.n = static_cast<int>(corpus.size());
  std::vector<int> labels;
  labels.reserve(corpus.size());
  int errors = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int truth = corpus[i].label;
    const int pred = scores[i] >= 0.5 ? 1 : 0;
    labels.push_back(truth);
    ++ev.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    auto& st = ev.per_scenario[static_cast<std::size_t>(corpus[i].scenario)];
    ++st.n;
    st.mean_score += scores[i];
    if (pred != truth) {
      ++errors;
      ++st.errors;
    }
  }
  for (auto& st : ev.per_scenario)
    if (st.n > 0) st.mean_score /= st.n;
  ev.error = static_cast<double>(errors) / ev.n;
  ev.error_ci = metrics::wilson_interval(errors, ev.n);
  try {
    ev.auc = metrics::auc(scores, labels);
  } catch (const UndefinedError&) {
    ev.auc = std::numeric_limits<double>::quiet_NaN();
  }
  return ev;
}

DetectorEvaluation evaluate_detector(const DetectorModel& model,
                                     const std::vector<ScenarioSample>& corpus) {
  const Eigen::VectorXd s = score_joints(model, corpus_matrix(corpus));
  return evaluate_scores(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), corpus);
}

double spearman_mi_check(std::span<const double> c, const Eigen::MatrixXi& X,
                         std::span<const int> y) {
  if (static_cast<Eigen::Index>(c.size()) != X.cols()) throw ShapeError("spearman_mi_check: length mismatch");
  if (c.size() < 3) throw DomainError("spearman_mi_check: need at least 3 variables");
  std::vector<double> causal(c.size()), mi(c.size());
  std::vector<int> col(static_cast<std::size_t>(X.rows()));
  for (std::size_t j = 0; j < c.size(); ++j) {
    causal[j] = 1.0 - c[j];
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      col[static_cast<std::size_t>(i)] = X(i, static_cast<Eigen::Index>(j));
    mi[j] = metrics::mutual_information(col, y);
  }
  return metrics::spearman(causal, mi);
}

}  // namespace causalreg::detector
