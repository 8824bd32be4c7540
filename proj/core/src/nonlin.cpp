#include "causalreg/nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "causalreg/errors.hpp"

namespace causalreg::nonlin {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// CE with logits, mean over rows
double mean_ce(const Vector& logit, const Vector& y) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < logit.size(); ++j) s += softplus(logit(j)) - y(j) * logit(j);
  return s / static_cast<double>(logit.size());
}

Vector sigmoid_vec(const Vector& z) {
  Vector p(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) p(j) = nn::sigmoid(z(j));
  return p;
}

Matrix uniform_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double limit) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
  return m;
}

nlohmann::json mat_json(const Matrix& m) {
  const nn::Tensor t = nn::Tensor::from_matrix(m);
  return {{"shape", t.shape}, {"values", t.values}};
}

Matrix mat_from_json(const nlohmann::json& j) {
  nn::Tensor t;
  t.shape = j.at("shape").get<std::vector<std::size_t>>();
  t.values = j.at("values").get<std::vector<double>>();
  return t.to_matrix();
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

Vector gather(const Vector& src, std::span<const std::size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = src(static_cast<Eigen::Index>(idx[r]));
  return out;
}

void check_binary(const Vector& y, const char* who) {
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (y(j) != 0.0 && y(j) != 1.0) throw DomainError(std::string(who) + ": labels must be 0/1");
}

}  // namespace

// ------------------------------------------------------------ nonlinCause

void NonlinConfig::validate() const {
  if (q < 1) throw ConfigError("NonlinConfig: q must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("NonlinConfig: dropout must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw ConfigError("NonlinConfig: lambda must be >= 0");
  if (!(init_lambda >= 0.0)) throw ConfigError("NonlinConfig: init_lambda must be >= 0");
  for (int h : alpha_hidden)
    if (h < 1) throw ConfigError("NonlinConfig: hidden sizes must be >= 1");
  train.validate();
}

nlohmann::json NonlinConfig::to_json() const {
  return {{"q", q},
          {"alpha_hidden", alpha_hidden},
          {"dropout", dropout},
          {"lambda", lambda},
          {"init_lambda", init_lambda},
          {"max_epochs", train.max_epochs},
          {"batch_size", train.batch_size},
          {"patience", train.patience},
          {"seed", train.seed},
          {"learning_rate", train.adamax.learning_rate}};
}

std::vector<Matrix*> NonlinModel::parameters() {
  std::vector<Matrix*> out = {&w, &b, &E, &beta};
  for (Matrix* p : alpha.parameters()) out.push_back(p);
  return out;
}

std::vector<const Matrix*> NonlinModel::parameters() const {
  std::vector<const Matrix*> out = {&w, &b, &E, &beta};
  for (const Matrix* p : alpha.parameters()) out.push_back(p);
  return out;
}

nlohmann::json NonlinModel::to_json() const {
  return {{"schema_version", "nonlin-v1"},
          {"w", mat_json(w)},
          {"b", mat_json(b)},
          {"E", mat_json(E)},
          {"beta", mat_json(beta)},
          {"alpha", alpha.to_json()}};
}

NonlinModel NonlinModel::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", std::string{}) != "nonlin-v1")
    throw ConfigError("NonlinModel: unsupported schema_version");
  NonlinModel m;
  m.w = mat_from_json(j.at("w"));
  m.b = mat_from_json(j.at("b"));
  m.E = mat_from_json(j.at("E"));
  m.beta = mat_from_json(j.at("beta"));
  m.alpha = nn::Network::from_json(j.at("alpha"));
  if (m.w.cols() != 1 || m.w.rows() != m.E.cols() || m.beta.rows() != m.E.rows() ||
      m.alpha.spec().input_dim != m.q() || m.alpha.spec().output_dim() != m.q())
    throw ShapeError("NonlinModel: inconsistent dimensions");
  return m;
}

NonlinModel init_nonlin(const Vector& w0, double b0, const NonlinConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto m = w0.size();
  if (m < 1) throw ShapeError("init_nonlin: empty coefficient vector");
  NonlinModel model;
  model.w = w0;
  model.b = Matrix::Constant(1, 1, b0);
  model.E = uniform_matrix(rng, cfg.q, m, std::sqrt(6.0 / static_cast<double>(cfg.q + m)));
  // starts close to the linear fit
  model.beta = uniform_matrix(rng, cfg.q, 1, 0.1 * std::sqrt(6.0 / (cfg.q + 1.0)));
  model.alpha = nn::Network::initialize(
      nn::NetSpec::mlp(cfg.q, cfg.alpha_hidden, cfg.q, nn::Activation::relu,
                       nn::Activation::identity, false, cfg.dropout),
      rng);
  return model;
}

namespace {

struct NonlinPass {
  Matrix Z, A, V, omega;
  Vector logit;
};

NonlinPass nonlin_pass(const NonlinModel& model, const Matrix& X, nn::Mode mode, nn::ForwardCache* cache,
                       Rng* rng) {
  if (X.cols() != model.m())
    throw ShapeError("nonlincause: input has " + std::to_string(X.cols()) + " columns, model expects " +
                     std::to_string(model.m()));
  NonlinPass p;
  p.Z = X * model.E.transpose();
  p.A = nn::forward(model.alpha, p.Z, mode, cache, rng);
  p.V = p.A.array().rowwise() * model.beta.col(0).transpose().array();
  p.logit = X * model.w.col(0) + p.V.cwiseProduct(p.Z).rowwise().sum();
  p.logit.array() += model.b(0, 0);
  p.omega = p.V * model.E;
  p.omega.rowwise() += model.w.col(0).transpose();
  return p;
}

}  // namespace

NonlinOutput nonlincause_forward(const NonlinModel& model, const Matrix& X) {
  NonlinPass p = nonlin_pass(model, X, nn::Mode::infer, nullptr, nullptr);
  NonlinOutput out;
  out.logit = p.logit;
  out.prob = sigmoid_vec(p.logit);
  out.logit_via_omega = p.omega.cwiseProduct(X).rowwise().sum();
  out.logit_via_omega.array() += model.b(0, 0);
  out.omega = std::move(p.omega);
  return out;
}

double omega_identity_residual(const NonlinOutput& out) {
  if (out.logit.size() == 0) return 0.0;
  return (out.logit - out.logit_via_omega).cwiseAbs().maxCoeff();
}

double nonlin_objective(const NonlinModel& model, const Matrix& X, const Vector& y,
                        const std::vector<double>& c, double lambda) {
  return nonlin_gradients(model, X, y, c, lambda).loss;
}

ObjectiveGrad nonlin_gradients(const NonlinModel& model, const Matrix& X, const Vector& y,
                               const std::vector<double>& c, double lambda, nn::Mode mode,
                               Rng* dropout_rng) {
  const auto n = X.rows();
  const auto m = X.cols();
  if (n == 0) throw ShapeError("nonlin_gradients: empty batch");
  if (y.size() != n) throw ShapeError("nonlin_gradients: X and y row counts differ");
  if (static_cast<Eigen::Index>(c.size()) != m) throw ShapeError("nonlin_gradients: c length differs from m");
  const Eigen::Map<const Vector> cw(c.data(), m);

  nn::ForwardCache cache;
  NonlinPass p = nonlin_pass(model, X, mode, &cache, dropout_rng);
  const double inv_n = 1.0 / static_cast<double>(n);

  ObjectiveGrad out;
  out.loss = mean_ce(p.logit, y) +
             lambda * inv_n * (p.omega.array().square().rowwise() * cw.transpose().array()).sum();

  const Vector d = (sigmoid_vec(p.logit) - y) * inv_n;
  const Matrix G = (2.0 * lambda * inv_n) * (p.omega.array().rowwise() * cw.transpose().array()).matrix();

  Matrix dw = X.transpose() * d + G.colwise().sum().transpose();
  Matrix db = Matrix::Constant(1, 1, d.sum());
  const Matrix dV = (p.Z.array().colwise() * d.array()).matrix() + G * model.E.transpose();
  Matrix dE = p.V.transpose() * G;
  const Matrix dA = dV.array().rowwise() * model.beta.col(0).transpose().array();
  Matrix dbeta = dV.cwiseProduct(p.A).colwise().sum().transpose();
  nn::Gradients ag = nn::backward(model.alpha, cache, dA, nn::Upstream::output);
  const Matrix dZ = (p.V.array().colwise() * d.array()).matrix() + ag.input;
  dE += dZ.transpose() * X;

  out.grads.push_back(std::move(dw));
  out.grads.push_back(std::move(db));
  out.grads.push_back(std::move(dE));
  out.grads.push_back(std::move(dbeta));
  for (auto& g : ag.params) out.grads.push_back(std::move(g));
  return out;
}

double mean_omega_sq(const NonlinModel& model, const Matrix& X) {
  if (X.rows() == 0) return 0.0;
  const NonlinOutput out = nonlincause_forward(model, X);
  return out.omega.squaredNorm() / static_cast<double>(X.rows());
}

NonlinResult train_nonlincause(const Matrix& X_train, const Vector& y_train, const Matrix& X_valid,
                               const Vector& y_valid, const std::vector<double>& c,
                               const NonlinConfig& cfg) {
  cfg.validate();
  const auto m = X_train.cols();
  if (X_train.rows() != y_train.size() || X_valid.rows() != y_valid.size())
    throw ShapeError("train_nonlincause: X and y row counts differ");
  if (X_valid.cols() != m) throw ShapeError("train_nonlincause: train and validation widths differ");
  if (static_cast<Eigen::Index>(c.size()) != m) throw ShapeError("train_nonlincause: c length differs from m");
  if (X_train.rows() < 2 || X_valid.rows() < 1) throw ConfigError("train_nonlincause: too few rows");
  check_binary(y_train, "train_nonlincause");
  check_binary(y_valid, "train_nonlincause");

  NonlinResult result;
  glm::FitConfig init_cfg;
  init_cfg.lambda = cfg.init_lambda;
  init_cfg.weights = c;
  result.init_fit = glm::fit_causal_logistic(X_train, y_train, init_cfg);

  Rng init_rng = stream_rng(cfg.train.seed, 3);
  NonlinModel model = init_nonlin(result.init_fit.w, result.init_fit.b, cfg, init_rng);
  Rng order_rng = stream_rng(cfg.train.seed, 1);
  Rng dropout_rng = stream_rng(cfg.train.seed, 2);
  nn::AdamaxState opt(cfg.train.adamax);

  std::vector<std::size_t> order(static_cast<std::size_t>(X_train.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.train.batch_size);
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  result.model = model;

  for (int epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    shuffle_in_place(order, order_rng);
    double obj_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(X_train, idx);
      const Vector yb = gather(y_train, idx);
      ObjectiveGrad og = nonlin_gradients(model, xb, yb, c, cfg.lambda, nn::Mode::train, &dropout_rng);
      if (!std::isfinite(og.loss))
        throw NumericalError("train_nonlincause: objective non-finite at epoch " + std::to_string(epoch) +
                             ", rows " + std::to_string(start) + ".." + std::to_string(end) +
                             ", lambda " + std::to_string(cfg.lambda));
      obj_sum += og.loss * static_cast<double>(idx.size());
      auto params = model.parameters();
      nn::adamax_step(params, og.grads, opt);
    }

    const NonlinOutput vout = nonlincause_forward(model, X_valid);
    result.max_identity_residual = std::max(result.max_identity_residual, omega_identity_residual(vout));
    NonlinEpoch rec;
    rec.epoch = epoch;
    rec.train_objective = obj_sum / static_cast<double>(order.size());
    rec.valid_log_loss = mean_ce(vout.logit, y_valid);
    if (!std::isfinite(rec.valid_log_loss))
      throw NumericalError("train_nonlincause: validation loss non-finite at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (rec.valid_log_loss < best) {
      best = rec.valid_log_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      result.stopped_early = epoch < cfg.train.max_epochs;
      break;
    }
  }
  result.model.alpha.touch();
  return result;
}

// ------------------------------------------------------------ anti-causality detector g

nlohmann::json GModel::to_json() const {
  return {{"schema_version", "anticausal-g-v1"},
          {"phi", phi.to_json()},
          {"head", head.to_json()},
          {"set_size", set_size},
          {"heldout_error", heldout_error},
          {"target_met", target_met}};
}

GModel GModel::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", std::string{}) != "anticausal-g-v1")
    throw ConfigError("GModel: unsupported schema_version");
  GModel g;
  g.phi = nn::Network::from_json(j.at("phi"));
  g.head = nn::Network::from_json(j.at("head"));
  g.set_size = j.at("set_size").get<int>();
  g.heldout_error = j.at("heldout_error").get<double>();
  g.target_met = j.at("target_met").get<bool>();
  if (g.phi.spec().input_dim != 2 || g.head.spec().input_dim != g.phi.spec().output_dim() ||
      g.head.spec().output_dim() != 1)
    throw ShapeError("GModel: inconsistent dimensions");
  return g;
}

void GConfig::validate() const {
  if (phi_dim < 1) throw ConfigError("GConfig: phi_dim must be >= 1");
  if (set_size < 2) throw ConfigError("GConfig: set_size must be >= 2");
  if (sets_train < 2 || sets_valid < 1 || sets_heldout < 1) throw ConfigError("GConfig: corpus sizes too small");
  if (!(beta_lo > 0.0 && beta_hi >= beta_lo)) throw ConfigError("GConfig: need 0 < beta_lo <= beta_hi");
  train.validate();
}

double beta_sample(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  for (;;) {
    const double x = ga(rng);
    const double y = gb(rng);
    const double s = x + y;
    // both gammas underflow only for tiny shapes
    if (s > 0.0) return std::clamp(x / s, 1e-12, 1.0 - 1e-12);
  }
}

Matrix sample_beta_set(Rng& rng, bool anticausal, int size, double lo, double hi) {
  if (size < 1) throw DomainError("sample_beta_set: size must be >= 1");
  auto shape = [&] { return lo + (hi - lo) * uniform01(rng); };
  Matrix s(size, 2);
  if (!anticausal) {
    const double a = shape(), b = shape();
    for (int j = 0; j < size; ++j) {
      s(j, 0) = beta_sample(rng, a, b);
      s(j, 1) = uniform01(rng) < s(j, 0) ? 1.0 : 0.0;
    }
  } else {
    // p on the range of causal-set outcome rates
    const double p = 0.1 + 0.8 * uniform01(rng);
    const double a0 = shape(), b0 = shape(), a1 = shape(), b1 = shape();
    for (int j = 0; j < size; ++j) {
      const bool yv = uniform01(rng) < p;
      s(j, 1) = yv ? 1.0 : 0.0;
      s(j, 0) = yv ? beta_sample(rng, a1, b1) : beta_sample(rng, a0, b0);
    }
  }
  return s;
}

GModel init_g(const GConfig& cfg, Rng& rng) {
  cfg.validate();
  GModel g;
  g.phi = nn::Network::initialize(
      nn::NetSpec::mlp(2, cfg.phi_hidden, cfg.phi_dim, nn::Activation::relu, nn::Activation::relu), rng);
  g.head = nn::Network::initialize(
      nn::NetSpec::mlp(cfg.phi_dim, cfg.head_hidden, 1, nn::Activation::relu, nn::Activation::sigmoid), rng);
  g.set_size = cfg.set_size;
  return g;
}

namespace {

Matrix block_means(const Matrix& Phi, int sets) {
  const auto size = Phi.rows() / sets;
  Matrix mu(sets, Phi.cols());
  for (int s = 0; s < sets; ++s) mu.row(s) = Phi.middleRows(s * size, size).colwise().mean();
  return mu;
}

void check_blocks(const Matrix& pairs, int sets, const char* who) {
  if (pairs.cols() != 2) throw ShapeError(std::string(who) + ": pairs must have 2 columns");
  if (sets < 1 || pairs.rows() < sets || pairs.rows() % sets != 0)
    throw ShapeError(std::string(who) + ": rows are not a whole number of equal sets");
}

}  // namespace

Vector g_forward(const GModel& g, const Matrix& pairs, int sets) {
  check_blocks(pairs, sets, "g_forward");
  const Matrix Phi = nn::forward(g.phi, pairs, nn::Mode::infer);
  return nn::forward(g.head, block_means(Phi, sets), nn::Mode::infer).col(0);
}

double g_score(const GModel& g, const Matrix& pairs) { return g_forward(g, pairs, 1)(0); }

ObjectiveGrad g_gradients(const GModel& g, const Matrix& pairs, int sets, const Vector& labels) {
  check_blocks(pairs, sets, "g_gradients");
  if (labels.size() != sets) throw ShapeError("g_gradients: one label per set");
  const auto size = pairs.rows() / sets;
  nn::ForwardCache pc, hc;
  const Matrix Phi = nn::forward(g.phi, pairs, nn::Mode::train, &pc);
  const Matrix mu = block_means(Phi, sets);
  const Matrix out = nn::forward(g.head, mu, nn::Mode::train, &hc);
  const Vector logit = hc.layers.back().pre.col(0);

  ObjectiveGrad og;
  og.loss = mean_ce(logit, labels);
  const Matrix up = (out.col(0) - labels) / static_cast<double>(sets);
  nn::Gradients hg = nn::backward(g.head, hc, up, nn::Upstream::final_logits);
  Matrix dPhi(Phi.rows(), Phi.cols());
  for (int s = 0; s < sets; ++s)
    dPhi.middleRows(s * size, size).rowwise() = hg.input.row(s) / static_cast<double>(size);
  nn::Gradients pg = nn::backward(g.phi, pc, dPhi, nn::Upstream::output);
  for (auto& m : pg.params) og.grads.push_back(std::move(m));
  for (auto& m : hg.params) og.grads.push_back(std::move(m));
  return og;
}

GTrainResult train_anticausal_detector_beta(const GConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.train.seed;
  auto make = [&](std::uint64_t stream, int sets, Matrix& pairs, Vector& labels) {
    Rng rng = stream_rng(seed, stream);
    pairs.resize(static_cast<Eigen::Index>(sets) * cfg.set_size, 2);
    labels.resize(sets);
    for (int s = 0; s < sets; ++s) {
      const bool anti = uniform01(rng) < 0.5;
      labels(s) = anti ? 1.0 : 0.0;
      pairs.middleRows(static_cast<Eigen::Index>(s) * cfg.set_size, cfg.set_size) =
          sample_beta_set(rng, anti, cfg.set_size, cfg.beta_lo, cfg.beta_hi);
    }
  };
  Matrix tr_pairs, va_pairs, ho_pairs;
  Vector tr_lab, va_lab, ho_lab;
  make(10, cfg.sets_train, tr_pairs, tr_lab);
  make(11, cfg.sets_valid, va_pairs, va_lab);
  make(12, cfg.sets_heldout, ho_pairs, ho_lab);

  auto error_of = [&](const GModel& g, const Matrix& pairs, const Vector& lab) {
    const Vector s = g_forward(g, pairs, static_cast<int>(lab.size()));
    int wrong = 0;
    for (Eigen::Index i = 0; i < lab.size(); ++i) wrong += ((s(i) >= 0.5) != (lab(i) == 1.0));
    return static_cast<double>(wrong) / static_cast<double>(lab.size());
  };

  Rng init_rng = stream_rng(seed, 3);
  GModel g = init_g(cfg, init_rng);
  Rng order_rng = stream_rng(seed, 1);
  nn::AdamaxState opt(cfg.train.adamax);
  std::vector<std::size_t> order(static_cast<std::size_t>(cfg.sets_train));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.train.batch_size);
  const auto size = static_cast<Eigen::Index>(cfg.set_size);

  GTrainResult result;
  result.model = g;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    shuffle_in_place(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const int sets = static_cast<int>(end - start);
      Matrix pairs(sets * size, 2);
      Vector lab(sets);
      for (int s = 0; s < sets; ++s) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(s)]);
        pairs.middleRows(s * size, size) = tr_pairs.middleRows(src * size, size);
        lab(s) = tr_lab(src);
      }
      ObjectiveGrad og = g_gradients(g, pairs, sets, lab);
      if (!std::isfinite(og.loss))
        throw NumericalError("train_anticausal_detector_beta: loss non-finite at epoch " + std::to_string(epoch));
      loss_sum += og.loss * sets;
      std::vector<Matrix*> params = g.phi.parameters();
      for (Matrix* p : g.head.parameters()) params.push_back(p);
      nn::adamax_step(params, og.grads, opt);
    }
    nn::EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    const Vector vs = g_forward(g, va_pairs, cfg.sets_valid);
    double vl = 0.0;
    for (Eigen::Index i = 0; i < vs.size(); ++i) {
      const double p = std::clamp(vs(i), 1e-12, 1.0 - 1e-12);
      vl -= va_lab(i) * std::log(p) + (1.0 - va_lab(i)) * std::log1p(-p);
    }
    rec.valid_loss = vl / static_cast<double>(vs.size());
    rec.valid_accuracy = 1.0 - error_of(g, va_pairs, va_lab);
    result.history.push_back(rec);
    if (rec.valid_loss < best) {
      best = rec.valid_loss;
      result.model = g;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      break;
    }
  }
  result.model.phi.touch();
  result.model.head.touch();
  result.model.heldout_error = error_of(result.model, ho_pairs, ho_lab);
  result.model.target_met = result.model.heldout_error < cfg.target_error;
  return result;
}

// ------------------------------------------------------------ CauseHyp

void HypConfig::validate() const {
  if (k_h < 1) throw ConfigError("HypConfig: k_h must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("HypConfig: lambda must be >= 0");
  if (!(l1_lower >= 0.0)) throw ConfigError("HypConfig: l1_lower must be >= 0");
  for (int h : h_hidden)
    if (h < 1) throw ConfigError("HypConfig: hidden sizes must be >= 1");
  train.validate();
  if (train.batch_size < 2) throw ConfigError("HypConfig: batch_size must be >= 2");
}

nlohmann::json HypConfig::to_json() const {
  return {{"k_h", k_h},
          {"h_hidden", h_hidden},
          {"lambda", lambda},
          {"l1_lower", l1_lower},
          {"batch_size", train.batch_size},
          {"max_epochs", train.max_epochs},
          {"patience", train.patience},
          {"seed", train.seed}};
}

std::vector<Matrix*> HypothesisModel::parameters() {
  std::vector<Matrix*> out = h_net.parameters();
  out.push_back(&w);
  out.push_back(&b);
  return out;
}

nlohmann::json HypothesisModel::to_json() const {
  return {{"schema_version", "causehyp-v1"},
          {"h_net", h_net.to_json()},
          {"w", mat_json(w)},
          {"b", mat_json(b)},
          {"g", g.to_json()}};
}

HypothesisModel HypothesisModel::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", std::string{}) != "causehyp-v1")
    throw ConfigError("HypothesisModel: unsupported schema_version");
  HypothesisModel m;
  m.h_net = nn::Network::from_json(j.at("h_net"));
  m.w = mat_from_json(j.at("w"));
  m.b = mat_from_json(j.at("b"));
  m.g = GModel::from_json(j.at("g"));
  if (m.w.cols() != 1 || m.w.rows() != m.h_net.spec().output_dim())
    throw ShapeError("HypothesisModel: inconsistent dimensions");
  return m;
}

HypothesisModel init_hypothesis_model(int m, const HypConfig& cfg, const GModel& g, Rng& rng) {
  cfg.validate();
  if (m < 1) throw ShapeError("init_hypothesis_model: m must be >= 1");
  HypothesisModel model;
  model.h_net = nn::Network::initialize(
      nn::NetSpec::mlp(m, cfg.h_hidden, cfg.k_h, nn::Activation::relu, nn::Activation::sigmoid), rng);
  model.w = uniform_matrix(rng, cfg.k_h, 1, std::sqrt(6.0 / (cfg.k_h + 1.0)));
  model.b = Matrix::Zero(1, 1);
  model.g = g;
  return model;
}

HypOutput hyp_forward(const HypothesisModel& model, const Matrix& X) {
  HypOutput out;
  out.H = nn::forward(model.h_net, X, nn::Mode::infer);
  Vector logit = out.H * model.w.col(0);
  logit.array() += model.b(0, 0);
  out.prob = sigmoid_vec(logit);
  return out;
}

namespace {

Matrix coordinate_pairs(const Matrix& H, const Vector& y) {
  const auto n = H.rows();
  Matrix pairs(n * H.cols(), 2);
  for (Eigen::Index i = 0; i < H.cols(); ++i) {
    pairs.block(i * n, 0, n, 1) = H.col(i);
    pairs.block(i * n, 1, n, 1) = y;
  }
  return pairs;
}

}  // namespace

Vector coordinate_g(const GModel& g, const Matrix& H, const Vector& y) {
  if (H.rows() != y.size()) throw ShapeError("coordinate_g: H and y row counts differ");
  if (H.rows() == 0) throw ShapeError("coordinate_g: empty batch");
  return g_forward(g, coordinate_pairs(H, y), static_cast<int>(H.cols()));
}

double hyp_objective(const HypothesisModel& model, const Matrix& X, const Vector& y, double lambda,
                     double l1_lower) {
  return hyp_gradients(model, X, y, lambda, l1_lower).loss;
}

ObjectiveGrad hyp_gradients(const HypothesisModel& model, const Matrix& X, const Vector& y, double lambda,
                            double l1_lower) {
  const auto n = X.rows();
  if (n == 0) throw ShapeError("hyp_gradients: empty batch");
  if (y.size() != n) throw ShapeError("hyp_gradients: X and y row counts differ");
  const double inv_n = 1.0 / static_cast<double>(n);
  const Vector w = model.w.col(0);

  nn::ForwardCache hc;
  const Matrix H = nn::forward(model.h_net, X, nn::Mode::train, &hc);
  Vector logit = H * w;
  logit.array() += model.b(0, 0);
  const Matrix& W1 = model.h_net.layers().front().W;

  ObjectiveGrad og;
  og.loss = mean_ce(logit, y) + l1_lower * W1.cwiseAbs().sum();
  const Vector d = (sigmoid_vec(logit) - y) * inv_n;
  Matrix dw = H.transpose() * d;
  Matrix db = Matrix::Constant(1, 1, d.sum());
  Matrix dH = d * w.transpose();

  if (lambda > 0.0) {
    const GModel& g = model.g;
    const Matrix pairs = coordinate_pairs(H, y);
    const auto k = H.cols();
    nn::ForwardCache pc, gc;
    const Matrix Phi = nn::forward(g.phi, pairs, nn::Mode::train, &pc);
    const Matrix mu = block_means(Phi, static_cast<int>(k));
    const Vector gv = nn::forward(g.head, mu, nn::Mode::train, &gc).col(0);
    const Vector aw = w.cwiseAbs();
    og.loss += lambda * gv.dot(aw);
    for (Eigen::Index i = 0; i < k; ++i) dw(i, 0) += lambda * gv(i) * sign(w(i));
    // frozen g: only the input gradient is used
    nn::Gradients hg = nn::backward(g.head, gc, lambda * aw, nn::Upstream::output);
    Matrix dPhi(Phi.rows(), Phi.cols());
    for (Eigen::Index i = 0; i < k; ++i) dPhi.middleRows(i * n, n).rowwise() = hg.input.row(i) * inv_n;
    nn::Gradients pg = nn::backward(g.phi, pc, dPhi, nn::Upstream::output);
    for (Eigen::Index i = 0; i < k; ++i) dH.col(i) += pg.input.block(i * n, 0, n, 1);
  }

  nn::Gradients hg = nn::backward(model.h_net, hc, dH, nn::Upstream::output);
  og.grads = std::move(hg.params);
  og.grads.front() += l1_lower * W1.unaryExpr([](double v) { return sign(v); });
  og.grads.push_back(std::move(dw));
  og.grads.push_back(std::move(db));
  return og;
}

namespace {

// Training objective on validation data, g over consecutive batches of the
// training batch size (one batch when the set is smaller).
double validation_objective(const HypothesisModel& model, const Matrix& X, const Vector& y, const HypConfig& cfg) {
  const auto size = std::min<Eigen::Index>(cfg.train.batch_size, X.rows());
  const auto batches = X.rows() / size;
  double s = 0.0;
  for (Eigen::Index b = 0; b < batches; ++b)
    s += hyp_objective(model, X.middleRows(b * size, size), y.segment(b * size, size), cfg.lambda, cfg.l1_lower);
  return s / static_cast<double>(batches);
}

}  // namespace

HypResult train_hypothesis_generator(const Matrix& X_train, const Vector& y_train, const Matrix& X_valid,
                                     const Vector& y_valid, const GModel& g, const HypConfig& cfg) {
  cfg.validate();
  if (X_train.rows() != y_train.size() || X_valid.rows() != y_valid.size())
    throw ShapeError("train_hypothesis_generator: X and y row counts differ");
  if (X_valid.cols() != X_train.cols()) throw ShapeError("train_hypothesis_generator: widths differ");
  const auto bs = static_cast<std::size_t>(cfg.train.batch_size);
  if (static_cast<std::size_t>(X_train.rows()) < bs)
    throw ConfigError("train_hypothesis_generator: fewer training rows than one batch");
  if (X_valid.rows() < 1) throw ConfigError("train_hypothesis_generator: empty validation set");
  check_binary(y_train, "train_hypothesis_generator");
  check_binary(y_valid, "train_hypothesis_generator");

  Rng init_rng = stream_rng(cfg.train.seed, 3);
  HypothesisModel model = init_hypothesis_model(static_cast<int>(X_train.cols()), cfg, g, init_rng);
  Rng order_rng = stream_rng(cfg.train.seed, 1);
  nn::AdamaxState opt(cfg.train.adamax);

  std::vector<std::size_t> order(static_cast<std::size_t>(X_train.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t full = order.size() / bs * bs;

  HypResult result;
  result.model = model;
  result.dropped_tail_rows = static_cast<int>(order.size() - full);
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    shuffle_in_place(order, order_rng);
    double obj_sum = 0.0;
    for (std::size_t start = 0; start < full; start += bs) {
      std::span<const std::size_t> idx(order.data() + start, bs);
      const Matrix xb = gather_rows(X_train, idx);
      const Vector yb = gather(y_train, idx);
      ObjectiveGrad og = hyp_gradients(model, xb, yb, cfg.lambda, cfg.l1_lower);
      if (!std::isfinite(og.loss))
        throw NumericalError("train_hypothesis_generator: objective non-finite at epoch " +
                             std::to_string(epoch));
      obj_sum += og.loss * static_cast<double>(bs);
      auto params = model.parameters();
      nn::adamax_step(params, og.grads, opt);
    }
    const HypOutput vo = hyp_forward(model, X_valid);
    double vl = 0.0;
    for (Eigen::Index j = 0; j < vo.prob.size(); ++j) {
      const double p = std::clamp(vo.prob(j), 1e-15, 1.0 - 1e-15);
      vl -= y_valid(j) * std::log(p) + (1.0 - y_valid(j)) * std::log1p(-p);
    }
    NonlinEpoch rec;
    rec.epoch = epoch;
    rec.train_objective = obj_sum / static_cast<double>(full);
    rec.valid_log_loss = vl / static_cast<double>(vo.prob.size());
    rec.valid_objective = validation_objective(model, X_valid, y_valid, cfg);
    result.history.push_back(rec);
    if (rec.valid_objective < best) {
      best = rec.valid_objective;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      result.stopped_early = epoch < cfg.train.max_epochs;
      break;
    }
  }
  result.model.h_net.touch();
  return result;
}

Matrix input_influence(const nn::Network& h_net) {
  const auto& layers = h_net.layers();
  if (layers.empty()) throw ShapeError("input_influence: network has no layers");
  Matrix infl = layers.front().W.cwiseAbs();
  for (std::size_t k = 1; k < layers.size(); ++k) infl = infl * layers[k].W.cwiseAbs();
  return infl;
}

HypothesisList extract_hypotheses(const HypothesisModel& model, const Matrix& X, const Vector& y, int top_k,
                                  int n_inputs) {
  if (top_k < 0) throw DomainError("extract_hypotheses: top_k must be >= 0");
  if (n_inputs < 1) throw DomainError("extract_hypotheses: n_inputs must be >= 1");
  HypothesisList list;
  if (top_k == 0) return list;
  const int k = model.k_h();
  if (top_k > k) {
    list.truncated = true;
    top_k = k;
  }
  if (X.rows() != y.size() || X.rows() == 0) throw ShapeError("extract_hypotheses: bad data shape");

  const Matrix H = nn::forward(model.h_net, X, nn::Mode::infer);
  const auto size = std::min<Eigen::Index>(model.g.set_size, H.rows());
  const auto batches = H.rows() / size;
  Vector gbar = Vector::Zero(k);
  for (Eigen::Index s = 0; s < batches; ++s)
    gbar += coordinate_g(model.g, H.middleRows(s * size, size), y.segment(s * size, size));
  gbar /= static_cast<double>(batches);

  const Matrix infl = input_influence(model.h_net);
  std::vector<Hypothesis> all(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Hypothesis& h = all[static_cast<std::size_t>(i)];
    h.coordinate = i;
    h.weight = model.w(i, 0);
    h.anti_causal_score = gbar(i);
    h.score = std::abs(h.weight) * (1.0 - h.anti_causal_score);
    std::vector<int> idx(static_cast<std::size_t>(infl.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return infl(a, i) > infl(b, i); });
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(n_inputs), idx.size());
    for (std::size_t t = 0; t < take; ++t) {
      h.top_inputs.push_back(idx[t]);
      h.input_influence.push_back(infl(idx[t], i));
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  all.resize(static_cast<std::size_t>(top_k));
  list.items = std::move(all);
  return list;
}

nlohmann::json hypotheses_to_json(const HypothesisList& list, const std::vector<std::string>& names) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t r = 0; r < list.items.size(); ++r) {
    const Hypothesis& h = list.items[r];
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t t = 0; t < h.top_inputs.size(); ++t) {
      const auto v = static_cast<std::size_t>(h.top_inputs[t]);
      inputs.push_back({{"index", h.top_inputs[t]},
                        {"name", v < names.size() ? names[v] : "x" + std::to_string(v)},
                        {"influence", h.input_influence[t]}});
    }
    arr.push_back({{"rank", r + 1},
                   {"coordinate", h.coordinate},
                   {"weight", h.weight},
                   {"anti_causal_score", h.anti_causal_score},
                   {"score", h.score},
                   {"top_inputs", inputs}});
  }
  return {{"hypotheses", arr}, {"truncated", list.truncated}};
}

// ------------------------------------------------------------ planted benchmarks

PlantedData planted_interaction(const InteractionSpec& spec) {
  if (spec.n < 1 || spec.m < 2 + spec.n_linear || spec.n_linear < 0)
    throw ConfigError("planted_interaction: need m >= 2 + n_linear and n >= 1");
  Rng rng = stream_rng(spec.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PlantedData d;
  d.X.resize(spec.n, spec.m);
  d.y.resize(spec.n);
  for (int j = 0; j < spec.n; ++j) {
    for (int i = 0; i < spec.m; ++i) d.X(j, i) = normal(rng);
    double logit = spec.interaction * d.X(j, 0) * d.X(j, 1);
    for (int i = 2; i < 2 + spec.n_linear; ++i) logit += spec.linear * d.X(j, i);
    d.y(j) = uniform01(rng) < nn::sigmoid(logit) ? 1.0 : 0.0;
  }
  for (int i = 0; i < spec.m; ++i) {
    d.names.push_back("x" + std::to_string(i));
    const bool causal = i < 2 + spec.n_linear;
    d.truth.push_back(causal ? 1.0 : 0.0);
    d.roles.push_back(causal ? "causal" : "noise");
  }
  return d;
}

PlantedData planted_multicause(const MultiCauseSpec& spec) {
  if (spec.n < 1 || spec.n_pairs < 1 || spec.n_anticausal < 0 || spec.n_noise < 0)
    throw ConfigError("planted_multicause: invalid sizes");
  if (!(spec.anticausal_a > 0.0 && spec.anticausal_b > 0.0))
    throw ConfigError("planted_multicause: Beta shapes must be > 0");
  const int nc = 2 * spec.n_pairs;
  const int m = nc + spec.n_anticausal + spec.n_noise;
  Rng rng = stream_rng(spec.seed, 0);
  PlantedData d;
  d.X.resize(spec.n, m);
  d.y.resize(spec.n);
  for (int j = 0; j < spec.n; ++j) {
    double logit = spec.base_logit;
    for (int i = 0; i < nc; ++i) d.X(j, i) = uniform01(rng);
    for (int k = 0; k < spec.n_pairs; ++k) logit += spec.pair_effect * d.X(j, 2 * k) * d.X(j, 2 * k + 1);
    const bool yv = uniform01(rng) < nn::sigmoid(logit);
    d.y(j) = yv ? 1.0 : 0.0;
    for (int i = nc; i < nc + spec.n_anticausal; ++i)
      d.X(j, i) = yv ? beta_sample(rng, spec.anticausal_a, spec.anticausal_b)
                     : beta_sample(rng, spec.anticausal_b, spec.anticausal_a);
    for (int i = nc + spec.n_anticausal; i < m; ++i) d.X(j, i) = uniform01(rng);
  }
  for (int i = 0; i < m; ++i) {
    d.names.push_back("x" + std::to_string(i));
    const char* role = i < nc ? "causal" : (i < nc + spec.n_anticausal ? "anticausal" : "noise");
    d.roles.emplace_back(role);
    d.truth.push_back(i < nc ? 1.0 : 0.0);
  }
  return d;
}

double hypothesis_truth(const Hypothesis& h, const std::vector<double>& truth) {
  if (h.top_inputs.empty()) return 0.0;
  double s = 0.0;
  for (int i : h.top_inputs) {
    if (i < 0 || static_cast<std::size_t>(i) >= truth.size()) throw ShapeError("hypothesis_truth: input index out of range");
    s += truth[static_cast<std::size_t>(i)];
  }
  return s / static_cast<double>(h.top_inputs.size());
}

}  // namespace causalreg::nonlin
