#include "causalreg/nn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "causalreg/errors.hpp"

namespace causalreg::nn {

namespace {

std::atomic<std::uint64_t> g_version_counter{1};

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix apply_activation(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return z.unaryExpr([](double v) { return sigmoid(v); });
  }
  return z;
}

// d act / d z, expressed through act(z).
Matrix activation_derivative(Activation a, const Matrix& act) {
  switch (a) {
    case Activation::identity:
      return Matrix::Ones(act.rows(), act.cols());
    case Activation::relu:
      return act.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::sigmoid:
      return act.cwiseProduct((1.0 - act.array()).matrix());
  }
  return Matrix::Ones(act.rows(), act.cols());
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------- Tensor

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t;
  t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  t.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.values[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return t;
}

Matrix Tensor::to_matrix() const {
  validate();
  if (shape.size() != 2) throw ShapeError("Tensor::to_matrix: rank-2 tensor required");
  Matrix m(static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = values[static_cast<std::size_t>(r * m.cols() + c)];
  return m;
}

void Tensor::validate() const {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (n != values.size()) throw ShapeError("Tensor: product(shape) != number of values");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("Tensor: non-finite value");
}

// ---------------------------------------------------------------- specs

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

void NetSpec::validate() const {
  if (input_dim < 1) throw ConfigError("NetSpec: input_dim must be >= 1");
  int prev = input_dim;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.in_dim < 1 || l.out_dim < 1)
      throw ConfigError("NetSpec: layer dimensions must be >= 1");
    if (l.in_dim != prev)
      throw ShapeError("NetSpec: layer " + std::to_string(k) + " input dim " +
                       std::to_string(l.in_dim) + " does not chain with " +
                       std::to_string(prev));
    if (!(l.dropout >= 0.0 && l.dropout < 1.0))
      throw ConfigError("NetSpec: dropout must lie in [0, 1)");
    prev = l.out_dim;
  }
}

NetSpec NetSpec::mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                     Activation hidden_activation, Activation output_activation,
                     bool batch_norm, double dropout) {
  NetSpec s;
  s.input_dim = input_dim;
  int prev = input_dim;
  for (int h : hidden) {
    s.layers.push_back({prev, h, hidden_activation, batch_norm, dropout});
    prev = h;
  }
  s.layers.push_back({prev, output_dim, output_activation, false, 0.0});
  s.validate();
  return s;
}

// ---------------------------------------------------------------- Network

Network::Network(NetSpec spec, std::vector<LayerParams> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (layers_.size() != spec_.layers.size())
    throw ShapeError("Network: parameter count does not match spec");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& ls = spec_.layers[k];
    const auto& p = layers_[k];
    if (p.W.rows() != ls.in_dim || p.W.cols() != ls.out_dim || p.b.rows() != 1 ||
        p.b.cols() != ls.out_dim)
      throw ShapeError("Network: layer " + std::to_string(k) + " parameter shape mismatch");
    if (ls.batch_norm &&
        (p.gamma.cols() != ls.out_dim || p.beta.cols() != ls.out_dim ||
         p.running_mean.cols() != ls.out_dim || p.running_var.cols() != ls.out_dim))
      throw ShapeError("Network: batch-norm parameter shape mismatch");
  }
  touch();
}

Network Network::initialize(const NetSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<LayerParams> layers;
  layers.reserve(spec.layers.size());
  for (const auto& ls : spec.layers) {
    LayerParams p;
    const double limit = std::sqrt(6.0 / static_cast<double>(ls.in_dim + ls.out_dim));
    std::uniform_real_distribution<double> init(-limit, limit);
    p.W.resize(ls.in_dim, ls.out_dim);
    for (Eigen::Index c = 0; c < p.W.cols(); ++c)
      for (Eigen::Index r = 0; r < p.W.rows(); ++r) p.W(r, c) = init(rng);
    p.b = Matrix::Zero(1, ls.out_dim);
    if (ls.batch_norm) {
      p.gamma = Matrix::Ones(1, ls.out_dim);
      p.beta = Matrix::Zero(1, ls.out_dim);
      p.running_mean = Matrix::Zero(1, ls.out_dim);
      p.running_var = Matrix::Ones(1, ls.out_dim);
    }
    layers.push_back(std::move(p));
  }
  return Network(spec, std::move(layers));
}

void Network::touch() { version_ = g_version_counter.fetch_add(1); }

std::vector<Matrix*> Network::parameters() {
  touch();
  std::vector<Matrix*> out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    out.push_back(&layers_[k].W);
    out.push_back(&layers_[k].b);
    if (spec_.layers[k].batch_norm) {
      out.push_back(&layers_[k].gamma);
      out.push_back(&layers_[k].beta);
    }
  }
  return out;
}

std::vector<const Matrix*> Network::parameters() const {
  std::vector<const Matrix*> out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    out.push_back(&layers_[k].W);
    out.push_back(&layers_[k].b);
    if (spec_.layers[k].batch_norm) {
      out.push_back(&layers_[k].gamma);
      out.push_back(&layers_[k].beta);
    }
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : parameters()) n += static_cast<std::size_t>(m->size());
  return n;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  const Tensor t = Tensor::from_matrix(m);
  return {{"shape", t.shape}, {"values", t.values}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Tensor t;
  t.shape = j.at("shape").get<std::vector<std::size_t>>();
  t.values = j.at("values").get<std::vector<double>>();
  return t.to_matrix();
}

}  // namespace

nlohmann::json Network::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& ls = spec_.layers[k];
    const auto& p = layers_[k];
    nlohmann::json jl = {{"in_dim", ls.in_dim},
                         {"out_dim", ls.out_dim},
                         {"activation", to_string(ls.activation)},
                         {"batch_norm", ls.batch_norm},
                         {"dropout", ls.dropout},
                         {"W", matrix_to_json(p.W)},
                         {"b", matrix_to_json(p.b)}};
    if (ls.batch_norm) {
      jl["gamma"] = matrix_to_json(p.gamma);
      jl["beta"] = matrix_to_json(p.beta);
      jl["running_mean"] = matrix_to_json(p.running_mean);
      jl["running_var"] = matrix_to_json(p.running_var);
    }
    layers.push_back(std::move(jl));
  }
  return {{"version", "nn-v1"}, {"input_dim", spec_.input_dim}, {"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
  if (j.value("version", std::string{}) != "nn-v1")
    throw ConfigError("Network::from_json: expected version \"nn-v1\"");
  NetSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  std::vector<LayerParams> params;
  for (const auto& jl : j.at("layers")) {
    LayerSpec ls;
    ls.in_dim = jl.at("in_dim").get<int>();
    ls.out_dim = jl.at("out_dim").get<int>();
    ls.activation = activation_from_string(jl.at("activation").get<std::string>());
    ls.batch_norm = jl.at("batch_norm").get<bool>();
    ls.dropout = jl.value("dropout", 0.0);
    spec.layers.push_back(ls);
    LayerParams p;
    p.W = matrix_from_json(jl.at("W"));
    p.b = matrix_from_json(jl.at("b"));
    if (ls.batch_norm) {
      p.gamma = matrix_from_json(jl.at("gamma"));
      p.beta = matrix_from_json(jl.at("beta"));
      p.running_mean = matrix_from_json(jl.at("running_mean"));
      p.running_var = matrix_from_json(jl.at("running_var"));
    }
    params.push_back(std::move(p));
  }
  return Network(std::move(spec), std::move(params));
}

// ---------------------------------------------------------------- forward

Matrix forward(const Network& net, const Matrix& batch, Mode mode, ForwardCache* cache,
               Rng* dropout_rng) {
  const auto& spec = net.spec();
  if (batch.cols() != spec.input_dim)
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, network expects " + std::to_string(spec.input_dim));
  if (!all_finite(batch)) throw DomainError("forward: non-finite input");
  const Eigen::Index rows = batch.rows();
  if (mode == Mode::train && rows < 2) {
    for (const auto& l : spec.layers)
      if (l.batch_norm) throw ShapeError("forward: batch norm needs >= 2 rows in train mode");
  }

  if (cache) {
    cache->layers.assign(spec.layers.size(), LayerCache{});
    cache->mode = mode;
    cache->version = net.version();
    cache->source = &net;
  }

  Matrix a = batch;
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const LayerSpec& ls = spec.layers[k];
    const LayerParams& p = net.layers()[k];
    Matrix z = a * p.W;
    z.rowwise() += p.b.row(0);

    Matrix normalized;
    Matrix xhat, inv_std, mean, var;
    if (ls.batch_norm) {
      if (mode == Mode::train) {
        mean = z.colwise().mean();
        Matrix centered = z.rowwise() - mean.row(0);
        var = centered.array().square().colwise().mean().matrix();
        inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
        xhat = centered.array().rowwise() * inv_std.row(0).array();
      } else {
        inv_std = (p.running_var.array() + kBatchNormEpsilon).rsqrt().matrix();
        xhat = (z.rowwise() - p.running_mean.row(0)).array().rowwise() *
               inv_std.row(0).array();
      }
      normalized = (xhat.array().rowwise() * p.gamma.row(0).array()).matrix();
      normalized.rowwise() += p.beta.row(0);
    }
    const Matrix& act_in = ls.batch_norm ? normalized : z;
    Matrix act = apply_activation(ls.activation, act_in);

    Matrix mask;
    Matrix out;
    if (mode == Mode::train && ls.dropout > 0.0) {
      if (!dropout_rng) throw ConfigError("forward: dropout in train mode needs an rng");
      const double keep = 1.0 - ls.dropout;
      mask.resize(act.rows(), act.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        for (Eigen::Index r = 0; r < mask.rows(); ++r)
          mask(r, c) = uniform01(*dropout_rng) < keep ? 1.0 / keep : 0.0;
      out = act.cwiseProduct(mask);
    } else {
      out = act;
    }

    if (cache) {
      LayerCache& lc = cache->layers[k];
      lc.input = std::move(a);
      lc.pre = std::move(z);
      lc.xhat = std::move(xhat);
      lc.inv_std = std::move(inv_std);
      lc.batch_mean = std::move(mean);
      lc.batch_var = std::move(var);
      lc.activated = std::move(act);
      lc.mask = std::move(mask);
      lc.output = out;
    }
    a = std::move(out);
  }
  return a;
}

// ---------------------------------------------------------------- backward

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& upstream,
                   Upstream kind) {
  if (cache.source != &net || cache.version != net.version())
    throw ConsistencyError("backward: cache was produced by a different network state");
  const auto& spec = net.spec();
  if (cache.layers.size() != spec.layers.size())
    throw ConsistencyError("backward: cache layer count mismatch");
  if (cache.layers.empty()) {
    return Gradients{{}, upstream};
  }
  const Eigen::Index rows = cache.layers.front().input.rows();
  if (upstream.rows() != rows || upstream.cols() != spec.output_dim())
    throw ShapeError("backward: upstream gradient shape mismatch");

  std::vector<std::vector<Matrix>> layer_grads(spec.layers.size());

  Matrix g = upstream;
  for (std::size_t kk = spec.layers.size(); kk-- > 0;) {
    const LayerSpec& ls = spec.layers[kk];
    const LayerParams& p = net.layers()[kk];
    const LayerCache& lc = cache.layers[kk];
    const bool last = kk + 1 == spec.layers.size();

    // Through dropout and activation -> gradient w.r.t. activation input.
    Matrix d_act_in;
    if (last && kind == Upstream::final_logits) {
      d_act_in = g;
    } else {
      if (lc.mask.size() > 0) g = g.cwiseProduct(lc.mask);
      d_act_in = g.cwiseProduct(activation_derivative(ls.activation, lc.activated));
    }

    Matrix dz;
    Matrix dgamma, dbeta;
    if (ls.batch_norm) {
      dgamma = (d_act_in.cwiseProduct(lc.xhat)).colwise().sum();
      dbeta = d_act_in.colwise().sum();
      Matrix dxhat = (d_act_in.array().rowwise() * p.gamma.row(0).array()).matrix();
      if (cache.mode == Mode::train) {
        const double n = static_cast<double>(rows);
        const Matrix sum_dxhat = dxhat.colwise().sum();
        const Matrix sum_dxhat_xhat = dxhat.cwiseProduct(lc.xhat).colwise().sum();
        Matrix t = n * dxhat;
        t.rowwise() -= sum_dxhat.row(0);
        t -= (lc.xhat.array().rowwise() * sum_dxhat_xhat.row(0).array()).matrix();
        dz = (t.array().rowwise() * (lc.inv_std.row(0).array() / n)).matrix();
      } else {
        dz = (dxhat.array().rowwise() * lc.inv_std.row(0).array()).matrix();
      }
    } else {
      dz = std::move(d_act_in);
    }

    std::vector<Matrix> lg;
    lg.push_back(lc.input.transpose() * dz);
    lg.push_back(dz.colwise().sum());
    if (ls.batch_norm) {
      lg.push_back(std::move(dgamma));
      lg.push_back(std::move(dbeta));
    }
    layer_grads[kk] = std::move(lg);
    g = dz * p.W.transpose();
  }

  Gradients out;
  for (auto& lg : layer_grads)
    for (auto& m : lg) out.params.push_back(std::move(m));
  out.input = std::move(g);
  return out;
}

void update_running_stats(Network& net, const ForwardCache& cache) {
  if (cache.mode != Mode::train) return;
  if (cache.source != &net || cache.version != net.version())
    throw ConsistencyError("update_running_stats: stale cache");
  auto& layers = net.mutable_layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!net.spec().layers[k].batch_norm) continue;
    const auto& lc = cache.layers[k];
    layers[k].running_mean =
        kBatchNormMomentum * layers[k].running_mean + (1.0 - kBatchNormMomentum) * lc.batch_mean;
    layers[k].running_var =
        kBatchNormMomentum * layers[k].running_var + (1.0 - kBatchNormMomentum) * lc.batch_var;
  }
}

// ---------------------------------------------------------------- adamax

void adamax_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                 AdamaxState& state) {
  if (params.size() != grads.size())
    throw ShapeError("adamax_step: parameter/gradient count mismatch");
  const auto& h = state.hyper;
  if (!(h.beta1 >= 0.0 && h.beta1 < 1.0 && h.beta2 >= 0.0 && h.beta2 < 1.0))
    throw ConfigError("adamax_step: betas must lie in [0, 1)");
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.inf_norm.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size())
    throw ShapeError("adamax_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.first_moment[i].rows() != grads[i].rows() ||
        state.first_moment[i].cols() != grads[i].cols())
      throw ShapeError("adamax_step: shape mismatch at parameter " + std::to_string(i));
  }

  ++state.step_count;
  const double bias = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
  const double step = h.learning_rate / bias;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& u = state.inf_norm[i];
    m = h.beta1 * m + (1.0 - h.beta1) * grads[i];
    u = (h.beta2 * u).cwiseMax(grads[i].cwiseAbs());
    params[i]->array() -= step * m.array() / (u.array() + h.epsilon);
  }
}

// ---------------------------------------------------------------- training

double mean_loss(Loss loss, const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw ShapeError("mean_loss: shape mismatch");
  if (predictions.rows() == 0) return 0.0;
  double total = 0.0;
  if (loss == Loss::squared) {
    total = (predictions - targets).squaredNorm();
  } else {
    constexpr double kClip = 1e-15;
    for (Eigen::Index r = 0; r < predictions.rows(); ++r)
      for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
        const double p = std::clamp(predictions(r, c), kClip, 1.0 - kClip);
        const double y = targets(r, c);
        total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      }
  }
  return total / static_cast<double>(predictions.rows());
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("TrainConfig: max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (patience < 1) throw ConfigError("TrainConfig: patience must be >= 1");
  if (patience > max_epochs) throw ConfigError("TrainConfig: patience must be <= max_epochs");
}

namespace {

double accuracy(const Matrix& predictions, const Matrix& targets) {
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r)
    for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
      const int decided = predictions(r, c) > 0.5 ? 1 : 0;
      if (decided == (targets(r, c) > 0.5 ? 1 : 0)) ++correct;
    }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

TrainResult train(Network net, const LabeledSet& train_set, const LabeledSet& valid_set,
                  Loss loss, const TrainConfig& config) {
  config.validate();
  const auto& spec = net.spec();
  if (train_set.X.rows() == 0 || valid_set.X.rows() == 0)
    throw ConfigError("train: empty train or validation set");
  if (train_set.X.rows() != train_set.Y.rows() || valid_set.X.rows() != valid_set.Y.rows())
    throw ShapeError("train: X/Y row mismatch");
  if (train_set.Y.cols() != spec.output_dim() || valid_set.Y.cols() != spec.output_dim())
    throw ShapeError("train: target width does not match network output");
  if (loss == Loss::cross_entropy) {
    auto binary = [](const Matrix& y) {
      return (y.array() == 0.0 || y.array() == 1.0).all();
    };
    if (!binary(train_set.Y) || !binary(valid_set.Y))
      throw ConfigError("train: cross-entropy labels must be 0/1");
    if (spec.layers.empty() || spec.layers.back().activation != Activation::sigmoid)
      throw ConfigError("train: cross-entropy needs a sigmoid output layer");
  }
  const bool has_bn = std::any_of(spec.layers.begin(), spec.layers.end(),
                                  [](const LayerSpec& l) { return l.batch_norm; });

  Rng order_rng = stream_rng(config.seed, 1);
  Rng dropout_rng = stream_rng(config.seed, 2);
  AdamaxState opt(config.adamax);

  TrainResult result;
  double best_metric = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(static_cast<std::size_t>(train_set.X.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_in_place(order, order_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      if (has_bn && end - start < 2) continue;
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(train_set.X, idx);
      const Matrix yb = gather_rows(train_set.Y, idx);

      ForwardCache cache;
      const Matrix pred = forward(net, xb, Mode::train, &cache, &dropout_rng);
      const double bn = static_cast<double>(idx.size());
      Gradients grads;
      if (loss == Loss::cross_entropy) {
        grads = backward(net, cache, (pred - yb) / bn, Upstream::final_logits);
      } else {
        grads = backward(net, cache, 2.0 * (pred - yb) / bn, Upstream::output);
      }
      loss_sum += mean_loss(loss, pred, yb) * bn;
      seen += idx.size();
      update_running_stats(net, cache);
      auto params = net.parameters();
      adamax_step(params, grads.params, opt);
    }

    const Matrix vpred = forward(net, valid_set.X, Mode::infer);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.valid_loss = mean_loss(loss, vpred, valid_set.Y);
    rec.valid_accuracy =
        loss == Loss::cross_entropy ? accuracy(vpred, valid_set.Y) : -rec.valid_loss;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.valid_loss))
      throw NumericalError("train: loss became non-finite at epoch " + std::to_string(epoch));
    result.history.push_back(rec);

    if (rec.valid_accuracy > best_metric) {
      best_metric = rec.valid_accuracy;
      result.net = net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  result.net.touch();
  return result;
}

}  // namespace causalreg::nn
