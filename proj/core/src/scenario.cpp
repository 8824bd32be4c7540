#include "causalreg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "causalreg/errors.hpp"

namespace causalreg::scenario {

namespace fs = std::filesystem;

// ------------------------------------------------------------ marginals

void MarginalSpec::validate() const {
  if (K < 2) throw DomainError("MarginalSpec: K must be >= 2");
  if ((kind == MarginalKind::zipf || kind == MarginalKind::poisson) && !(s > 0.0))
    throw DomainError("MarginalSpec: shape parameter must be positive");
  if (kind == MarginalKind::dirichlet_trinary && K < 3)
    throw DomainError("MarginalSpec: trinary marginal needs K >= 3");
}

std::vector<double> marginal_probs(const MarginalSpec& spec, Rng& rng) {
  spec.validate();
  const auto K = static_cast<std::size_t>(spec.K);
  std::vector<double> p(K, 0.0);
  switch (spec.kind) {
    case MarginalKind::zipf: {
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        p[k] = std::pow(static_cast<double>(k + 1), -spec.s);
        total += p[k];
      }
      for (auto& v : p) v /= total;
      break;
    }
    case MarginalKind::poisson: {
      // p_k = e^{-s} s^k / k! for k < K-1, tail mass in the top category.
      double term = std::exp(-spec.s);
      double head = 0.0;
      for (std::size_t k = 0; k + 1 < K; ++k) {
        p[k] = term;
        head += term;
        term *= spec.s / static_cast<double>(k + 1);
      }
      p[K - 1] = std::max(0.0, 1.0 - head);
      break;
    }
    case MarginalKind::dirichlet_binary:
    case MarginalKind::dirichlet_trinary: {
      const std::size_t width = spec.kind == MarginalKind::dirichlet_binary ? 2 : 3;
      const auto d = flat_dirichlet(rng, width);
      std::copy(d.begin(), d.end(), p.begin());
      break;
    }
    case MarginalKind::dirichlet_full:
      p = flat_dirichlet(rng, K);
      break;
  }
  return p;
}

std::vector<double> sample_marginal(Rng& rng, int K, double chi2_dof) {
  if (K < 2) throw DomainError("sample_marginal: K must be >= 2");
  std::uniform_int_distribution<int> pick_kind(0, 4);
  MarginalSpec spec;
  spec.K = K;
  spec.kind = static_cast<MarginalKind>(pick_kind(rng));
  if (spec.kind == MarginalKind::dirichlet_trinary && K < 3)
    spec.kind = MarginalKind::dirichlet_binary;
  if (spec.kind == MarginalKind::zipf || spec.kind == MarginalKind::poisson) {
    do {
      spec.s = chi_squared(rng, chi2_dof);
    } while (!(spec.s > 0.0));
  }
  return marginal_probs(spec, rng);
}

// ------------------------------------------------------------ scenario ids

int causal_label(ScenarioId id) {
  switch (id) {
    case ScenarioId::direct:
    case ScenarioId::indirect:
    case ScenarioId::conf_direct:
    case ScenarioId::conf_indirect:
      return 0;
    default:
      return 1;
  }
}

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::direct: return "direct";
    case ScenarioId::indirect: return "indirect";
    case ScenarioId::conf_direct: return "conf_direct";
    case ScenarioId::conf_indirect: return "conf_indirect";
    case ScenarioId::reverse_direct: return "reverse_direct";
    case ScenarioId::reverse_indirect: return "reverse_indirect";
    case ScenarioId::conf_reverse_direct: return "conf_reverse_direct";
    case ScenarioId::conf_reverse_indirect: return "conf_reverse_indirect";
    case ScenarioId::confounded_only: return "confounded_only";
    case ScenarioId::independent: return "independent";
  }
  return "independent";
}

ScenarioId scenario_from_string(std::string_view name) {
  for (ScenarioId id : kAllScenarios)
    if (to_string(id) == name) return id;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

// ------------------------------------------------------------ factors

void ScenarioFactors::validate() const {
  if (nodes.size() < 2) throw ConfigError("ScenarioFactors: X and Y nodes required");
  if (nodes[0].card != K || nodes[1].card != 2)
    throw ConfigError("ScenarioFactors: node 0 must have card K and node 1 card 2");
  for (const Node& nd : nodes) {
    std::size_t configs = 1;
    for (int p : nd.parents) configs *= static_cast<std::size_t>(nodes.at(p).card);
    if (nd.cpt.size() != configs * static_cast<std::size_t>(nd.card))
      throw ConfigError("ScenarioFactors: CPT of node '" + nd.name + "' has wrong size");
    for (std::size_t c = 0; c < configs; ++c) {
      double s = 0.0;
      for (int v = 0; v < nd.card; ++v) {
        const double pv = nd.cpt[c * static_cast<std::size_t>(nd.card) + v];
        if (pv < 0.0) throw DomainError("ScenarioFactors: negative probability");
        s += pv;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw DomainError("ScenarioFactors: CPT row of '" + nd.name + "' does not sum to 1");
    }
  }
}

namespace {

constexpr int kX = 0;
constexpr int kY = 1;

Node root_node(std::string name, std::vector<double> probs) {
  Node n;
  n.name = std::move(name);
  n.card = static_cast<int>(probs.size());
  n.cpt = std::move(probs);
  return n;
}

// Y | parents with P(Y=1 | config) ~ Unif(0, 1) per parent configuration.
Node bernoulli_child(Rng& rng, std::vector<int> parents, std::size_t configs) {
  Node n;
  n.name = "Y";
  n.card = 2;
  n.parents = std::move(parents);
  n.cpt.resize(configs * 2);
  for (std::size_t c = 0; c < configs; ++c) {
    const double u = uniform01(rng);
    n.cpt[2 * c] = 1.0 - u;
    n.cpt[2 * c + 1] = u;
  }
  return n;
}

// X | parents with each row drawn from the count-marginal mixture.
Node count_child(Rng& rng, int K, double dof, std::vector<int> parents, std::size_t configs) {
  Node n;
  n.name = "X";
  n.card = K;
  n.parents = std::move(parents);
  n.cpt.reserve(configs * static_cast<std::size_t>(K));
  for (std::size_t c = 0; c < configs; ++c) {
    const auto row = sample_marginal(rng, K, dof);
    n.cpt.insert(n.cpt.end(), row.begin(), row.end());
  }
  return n;
}

// Hidden categorical | parents with flat Dirichlet rows.
Node hidden_child(Rng& rng, std::string name, int card, std::vector<int> parents,
                  std::size_t configs) {
  Node n;
  n.name = std::move(name);
  n.card = card;
  n.parents = std::move(parents);
  n.cpt.reserve(configs * static_cast<std::size_t>(card));
  for (std::size_t c = 0; c < configs; ++c) {
    const auto row = flat_dirichlet(rng, static_cast<std::size_t>(card));
    n.cpt.insert(n.cpt.end(), row.begin(), row.end());
  }
  return n;
}

double at(const Node& n, std::size_t config, int value) {
  return n.cpt[config * static_cast<std::size_t>(n.card) + static_cast<std::size_t>(value)];
}

}  // namespace

ScenarioFactors draw_factors(Rng& rng, ScenarioId id, int K, const ScenarioOptions& opts) {
  if (K < 2) throw DomainError("draw_factors: K must be >= 2");
  if (opts.hidden_min < 1 || opts.hidden_max < opts.hidden_min)
    throw ConfigError("draw_factors: invalid hidden cardinality range");
  std::uniform_int_distribution<int> hidden_card(opts.hidden_min, opts.hidden_max);
  const double dof = opts.chi2_dof;
  const auto k = static_cast<std::size_t>(K);

  ScenarioFactors f;
  f.id = id;
  f.K = K;
  // Node slots: X, Y, H, H'. Placeholders are filled below.
  f.nodes.resize(2);

  switch (id) {
    case ScenarioId::direct: {
      f.nodes[kX] = root_node("X", sample_marginal(rng, K, dof));
      f.nodes[kY] = bernoulli_child(rng, {kX}, k);
      break;
    }
    case ScenarioId::indirect: {
      const int h = hidden_card(rng);
      f.nodes[kX] = root_node("X", sample_marginal(rng, K, dof));
      f.nodes.push_back(hidden_child(rng, "H", h, {kX}, k));
      f.nodes[kY] = bernoulli_child(rng, {2}, static_cast<std::size_t>(h));
      break;
    }
    case ScenarioId::conf_direct: {
      const int h = hidden_card(rng);
      f.nodes.push_back(root_node("H", flat_dirichlet(rng, static_cast<std::size_t>(h))));
      f.nodes[kX] = count_child(rng, K, dof, {2}, static_cast<std::size_t>(h));
      f.nodes[kY] = bernoulli_child(rng, {kX, 2}, k * static_cast<std::size_t>(h));
      break;
    }
    case ScenarioId::conf_indirect: {
      const int h = hidden_card(rng);
      const int h2 = hidden_card(rng);
      f.nodes.push_back(root_node("H", flat_dirichlet(rng, static_cast<std::size_t>(h))));
      f.nodes[kX] = count_child(rng, K, dof, {2}, static_cast<std::size_t>(h));
      f.nodes.push_back(hidden_child(rng, "H2", h2, {kX}, k));
      f.nodes[kY] = bernoulli_child(rng, {2, 3},
                                    static_cast<std::size_t>(h) * static_cast<std::size_t>(h2));
      break;
    }
    case ScenarioId::reverse_direct: {
      f.nodes[kY] = bernoulli_child(rng, {}, 1);
      f.nodes[kX] = count_child(rng, K, dof, {kY}, 2);
      break;
    }
    case ScenarioId::reverse_indirect: {
      const int h = hidden_card(rng);
      f.nodes[kY] = bernoulli_child(rng, {}, 1);
      f.nodes.push_back(hidden_child(rng, "H", h, {kY}, 2));
      f.nodes[kX] = count_child(rng, K, dof, {2}, static_cast<std::size_t>(h));
      break;
    }
    case ScenarioId::conf_reverse_direct: {
      const int h = hidden_card(rng);
      f.nodes.push_back(root_node("H", flat_dirichlet(rng, static_cast<std::size_t>(h))));
      f.nodes[kY] = bernoulli_child(rng, {2}, static_cast<std::size_t>(h));
      f.nodes[kX] = count_child(rng, K, dof, {kY, 2}, 2 * static_cast<std::size_t>(h));
      break;
    }
    case ScenarioId::conf_reverse_indirect: {
      const int h = hidden_card(rng);
      const int h2 = hidden_card(rng);
      f.nodes.push_back(root_node("H", flat_dirichlet(rng, static_cast<std::size_t>(h))));
      f.nodes[kY] = bernoulli_child(rng, {2}, static_cast<std::size_t>(h));
      f.nodes.push_back(hidden_child(rng, "H2", h2, {kY}, 2));
      f.nodes[kX] = count_child(rng, K, dof, {2, 3},
                                static_cast<std::size_t>(h) * static_cast<std::size_t>(h2));
      break;
    }
    case ScenarioId::confounded_only: {
      const int h = hidden_card(rng);
      f.nodes.push_back(root_node("H", flat_dirichlet(rng, static_cast<std::size_t>(h))));
      f.nodes[kX] = count_child(rng, K, dof, {2}, static_cast<std::size_t>(h));
      f.nodes[kY] = bernoulli_child(rng, {2}, static_cast<std::size_t>(h));
      break;
    }
    case ScenarioId::independent: {
      f.nodes[kX] = root_node("X", sample_marginal(rng, K, dof));
      f.nodes[kY] = bernoulli_child(rng, {}, 1);
      break;
    }
  }
  f.nodes[kX].name = "X";
  f.nodes[kY].name = "Y";
  return f;
}

std::vector<double> marginal_joint(const ScenarioFactors& f) {
  const int K = f.K;
  const Node& X = f.nodes.at(kX);
  const Node& Y = f.nodes.at(kY);
  std::vector<double> joint(2 * static_cast<std::size_t>(K), 0.0);
  auto add = [&](int x0, int y, double v) {
    joint[static_cast<std::size_t>(y * K + x0)] += v;
  };

  switch (f.id) {
    case ScenarioId::direct:
      for (int x = 0; x < K; ++x)
        for (int y = 0; y < 2; ++y) add(x, y, at(X, 0, x) * at(Y, x, y));
      break;
    case ScenarioId::indirect: {
      const Node& H = f.nodes.at(2);
      for (int x = 0; x < K; ++x)
        for (int y = 0; y < 2; ++y) {
          double s = 0.0;
          for (int h = 0; h < H.card; ++h) s += at(H, x, h) * at(Y, h, y);
          add(x, y, at(X, 0, x) * s);
        }
      break;
    }
    case ScenarioId::conf_direct: {
      const Node& H = f.nodes.at(2);
      for (int h = 0; h < H.card; ++h)
        for (int x = 0; x < K; ++x) {
          const double phx = at(H, 0, h) * at(X, h, x);
          const std::size_t cfg = static_cast<std::size_t>(x) * H.card + h;
          for (int y = 0; y < 2; ++y) add(x, y, phx * at(Y, cfg, y));
        }
      break;
    }
    case ScenarioId::conf_indirect: {
      const Node& H = f.nodes.at(2);
      const Node& H2 = f.nodes.at(3);
      // q(h, x, y) = sum_h2 p(h2 | x) p(y | h, h2)
      for (int h = 0; h < H.card; ++h)
        for (int x = 0; x < K; ++x) {
          const double phx = at(H, 0, h) * at(X, h, x);
          if (phx == 0.0) continue;
          double s1 = 0.0;
          for (int h2 = 0; h2 < H2.card; ++h2)
            s1 += at(H2, x, h2) * at(Y, static_cast<std::size_t>(h) * H2.card + h2, 1);
          add(x, 1, phx * s1);
          add(x, 0, phx * (1.0 - s1));
        }
      break;
    }
    case ScenarioId::reverse_direct:
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < K; ++x) add(x, y, at(Y, 0, y) * at(X, y, x));
      break;
    case ScenarioId::reverse_indirect: {
      const Node& H = f.nodes.at(2);
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < K; ++x) {
          double s = 0.0;
          for (int h = 0; h < H.card; ++h) s += at(H, y, h) * at(X, h, x);
          add(x, y, at(Y, 0, y) * s);
        }
      break;
    }
    case ScenarioId::conf_reverse_direct: {
      const Node& H = f.nodes.at(2);
      for (int h = 0; h < H.card; ++h)
        for (int y = 0; y < 2; ++y) {
          const double phy = at(H, 0, h) * at(Y, h, y);
          const std::size_t cfg = static_cast<std::size_t>(y) * H.card + h;
          for (int x = 0; x < K; ++x) add(x, y, phy * at(X, cfg, x));
        }
      break;
    }
    case ScenarioId::conf_reverse_indirect: {
      const Node& H = f.nodes.at(2);
      const Node& H2 = f.nodes.at(3);
      for (int h = 0; h < H.card; ++h)
        for (int y = 0; y < 2; ++y) {
          const double phy = at(H, 0, h) * at(Y, h, y);
          if (phy == 0.0) continue;
          for (int h2 = 0; h2 < H2.card; ++h2) {
            const double w = phy * at(H2, y, h2);
            const std::size_t cfg = static_cast<std::size_t>(h) * H2.card + h2;
            for (int x = 0; x < K; ++x) add(x, y, w * at(X, cfg, x));
          }
        }
      break;
    }
    case ScenarioId::confounded_only: {
      const Node& H = f.nodes.at(2);
      for (int h = 0; h < H.card; ++h)
        for (int x = 0; x < K; ++x) {
          const double phx = at(H, 0, h) * at(X, h, x);
          for (int y = 0; y < 2; ++y) add(x, y, phx * at(Y, h, y));
        }
      break;
    }
    case ScenarioId::independent:
      for (int x = 0; x < K; ++x)
        for (int y = 0; y < 2; ++y) add(x, y, at(X, 0, x) * at(Y, 0, y));
      break;
  }

  // Renormalize away accumulated rounding.
  const double total = std::accumulate(joint.begin(), joint.end(), 0.0);
  for (auto& v : joint) v = std::max(0.0, v / total);
  return joint;
}

ScenarioSample sample_scenario(Rng& rng, ScenarioId id, int K, int n_draws,
                               const ScenarioOptions& opts) {
  if (n_draws < 1) throw DomainError("sample_scenario: n_draws must be >= 1");
  const ScenarioFactors f = draw_factors(rng, id, K, opts);
  ScenarioSample s;
  s.scenario = id;
  s.K = K;
  s.label = causal_label(id);
  s.joint = marginal_joint(f);
  s.counts = multinomial(rng, static_cast<std::uint64_t>(n_draws), s.joint);
  // The shuffle stream is always consumed so counts do not depend on keep_draws.
  const std::uint64_t shuffle_seed = rng();
  if (opts.keep_draws) {
    s.draws.reserve(static_cast<std::size_t>(n_draws));
    for (int y = 0; y < 2; ++y)
      for (int x = 1; x <= K; ++x)
        s.draws.insert(s.draws.end(), s.counts[joint_index(x, y, K)], Draw{x, y});
    Rng shuffle_rng(shuffle_seed);
    shuffle_in_place(s.draws, shuffle_rng);
  }
  return s;
}

std::vector<ScenarioSample> generate_detector_corpus(Rng& rng, int n_per_case, int K, int n_draws,
                                                     const ScenarioOptions& opts) {
  if (n_per_case < 1) throw DomainError("generate_detector_corpus: n_per_case must be >= 1");
  std::vector<ScenarioSample> corpus;
  corpus.reserve(static_cast<std::size_t>(n_per_case) * kAllScenarios.size());
  for (int i = 0; i < n_per_case; ++i)
    for (ScenarioId id : kAllScenarios) corpus.push_back(sample_scenario(rng, id, K, n_draws, opts));
  return corpus;
}

// ------------------------------------------------------------ benchmark

std::string_view to_string(VariableRole r) {
  switch (r) {
    case VariableRole::causal: return "causal";
    case VariableRole::confounded: return "confounded";
    case VariableRole::noise: return "noise";
  }
  return "noise";
}

void BenchmarkSpec::validate() const {
  if (m < 1 || n < 1) throw ConfigError("BenchmarkSpec: m and n must be >= 1");
  if (!(frac_causal >= 0.0 && frac_causal < 1.0))
    throw ConfigError("BenchmarkSpec: frac_causal must lie in [0, 1)");
  if (!(frac_confounded >= 0.0 && frac_causal + frac_confounded <= 1.0))
    throw ConfigError("BenchmarkSpec: frac_causal + frac_confounded must be <= 1");
  if (confounder_count < 1) throw ConfigError("BenchmarkSpec: confounder_count must be >= 1");
  if (!(effect_scale > 0.0)) throw ConfigError("BenchmarkSpec: effect_scale must be > 0");
  if (K < 2) throw ConfigError("BenchmarkSpec: K must be >= 2");
  if (confounder_levels_max < 2) throw ConfigError("BenchmarkSpec: confounder_levels_max must be >= 2");
  if (!(confounder_strength >= 0.0)) throw ConfigError("BenchmarkSpec: confounder_strength must be >= 0");
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw ConfigError("BenchmarkSpec: prevalence must lie in (0, 1)");
}

std::vector<int> Benchmark::noncausal_labels() const {
  std::vector<int> out;
  out.reserve(roles.size());
  for (auto r : roles) out.push_back(r == VariableRole::causal ? 0 : 1);
  return out;
}

std::vector<double> Benchmark::causal_scores() const {
  std::vector<double> out;
  out.reserve(roles.size());
  for (auto r : roles) out.push_back(r == VariableRole::causal ? 1.0 : 0.0);
  return out;
}

namespace {

struct Confounder {
  std::vector<double> probs;   // p(U = u)
  std::vector<double> effect;  // additive logit effect per level
};

// Mean and standard deviation of the 0-based bin index under p.
std::pair<double, double> index_moments(const std::vector<double>& p) {
  double mean = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    mean += p[k] * static_cast<double>(k);
    sq += p[k] * static_cast<double>(k * k);
  }
  return {mean, std::sqrt(std::max(0.0, sq - mean * mean))};
}

}  // namespace

Benchmark generate_semisynthetic_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const int m = spec.m;
  const int n = spec.n;
  const int n_causal = static_cast<int>(std::lround(spec.frac_causal * m));
  const int n_conf =
      std::min(m - n_causal, static_cast<int>(std::lround(spec.frac_confounded * m)));

  Rng role_rng = stream_rng(spec.seed, 0);
  Rng param_rng = stream_rng(spec.seed, 1);
  Rng data_rng = stream_rng(spec.seed, 2);

  Benchmark b;
  b.roles.assign(static_cast<std::size_t>(m), VariableRole::noise);
  for (int j = 0; j < n_causal; ++j) b.roles[static_cast<std::size_t>(j)] = VariableRole::causal;
  for (int j = n_causal; j < n_causal + n_conf; ++j)
    b.roles[static_cast<std::size_t>(j)] = VariableRole::confounded;
  shuffle_in_place(b.roles, role_rng);
  for (int j = 0; j < m; ++j) {
    std::ostringstream name;
    name << "v" << std::setw(3) << std::setfill('0') << j;
    b.names.push_back(name.str());
  }

  // Latent confounders: categorical, standardized logit effects.
  std::vector<Confounder> confounders(static_cast<std::size_t>(spec.confounder_count));
  std::uniform_int_distribution<int> level_count(2, spec.confounder_levels_max);
  for (auto& c : confounders) {
    c.probs = flat_dirichlet(param_rng, static_cast<std::size_t>(level_count(param_rng)));
    c.effect.resize(c.probs.size());
    double mean = 0.0, sq = 0.0;
    for (std::size_t u = 0; u < c.effect.size(); ++u) {
      c.effect[u] = standard_normal(param_rng);
      mean += c.probs[u] * c.effect[u];
    }
    for (std::size_t u = 0; u < c.effect.size(); ++u)
      sq += c.probs[u] * (c.effect[u] - mean) * (c.effect[u] - mean);
    const double sd = std::sqrt(std::max(sq, 1e-12));
    for (auto& e : c.effect) e = spec.confounder_strength * spec.effect_scale * (e - mean) / sd;
  }

  // Per-variable mechanisms.
  struct Mechanism {
    std::vector<std::vector<double>> rows;  // one row per confounder level, or a single row
    int confounder = -1;
    double coef = 0.0;
    double center = 0.0;
    double scale = 1.0;
  };
  std::vector<Mechanism> mech(static_cast<std::size_t>(m));
  int conf_rr = 0;
  for (int j = 0; j < m; ++j) {
    auto& mj = mech[static_cast<std::size_t>(j)];
    switch (b.roles[static_cast<std::size_t>(j)]) {
      case VariableRole::causal: {
        mj.rows.push_back(sample_marginal(param_rng, spec.K));
        const auto [mean, sd] = index_moments(mj.rows[0]);
        mj.center = mean;
        mj.scale = std::max(sd, 0.5);
        mj.coef = (uniform01(param_rng) < 0.5 ? -1.0 : 1.0) * spec.effect_scale;
        break;
      }
      case VariableRole::confounded: {
        mj.confounder = conf_rr++ % spec.confounder_count;
        const auto& c = confounders[static_cast<std::size_t>(mj.confounder)];
        for (std::size_t u = 0; u < c.probs.size(); ++u)
          mj.rows.push_back(sample_marginal(param_rng, spec.K));
        break;
      }
      case VariableRole::noise:
        mj.rows.push_back(sample_marginal(param_rng, spec.K));
        break;
    }
  }

  b.X.resize(n, m);
  b.y.resize(static_cast<std::size_t>(n));
  std::vector<double> logits(static_cast<std::size_t>(n));
  std::vector<std::size_t> levels(confounders.size());
  for (int i = 0; i < n; ++i) {
    double& logit = logits[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < confounders.size(); ++c) {
      levels[c] = categorical(data_rng, confounders[c].probs);
      logit += confounders[c].effect[levels[c]];
    }
    for (int j = 0; j < m; ++j) {
      const auto& mj = mech[static_cast<std::size_t>(j)];
      const auto& row = mj.confounder >= 0
                            ? mj.rows[levels[static_cast<std::size_t>(mj.confounder)]]
                            : mj.rows[0];
      const int x = static_cast<int>(categorical(data_rng, row));
      b.X(i, j) = x;
      if (mj.coef != 0.0) logit += mj.coef * (static_cast<double>(x) - mj.center) / mj.scale;
    }
  }
  // Intercept by bisection: mean_i sigmoid(logit_i + b0) = prevalence.
  auto mean_prob = [&](double b0) {
    double s = 0.0;
    for (double z : logits) s += 1.0 / (1.0 + std::exp(-(z + b0)));
    return s / n;
  };
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_prob(mid) < spec.prevalence ? lo : hi) = mid;
  }
  b.intercept = 0.5 * (lo + hi);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(logits[static_cast<std::size_t>(i)] + b.intercept)));
    b.y[static_cast<std::size_t>(i)] = uniform01(data_rng) < p ? 1 : 0;
  }
  return b;
}

// ------------------------------------------------------------ serialization

void write_corpus(const std::string& dir, const std::vector<ScenarioSample>& corpus,
                  std::uint64_t seed) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["schema_version"] = "corpus-v1";
  manifest["seed"] = seed;
  manifest["samples"] = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    std::ostringstream fname;
    fname << "sample_" << std::setw(5) << std::setfill('0') << i << ".csv";
    std::ofstream out(fs::path(dir) / fname.str());
    if (!out) throw std::runtime_error("write_corpus: cannot open " + fname.str());
    out << "x,y\n";
    if (!s.draws.empty()) {
      for (const auto& d : s.draws) out << d.x << ',' << d.y << '\n';
    } else {
      for (int y = 0; y < 2; ++y)
        for (int x = 1; x <= s.K; ++x)
          for (std::uint32_t c = 0; c < s.counts[joint_index(x, y, s.K)]; ++c)
            out << x << ',' << y << '\n';
    }
    manifest["samples"].push_back({{"file", fname.str()},
                                   {"scenario", std::string(to_string(s.scenario))},
                                   {"label", s.label},
                                   {"K", s.K},
                                   {"joint", s.joint}});
  }
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << '\n';
}

std::vector<ScenarioSample> read_corpus(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw ConfigError("read_corpus: missing manifest.json in " + dir);
  const auto manifest = nlohmann::json::parse(mf);
  std::vector<ScenarioSample> corpus;
  for (const auto& js : manifest.at("samples")) {
    ScenarioSample s;
    s.scenario = scenario_from_string(js.at("scenario").get<std::string>());
    s.label = js.at("label").get<int>();
    s.K = js.at("K").get<int>();
    s.joint = js.at("joint").get<std::vector<double>>();
    s.counts.assign(2 * static_cast<std::size_t>(s.K), 0);
    const auto file = fs::path(dir) / js.at("file").get<std::string>();
    std::ifstream in(file);
    if (!in) throw ConfigError("read_corpus: missing sample file " + file.string());
    std::string line;
    std::getline(in, line);  // header
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw ParseError("read_corpus: malformed line in " + file.string(), lineno, "x");
      Draw d;
      try {
        d.x = std::stoi(line.substr(0, comma));
        d.y = std::stoi(line.substr(comma + 1));
      } catch (const std::exception&) {
        throw ParseError("read_corpus: non-integer value in " + file.string(), lineno, "x");
      }
      if (d.x < 1 || d.x > s.K || (d.y != 0 && d.y != 1))
        throw ParseError("read_corpus: value out of support in " + file.string(), lineno, "x");
      ++s.counts[joint_index(d.x, d.y, s.K)];
      s.draws.push_back(d);
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

void write_benchmark(const std::string& csv_path, const std::string& truth_path,
                     const Benchmark& bench, const BenchmarkSpec& spec) {
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("write_benchmark: cannot open " + csv_path);
    for (const auto& nm : bench.names) out << nm << ',';
    out << "label\n";
    for (Eigen::Index i = 0; i < bench.X.rows(); ++i) {
      for (Eigen::Index j = 0; j < bench.X.cols(); ++j) out << bench.X(i, j) << ',';
      out << bench.y[static_cast<std::size_t>(i)] << '\n';
    }
  }
  nlohmann::json truth;
  truth["schema_version"] = "benchmark-truth-v1";
  truth["spec"] = {{"m", spec.m},
                   {"n", spec.n},
                   {"frac_causal", spec.frac_causal},
                   {"frac_confounded", spec.frac_confounded},
                   {"confounder_count", spec.confounder_count},
                   {"effect_scale", spec.effect_scale},
                   {"confounder_strength", spec.confounder_strength},
                   {"prevalence", spec.prevalence},
                   {"confounder_levels_max", spec.confounder_levels_max},
                   {"K", spec.K},
                   {"seed", spec.seed}};
  truth["variables"] = nlohmann::json::array();
  for (std::size_t j = 0; j < bench.roles.size(); ++j)
    truth["variables"].push_back({{"name", bench.names[j]},
                                  {"role", std::string(to_string(bench.roles[j]))},
                                  {"label", bench.roles[j] == VariableRole::causal ? 0 : 1}});
  std::ofstream tf(truth_path);
  tf << truth.dump(2) << '\n';
}

}  // namespace causalreg::scenario
