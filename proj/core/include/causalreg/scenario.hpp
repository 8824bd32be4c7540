#pragma once

// Synthetic two-variable causal scenarios over a count-valued X with support
// {1..K} and a binary Y, generated under independence of mechanisms, plus a
// semi-synthetic multivariate benchmark with known per-variable roles.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "causalreg/random.hpp"

namespace causalreg::scenario {

constexpr int kDefaultSupport = 16;

enum class MarginalKind { zipf, poisson, dirichlet_binary, dirichlet_trinary, dirichlet_full };

struct MarginalSpec {
  MarginalKind kind = MarginalKind::poisson;
  double s = 1.0;  // zipf exponent or poisson rate
  int K = kDefaultSupport;

  void validate() const;
};

/// Probability vector of length K for a fully specified marginal. Dirichlet
/// kinds consume randomness; zipf and poisson are deterministic in (s, K).
/// Zipf is truncated to {1..K} and renormalized; the Poisson tail beyond
/// K-1 is lumped into the top category.
std::vector<double> marginal_probs(const MarginalSpec& spec, Rng& rng);

/// Draws from the five-way mixture: kind uniform over MarginalKind, zipf and
/// poisson parameters ~ chi2(dof).
std::vector<double> sample_marginal(Rng& rng, int K, double chi2_dof = 1.0);

enum class ScenarioId {
  direct,
  indirect,
  conf_direct,
  conf_indirect,
  reverse_direct,
  reverse_indirect,
  conf_reverse_direct,
  conf_reverse_indirect,
  confounded_only,
  independent,
};

constexpr std::array<ScenarioId, 10> kAllScenarios = {
    ScenarioId::direct,           ScenarioId::indirect,
    ScenarioId::conf_direct,      ScenarioId::conf_indirect,
    ScenarioId::reverse_direct,   ScenarioId::reverse_indirect,
    ScenarioId::conf_reverse_direct, ScenarioId::conf_reverse_indirect,
    ScenarioId::confounded_only,  ScenarioId::independent,
};

/// 0 when the scenario contains a directed path X -> ... -> Y, else 1
/// ("does not cause").
int causal_label(ScenarioId id);
std::string_view to_string(ScenarioId id);
ScenarioId scenario_from_string(std::string_view name);

/// Conditional probability table of one discrete node. Parent configurations
/// are mixed-radix indices with the first parent most significant; the table
/// is laid out as cpt[config * card + value].
struct Node {
  std::string name;
  int card = 2;
  std::vector<int> parents;
  std::vector<double> cpt;
};

/// Factorized scenario: node 0 is X (card K, value k <-> x = k+1), node 1 is
/// Y (card 2), any further nodes are hidden.
struct ScenarioFactors {
  ScenarioId id = ScenarioId::independent;
  int K = kDefaultSupport;
  std::vector<Node> nodes;

  void validate() const;
};

struct ScenarioOptions {
  int hidden_min = 2;
  int hidden_max = 100;
  double chi2_dof = 1.0;
  /// Materialize the individual (x, y) draws; counts are always kept.
  bool keep_draws = true;
};

/// Samples every conditional of the scenario DAG independently.
ScenarioFactors draw_factors(Rng& rng, ScenarioId id, int K, const ScenarioOptions& opts = {});

/// Exact joint p(x, y) of the observed pair with hidden nodes summed out.
/// Layout: [p(1,0), ..., p(K,0), p(1,1), ..., p(K,1)].
std::vector<double> marginal_joint(const ScenarioFactors& factors);

struct Draw {
  int x = 1;  // 1..K
  int y = 0;  // 0/1
  bool operator==(const Draw&) const = default;
};

inline std::size_t joint_index(int x, int y, int K) {
  return static_cast<std::size_t>(y * K + (x - 1));
}

struct ScenarioSample {
  ScenarioId scenario = ScenarioId::independent;
  int K = kDefaultSupport;
  int label = 1;
  std::vector<double> joint;
  std::vector<std::uint32_t> counts;  // 2K cells, same layout as joint
  std::vector<Draw> draws;            // empty unless keep_draws
};

ScenarioSample sample_scenario(Rng& rng, ScenarioId id, int K, int n_draws,
                               const ScenarioOptions& opts = {});

/// n_per_case samples of every scenario, interleaved scenario by scenario.
std::vector<ScenarioSample> generate_detector_corpus(Rng& rng, int n_per_case, int K, int n_draws,
                                                     const ScenarioOptions& opts = {});

// ------------------------------------------------------------ benchmark

enum class VariableRole { causal, confounded, noise };
std::string_view to_string(VariableRole r);

struct BenchmarkSpec {
  int m = 200;
  int n = 10000;
  double frac_causal = 0.2;
  /// Share of variables driven by latent confounders; the rest is noise.
  double frac_confounded = 0.3;
  int confounder_count = 10;
  double effect_scale = 1.0;
  /// Standard deviation of each confounder's logit effect, in units of effect_scale.
  double confounder_strength = 2.0;
  /// Confounder cardinality is uniform on [2, confounder_levels_max].
  int confounder_levels_max = 6;
  /// Target P(y = 1); the intercept is solved so the mean probability matches.
  double prevalence = 0.5;
  int K = kDefaultSupport;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Benchmark {
  Eigen::MatrixXi X;                // n x m bin indices in [0, K-1]
  std::vector<int> y;               // n
  std::vector<VariableRole> roles;  // m
  std::vector<std::string> names;   // m
  double intercept = 0.0;

  /// 1 = does not cause y, matching the scenario label convention.
  std::vector<int> noncausal_labels() const;
  /// Ground-truth causality score per variable (causal 1, otherwise 0).
  std::vector<double> causal_scores() const;
};

/// Causal variables draw their marginal from sample_marginal and enter the
/// logistic link of y with standardized coefficients of magnitude
/// effect_scale. Confounded variables are emitted by latent categorical
/// confounders that also enter y. Noise variables are independent of y.
Benchmark generate_semisynthetic_benchmark(const BenchmarkSpec& spec);

// ------------------------------------------------------------ serialization

/// Writes sample_XXXXX.csv (x,y columns) per sample plus manifest.json.
/// Samples without materialized draws are expanded from their counts.
void write_corpus(const std::string& dir, const std::vector<ScenarioSample>& corpus,
                  std::uint64_t seed);
std::vector<ScenarioSample> read_corpus(const std::string& dir);

/// Single CSV with m count columns and a `label` column, plus a ground-truth
/// JSON listing each variable's role.
void write_benchmark(const std::string& csv_path, const std::string& truth_path,
                     const Benchmark& bench, const BenchmarkSpec& spec);

}  // namespace causalreg::scenario
