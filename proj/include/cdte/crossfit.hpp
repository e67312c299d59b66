#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "cdte/dataset.hpp"
#include "cdte/diagnostics.hpp"
#include "cdte/inference.hpp"
#include "cdte/learners.hpp"
#include "cdte/pseudo.hpp"

namespace cdte {

enum class PropensityKind { Known, Logistic, ForestClassifier };
enum class MeanKind { Forest, Ols };
enum class QuantileKind { Qrf, Linear, Kernel };
enum class SuperquantileKind { Sqrf, TwoStageOls, Kernel };
enum class EvarWeightKind { Forest, Kernel };
enum class DensityKind { KernelForest, None };

// Which learner estimates each nuisance. Defaults are the flexible variants;
// TwoStageOls is the deliberately misspecified superquantile learner and the
// Kernel choices are the slow ones.
struct NuisanceConfig {
  PropensityKind propensity = PropensityKind::Logistic;
  double known_propensity = 0.5;
  MeanKind mean = MeanKind::Forest;
  QuantileKind quantile = QuantileKind::Qrf;
  SuperquantileKind superquantile = SuperquantileKind::Sqrf;
  EvarWeightKind evar = EvarWeightKind::Forest;
  DensityKind density = DensityKind::KernelForest;
  double density_bandwidth = 1.0;
  bool shuffle_halves = false;
  int n_trees = 100;

  // need_alpha: the quantile statistic needs the density nuisance only when
  // debiasing (the plug-in path does not).
  void validate(const StatisticSpec& spec, bool need_alpha = true) const;
};

enum class FinalStage { Ols, Forest };
enum class PluginStage { Raw, Ols, Forest };

struct FittedCDTE {
  std::shared_ptr<Regressor> final_model;
  StatisticSpec spec;
  int K = 0;
  PseudoOutcomes psi;  // cross-fitted regression targets, row-aligned
  std::optional<ProjectionResult> projection;  // set for OLS final stages
  diagnostics::RunArtifacts artifacts;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return final_model->predict(x);
  }
};

// Fits e, per-arm nu and alpha on the training split per the config.
// For the superquantile, alpha derives from the fitted quantile (no extra
// model); for the KL risk it is the constant (-1, 0, 0).
NuisanceSet fit_nuisances(const Dataset& train, const StatisticSpec& spec,
                          const NuisanceConfig& config, std::uint64_t seed,
                          bool with_alpha = true,
                          diagnostics::FoldSummary* summary = nullptr);

// Test hook: replaces fit_nuisances (e.g. with analytic truth) so oracle
// behavior can be exercised through the full cross-fitting pipeline.
using NuisanceFactory =
    std::function<NuisanceSet(const Dataset& train, int fold, std::uint64_t seed)>;

// The CDTE learner: per-fold nuisances on the fold complement, pseudo-
// outcomes on the fold, then one final-stage regression of all psi on X
// (or on phi(X) for OLS). Deterministic given (data, seed, config); folds
// get seeds derived from (seed, k).
FittedCDTE cdte_learn(const Dataset& data, int K, const StatisticSpec& spec,
                      const NuisanceConfig& config, FinalStage final_stage,
                      std::uint64_t seed, const FeatureMap* feature_map = nullptr,
                      const NuisanceFactory* nuisance_override = nullptr);

// Several final stages on one shared cross-fit (the expensive part).
std::vector<FittedCDTE> cdte_learn_multi(const Dataset& data, int K,
                                         const StatisticSpec& spec,
                                         const NuisanceConfig& config,
                                         const std::vector<FinalStage>& stages,
                                         std::uint64_t seed,
                                         const FeatureMap* feature_map = nullptr,
                                         const NuisanceFactory* nuisance_override =
                                             nullptr);

// The plug-in baseline: cross-fitted kappa_1 - kappa_0 differences, with
// optional OLS/forest smoothing on top (the Raw variant predicts the K-fold
// average of per-fold differences at new points).
FittedCDTE plugin_learn(const Dataset& data, int K, const StatisticSpec& spec,
                        const NuisanceConfig& config, PluginStage stage,
                        std::uint64_t seed, const FeatureMap* feature_map = nullptr);

std::vector<FittedCDTE> plugin_learn_multi(const Dataset& data, int K,
                                           const StatisticSpec& spec,
                                           const NuisanceConfig& config,
                                           const std::vector<PluginStage>& stages,
                                           std::uint64_t seed,
                                           const FeatureMap* feature_map = nullptr);

}  // namespace cdte
