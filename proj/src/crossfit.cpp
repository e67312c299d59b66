#include "cdte/crossfit.hpp"

#include <cmath>

#include "cdte/errors.hpp"
#include "cdte/rng.hpp"

namespace cdte {

void NuisanceConfig::validate(const StatisticSpec& spec, bool need_alpha) const {
  spec.validate();
  if (propensity == PropensityKind::Known &&
      !(known_propensity > 0.0 && known_propensity < 1.0))
    throw ConfigError("nuisance config: known propensity must be in (0,1)");
  if (!(density_bandwidth > 0.0))
    throw ConfigError("nuisance config: density_bandwidth must be > 0");
  if (n_trees < 1) throw ConfigError("nuisance config: n_trees must be >= 1");
  if (spec.kind == StatKind::Quantile && need_alpha && density == DensityKind::None)
    throw ConfigError("nuisance config: the quantile statistic needs a density "
                      "learner (density = none)");
}

namespace {

ForestParams forest_defaults(int n_fit, std::uint64_t seed, int n_trees) {
  ForestParams p;
  p.n_trees = n_trees;
  p.min_leaf = std::max(1, n_fit / 20);
  p.seed = seed;
  return p;
}

RegressionLearner forest_learner(int n_trees) {
  return [n_trees](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   std::uint64_t seed) {
    return std::static_pointer_cast<Regressor>(std::make_shared<Forest>(
        fit_forest(X, y, forest_defaults(static_cast<int>(X.rows()), seed, n_trees))));
  };
}

RegressionLearner ols_learner() {
  return [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) {
    return std::static_pointer_cast<Regressor>(
        std::make_shared<OlsRegressor>(fit_ols(X, y)));
  };
}

QuantileLearner make_quantile_learner(QuantileKind kind, int n_trees) {
  switch (kind) {
    case QuantileKind::Qrf:
      return qrf_quantile_learner(n_trees);
    case QuantileKind::Linear:
      return linear_quantile_learner();
    case QuantileKind::Kernel:
      return kernel_quantile_learner();
  }
  throw ConfigError("unknown quantile learner");
}

double pinball(double y, double q, double tau) {
  const double r = y - q;
  return r >= 0.0 ? tau * r : (tau - 1.0) * r;
}

// Locality weights can degenerate to a handful of effective neighbors, and
// then the fitted dual scale beta collapses toward 0 while the exponential
// dual e^{(y-lambda)/beta} of a tail outcome overflows the pseudo-outcome.
// Flooring beta at a fraction of the local risk level bounds that moment
// (the boundedness assumption needs beta away from 0 anyway, like the
// density floor does for the quantile statistic); lambda is recomputed from
// the dual identity so the triple stays internally consistent.
NuisanceValues guarded_evar_values(const EvarResult& r, double delta) {
  double beta = r.beta;
  const double floor = 0.05 * std::fabs(r.R);
  if (beta < floor) {
    beta = floor;
    diagnostics::counters().evar_beta_floors.fetch_add(1, std::memory_order_relaxed);
  }
  Eigen::VectorXd h(2);
  h << beta, r.R - beta * (delta + 1.0);
  return NuisanceValues{r.R, h};
}

// In-sample nuisance quality, subsampled for cost.
void fill_summary(diagnostics::FoldSummary* summary, const Dataset& train,
                  const NuisanceSet& nuis, const StatisticSpec& spec) {
  if (summary == nullptr) return;
  summary->train_rows = train.n();
  const int m = std::min(train.n(), 200);
  double logloss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double e = nuis.propensity(train.x_row(i));
    logloss -= train.a_at(i) == 1 ? std::log(e) : std::log(1.0 - e);
  }
  summary->propensity_logloss = logloss / m;
  if (spec.kind == StatKind::Quantile || spec.kind == StatKind::SuperQuantile) {
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
      const NuisanceValues nu = nuis.nu[train.a_at(i)](train.x_row(i));
      const double q = spec.kind == StatKind::Quantile ? nu.kappa : nu.h(0);
      loss += pinball(train.y_at(i), q, spec.tau);
    }
    summary->pinball_loss = loss / m;
  }
}

}  // namespace

NuisanceSet fit_nuisances(const Dataset& train, const StatisticSpec& spec,
                          const NuisanceConfig& config, std::uint64_t seed,
                          bool with_alpha, diagnostics::FoldSummary* summary) {
  config.validate(spec, with_alpha);
  for (int arm : {0, 1})
    if (train.arm_count(arm) < 2)
      throw DegenerateSplitError("fit_nuisances: training data has fewer than 2 "
                                 "rows with a=" + std::to_string(arm));

  NuisanceSet out;

  switch (config.propensity) {
    case PropensityKind::Known: {
      auto e = std::make_shared<KnownPropensity>(config.known_propensity);
      out.propensity = [e](const Eigen::Ref<const Eigen::VectorXd>& x) {
        return e->predict_proba(x);
      };
      break;
    }
    case PropensityKind::Logistic: {
      auto e = std::make_shared<LogisticClassifier>(fit_logistic(train.x(), train.a()));
      out.propensity = [e](const Eigen::Ref<const Eigen::VectorXd>& x) {
        return e->predict_proba(x);
      };
      break;
    }
    case PropensityKind::ForestClassifier: {
      auto e = std::make_shared<ForestClassifier>(fit_forest_classifier(
          train.x(), train.a(),
          forest_defaults(train.n(), mix_seed(seed, 7), config.n_trees)));
      out.propensity = [e](const Eigen::Ref<const Eigen::VectorXd>& x) {
        return e->predict_proba(x);
      };
      break;
    }
  }

  for (int arm : {0, 1}) {
    const std::uint64_t arm_seed = mix_seed(seed, 10 + arm);
    const auto arm_rows = train.arm_indices(arm);
    const Dataset sub = train.subset(arm_rows);

    switch (spec.kind) {
      case StatKind::Mean: {
        std::shared_ptr<Regressor> model =
            config.mean == MeanKind::Forest
                ? forest_learner(config.n_trees)(sub.x(), sub.y(), arm_seed)
                : ols_learner()(sub.x(), sub.y(), arm_seed);
        out.nu[arm] = [model](const Eigen::Ref<const Eigen::VectorXd>& x) {
          return NuisanceValues{model->predict(x), Eigen::VectorXd()};
        };
        break;
      }
      case StatKind::Quantile: {
        // The quantile is fit on the first half of the arm's rows; the
        // second half carries the kernel density targets, so q and the
        // density estimate stay independent of each other's data.
        auto [fit_rows, target_rows] =
            arm_half_split(train, arm, arm_seed, config.shuffle_halves);
        if (fit_rows.size() < 2 || target_rows.size() < 2)
          throw DegenerateSplitError("fit_nuisances: arm " + std::to_string(arm) +
                                     " too small for the quantile half split");
        const Dataset fit_half = train.subset(fit_rows);
        std::shared_ptr<QuantileModel> q = make_quantile_learner(
            config.quantile, config.n_trees)(fit_half.x(), fit_half.y(), spec.tau,
                                             mix_seed(arm_seed, 1));
        out.nu[arm] = [q](const Eigen::Ref<const Eigen::VectorXd>& x) {
          return NuisanceValues{q->quantile(x), Eigen::VectorXd()};
        };
        if (with_alpha) {
          std::shared_ptr<Regressor> dens = density_at_quantile(
              train, arm, *q, config.density_bandwidth,
              forest_learner(config.n_trees), arm_seed, config.shuffle_halves);
          const StatisticSpec spec_copy = spec;
          out.alpha[arm] = [dens, spec_copy](
                               const Eigen::Ref<const Eigen::VectorXd>& x,
                               const NuisanceValues& nu) {
            return alpha_vector(spec_copy, nu, dens->predict(x));
          };
        }
        break;
      }
      case StatKind::SuperQuantile: {
        switch (config.superquantile) {
          case SuperquantileKind::Sqrf: {
            auto forest = std::make_shared<Forest>(fit_forest(
                sub.x(), sub.y(),
                forest_defaults(sub.n(), arm_seed, config.n_trees)));
            const double tau = spec.tau;
            out.nu[arm] = [forest, tau](const Eigen::Ref<const Eigen::VectorXd>& x) {
              const auto lw = forest_weights(*forest, x);
              const auto& y = forest->train_y();
              const auto sq = weighted_superquantile(
                  {y.data(), static_cast<std::size_t>(y.size())},
                  {lw.w.data(), static_cast<std::size_t>(lw.w.size())}, tau);
              return NuisanceValues{sq.mu, Eigen::VectorXd::Constant(1, sq.q)};
            };
            break;
          }
          case SuperquantileKind::TwoStageOls: {
            TwoStageFit fit = two_stage_superquantile(
                train, arm, spec.tau, qrf_quantile_learner(config.n_trees),
                ols_learner(), arm_seed, config.shuffle_halves);
            auto mu = fit.mu;
            auto q = fit.q;
            out.nu[arm] = [mu, q](const Eigen::Ref<const Eigen::VectorXd>& x) {
              return NuisanceValues{mu->predict(x),
                                    Eigen::VectorXd::Constant(1, q->quantile(x))};
            };
            break;
          }
          case SuperquantileKind::Kernel: {
            auto X_arm = std::make_shared<Eigen::MatrixXd>(sub.x());
            auto y_arm = std::make_shared<Eigen::VectorXd>(sub.y());
            const double tau = spec.tau;
            out.nu[arm] = [X_arm, y_arm,
                           tau](const Eigen::Ref<const Eigen::VectorXd>& x) {
              const auto lw = kernel_weights(*X_arm, x);
              const auto sq = weighted_superquantile(
                  {y_arm->data(), static_cast<std::size_t>(y_arm->size())},
                  {lw.w.data(), static_cast<std::size_t>(lw.w.size())}, tau);
              return NuisanceValues{sq.mu, Eigen::VectorXd::Constant(1, sq.q)};
            };
            break;
          }
        }
        break;
      }
      case StatKind::KLRisk: {
        const double delta = spec.delta;
        if (config.evar == EvarWeightKind::Forest) {
          auto forest = std::make_shared<Forest>(fit_forest(
              sub.x(), sub.y(), forest_defaults(sub.n(), arm_seed, config.n_trees)));
          out.nu[arm] = [forest, delta](const Eigen::Ref<const Eigen::VectorXd>& x) {
            return guarded_evar_values(forest_evar(*forest, delta, x), delta);
          };
        } else {
          auto X_arm = std::make_shared<Eigen::MatrixXd>(sub.x());
          auto y_arm = std::make_shared<Eigen::VectorXd>(sub.y());
          out.nu[arm] = [X_arm, y_arm,
                         delta](const Eigen::Ref<const Eigen::VectorXd>& x) {
            const auto lw = kernel_weights(*X_arm, x);
            const EvarResult r = weighted_evar(
                {y_arm->data(), static_cast<std::size_t>(y_arm->size())},
                {lw.w.data(), static_cast<std::size_t>(lw.w.size())}, delta);
            return guarded_evar_values(r, delta);
          };
        }
        break;
      }
    }

    if (!out.alpha[arm]) {
      const StatisticSpec spec_copy = spec;
      out.alpha[arm] = [spec_copy](const Eigen::Ref<const Eigen::VectorXd>&,
                                   const NuisanceValues& nu) {
        return alpha_vector(spec_copy, nu);
      };
    }
  }

  fill_summary(summary, train, out, spec);
  return out;
}

namespace {

class ProjectionModel : public Regressor {
 public:
  ProjectionModel(FeatureMap fm, Eigen::VectorXd gamma, int n, int d)
      : fm_(std::move(fm)), gamma_(std::move(gamma)), n_(n), d_(d) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return gamma_.dot(fm_.phi(x));
  }
  int dim() const override { return d_; }
  int train_size() const override { return n_; }

 private:
  FeatureMap fm_;
  Eigen::VectorXd gamma_;
  int n_;
  int d_;
};

// Raw plug-in prediction at a new point: K-fold average of the per-fold
// kappa differences.
class PluginRawModel : public Regressor {
 public:
  PluginRawModel(std::vector<NuisanceSet> folds, int n, int d)
      : folds_(std::move(folds)), n_(n), d_(d) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    double s = 0.0;
    for (const auto& nuis : folds_)
      s += nuis.nu[1](x).kappa - nuis.nu[0](x).kappa;
    return s / folds_.size();
  }
  int dim() const override { return d_; }
  int train_size() const override { return n_; }

 private:
  std::vector<NuisanceSet> folds_;
  int n_;
  int d_;
};

template <typename Fn>
auto with_fold_context(int k, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("fold " + std::to_string(k) + ": " + e.what());
  } catch (const DegenerateSplitError& e) {
    throw DegenerateSplitError("fold " + std::to_string(k) + ": " + e.what());
  } catch (const SingularDesignError& e) {
    throw SingularDesignError("fold " + std::to_string(k) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("fold " + std::to_string(k) + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("fold " + std::to_string(k) + ": " + e.what());
  }
}

struct CrossFitted {
  PseudoOutcomes psi;
  std::vector<NuisanceSet> fold_nuisances;
  diagnostics::RunArtifacts artifacts;
};

// Shared cross-fitting loop; row_value maps (row, fold nuisances) to the
// regression target (debiased pseudo-outcome or plug-in difference).
template <typename RowValue>
CrossFitted cross_fit(const Dataset& data, int K, const StatisticSpec& spec,
                      const NuisanceConfig& config, std::uint64_t seed,
                      bool with_alpha, const NuisanceFactory* override_factory,
                      RowValue&& row_value) {
  if (data.n() < 2 * K)
    throw ConfigError("cross-fitting needs n >= 2K, got n=" +
                      std::to_string(data.n()) + ", K=" + std::to_string(K));
  const FoldAssignment folds = assign_folds(data.n(), K);

  CrossFitted out;
  out.psi.values.resize(data.n());
  out.psi.fold_of.assign(data.n(), 0);
  out.fold_nuisances.reserve(K);

  for (int k = 1; k <= K; ++k) {
    const std::uint64_t fold_seed = mix_seed(seed, 100 + k);
    const Split s = with_fold_context(k, [&] { return split(data, folds, k); });
    diagnostics::FoldSummary summary;
    summary.fold = k;
    NuisanceSet nuis = with_fold_context(k, [&] {
      return override_factory
                 ? (*override_factory)(s.train, k, fold_seed)
                 : fit_nuisances(s.train, spec, config, fold_seed, with_alpha,
                                 &summary);
    });
    summary.train_rows = s.train.n();
    const auto& eval_idx = s.eval_idx;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      const int i = eval_idx[j];
      out.psi.values(i) = row_value(data.row(i), nuis);
      out.psi.fold_of[i] = k;
    }
    out.artifacts.folds.push_back(summary);
    out.fold_nuisances.push_back(std::move(nuis));
  }
  return out;
}

FittedCDTE finalize_ols(const Dataset& data, const CrossFitted& cf,
                        const StatisticSpec& spec, int K,
                        const FeatureMap* feature_map) {
  const FeatureMap fm = feature_map ? *feature_map : FeatureMap{};
  const Eigen::MatrixXd F = fm.phi_all(data.x());
  FittedCDTE fit;
  fit.projection = ols_project(cf.psi.values, F);
  fit.final_model = std::make_shared<ProjectionModel>(fm, fit.projection->gamma,
                                                      data.n(), data.dim());
  fit.spec = spec;
  fit.K = K;
  fit.psi = cf.psi;
  fit.artifacts = cf.artifacts;
  return fit;
}

FittedCDTE finalize_forest(const Dataset& data, const CrossFitted& cf,
                           const StatisticSpec& spec, int K, std::uint64_t seed,
                           int n_trees) {
  FittedCDTE fit;
  fit.final_model = std::make_shared<Forest>(fit_forest(
      data.x(), cf.psi.values, forest_defaults(data.n(), mix_seed(seed, 1), n_trees)));
  fit.spec = spec;
  fit.K = K;
  fit.psi = cf.psi;
  fit.artifacts = cf.artifacts;
  return fit;
}

}  // namespace

std::vector<FittedCDTE> cdte_learn_multi(const Dataset& data, int K,
                                         const StatisticSpec& spec,
                                         const NuisanceConfig& config,
                                         const std::vector<FinalStage>& stages,
                                         std::uint64_t seed,
                                         const FeatureMap* feature_map,
                                         const NuisanceFactory* nuisance_override) {
  config.validate(spec, /*need_alpha=*/true);
  const CrossFitted cf =
      cross_fit(data, K, spec, config, seed, /*with_alpha=*/true, nuisance_override,
                [&spec](const Observation& z, const NuisanceSet& nuis) {
                  return pseudo_outcome(z, nuis, spec);
                });
  std::vector<FittedCDTE> out;
  out.reserve(stages.size());
  for (const FinalStage stage : stages)
    out.push_back(stage == FinalStage::Ols
                      ? finalize_ols(data, cf, spec, K, feature_map)
                      : finalize_forest(data, cf, spec, K, seed, config.n_trees));
  return out;
}

FittedCDTE cdte_learn(const Dataset& data, int K, const StatisticSpec& spec,
                      const NuisanceConfig& config, FinalStage final_stage,
                      std::uint64_t seed, const FeatureMap* feature_map,
                      const NuisanceFactory* nuisance_override) {
  return std::move(cdte_learn_multi(data, K, spec, config, {final_stage}, seed,
                                    feature_map, nuisance_override)
                       .front());
}

std::vector<FittedCDTE> plugin_learn_multi(const Dataset& data, int K,
                                           const StatisticSpec& spec,
                                           const NuisanceConfig& config,
                                           const std::vector<PluginStage>& stages,
                                           std::uint64_t seed,
                                           const FeatureMap* feature_map) {
  config.validate(spec, /*need_alpha=*/false);
  CrossFitted cf = cross_fit(data, K, spec, config, seed, /*with_alpha=*/false,
                             nullptr,
                             [](const Observation& z, const NuisanceSet& nuis) {
                               return nuis.nu[1](z.x).kappa - nuis.nu[0](z.x).kappa;
                             });
  std::vector<FittedCDTE> out;
  out.reserve(stages.size());
  for (const PluginStage stage : stages) {
    switch (stage) {
      case PluginStage::Raw: {
        FittedCDTE fit;
        fit.final_model =
            std::make_shared<PluginRawModel>(cf.fold_nuisances, data.n(), data.dim());
        fit.spec = spec;
        fit.K = K;
        fit.psi = cf.psi;
        fit.artifacts = cf.artifacts;
        out.push_back(std::move(fit));
        break;
      }
      case PluginStage::Ols:
        out.push_back(finalize_ols(data, cf, spec, K, feature_map));
        break;
      case PluginStage::Forest:
        out.push_back(finalize_forest(data, cf, spec, K, seed, config.n_trees));
        break;
    }
  }
  return out;
}

FittedCDTE plugin_learn(const Dataset& data, int K, const StatisticSpec& spec,
                        const NuisanceConfig& config, PluginStage stage,
                        std::uint64_t seed, const FeatureMap* feature_map) {
  return std::move(
      plugin_learn_multi(data, K, spec, config, {stage}, seed, feature_map).front());
}

}  // namespace cdte
