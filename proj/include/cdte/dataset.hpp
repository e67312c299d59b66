#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "cdte/rng.hpp"

namespace cdte {

struct Observation {
  Eigen::VectorXd x;
  int a = 0;  // treatment indicator in {0,1}
  double y = 0.0;
};

// Immutable after construction; safe to share across threads.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y);

  int n() const { return static_cast<int>(x_.rows()); }
  int dim() const { return static_cast<int>(x_.cols()); }

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& a() const { return a_; }

  Eigen::VectorXd x_row(int i) const { return x_.row(i).transpose(); }
  double y_at(int i) const { return y_(i); }
  int a_at(int i) const { return a_[i]; }

  Observation row(int i) const { return Observation{x_row(i), a_[i], y_(i)}; }

  std::vector<int> arm_indices(int arm) const;
  int arm_count(int arm) const;

  Dataset subset(const std::vector<int>& idx) const;

  // Returns a copy with rows permuted by a seeded shuffle (Fisher-Yates).
  Dataset shuffled(std::uint64_t seed) const;

 private:
  Eigen::MatrixXd x_;
  std::vector<int> a_;
  Eigen::VectorXd y_;
};

// Deterministic modular fold labels: 0-based row i belongs to fold
// (i mod K) + 1. No randomness by design; shuffle rows first if wanted.
struct FoldAssignment {
  int n = 0;
  int K = 0;
  int fold_of(int i) const { return i % K + 1; }
  std::vector<int> fold_indices(int k) const;
};

FoldAssignment assign_folds(int n, int K);

struct Split {
  Dataset train;
  Dataset eval;
  std::vector<int> train_idx;  // row indices into the original dataset
  std::vector<int> eval_idx;
};

// eval = fold k, train = everything else. Throws DegenerateSplitError if
// either side has fewer than 2 rows in some treatment arm.
Split split(const Dataset& data, const FoldAssignment& folds, int k);

// CSV ingestion: RFC-4180-style, header required, '.' decimal separator.
// Missing values are rejected, not imputed.
Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col,
                 const std::vector<std::string>& feature_cols);

// Full float precision (17 significant digits) so load(write(d)) == d.
void write_csv(const std::string& path, const Dataset& data,
               const std::string& outcome_col, const std::string& treatment_col,
               const std::vector<std::string>& feature_cols);

}  // namespace cdte
