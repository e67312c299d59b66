#include "cdte/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cdte/errors.hpp"

namespace cdte {

Dataset::Dataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y)
    : x_(std::move(x)), a_(std::move(a)), y_(std::move(y)) {
  const auto n = x_.rows();
  if (static_cast<Eigen::Index>(a_.size()) != n || y_.size() != n)
    throw ValidationError("dataset: x, a, y must have the same number of rows");
  if (x_.cols() < 1) throw ValidationError("dataset: covariate dimension must be >= 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a_[i] != 0 && a_[i] != 1)
      throw ValidationError("dataset: treatment must be 0 or 1 at row " +
                            std::to_string(i));
    if (!std::isfinite(y_(i)))
      throw ValidationError("dataset: non-finite outcome at row " + std::to_string(i));
  }
  if (!x_.allFinite()) throw ValidationError("dataset: non-finite covariate entry");
}

std::vector<int> Dataset::arm_indices(int arm) const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (a_[i] == arm) idx.push_back(i);
  return idx;
}

int Dataset::arm_count(int arm) const {
  return static_cast<int>(std::count(a_.begin(), a_.end(), arm));
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  Eigen::MatrixXd xs(idx.size(), dim());
  Eigen::VectorXd ys(idx.size());
  std::vector<int> as(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    xs.row(r) = x_.row(idx[r]);
    ys(r) = y_(idx[r]);
    as[r] = a_[idx[r]];
  }
  return Dataset(std::move(xs), std::move(as), std::move(ys));
}

Dataset Dataset::shuffled(std::uint64_t seed) const {
  std::vector<int> perm(n());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n() - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(perm[i], perm[j]);
  }
  return subset(perm);
}

std::vector<int> FoldAssignment::fold_indices(int k) const {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (fold_of(i) == k) idx.push_back(i);
  return idx;
}

FoldAssignment assign_folds(int n, int K) {
  if (K < 2) throw ConfigError("assign_folds: K must be >= 2, got " + std::to_string(K));
  if (n < K)
    throw ConfigError("assign_folds: need n >= K, got n=" + std::to_string(n) +
                      ", K=" + std::to_string(K));
  return FoldAssignment{n, K};
}

Split split(const Dataset& data, const FoldAssignment& folds, int k) {
  if (k < 1 || k > folds.K)
    throw ConfigError("split: fold index k=" + std::to_string(k) +
                      " outside {1.." + std::to_string(folds.K) + "}");
  Split s{data.subset({}), data.subset({}), {}, {}};
  s.eval_idx = folds.fold_indices(k);
  s.train_idx.reserve(data.n() - s.eval_idx.size());
  for (int i = 0; i < data.n(); ++i)
    if (folds.fold_of(i) != k) s.train_idx.push_back(i);
  s.train = data.subset(s.train_idx);
  s.eval = data.subset(s.eval_idx);
  // Only the training side needs both arms populated (nuisances are fit
  // there); evaluation rows just receive pseudo-outcomes.
  for (int arm : {0, 1})
    if (s.train.arm_count(arm) < 2)
      throw DegenerateSplitError("split: train side of fold " + std::to_string(k) +
                                 " has fewer than 2 rows with a=" + std::to_string(arm));
  return s;
}

namespace {

// Minimal RFC-4180 field splitter; our files are numeric but headers may be
// quoted.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_cell(const std::string& s, int row, const std::string& col) {
  if (s.empty())
    throw ParseError("csv: empty cell in column '" + col + "' at data row " +
                     std::to_string(row));
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("csv: non-numeric value '" + s + "' in column '" + col +
                     "' at data row " + std::to_string(row));
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  if (pos != s.size())
    throw ParseError("csv: non-numeric value '" + s + "' in column '" + col +
                     "' at data row " + std::to_string(row));
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col,
                 const std::vector<std::string>& feature_cols) {
  std::ifstream in(path);
  if (!in) throw SchemaError("csv: cannot open file '" + path + "'");
  std::string header;
  if (!std::getline(in, header) || header.empty())
    throw SchemaError("csv: missing header row in '" + path + "'");
  const auto names = split_csv_line(header);

  auto col_index = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw SchemaError("csv: missing column '" + name + "' in '" + path + "'");
    return static_cast<int>(it - names.begin());
  };

  const int y_col = col_index(outcome_col);
  const int a_col = col_index(treatment_col);
  std::vector<int> x_cols;
  for (const auto& f : feature_cols) x_cols.push_back(col_index(f));
  if (x_cols.empty()) throw SchemaError("csv: no feature columns requested");

  std::vector<double> ys;
  std::vector<int> as;
  std::vector<double> xs;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != names.size())
      throw ParseError("csv: row " + std::to_string(row) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(names.size()));
    const double a_val = parse_cell(fields[a_col], row, treatment_col);
    if (a_val != 0.0 && a_val != 1.0)
      throw ValidationError("csv: treatment value " + fields[a_col] +
                            " is not in {0,1} at data row " + std::to_string(row));
    as.push_back(static_cast<int>(a_val));
    ys.push_back(parse_cell(fields[y_col], row, outcome_col));
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      xs.push_back(parse_cell(fields[x_cols[j]], row, feature_cols[j]));
  }
  if (row == 0) throw SchemaError("csv: no data rows in '" + path + "'");

  const int d = static_cast<int>(x_cols.size());
  Eigen::MatrixXd X(row, d);
  Eigen::VectorXd Y(row);
  for (int i = 0; i < row; ++i) {
    Y(i) = ys[i];
    for (int j = 0; j < d; ++j) X(i, j) = xs[static_cast<std::size_t>(i) * d + j];
  }
  return Dataset(std::move(X), std::move(as), std::move(Y));
}

void write_csv(const std::string& path, const Dataset& data,
               const std::string& outcome_col, const std::string& treatment_col,
               const std::vector<std::string>& feature_cols) {
  if (static_cast<int>(feature_cols.size()) != data.dim())
    throw ConfigError("write_csv: feature name count does not match dimension");
  std::ofstream out(path);
  if (!out) throw SchemaError("csv: cannot open '" + path + "' for writing");
  out << outcome_col << ',' << treatment_col;
  for (const auto& f : feature_cols) out << ',' << f;
  out << '\n';
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data.y_at(i));
    out << buf << ',' << data.a_at(i);
    for (int j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.x()(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace cdte
