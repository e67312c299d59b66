#include "cdte/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdte/errors.hpp"

namespace cdte::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Value parse_scalar(const std::string& tok, int line);

// Splits a [a, b, c] body on top-level commas.
Value parse_array(const std::string& body, int line) {
  std::vector<Value> items;
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      const std::string t = trim(cur);
      if (!t.empty()) items.push_back(parse_scalar(t, line));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string t = trim(cur);
  if (!t.empty()) items.push_back(parse_scalar(t, line));
  return Value{std::move(items), line};
}

Value parse_scalar(const std::string& tok, int line) {
  if (tok.size() >= 2 && tok.front() == '[' && tok.back() == ']')
    return parse_array(tok.substr(1, tok.size() - 2), line);
  if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
    return Value{tok.substr(1, tok.size() - 2), line};
  if (tok == "true") return Value{true, line};
  if (tok == "false") return Value{false, line};
  std::size_t pos = 0;
  double num = 0.0;
  try {
    num = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("config line " + std::to_string(line) + ": cannot parse value '" +
                     tok + "'");
  }
  if (pos != tok.size())
    throw ParseError("config line " + std::to_string(line) + ": cannot parse value '" +
                     tok + "'");
  return Value{num, line};
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace

namespace {

// Bracket balance outside string literals; arrays may span lines.
int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (char c : s) {
    if (c == '"') in_str = !in_str;
    if (in_str) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

}  // namespace

Table parse_toml(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string joined = strip_comment(raw);
    // continue an unbalanced array onto following lines
    while (joined.find('=') != std::string::npos && bracket_balance(joined) > 0) {
      std::string next;
      if (!std::getline(in, next))
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unterminated array");
      ++line_no;
      joined += ' ' + strip_comment(next);
    }
    const std::string line = trim(joined);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) +
                         ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ParseError("config line " + std::to_string(line_no) + ": empty section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full))
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" +
                       full + "'");
    table[full] = parse_scalar(val, line_no);
  }
  return table;
}

Table parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

const Value* Reader::fetch(const std::string& key) {
  auto it = table_.find(key);
  if (it == table_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string Reader::get_string(const std::string& key, const std::string& fallback) {
  const Value* v = fetch(key);
  if (!v) return fallback;
  if (const auto* s = std::get_if<std::string>(&v->v)) return *s;
  throw ConfigError("config: '" + key + "' must be a string");
}

double Reader::get_number(const std::string& key, double fallback) {
  const Value* v = fetch(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(&v->v)) return *d;
  throw ConfigError("config: '" + key + "' must be a number");
}

int Reader::get_int(const std::string& key, int fallback) {
  const double d = get_number(key, fallback);
  if (d != std::floor(d))
    throw ConfigError("config: '" + key + "' must be an integer");
  return static_cast<int>(d);
}

std::uint64_t Reader::get_u64(const std::string& key, std::uint64_t fallback) {
  const Value* v = fetch(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(&v->v)) {
    if (*d < 0 || *d != std::floor(*d))
      throw ConfigError("config: '" + key + "' must be a nonnegative integer");
    return static_cast<std::uint64_t>(*d);
  }
  throw ConfigError("config: '" + key + "' must be a nonnegative integer");
}

bool Reader::get_bool(const std::string& key, bool fallback) {
  const Value* v = fetch(key);
  if (!v) return fallback;
  if (const auto* b = std::get_if<bool>(&v->v)) return *b;
  throw ConfigError("config: '" + key + "' must be true or false");
}

std::vector<double> Reader::get_numbers(const std::string& key) {
  const Value* v = fetch(key);
  if (!v) return {};
  if (const auto* arr = std::get_if<std::vector<Value>>(&v->v)) {
    std::vector<double> out;
    for (const auto& item : *arr) {
      if (const auto* d = std::get_if<double>(&item.v))
        out.push_back(*d);
      else
        throw ConfigError("config: '" + key + "' must be an array of numbers");
    }
    return out;
  }
  throw ConfigError("config: '" + key + "' must be an array of numbers");
}

std::vector<std::string> Reader::get_strings(const std::string& key) {
  const Value* v = fetch(key);
  if (!v) return {};
  if (const auto* arr = std::get_if<std::vector<Value>>(&v->v)) {
    std::vector<std::string> out;
    for (const auto& item : *arr) {
      if (const auto* s = std::get_if<std::string>(&item.v))
        out.push_back(*s);
      else
        throw ConfigError("config: '" + key + "' must be an array of strings");
    }
    return out;
  }
  throw ConfigError("config: '" + key + "' must be an array of strings");
}

void Reader::finish() const {
  for (const auto& [key, value] : table_)
    if (!used_.count(key))
      throw ConfigError("config: unknown key '" + key + "' (line " +
                        std::to_string(value.line) + ")");
}

StatisticSpec parse_statistic(const std::string& kind, double tau, double delta) {
  if (kind == "mean") return StatisticSpec::mean();
  if (kind == "quantile") return StatisticSpec::quantile(tau);
  if (kind == "superquantile") return StatisticSpec::superquantile(tau);
  if (kind == "klrisk") return StatisticSpec::kl_risk(delta);
  throw ConfigError("config: statistic kind must be one of mean|quantile|"
                    "superquantile|klrisk, got '" + kind + "'");
}

NuisanceConfig parse_nuisance(Reader& reader) {
  NuisanceConfig nc;
  const std::string prop = reader.get_string("nuisance.propensity", "logistic");
  if (prop == "logistic") {
    nc.propensity = PropensityKind::Logistic;
  } else if (prop == "forest") {
    nc.propensity = PropensityKind::ForestClassifier;
  } else if (prop == "known") {
    nc.propensity = PropensityKind::Known;
  } else {
    throw ConfigError("config: nuisance.propensity must be logistic|forest|known");
  }
  nc.known_propensity = reader.get_number("nuisance.known_propensity", 0.5);

  const std::string mean = reader.get_string("nuisance.mean", "forest");
  if (mean == "forest")
    nc.mean = MeanKind::Forest;
  else if (mean == "ols")
    nc.mean = MeanKind::Ols;
  else
    throw ConfigError("config: nuisance.mean must be forest|ols");

  const std::string qk = reader.get_string("nuisance.quantile", "qrf");
  if (qk == "qrf")
    nc.quantile = QuantileKind::Qrf;
  else if (qk == "linear-quantile")
    nc.quantile = QuantileKind::Linear;
  else if (qk == "kernel")
    nc.quantile = QuantileKind::Kernel;
  else
    throw ConfigError("config: nuisance.quantile must be qrf|linear-quantile|kernel");

  const std::string sq = reader.get_string("nuisance.superquantile", "sqrf");
  if (sq == "sqrf")
    nc.superquantile = SuperquantileKind::Sqrf;
  else if (sq == "two-stage-ols")
    nc.superquantile = SuperquantileKind::TwoStageOls;
  else if (sq == "kernel")
    nc.superquantile = SuperquantileKind::Kernel;
  else
    throw ConfigError(
        "config: nuisance.superquantile must be sqrf|two-stage-ols|kernel");

  const std::string ev = reader.get_string("nuisance.evar", "forest-weights");
  if (ev == "forest-weights")
    nc.evar = EvarWeightKind::Forest;
  else if (ev == "kernel-weights")
    nc.evar = EvarWeightKind::Kernel;
  else
    throw ConfigError("config: nuisance.evar must be forest-weights|kernel-weights");

  const std::string dk = reader.get_string("nuisance.density", "kernel-forest");
  if (dk == "kernel-forest")
    nc.density = DensityKind::KernelForest;
  else if (dk == "none")
    nc.density = DensityKind::None;
  else
    throw ConfigError("config: nuisance.density must be kernel-forest|none");

  nc.density_bandwidth = reader.get_number("nuisance.density_bandwidth", 1.0);
  nc.shuffle_halves = reader.get_bool("nuisance.shuffle_halves", false);
  nc.n_trees = reader.get_int("nuisance.n_trees", 100);
  return nc;
}

std::string CheckSpec::describe() const {
  std::ostringstream ss;
  switch (kind) {
    case Kind::MseLess:
      ss << "mse(" << left << ") < mse(" << right << ") @ n=" << n;
      break;
    case Kind::CoverageMin:
      ss << "coverage(" << left << ") >= " << threshold << " @ n=" << n;
      break;
    case Kind::CoverageMax:
      ss << "coverage(" << left << ") <= " << threshold << " @ n=" << n;
      break;
  }
  return ss.str();
}

namespace {

int parse_at_n(std::string& body, const std::string& raw) {
  const auto at = body.find('@');
  if (at == std::string::npos)
    throw ConfigError("config: check '" + raw + "' is missing '@n'");
  const int n = std::stoi(body.substr(at + 1));
  body = body.substr(0, at);
  return n;
}

CheckSpec parse_mse_check(const std::string& raw) {
  std::string body = raw;
  CheckSpec c;
  c.kind = CheckSpec::Kind::MseLess;
  c.n = parse_at_n(body, raw);
  const auto lt = body.find('<');
  if (lt == std::string::npos)
    throw ConfigError("config: mse check '" + raw + "' must look like 'a<b@n'");
  c.left = body.substr(0, lt);
  c.right = body.substr(lt + 1);
  return c;
}

CheckSpec parse_cov_check(const std::string& raw, bool is_min) {
  std::string body = raw;
  CheckSpec c;
  c.kind = is_min ? CheckSpec::Kind::CoverageMin : CheckSpec::Kind::CoverageMax;
  c.n = parse_at_n(body, raw);
  const std::string op = is_min ? ">=" : "<=";
  const auto pos = body.find(op);
  if (pos == std::string::npos)
    throw ConfigError("config: coverage check '" + raw + "' must contain '" + op + "'");
  c.left = body.substr(0, pos);
  c.threshold = std::stod(body.substr(pos + 2));
  return c;
}

}  // namespace

std::vector<double> RiskProfileJob::tau_grid() const {
  std::vector<double> taus(tau_points);
  for (int i = 0; i < tau_points; ++i)
    taus[i] = tau_points == 1
                  ? tau_min
                  : tau_min + (tau_max - tau_min) * i / (tau_points - 1);
  return taus;
}

SimulateJob load_simulate_job(const std::string& config_path) {
  Reader reader(parse_toml_file(config_path));

  const bool has_benchmark =
      reader.has("benchmark.reps") || reader.has("benchmark.n_grid") ||
      reader.has("statistic.kind");
  const bool has_profile = reader.has("risk_profile.sigma") ||
                           reader.has("risk_profile.cap") ||
                           reader.has("risk_profile.tau_points") ||
                           reader.has("risk_profile.out_csv");
  if (has_benchmark == has_profile)
    throw ConfigError("config: exactly one of a [benchmark]/[statistic] block or a "
                      "[risk_profile] block is required");

  if (has_profile) {
    RiskProfileJob job;
    job.mu = reader.get_number("risk_profile.mu", job.mu);
    job.sigma = reader.get_number("risk_profile.sigma", job.sigma);
    job.cap = reader.get_number("risk_profile.cap", job.cap);
    job.tau_points = reader.get_int("risk_profile.tau_points", job.tau_points);
    job.tau_min = reader.get_number("risk_profile.tau_min", job.tau_min);
    job.tau_max = reader.get_number("risk_profile.tau_max", job.tau_max);
    job.samples = reader.get_int("risk_profile.samples", job.samples);
    job.seed = reader.get_u64("risk_profile.seed", job.seed);
    job.out_csv = reader.get_string("risk_profile.out_csv", job.out_csv);
    reader.finish();
    if (!(job.sigma > 0.0)) throw ConfigError("config: risk_profile.sigma must be > 0");
    if (job.tau_points < 1) throw ConfigError("config: risk_profile.tau_points >= 1");
    if (!(job.tau_min > 0.0 && job.tau_max < 1.0 && job.tau_min <= job.tau_max))
      throw ConfigError("config: risk_profile tau bounds must satisfy "
                        "0 < tau_min <= tau_max < 1");
    return job;
  }

  BenchmarkJob job;
  const std::string kind = reader.get_string("statistic.kind", "superquantile");
  const double tau = reader.get_number("statistic.tau", 0.75);
  const double delta = reader.get_number("statistic.delta", -std::log1p(-0.75));
  job.bench.spec = parse_statistic(kind, tau, delta);

  job.bench.dgp.d = reader.get_int("dgp.d", 10);
  job.bench.dgp.sigma = reader.get_number("dgp.sigma", 0.2);
  job.bench.dgp.truncate = reader.get_bool("dgp.truncate",
                                           job.bench.spec.kind == StatKind::KLRisk);
  job.bench.dgp.trunc_q = reader.get_number("dgp.trunc_quantile", 0.99);

  if (reader.has("benchmark.n_grid")) {
    job.bench.n_grid.clear();
    for (double n : reader.get_numbers("benchmark.n_grid"))
      job.bench.n_grid.push_back(static_cast<int>(n));
  }
  job.bench.reps = reader.get_int("benchmark.reps", job.bench.reps);
  job.bench.eval_points = reader.get_int("benchmark.eval_points", job.bench.eval_points);
  job.bench.K = reader.get_int("benchmark.folds", job.bench.K);
  job.bench.seed = reader.get_u64("benchmark.seed", job.bench.seed);
  if (reader.has("benchmark.estimators"))
    job.bench.estimators = reader.get_strings("benchmark.estimators");

  job.bench.nuisance = parse_nuisance(reader);

  job.results_csv = reader.get_string("output.results_csv", job.results_csv);
  job.summary_json = reader.get_string("output.summary_json", job.summary_json);

  for (const auto& raw : reader.get_strings("checks.mse_less"))
    job.checks.push_back(parse_mse_check(raw));
  for (const auto& raw : reader.get_strings("checks.coverage_min"))
    job.checks.push_back(parse_cov_check(raw, true));
  for (const auto& raw : reader.get_strings("checks.coverage_max"))
    job.checks.push_back(parse_cov_check(raw, false));

  reader.finish();
  job.bench.spec.validate();
  job.bench.nuisance.validate(job.bench.spec);
  if (job.bench.n_grid.empty())
    throw ConfigError("config: benchmark.n_grid must not be empty");
  return job;
}

}  // namespace cdte::config
