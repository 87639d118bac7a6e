#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enkf_lstm/bayes_lstm.hpp"
#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/errors.hpp"

namespace enkf_lstm {

// One flat key=value namespace shared by config files and command-line
// flags (dots become dashes: sigma.eps -> --sigma-eps).
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double window_minutes = 5.0;
  std::string latent_dim = "5";  // positive integer or "auto99"
  Eigen::Index sequence_len = 32;
  Eigen::Index batch_size = 16;
  Eigen::Index n_members = 100;
  Eigen::Index hidden_dim = 32;
  double sigma_w = 1.0;
  double sigma_eps = 1.0;  // initial observation-noise variance
  bool mle = true;
  int mle_max_iters = 5;
  double mle_rel_tol = 0.01;
  Eigen::Index tolerance_windows = 1;
  int workers = 0;  // 0 = all cores
  Eigen::Index max_batches = -1;
  std::string ppca_fit_on = "windows";  // windows | words

  std::string records_path;
  std::string word_vectors_path;
  std::string ground_truth_path;
  std::string windows_path;  // window CSV consumed by train/detect
  std::string model_path;
  std::string reports_path;
  std::string resume_from;

  std::string keywords;          // comma-separated include list; empty = keep all
  std::string collection_start;  // ISO 8601; empty = unbounded
  std::string collection_end;

  Eigen::Index synth_windows = 600;
  Eigen::Index synth_outliers = 20;
  double synth_magnitude = 8.0;
  Eigen::Index synth_hidden = 8;
  double synth_noise_std = 0.3;
  Eigen::Index synth_min_index = 40;
  Eigen::Index synth_min_gap = 5;
  std::string synth_start_time = "2013-04-15T00:00:00Z";
};

namespace detail {

inline std::int64_t config_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::int64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline std::uint64_t config_u64(const std::string& key, const std::string& v) {
  try {
    // stoull silently wraps negatives, so reject a leading sign up front.
    if (v.empty() || v[0] == '-' || v[0] == '+') throw std::invalid_argument(v);
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
}

inline double config_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline bool config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

struct ConfigEntry {
  std::function<void(RunConfig&, const std::string&)> apply;
  std::function<std::string(const RunConfig&)> render;
};

inline const std::map<std::string, ConfigEntry>& config_registry() {
  static const std::map<std::string, ConfigEntry> reg = [] {
    std::map<std::string, ConfigEntry> r;
    auto u64 = [&r](const std::string& k, std::uint64_t RunConfig::* f) {
      r[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = config_u64(k, v); },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto idx = [&r](const std::string& k, Eigen::Index RunConfig::* f) {
      r[k] = {[k, f](RunConfig& c, const std::string& v) {
                c.*f = static_cast<Eigen::Index>(config_i64(k, v));
              },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto i32 = [&r](const std::string& k, int RunConfig::* f) {
      r[k] = {[k, f](RunConfig& c, const std::string& v) {
                c.*f = static_cast<int>(config_i64(k, v));
              },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto f64 = [&r](const std::string& k, double RunConfig::* f) {
      r[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = config_f64(k, v); },
              [f](const RunConfig& c) { return format_double(c.*f); }};
    };
    auto b = [&r](const std::string& k, bool RunConfig::* f) {
      r[k] = {[k, f](RunConfig& c, const std::string& v) { c.*f = config_bool(k, v); },
              [f](const RunConfig& c) { return c.*f ? "true" : "false"; }};
    };
    auto str = [&r](const std::string& k, std::string RunConfig::* f) {
      r[k] = {[f](RunConfig& c, const std::string& v) { c.*f = v; },
              [f](const RunConfig& c) { return c.*f; }};
    };

    u64("seed", &RunConfig::seed);
    str("out.dir", &RunConfig::out_dir);
    f64("window.minutes", &RunConfig::window_minutes);
    str("latent.dim", &RunConfig::latent_dim);
    idx("sequence.len", &RunConfig::sequence_len);
    idx("batch.size", &RunConfig::batch_size);
    idx("members", &RunConfig::n_members);
    idx("hidden.dim", &RunConfig::hidden_dim);
    f64("sigma.w", &RunConfig::sigma_w);
    f64("sigma.eps", &RunConfig::sigma_eps);
    b("mle", &RunConfig::mle);
    i32("mle.max.iters", &RunConfig::mle_max_iters);
    f64("mle.rel.tol", &RunConfig::mle_rel_tol);
    idx("tolerance.windows", &RunConfig::tolerance_windows);
    i32("workers", &RunConfig::workers);
    idx("max.batches", &RunConfig::max_batches);
    str("ppca.fit.on", &RunConfig::ppca_fit_on);
    str("records", &RunConfig::records_path);
    str("word.vectors", &RunConfig::word_vectors_path);
    str("ground.truth", &RunConfig::ground_truth_path);
    str("windows.file", &RunConfig::windows_path);
    str("model.file", &RunConfig::model_path);
    str("reports.file", &RunConfig::reports_path);
    str("resume.from", &RunConfig::resume_from);
    str("keywords", &RunConfig::keywords);
    str("collection.start", &RunConfig::collection_start);
    str("collection.end", &RunConfig::collection_end);
    idx("synth.windows", &RunConfig::synth_windows);
    idx("synth.outliers", &RunConfig::synth_outliers);
    f64("synth.magnitude", &RunConfig::synth_magnitude);
    idx("synth.hidden", &RunConfig::synth_hidden);
    f64("synth.noise.std", &RunConfig::synth_noise_std);
    idx("synth.min.index", &RunConfig::synth_min_index);
    idx("synth.min.gap", &RunConfig::synth_min_gap);
    str("synth.start.time", &RunConfig::synth_start_time);
    return r;
  }();
  return reg;
}

}  // namespace detail

inline void apply_config_value(RunConfig& config, const std::string& key,
                               const std::string& value) {
  const auto& reg = detail::config_registry();
  auto it = reg.find(key);
  if (it == reg.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.apply(config, value);
}

// Grammar: one `key = value` per line; blank lines and lines starting with
// '#' are ignored; whitespace around key and value is trimmed.
inline void apply_config_file(RunConfig& config, const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_value(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

// Effective-config echo: every key, sorted, in file grammar.
inline std::string render_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, entry] : detail::config_registry())
    out += key + " = " + entry.render(config) + "\n";
  return out;
}

// nullopt means automatic selection at the 99% explained-variance target.
inline std::optional<Eigen::Index> latent_dim_value(const RunConfig& config) {
  if (config.latent_dim == "auto99") return std::nullopt;
  const auto v = detail::config_i64("latent.dim", config.latent_dim);
  if (v < 1) throw ConfigError("latent.dim must be >= 1 or 'auto99'");
  return static_cast<Eigen::Index>(v);
}

inline TrainingConfig training_config(const RunConfig& config) {
  TrainingConfig t;
  t.sequence_len = config.sequence_len;
  t.batch_size = config.batch_size;
  t.n_members = config.n_members;
  t.hidden_dim = config.hidden_dim;
  t.sigma_w = config.sigma_w;
  t.sigma_eps_init = config.sigma_eps;
  t.mle_enabled = config.mle;
  t.mle_max_iters = config.mle_max_iters;
  t.mle_rel_tol = config.mle_rel_tol;
  t.seed = config.seed;
  t.workers = config.workers;
  t.max_batches = config.max_batches;
  return t;
}

}  // namespace enkf_lstm
