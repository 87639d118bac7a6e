#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/embedding.hpp"
#include "enkf_lstm/errors.hpp"
#include "enkf_lstm/lstm.hpp"
#include "enkf_lstm/outlier.hpp"
#include "enkf_lstm/rng.hpp"

namespace enkf_lstm {

struct EventSpec {
  std::string name;
  std::int64_t collection_start = 0;
  std::int64_t event_time = 0;
  std::int64_t collection_end = 0;
  std::vector<std::string> keywords;  // lowercase substrings; empty = keep all
};

inline void validate_event_spec(const EventSpec& s) {
  if (!(s.collection_start <= s.event_time && s.event_time <= s.collection_end))
    throw ArgumentError("event spec times must satisfy start <= event <= end");
}

struct IngestResult {
  std::vector<Record> records;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t malformed = 0;
};

// JSON-lines {"ts": epoch-seconds, "text": ...}; keeps in-range records whose
// lowercased text contains any keyword (all records when the list is empty).
inline IngestResult ingest(const std::string& path, const EventSpec& spec) {
  validate_event_spec(spec);
  std::vector<std::string> needles = spec.keywords;
  for (auto& k : needles)
    for (char& c : k)
      if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(c));

  auto in = detail::open_input(path);
  IngestResult res;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("ts") || !j.contains("text") ||
        !j["ts"].is_number_integer() || !j["text"].is_string()) {
      ++res.malformed;
      continue;
    }
    Record r{j["ts"].get<std::int64_t>(), j["text"].get<std::string>()};
    if (r.ts < spec.collection_start || r.ts > spec.collection_end) {
      ++res.dropped;
      continue;
    }
    bool hit = needles.empty();
    if (!hit) {
      std::string low = r.text;
      for (char& c : low)
        if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(c));
      for (const auto& k : needles)
        if (!k.empty() && low.find(k) != std::string::npos) {
          hit = true;
          break;
        }
    }
    if (!hit) {
      ++res.dropped;
      continue;
    }
    ++res.kept;
    res.records.push_back(std::move(r));
  }
  if (res.malformed > 0)
    std::cerr << "warning: skipped " << res.malformed << " malformed lines in " << path << "\n";
  return res;
}

struct GroundTruth {
  std::vector<std::pair<std::int64_t, std::int64_t>> intervals;  // [start, end]
};

// Sort by start and merge overlaps so intervals end up disjoint.
inline GroundTruth normalize_truth(GroundTruth truth) {
  for (const auto& iv : truth.intervals)
    if (iv.first > iv.second) throw DataError("ground-truth interval has start > end");
  std::sort(truth.intervals.begin(), truth.intervals.end());
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  for (const auto& iv : truth.intervals) {
    if (!merged.empty() && iv.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  truth.intervals = std::move(merged);
  return truth;
}

// CSV rows: start_iso8601,end_iso8601,label (point events use start = end).
inline void write_ground_truth_csv(const std::string& path, const GroundTruth& truth,
                                   const std::string& label = "event") {
  auto out = detail::open_output(path);
  out << "start,end,label\n";
  for (const auto& iv : truth.intervals)
    out << detail::format_iso8601(iv.first) << ',' << detail::format_iso8601(iv.second) << ','
        << label << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline GroundTruth read_ground_truth_csv(const std::string& path) {
  auto in = detail::open_input(path);
  GroundTruth truth;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("start,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    const auto f = detail::split_csv_line(line);
    if (f.size() < 2) throw DataError("bad ground-truth row in " + path + ": '" + line + "'");
    truth.intervals.emplace_back(detail::parse_iso8601(f[0]), detail::parse_iso8601(f[1]));
  }
  return normalize_truth(std::move(truth));
}

struct SynthConfig {
  Eigen::Index n_windows = 600;
  Eigen::Index dim = 5;
  Eigen::Index hidden_dim = 8;    // base-dynamics LSTM size
  Eigen::Index n_outliers = 20;
  double magnitude = 8.0;         // mean shift in marginal standard deviations
  double noise_std = 0.3;         // driving input noise
  Eigen::Index min_index = 40;    // leave room for a warm-up prefix
  Eigen::Index min_gap = 5;       // injected windows never closer than this
  std::int64_t start_time = 1366000800;  // window-grid origin
  double window_minutes = 5.0;
};

struct SyntheticStream {
  Eigen::MatrixXd windows;               // n_windows x dim
  std::vector<std::int64_t> timestamps;  // window start times
  GroundTruth truth;
  Eigen::VectorXd marginal_std;          // of the base series, per coordinate
};

namespace detail {

// Random LSTM with every recurrent block rescaled to spectral norm 0.8, so
// the driven trajectory stays bounded but keeps temporal structure.
inline WeightVector stable_random_lstm(const LstmShape& shape, double weight_std, Rng& rng) {
  LstmParts parts = LstmParts::zeros(shape);
  auto fill = [&rng, weight_std](Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = weight_std * rng.normal();
  };
  auto fill_vec = [&rng, weight_std](Eigen::VectorXd& v) {
    for (Eigen::Index r = 0; r < v.size(); ++r) v(r) = weight_std * rng.normal();
  };
  fill(parts.W_ix); fill(parts.W_im); fill_vec(parts.b_i);
  fill(parts.W_fx); fill(parts.W_fm); fill_vec(parts.b_f);
  fill(parts.W_cx); fill(parts.W_cm); fill_vec(parts.b_c);
  fill(parts.W_ox); fill(parts.W_om); fill_vec(parts.b_o);
  fill(parts.W_ym); fill_vec(parts.b_y);
  auto stabilize = [](Eigen::MatrixXd& m) {
    const double top = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    if (top > 0.0) m *= 0.8 / top;
  };
  stabilize(parts.W_im);
  stabilize(parts.W_fm);
  stabilize(parts.W_cm);
  stabilize(parts.W_om);
  return pack(parts);
}

}  // namespace detail

// Emits a d-dim window series from a seeded stable LSTM driven by Gaussian
// noise, then injects mean-shift outliers at random well-separated windows.
// Magnitude is per coordinate, in units of the base series' marginal std.
inline SyntheticStream generate_synthetic(const SynthConfig& cfg, Rng& rng) {
  if (cfg.n_windows < 2) throw ArgumentError("generate_synthetic: need at least 2 windows");
  if (cfg.dim < 1 || cfg.hidden_dim < 1)
    throw ArgumentError("generate_synthetic: dimensions must be >= 1");
  if (cfg.n_outliers < 0 || cfg.magnitude < 0.0 || cfg.noise_std < 0.0)
    throw ArgumentError("generate_synthetic: counts and magnitudes must be nonnegative");
  if (cfg.min_index < 0 || cfg.min_index >= cfg.n_windows)
    throw ArgumentError("generate_synthetic: min_index out of range");
  if (cfg.min_gap < 1) throw ArgumentError("generate_synthetic: min_gap must be >= 1");
  const std::int64_t span = static_cast<std::int64_t>(std::llround(cfg.window_minutes * 60.0));
  if (span < 1) throw ArgumentError("generate_synthetic: window length must be positive");

  const LstmShape shape{cfg.dim, cfg.hidden_dim, cfg.dim};
  const WeightVector base = detail::stable_random_lstm(shape, 0.5, rng);
  const WeightView view(base);

  SyntheticStream out;
  out.windows.resize(cfg.n_windows, cfg.dim);
  LstmWork wk;
  wk.reset(shape, 1);
  Eigen::MatrixXd x(cfg.dim, 1);
  for (Eigen::Index t = 0; t < cfg.n_windows; ++t) {
    for (Eigen::Index i = 0; i < cfg.dim; ++i) x(i, 0) = cfg.noise_std * rng.normal();
    step_batch(view, x, wk);
    output_batch(view, wk);
    out.windows.row(t) = wk.y.col(0).transpose();
  }

  const Eigen::VectorXd mean = out.windows.colwise().mean();
  out.marginal_std = ((out.windows.rowwise() - mean.transpose()).colwise().squaredNorm() /
                      double(cfg.n_windows - 1))
                         .cwiseSqrt()
                         .transpose();

  out.timestamps.resize(static_cast<std::size_t>(cfg.n_windows));
  for (Eigen::Index t = 0; t < cfg.n_windows; ++t)
    out.timestamps[static_cast<std::size_t>(t)] = cfg.start_time + t * span;

  if (cfg.n_outliers > cfg.n_windows - cfg.min_index)
    throw ArgumentError("generate_synthetic: more outliers than available windows");

  std::vector<Eigen::Index> hits;
  const int max_attempts = 10000;
  int attempts = 0;
  while (static_cast<Eigen::Index>(hits.size()) < cfg.n_outliers) {
    if (++attempts > max_attempts)
      throw ArgumentError("generate_synthetic: cannot place outliers with the given spacing");
    const Eigen::Index cand =
        cfg.min_index +
        static_cast<Eigen::Index>(rng.uniform_int(std::uint64_t(cfg.n_windows - cfg.min_index)));
    bool clash = false;
    for (Eigen::Index h : hits)
      if (std::abs(h - cand) < cfg.min_gap) {
        clash = true;
        break;
      }
    if (!clash) hits.push_back(cand);
  }
  std::sort(hits.begin(), hits.end());

  for (Eigen::Index h : hits) {
    for (Eigen::Index i = 0; i < cfg.dim; ++i) {
      const double s = out.marginal_std(i) > 0.0 ? out.marginal_std(i) : 1.0;
      out.windows(h, i) += cfg.magnitude * s;
    }
    const std::int64_t ts = out.timestamps[static_cast<std::size_t>(h)];
    out.truth.intervals.emplace_back(ts, ts);
  }
  out.truth = normalize_truth(std::move(out.truth));
  return out;
}

struct DetectionMetrics {
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

// Episode-based matching: maximal runs of consecutive flagged windows count
// once; an episode matches the earliest unmatched truth interval whose
// tolerance-expanded span intersects any flagged window in the run.
inline DetectionMetrics evaluate(const std::vector<OutlierReport>& reports,
                                 const GroundTruth& truth, Eigen::Index tolerance_windows,
                                 std::int64_t window_seconds) {
  if (tolerance_windows < 0) throw ArgumentError("evaluate: tolerance must be >= 0");
  if (window_seconds < 1) throw ArgumentError("evaluate: window_seconds must be >= 1");
  const GroundTruth norm = normalize_truth(truth);

  struct Episode {
    std::int64_t first_ts, last_ts;
  };
  std::vector<Episode> episodes;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].is_outlier) continue;
    if (!episodes.empty() && i > 0 && reports[i - 1].is_outlier &&
        reports[i].window_index == reports[i - 1].window_index + 1)
      episodes.back().last_ts = reports[i].timestamp;
    else
      episodes.push_back({reports[i].timestamp, reports[i].timestamp});
  }

  const std::int64_t pad = tolerance_windows * window_seconds;
  std::vector<bool> matched(norm.intervals.size(), false);
  DetectionMetrics m;
  for (const Episode& ep : episodes) {
    bool hit = false;
    for (std::size_t t = 0; t < norm.intervals.size(); ++t) {
      if (matched[t]) continue;
      const std::int64_t lo = norm.intervals[t].first - pad;
      const std::int64_t hi = norm.intervals[t].second + pad;
      // Flagged windows span [ts, ts + window_seconds); episode covers
      // consecutive windows, so its union is [first_ts, last_ts + span).
      if (ep.first_ts <= hi && ep.last_ts + window_seconds > lo) {
        matched[t] = true;
        hit = true;
        break;
      }
    }
    if (hit)
      ++m.true_positives;
    else
      ++m.false_positives;
  }
  for (bool b : matched)
    if (!b) ++m.false_negatives;

  if (m.true_positives + m.false_positives > 0)
    m.precision = double(m.true_positives) / double(m.true_positives + m.false_positives);
  if (m.true_positives + m.false_negatives > 0)
    m.recall = double(m.true_positives) / double(m.true_positives + m.false_negatives);
  if (m.precision && m.recall)
    m.f1 = (*m.precision + *m.recall) > 0.0
               ? 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall)
               : 0.0;
  return m;
}

inline nlohmann::json metrics_json(const DetectionMetrics& m) {
  nlohmann::json j{{"true_positives", m.true_positives},
                   {"false_positives", m.false_positives},
                   {"false_negatives", m.false_negatives}};
  j["precision"] = m.precision ? nlohmann::json(*m.precision) : nlohmann::json();
  j["recall"] = m.recall ? nlohmann::json(*m.recall) : nlohmann::json();
  j["f1"] = m.f1 ? nlohmann::json(*m.f1) : nlohmann::json();
  return j;
}

}  // namespace enkf_lstm
