#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "enkf_lstm/bayes_lstm.hpp"
#include "enkf_lstm/chi_squared.hpp"
#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/detail/parallel.hpp"
#include "enkf_lstm/errors.hpp"

namespace enkf_lstm {

inline constexpr double kOutlierUpperTail = 0.05;

struct OutlierReport {
  Eigen::Index window_index = 0;
  std::int64_t timestamp = 0;  // window start time
  double m_d2 = 0.0;
  double threshold = 0.0;
  bool is_outlier = false;
  Eigen::VectorXd predictive_mean;
  Eigen::VectorXd predictive_cov_diag;
};

// (obs - mean)^T cov^{-1} (obs - mean) through a Cholesky solve; the squared
// triangular solve keeps the result nonnegative by construction. Jitter is
// added only if the plain factorization fails: 1e-9 * mean(diag), escalating
// tenfold up to 3 attempts.
inline double mahalanobis_sq(const Eigen::VectorXd& obs, const Eigen::VectorXd& mean,
                             const Eigen::MatrixXd& cov) {
  const Eigen::Index q = obs.size();
  if (mean.size() != q || cov.rows() != q || cov.cols() != q)
    throw ShapeError("mahalanobis_sq: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    double jitter = 1e-9 * cov.diagonal().mean();
    for (int attempt = 0; attempt < 3 && llt.info() != Eigen::Success; ++attempt) {
      Eigen::MatrixXd patched = cov;
      patched.diagonal().array() += jitter;
      llt.compute(patched);
      jitter *= 10.0;
    }
    if (llt.info() != Eigen::Success)
      throw NumericalError("mahalanobis_sq: covariance not positive definite after jitter "
                           "(diagonal range [" +
                           detail::format_double(cov.diagonal().minCoeff()) + ", " +
                           detail::format_double(cov.diagonal().maxCoeff()) + "])");
  }
  return llt.matrixL().solve(obs - mean).squaredNorm();
}

// Walks the stream: for each window t >= sequence_len, predicts from the
// preceding sequence_len windows and tests the actual window against the
// ensemble predictive Gaussian. Member propagation is batched across all
// target positions at once (shared sliding-window tensor per member).
inline std::vector<OutlierReport> detect(const Eigen::MatrixXd& windows,
                                         const std::vector<std::int64_t>& timestamps,
                                         const PosteriorModel& model,
                                         Eigen::Index sequence_len, int workers = 0) {
  const Eigen::Index T = windows.rows();
  const Eigen::Index d = windows.cols();
  const Eigen::Index q = model.shape.output_dim;
  if (sequence_len < 1) throw ArgumentError("detect: sequence_len must be >= 1");
  if (T < sequence_len + 1)
    throw ArgumentError("detect: stream needs more than sequence_len = " +
                        std::to_string(sequence_len) + " windows, got " + std::to_string(T));
  if (d != model.shape.input_dim)
    throw ShapeError("detect: window dimension does not match the model input_dim");
  if (static_cast<Eigen::Index>(timestamps.size()) != T)
    throw ShapeError("detect: timestamps length does not match the stream");
  if (model.weight_ensemble.dim() != weight_count(model.shape))
    throw ShapeError("detect: weight ensemble does not match model shape");

  const Eigen::Index K = T - sequence_len;  // evaluable windows
  const Eigen::Index N = model.weight_ensemble.n_members();

  // steps[t].col(k) is window (k + t); column k spans the input for target k.
  std::vector<Eigen::MatrixXd> steps(static_cast<std::size_t>(sequence_len));
  for (Eigen::Index t = 0; t < sequence_len; ++t)
    steps[static_cast<std::size_t>(t)] = windows.middleRows(t, K).transpose();

  std::vector<Eigen::MatrixXd> outputs(static_cast<std::size_t>(N));  // q x K each
  const int w = workers > 0 ? workers : detail::default_workers();
  detail::parallel_for(static_cast<std::size_t>(N), w, [&](std::size_t j) {
    WeightView view(model.weight_ensemble.members.col(static_cast<Eigen::Index>(j)).data(),
                    model.shape);
    LstmWork wk;
    forward_batch(view, model.shape, steps, wk);
    outputs[j] = wk.y;
  });

  const double threshold = chi2_critical(static_cast<int>(q), kOutlierUpperTail);
  std::vector<OutlierReport> reports;
  reports.reserve(static_cast<std::size_t>(K));
  Eigen::MatrixXd member_samples(q, N);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index j = 0; j < N; ++j)
      member_samples.col(j) = outputs[static_cast<std::size_t>(j)].col(k);
    OutlierReport rep;
    rep.window_index = sequence_len + k;
    rep.timestamp = timestamps[static_cast<std::size_t>(rep.window_index)];
    rep.threshold = threshold;
    rep.predictive_mean = member_samples.rowwise().mean();
    Eigen::MatrixXd centered = member_samples.colwise() - rep.predictive_mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / double(N - 1));
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    cov.diagonal().array() += model.sigma_eps;
    rep.predictive_cov_diag = cov.diagonal();
    try {
      rep.m_d2 = mahalanobis_sq(windows.row(rep.window_index).transpose(),
                                rep.predictive_mean, cov);
    } catch (const NumericalError& e) {
      throw NumericalError("window " + std::to_string(rep.window_index) + ": " + e.what());
    }
    rep.is_outlier = rep.m_d2 > rep.threshold;
    reports.push_back(std::move(rep));
  }
  return reports;
}

// --- report CSV + summary JSON ---

inline void write_reports_csv(const std::string& path,
                              const std::vector<OutlierReport>& reports) {
  auto out = detail::open_output(path);
  out << "window_index,timestamp,m_d2,threshold,is_outlier\n";
  for (const auto& r : reports) {
    out << r.window_index << ',' << detail::format_iso8601(r.timestamp) << ','
        << detail::format_double(r.m_d2) << ',' << detail::format_double(r.threshold) << ','
        << (r.is_outlier ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<OutlierReport> read_reports_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("window_index,", 0) != 0)
    throw DataError("unexpected report CSV header in " + path);
  std::vector<OutlierReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5) throw DataError("bad field count in " + path + ": '" + line + "'");
    OutlierReport r;
    r.window_index = detail::parse_i64_field(f[0], path);
    r.timestamp = detail::parse_iso8601(f[1]);
    r.m_d2 = detail::parse_double_field(f[2], path);
    r.threshold = detail::parse_double_field(f[3], path);
    r.is_outlier = detail::parse_i64_field(f[4], path) != 0;
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json reports_summary(const std::vector<OutlierReport>& reports) {
  std::size_t flagged = 0;
  for (const auto& r : reports) flagged += r.is_outlier ? 1 : 0;
  nlohmann::json j{{"windows_evaluated", reports.size()},
                   {"flagged", flagged},
                   {"flag_rate", reports.empty() ? 0.0 : double(flagged) / double(reports.size())}};
  if (!reports.empty()) j["threshold"] = reports.front().threshold;
  return j;
}

}  // namespace enkf_lstm
