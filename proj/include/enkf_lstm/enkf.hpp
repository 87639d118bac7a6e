#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/errors.hpp"
#include "enkf_lstm/rng.hpp"

namespace enkf_lstm {

// Column j is ensemble member u^j; the augmented state U = [F, w] lives in
// the rows, observed coordinates first.
struct Ensemble {
  Eigen::MatrixXd members;  // D x N

  Eigen::Index dim() const { return members.rows(); }
  Eigen::Index n_members() const { return members.cols(); }
};

inline void validate_ensemble(const Ensemble& ens) {
  if (ens.n_members() < 2) throw ArgumentError("ensemble needs at least 2 members");
  if (!ens.members.allFinite()) throw NumericalError("ensemble has non-finite entries");
}

struct ObservationModel {
  Eigen::Index obs_dim = 0;      // s*q; H = [I_obs_dim, 0]
  double noise_variance = 1.0;   // sigma_eps^2, isotropic
};

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ensemble_moments(const Ensemble& ens,
                                                                    Eigen::Index first,
                                                                    Eigen::Index count) {
  if (ens.n_members() < 2) throw ArgumentError("ensemble_moments needs N >= 2");
  if (first < 0 || count < 1 || first + count > ens.dim())
    throw ShapeError("ensemble_moments: coordinate range out of bounds");
  const auto block = ens.members.middleRows(first, count);
  Eigen::VectorXd mean = block.rowwise().mean();
  Eigen::MatrixXd centered = block.colwise() - mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(count, count);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered,
                                                 1.0 / double(ens.n_members() - 1));
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return {std::move(mean), std::move(cov)};
}

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ensemble_moments(const Ensemble& ens) {
  return ensemble_moments(ens, 0, ens.dim());
}

inline Ensemble sample_prior(Eigen::Index dim, double sigma_w, Eigen::Index n, Rng& rng) {
  if (dim < 1) throw ArgumentError("sample_prior: dim must be >= 1");
  if (!(sigma_w > 0.0)) throw ArgumentError("sample_prior: sigma_w must be > 0");
  if (n < 2) throw ArgumentError("sample_prior: need at least 2 members");
  Ensemble ens;
  ens.members.resize(dim, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) ens.members(i, j) = sigma_w * rng.normal();
  return ens;
}

// Perturbed-observation analysis step. Per member j:
//   u^j += Sigma H^T (H Sigma H^T + R_e)^{-1} (d + eps^j - H u^j)
// with both covariance factors built from ensemble anomalies A = U - Ubar:
//   Sigma H^T   = A (HA)^T / (N-1)            (D x m, never the D x D Sigma)
//   H Sigma H^T = (HA)(HA)^T / (N-1)          (m x m)
// and R_e the sample covariance (divisor N-1) of the drawn perturbations.
inline Ensemble analysis_update(const Ensemble& ens, const Eigen::VectorXd& obs,
                                const ObservationModel& model, Rng& rng) {
  const Eigen::Index D = ens.dim();
  const Eigen::Index N = ens.n_members();
  const Eigen::Index m = model.obs_dim;
  if (N < 2) throw ArgumentError("analysis_update: need at least 2 members");
  if (m < 1 || m > D) throw ShapeError("analysis_update: obs_dim must be in [1, D]");
  if (obs.size() != m) throw ShapeError("analysis_update: observation length mismatch");
  if (!obs.allFinite()) throw NumericalError("analysis_update: non-finite observation");
  if (!(model.noise_variance > 0.0))
    throw ArgumentError("analysis_update: noise_variance must be > 0");

  // One stream, consumed in member order, coordinates within a member.
  const double eps_std = std::sqrt(model.noise_variance);
  Eigen::MatrixXd pert(m, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < m; ++i) pert(i, j) = eps_std * rng.normal();

  const Eigen::VectorXd mean = ens.members.rowwise().mean();
  const Eigen::MatrixXd anomalies = ens.members.colwise() - mean;
  const auto obs_anomalies = anomalies.topRows(m);  // HA

  const Eigen::VectorXd pert_mean = pert.rowwise().mean();
  const Eigen::MatrixXd pert_centered = pert.colwise() - pert_mean;

  const double inv_nm1 = 1.0 / double(N - 1);
  Eigen::MatrixXd innovation_cov = Eigen::MatrixXd::Zero(m, m);
  innovation_cov.selfadjointView<Eigen::Lower>().rankUpdate(obs_anomalies, inv_nm1);
  innovation_cov.selfadjointView<Eigen::Lower>().rankUpdate(pert_centered, inv_nm1);
  innovation_cov.triangularView<Eigen::StrictlyUpper>() = innovation_cov.transpose();

  // Innovations d^j - H u^j with the perturbed observations d^j = obs + eps^j.
  Eigen::MatrixXd innovations = pert;
  innovations.colwise() += obs;
  innovations -= ens.members.topRows(m);

  Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    const double base = innovation_cov.trace() / double(m);
    double jitter = 1e-9 * base;
    for (int attempt = 0; attempt < 3 && llt.info() != Eigen::Success; ++attempt) {
      Eigen::MatrixXd patched = innovation_cov;
      patched.diagonal().array() += jitter;
      llt.compute(patched);
      jitter *= 10.0;
    }
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(innovation_cov,
                                                        Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      throw NumericalError("analysis_update: innovation matrix singular after jitter "
                           "(eigenvalue range [" + detail::format_double(lo) + ", " +
                           detail::format_double(hi) + "])");
    }
  }

  // Gain K = A (HA)^T / (N-1) is D x m; solved innovations are m x N.
  Eigen::MatrixXd gain(D, m);
  gain.noalias() = anomalies * obs_anomalies.transpose();
  gain *= inv_nm1;
  const Eigen::MatrixXd solved = llt.solve(innovations);

  Ensemble out;
  out.members = ens.members;
  out.members.noalias() += gain * solved;
  if (!out.members.allFinite())
    throw NumericalError("analysis_update: non-finite ensemble after update");
  return out;
}

// --- ensemble_v1 checkpoint: JSON header + column-major doubles ---

struct EnsembleCheckpoint {
  Ensemble ensemble;
  std::uint64_t seed = 0;
  std::int64_t step = 0;  // batches assimilated so far
};

inline void write_ensemble(std::ostream& out, const Ensemble& ens, std::uint64_t seed,
                           std::int64_t step) {
  nlohmann::json header{{"format", "ensemble_v1"},
                        {"dim", ens.dim()},
                        {"members", ens.n_members()},
                        {"seed", seed},
                        {"step", step}};
  detail::write_json_header(out, header);
  detail::write_doubles(out, ens.members.data(),
                        static_cast<std::size_t>(ens.members.size()));
}

inline EnsembleCheckpoint read_ensemble(std::istream& in, const std::string& path) {
  nlohmann::json h = detail::read_json_header(in, path);
  if (h.value("format", "") != "ensemble_v1") throw IoError("unexpected format in " + path);
  EnsembleCheckpoint ck;
  const auto dim = h.at("dim").get<Eigen::Index>();
  const auto n = h.at("members").get<Eigen::Index>();
  if (dim < 1 || n < 2) throw IoError("invalid ensemble header in " + path);
  ck.seed = h.at("seed").get<std::uint64_t>();
  ck.step = h.at("step").get<std::int64_t>();
  ck.ensemble.members.resize(dim, n);
  detail::read_doubles(in, ck.ensemble.members.data(),
                       static_cast<std::size_t>(ck.ensemble.members.size()), path);
  return ck;
}

inline void save_ensemble(const std::string& path, const Ensemble& ens, std::uint64_t seed,
                          std::int64_t step) {
  auto out = detail::open_output(path, true);
  write_ensemble(out, ens, seed, step);
  if (!out) throw IoError("write failed: " + path);
}

inline EnsembleCheckpoint load_ensemble(const std::string& path) {
  auto in = detail::open_input(path, true);
  return read_ensemble(in, path);
}

}  // namespace enkf_lstm
