#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/errors.hpp"

namespace enkf_lstm {

struct PpcaModel {
  Eigen::VectorXd mean;         // D
  Eigen::MatrixXd components;   // D x d, orthonormal columns, descending eigenvalue
  Eigen::VectorXd eigenvalues;  // top d sample eigenvalues
  double residual_variance = 0.0;  // mean of the discarded eigenvalues
  Eigen::Index d = 0;
  double explained_variance = 0.0;  // fraction captured by the kept components
};

// Maximum-likelihood PPCA from the sample covariance eigendecomposition.
// Rows of data are observations. When d is absent, picks the smallest d whose
// cumulative explained variance reaches 99%.
inline PpcaModel fit_ppca(const Eigen::MatrixXd& data,
                          std::optional<Eigen::Index> d = std::nullopt) {
  const Eigen::Index M = data.rows();
  const Eigen::Index D = data.cols();
  if (M < 2) throw ArgumentError("fit_ppca: need at least 2 observations");
  if (D < 1) throw ArgumentError("fit_ppca: empty feature dimension");
  if (!data.allFinite()) throw DataError("fit_ppca: non-finite data");
  if (d && (*d < 1 || *d > D))
    throw ArgumentError("fit_ppca: latent dimension must lie in [1, " + std::to_string(D) + "]");

  PpcaModel model;
  model.mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / double(M - 1));
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("fit_ppca: eigendecomposition failed");
  // Ascending from the solver; flip to descending and clamp rounding negatives.
  Eigen::VectorXd lambda = es.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = es.eigenvectors().rowwise().reverse();

  const double total = lambda.sum();
  if (total <= 0.0)
    throw DegenerateDataError("fit_ppca: data has zero variance (all rows identical)");

  Eigen::Index keep;
  if (d) {
    keep = *d;
  } else {
    keep = D;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < D; ++i) {
      cum += lambda(i);
      if (cum >= 0.99 * total) {
        keep = i + 1;
        break;
      }
    }
  }

  model.d = keep;
  model.eigenvalues = lambda.head(keep);
  model.components = vectors.leftCols(keep);
  model.residual_variance =
      keep < D ? lambda.tail(D - keep).sum() / double(D - keep) : 0.0;
  model.explained_variance = lambda.head(keep).sum() / total;

  // Sign convention: each component's largest-magnitude entry is positive.
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::Index at = 0;
    model.components.col(c).cwiseAbs().maxCoeff(&at);
    if (model.components(at, c) < 0.0) model.components.col(c) = -model.components.col(c);
  }
  return model;
}

// Posterior-mean latent projection: M_p^{-1} W^T (v - mean) with
// W = components * diag(sqrt(max(lambda - sigma2, 0))) and
// M_p = W^T W + sigma2 I.
inline Eigen::VectorXd transform(const PpcaModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.mean.size())
    throw ShapeError("transform: vector length does not match the fitted dimension");
  const double s2 = model.residual_variance;
  const Eigen::VectorXd load = (model.eigenvalues.array() - s2).max(0.0).sqrt();
  const Eigen::MatrixXd W = model.components * load.asDiagonal();
  Eigen::VectorXd rhs = W.transpose() * (v - model.mean);
  Eigen::MatrixXd Mp = W.transpose() * W;
  Mp.diagonal().array() += s2;
  Eigen::LLT<Eigen::MatrixXd> llt(Mp);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  // Zero-variance latent directions (rank-deficient data with zero residual):
  // their posterior mean is zero; solve the rest diagonally.
  Eigen::VectorXd out(model.d);
  for (Eigen::Index i = 0; i < model.d; ++i) {
    const double m = Mp(i, i);
    out(i) = m > 0.0 ? rhs(i) / m : 0.0;
  }
  return out;
}

inline Eigen::MatrixXd transform_rows(const PpcaModel& model, const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd out(rows.rows(), model.d);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.row(i) = transform(model, rows.row(i).transpose());
  return out;
}

// --- ppca_v1: JSON header + mean, eigenvalues, components (column-major) ---

inline void save_ppca(const std::string& path, const PpcaModel& model) {
  auto out = detail::open_output(path, true);
  nlohmann::json header{{"format", "ppca_v1"},
                        {"dim", model.mean.size()},
                        {"latent_dim", model.d},
                        {"residual_variance", model.residual_variance},
                        {"explained_variance", model.explained_variance}};
  detail::write_json_header(out, header);
  detail::write_doubles(out, model.mean.data(), static_cast<std::size_t>(model.mean.size()));
  detail::write_doubles(out, model.eigenvalues.data(),
                        static_cast<std::size_t>(model.eigenvalues.size()));
  detail::write_doubles(out, model.components.data(),
                        static_cast<std::size_t>(model.components.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline PpcaModel load_ppca(const std::string& path) {
  auto in = detail::open_input(path, true);
  nlohmann::json h = detail::read_json_header(in, path);
  if (h.value("format", "") != "ppca_v1") throw IoError("unexpected format in " + path);
  PpcaModel model;
  const auto D = h.at("dim").get<Eigen::Index>();
  model.d = h.at("latent_dim").get<Eigen::Index>();
  if (D < 1 || model.d < 1 || model.d > D) throw IoError("invalid ppca header in " + path);
  model.residual_variance = h.at("residual_variance").get<double>();
  model.explained_variance = h.at("explained_variance").get<double>();
  model.mean.resize(D);
  model.eigenvalues.resize(model.d);
  model.components.resize(D, model.d);
  detail::read_doubles(in, model.mean.data(), static_cast<std::size_t>(D), path);
  detail::read_doubles(in, model.eigenvalues.data(), static_cast<std::size_t>(model.d), path);
  detail::read_doubles(in, model.components.data(),
                       static_cast<std::size_t>(model.components.size()), path);
  return model;
}

}  // namespace enkf_lstm
