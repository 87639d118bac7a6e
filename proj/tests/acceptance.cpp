// Acceptance gate: one criterion per line, each checked against an oracle or
// property that is coded independently of the library path it validates.
// Usage: acceptance [n]  (1-9; no argument runs all criteria).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "enkf_lstm/enkf_lstm.hpp"
#include "support/naive_lstm.hpp"

namespace fs = std::filesystem;
using namespace enkf_lstm;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. LSTM forward pass vs. the straight-line reference evaluator.

Outcome c1_lstm_oracle() {
  Rng rng(1001);
  double worst = 0.0;
  int nets = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const LstmShape shape{1 + Eigen::Index(rng.uniform_int(3)),
                          1 + Eigen::Index(rng.uniform_int(3)),
                          1 + Eigen::Index(rng.uniform_int(3))};
    const LstmParts parts = testsupport::random_parts(shape, rng, 0.8);
    const auto xs = testsupport::random_sequence(1 + Eigen::Index(rng.uniform_int(5)),
                                                 shape.input_dim, rng, 1.0);
    const Eigen::VectorXd want = testsupport::naive_forward(parts, xs);
    const Eigen::VectorXd got = forward_sequence(xs, pack(parts));
    for (Eigen::Index i = 0; i < want.size(); ++i)
      worst = std::max(worst,
                       std::abs(got(i) - want(i)) / std::max(1.0, std::abs(want(i))));
    ++nets;
  }
  return {worst <= 1e-12,
          std::to_string(nets) + " nets, worst relative error " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------
// 2. EnKF update vs. the closed-form Kalman posterior, scalar and 2-dim.

Outcome c2_kalman_limit() {
  const Eigen::Index n = 50000;
  double worst_mean = 0.0, worst_var = 0.0;

  for (std::uint64_t seed = 101; seed <= 105; ++seed) {
    Rng rng(seed);

    // Scalar: prior N(0,1), obs 1.0, noise 1.0 -> posterior N(0.5, 0.5).
    {
      Ensemble prior = sample_prior(1, 1.0, n, rng);
      const Ensemble post =
          analysis_update(prior, Eigen::VectorXd::Constant(1, 1.0), ObservationModel{1, 1.0}, rng);
      auto [mean, cov] = ensemble_moments(post);
      worst_mean = std::max(worst_mean, std::abs(mean(0) - 0.5) / 0.5);
      worst_var = std::max(worst_var, std::abs(cov(0, 0) - 0.5) / 0.5);
    }

    // 2-dim: prior N(0, [[1,.6],[.6,1]]), observe coordinate 0 with noise 0.5.
    {
      Eigen::Matrix2d sigma0;
      sigma0 << 1.0, 0.6, 0.6, 1.0;
      const Eigen::Matrix2d l = sigma0.llt().matrixL();
      Ensemble prior;
      prior.members.resize(2, n);
      Eigen::Vector2d z;
      for (Eigen::Index j = 0; j < n; ++j) {
        z << rng.normal(), rng.normal();
        prior.members.col(j) = l * z;
      }
      const double r = 0.5, d = 2.0;
      const Ensemble post =
          analysis_update(prior, Eigen::VectorXd::Constant(1, d), ObservationModel{1, r}, rng);
      auto [mean, cov] = ensemble_moments(post);

      const double s = sigma0(0, 0) + r;
      const Eigen::Vector2d gain = sigma0.col(0) / s;
      const Eigen::Vector2d exact_mean = gain * d;
      const Eigen::Matrix2d exact_cov = sigma0 - gain * sigma0.row(0);
      for (int i = 0; i < 2; ++i) {
        worst_mean = std::max(worst_mean,
                              std::abs(mean(i) - exact_mean(i)) / std::abs(exact_mean(i)));
        worst_var = std::max(worst_var, std::abs(cov(i, i) - exact_cov(i, i)) / exact_cov(i, i));
      }
    }
  }
  return {worst_mean <= 0.03 && worst_var <= 0.05,
          "5 seeds at N=50000: worst mean error " + fmt(100.0 * worst_mean, 3) +
              "%, worst variance error " + fmt(100.0 * worst_var, 3) + "%"};
}

// ---------------------------------------------------------------------------
// 3. Analytic noise-variance maximizer vs. a log-grid search of the bound
//    L(s) = -qM/2 ln(2 pi s) - SS/(2 N s).

Outcome c3_noise_mle() {
  const int grid_points = 2000;
  const double log_lo = std::log(1e-3), log_hi = std::log(1e3);
  const double step = (log_hi - log_lo) / double(grid_points - 1);

  Rng rng(3003);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index q = 1 + Eigen::Index(rng.uniform_int(3));
    const Eigen::Index m = 1 + Eigen::Index(rng.uniform_int(5));
    const Eigen::Index n = 2 + Eigen::Index(rng.uniform_int(5));
    const double scale = std::pow(10.0, 1.6 * rng.uniform() - 0.8);

    std::vector<Eigen::VectorXd> targets;
    std::vector<Eigen::MatrixXd> outputs;
    double ss = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd y(q);
      Eigen::MatrixXd f(q, n);
      for (Eigen::Index i = 0; i < q; ++i) {
        y(i) = scale * rng.normal();
        for (Eigen::Index k = 0; k < n; ++k) f(i, k) = scale * rng.normal();
      }
      ss += (f.colwise() - y).squaredNorm();
      targets.push_back(y);
      outputs.push_back(f);
    }

    const double est = estimate_noise_variance(targets, outputs);

    const double qm = double(q) * double(m);
    double best_log = log_lo, best_val = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid_points; ++g) {
      const double lg = log_lo + g * step;
      const double s = std::exp(lg);
      const double val = -0.5 * qm * std::log(2.0 * M_PI * s) - ss / (2.0 * double(n) * s);
      if (val > best_val) {
        best_val = val;
        best_log = lg;
      }
    }
    worst = std::max(worst, std::abs(std::log(est) - best_log));
    ++instances;
  }
  return {worst <= step, std::to_string(instances) + " instances, worst log-gap " +
                             fmt(worst, 3) + " vs grid step " + fmt(step, 3)};
}

// ---------------------------------------------------------------------------
// 4. chi2_critical vs. Simpson quadrature of the density (substituted x = t^2
//    so the dof-1 integrand stays finite at the origin).

double chi2_cdf_quadrature(double c, int dof) {
  const double norm = std::exp(-0.5 * dof * std::log(2.0) - std::lgamma(0.5 * dof));
  const auto g = [&](double t) {
    if (t == 0.0) return dof == 1 ? 2.0 * norm : 0.0;
    return 2.0 * std::pow(t, dof - 1) * std::exp(-0.5 * t * t) * norm;
  };
  const int n = 20000;  // even
  const double hi = std::sqrt(c), h = hi / n;
  double acc = g(0.0) + g(hi);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return acc * h / 3.0;
}

double chi2_critical_quadrature(int dof, double upper_tail) {
  double lo = 1e-9, hi = 100.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf_quadrature(mid, dof) < 1.0 - upper_tail ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome c4_chi2_oracle() {
  double worst = 0.0;
  for (int dof = 1; dof <= 10; ++dof)
    worst = std::max(worst, std::abs(chi2_critical(dof, 0.05) -
                                     chi2_critical_quadrature(dof, 0.05)));
  const double dof1 = std::abs(chi2_critical(1, 0.05) - 3.8415);
  const double dof5 = std::abs(chi2_critical(5, 0.05) - 11.0705);
  const bool pass = worst <= 1e-3 && dof1 <= 1e-3 && dof5 <= 1e-3;
  return {pass, "dof 1..10 worst gap " + fmt(worst, 3) + "; dof1 " +
                    fmt(chi2_critical(1, 0.05), 6) + ", dof5 " +
                    fmt(chi2_critical(5, 0.05), 6)};
}

// ---------------------------------------------------------------------------
// 5. False-positive calibration: every next window is drawn from the model's
//    own predictive Gaussian, so its squared distance is exactly chi-squared.

Outcome c5_calibration() {
  const Eigen::Index d = 5, hidden = 8, l = 16, n_members = 50;
  const Eigen::Index in_dist = 2000, total = in_dist + l;

  PosteriorModel model;
  model.shape = LstmShape{d, hidden, d};
  model.sigma_eps = 0.01;
  Rng weight_rng(5005);
  model.weight_ensemble = sample_prior(weight_count(model.shape), 0.3, n_members, weight_rng);

  Eigen::MatrixXd windows(total, d);
  Rng draw_rng(5050);
  for (Eigen::Index t = 0; t < l; ++t)
    for (Eigen::Index i = 0; i < d; ++i) windows(t, i) = 0.1 * draw_rng.normal();

  Eigen::VectorXd z(d);
  for (Eigen::Index t = l; t < total; ++t) {
    const PredictiveDistribution p = predict(model, windows.middleRows(t - l, l), 1);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(p.cov).matrixL();
    for (Eigen::Index i = 0; i < d; ++i) z(i) = draw_rng.normal();
    windows.row(t) = (p.mean + chol * z).transpose();
  }

  std::vector<std::int64_t> ts(static_cast<std::size_t>(total));
  for (Eigen::Index t = 0; t < total; ++t) ts[size_t(t)] = 300 * t;
  const auto reports = detect(windows, ts, model, l, 1);

  std::size_t flagged = 0;
  for (const auto& r : reports) flagged += r.is_outlier ? 1 : 0;
  const double rate = double(flagged) / double(reports.size());
  return {std::abs(rate - 0.05) <= 0.02,
          std::to_string(flagged) + "/" + std::to_string(reports.size()) +
              " windows flagged (rate " + fmt(rate, 4) + ", target 0.05 +- 0.02)"};
}

// ---------------------------------------------------------------------------
// 6. Injection recall on the synthetic stream at default configuration.

Outcome c6_injection_recall() {
  SynthConfig sc;  // defaults: 600 windows, 20 injections at 8 marginal stds
  Rng synth_rng(derive_seed(0, RngStream::synthetic));
  const SyntheticStream stream = generate_synthetic(sc, synth_rng);

  TrainingConfig tc;  // defaults: l=32, batch 16, N=100, hidden 32, MLE on
  tc.workers = 1;
  const auto samples = make_samples(stream.windows, tc.sequence_len);
  const PosteriorModel model = train(samples, tc);

  const auto reports = detect(stream.windows, stream.timestamps, model, tc.sequence_len, 1);
  const std::int64_t span = static_cast<std::int64_t>(std::llround(sc.window_minutes * 60.0));
  const DetectionMetrics m = evaluate(reports, stream.truth, 1, span);

  const double recall = m.recall.value_or(0.0);
  const double precision = m.precision.value_or(0.0);
  return {recall >= 0.8 && precision >= 0.5,
          "recall " + fmt(recall, 4) + " (>= 0.8), precision " + fmt(precision, 4) +
              " (>= 0.5), tp=" + std::to_string(m.true_positives) +
              " fp=" + std::to_string(m.false_positives) +
              " fn=" + std::to_string(m.false_negatives) +
              ", sigma_eps=" + fmt(model.sigma_eps, 4)};
}

// ---------------------------------------------------------------------------
// 7. End-to-end CLI determinism on a fabricated fixture corpus.

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ENKF_LSTM_CLI_PATH) + " " + args + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path.string() + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c7_determinism() {
  const fs::path base = fs::temp_directory_path() / "el_acceptance_7";
  fs::remove_all(base);
  fs::create_directories(base);

  // Fixture: a 12-word vocabulary with fixed 8-dim vectors and a 200-minute
  // record stream whose word choices are a deterministic arithmetic pattern.
  const char* vocab[12] = {"storm", "wind",  "rain",  "flood", "thunder", "surge",
                           "game",  "score", "team",  "match", "goal",    "fans"};
  const fs::path vec_path = base / "vectors.txt";
  {
    Rng rng(31415);
    std::ofstream out(vec_path);
    for (const char* word : vocab) {
      out << word;
      for (int i = 0; i < 8; ++i) out << ' ' << detail::format_double(rng.normal());
      out << '\n';
    }
  }
  const std::int64_t t0 = 1366005600;
  const fs::path rec_path = base / "records.jsonl";
  {
    std::ofstream out(rec_path);
    for (int i = 0; i < 300; ++i) {
      nlohmann::json j{{"ts", t0 + 40 * i},
                       {"text", std::string(vocab[(i * 7) % 12]) + " " +
                                    vocab[(i * 7 + 3) % 12] + " " + vocab[(i * 5 + 1) % 12]}};
      out << j.dump() << '\n';
    }
  }
  const fs::path truth_path = base / "truth.csv";
  {
    GroundTruth t;
    t.intervals.emplace_back(t0 + 6000, t0 + 6000);
    write_ground_truth_csv(truth_path.string(), t, "fixture");
  }

  const char* artifacts[] = {"windows.csv",       "ppca_model.bin",   "embed_summary.json",
                             "model.bin",         "ensemble.ckpt",    "training_log.jsonl",
                             "train_summary.json", "report.csv",      "detect_summary.json",
                             "metrics.json"};

  for (const char* run : {"r1", "r2"}) {
    const std::string d = (base / run).string();
    if (run_cli("embed --records " + rec_path.string() + " --word-vectors " +
                vec_path.string() + " --seed 123 --out-dir " + d) != 0)
      return {false, "embed failed in " + d};
    if (run_cli("train --members 50 --hidden-dim 8 --seed 123 --out-dir " + d) != 0)
      return {false, "train failed in " + d};
    if (run_cli("detect --seed 123 --out-dir " + d) != 0)
      return {false, "detect failed in " + d};
    if (run_cli("eval --ground-truth " + truth_path.string() + " --seed 123 --out-dir " + d) !=
        0)
      return {false, "eval failed in " + d};
  }

  std::string diffs;
  for (const char* name : artifacts)
    if (slurp(base / "r1" / name) != slurp(base / "r2" / name)) diffs += std::string(" ") + name;

  fs::remove_all(base);
  if (!diffs.empty()) return {false, "artifacts differ between reruns:" + diffs};
  return {true, "embed/train/detect/eval twice: all 10 artifacts byte-identical"};
}

// ---------------------------------------------------------------------------
// 8. PPCA vs. an in-file cyclic Jacobi eigendecomposition oracle.

void jacobi_eig(Eigen::MatrixXd a, Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
  const Eigen::Index n = a.rows();
  vecs = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  vals = a.diagonal();
}

// Small SPD solve by Gaussian elimination with partial pivoting.
Eigen::VectorXd solve_small(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    a.row(col).swap(a.row(piv));
    std::swap(b(col), b(piv));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      a.row(r) -= f * a.row(col);
      b(r) -= f * b(col);
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double acc = b(r);
    for (Eigen::Index k = r + 1; k < n; ++k) acc -= a(r, k) * x(k);
    x(r) = acc / a(r, r);
  }
  return x;
}

Outcome c8_ppca_oracle() {
  Rng rng(8008);
  double worst_val = 0.0, worst_vec = 0.0, worst_z = 0.0;
  int matrices = 0;

  for (int trial = 0; trial < 24; ++trial) {
    const Eigen::Index D = 3 + Eigen::Index(rng.uniform_int(6));
    const Eigen::Index M = 30 + Eigen::Index(rng.uniform_int(51));
    // Geometric variance ladder keeps the eigenvalue gaps well separated.
    Eigen::MatrixXd data(M, D);
    for (Eigen::Index i = 0; i < M; ++i)
      for (Eigen::Index j = 0; j < D; ++j)
        data(i, j) = std::pow(0.6, double(j)) * rng.normal() + double(j);

    const PpcaModel model = fit_ppca(data);  // automatic d at 99%
    if (model.explained_variance < 0.99)
      return {false, "auto-d explained only " + fmt(model.explained_variance, 6)};

    // Oracle: plain-loop sample covariance, Jacobi eigensolver, literal
    // posterior-mean projection.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (Eigen::Index i = 0; i < M; ++i) mean += data.row(i).transpose();
    mean /= double(M);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
    for (Eigen::Index i = 0; i < M; ++i) {
      const Eigen::VectorXd r = data.row(i).transpose() - mean;
      for (Eigen::Index a = 0; a < D; ++a)
        for (Eigen::Index b = 0; b < D; ++b) cov(a, b) += r(a) * r(b);
    }
    cov /= double(M - 1);

    Eigen::VectorXd vals;
    Eigen::MatrixXd vecs;
    jacobi_eig(cov, vals, vecs);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(D));
    for (Eigen::Index i = 0; i < D; ++i) order[size_t(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return vals(a) > vals(b); });

    const Eigen::Index d = model.d;
    Eigen::VectorXd lam(d);
    Eigen::MatrixXd comp(D, d);
    for (Eigen::Index c = 0; c < d; ++c) {
      lam(c) = vals(order[size_t(c)]);
      comp.col(c) = vecs.col(order[size_t(c)]);
      Eigen::Index at = 0;
      comp.col(c).cwiseAbs().maxCoeff(&at);
      if (comp(at, c) < 0.0) comp.col(c) = -comp.col(c);
    }
    double resid = 0.0;
    for (Eigen::Index c = d; c < D; ++c) resid += std::max(0.0, vals(order[size_t(c)]));
    if (d < D) resid /= double(D - d);

    worst_val = std::max(worst_val, (lam - model.eigenvalues).cwiseAbs().maxCoeff() /
                                        std::max(1.0, lam(0)));
    worst_vec = std::max(worst_vec, (comp - model.components).cwiseAbs().maxCoeff());

    // Probe the projection through both routes.
    const Eigen::VectorXd load = (lam.array() - resid).max(0.0).sqrt();
    const Eigen::MatrixXd w = comp * load.asDiagonal();
    Eigen::MatrixXd mp = w.transpose() * w;
    mp.diagonal().array() += resid;
    for (int probe = 0; probe < 3; ++probe) {
      Eigen::VectorXd v(D);
      for (Eigen::Index i = 0; i < D; ++i) v(i) = mean(i) + rng.normal();
      const Eigen::VectorXd z_oracle = solve_small(mp, w.transpose() * (v - mean));
      const Eigen::VectorXd z_impl = transform(model, v);
      worst_z = std::max(worst_z, (z_oracle - z_impl).cwiseAbs().maxCoeff());
    }
    ++matrices;
  }

  const bool pass = worst_val <= 1e-8 && worst_vec <= 1e-8 && worst_z <= 1e-8;
  return {pass, std::to_string(matrices) + " matrices: eigenvalue gap " + fmt(worst_val, 3) +
                    ", component gap " + fmt(worst_vec, 3) + ", projection gap " +
                    fmt(worst_z, 3)};
}

// ---------------------------------------------------------------------------
// 9. Sensitivity grid over ensemble size and initial noise variance.

Outcome c9_sensitivity() {
  SynthConfig sc;
  Rng synth_rng(derive_seed(0, RngStream::synthetic));
  const SyntheticStream stream = generate_synthetic(sc, synth_rng);
  const std::int64_t span = static_cast<std::int64_t>(std::llround(sc.window_minutes * 60.0));

  const Eigen::Index member_grid[] = {20, 50, 100, 200};
  const double sigma_grid[] = {0.05, 0.5, 1.0, 2.0};

  nlohmann::json grid = nlohmann::json::array();
  for (const Eigen::Index members : member_grid) {
    for (const double s2 : sigma_grid) {
      TrainingConfig tc;
      tc.n_members = members;
      tc.sigma_eps_init = s2;
      tc.hidden_dim = 16;
      tc.mle_max_iters = 3;
      tc.workers = 1;
      const auto samples = make_samples(stream.windows, tc.sequence_len);
      const PosteriorModel model = train(samples, tc);
      const auto reports =
          detect(stream.windows, stream.timestamps, model, tc.sequence_len, 1);
      const DetectionMetrics m = evaluate(reports, stream.truth, 1, span);
      std::size_t flagged = 0;
      for (const auto& r : reports) flagged += r.is_outlier ? 1 : 0;
      grid.push_back({{"members", members},
                      {"sigma_eps_init", s2},
                      {"sigma_eps_final", model.sigma_eps},
                      {"flagged", flagged},
                      {"precision", m.precision ? nlohmann::json(*m.precision)
                                                : nlohmann::json()},
                      {"recall", m.recall ? nlohmann::json(*m.recall) : nlohmann::json()},
                      {"f1", m.f1 ? nlohmann::json(*m.f1) : nlohmann::json()}});
    }
  }

  const fs::path out = fs::temp_directory_path() / "el_acceptance_sensitivity.json";
  std::ofstream file(out);
  file << grid.dump(2) << '\n';
  const bool pass = grid.size() == 16 && file.good();
  return {pass, "16/16 grid cells completed; metrics grid written to " + out.string()};
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  double budget_seconds;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"lstm_oracle", 10, c1_lstm_oracle},   {"kalman_limit", 30, c2_kalman_limit},
    {"noise_mle", 20, c3_noise_mle},       {"chi2_oracle", 5, c4_chi2_oracle},
    {"calibration", 180, c5_calibration},  {"injection_recall", 300, c6_injection_recall},
    {"determinism", 360, c7_determinism},  {"ppca_oracle", 10, c8_ppca_oracle},
    {"sensitivity", 1200, c9_sensitivity},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 9) {
      std::cerr << "usage: acceptance [1-9]\n";
      return 2;
    }
  }

  int failures = 0;
  for (int i = 0; i < 9; ++i) {
    if (only && only != i + 1) continue;
    const Criterion& c = kCriteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.budget_seconds) {
      out.pass = false;
      out.details += "; exceeded " + fmt(c.budget_seconds, 4) + " s budget";
    }
    std::cout << "[" << (i + 1) << "] " << c.name << ": " << (out.pass ? "PASS" : "FAIL")
              << " (" << out.details << "; " << fmt(elapsed, 3) << " s)\n";
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
