#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "enkf_lstm/detail/parallel.hpp"
#include "enkf_lstm/enkf.hpp"
#include "enkf_lstm/errors.hpp"
#include "enkf_lstm/lstm.hpp"
#include "enkf_lstm/rng.hpp"

namespace enkf_lstm {

struct TrainingConfig {
  Eigen::Index sequence_len = 32;   // windows per input sample (l)
  Eigen::Index batch_size = 16;     // samples per assimilation step (s)
  Eigen::Index n_members = 100;     // ensemble size N
  Eigen::Index hidden_dim = 32;
  double sigma_w = 1.0;             // prior weight std
  double sigma_eps_init = 1.0;      // initial observation-noise variance
  bool mle_enabled = true;
  int mle_max_iters = 5;            // outer retrain passes
  double mle_rel_tol = 0.01;        // stop when the estimate moves < 1%
  std::uint64_t seed = 0;
  int workers = 0;                  // 0 = all available cores
  Eigen::Index max_batches = -1;    // stop a pass early (partial runs); -1 = all
};

inline void validate_config(const TrainingConfig& c) {
  if (c.sequence_len < 1) throw ConfigError("sequence_len must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.n_members < 2) throw ConfigError("n_members must be >= 2");
  if (c.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (!(c.sigma_w > 0.0)) throw ConfigError("sigma_w must be > 0");
  if (!(c.sigma_eps_init > 0.0)) throw ConfigError("sigma_eps_init must be > 0");
  if (c.mle_max_iters < 1) throw ConfigError("mle_max_iters must be >= 1");
  if (!(c.mle_rel_tol > 0.0)) throw ConfigError("mle_rel_tol must be > 0");
  if (c.workers < 0) throw ConfigError("workers must be >= 0");
}

inline int effective_workers(const TrainingConfig& c) {
  return c.workers > 0 ? c.workers : detail::default_workers();
}

// x rows are sequence_len consecutive window embeddings; y is the window
// immediately after them.
struct SamplePair {
  Eigen::MatrixXd x;  // sequence_len x d
  Eigen::VectorXd y;  // d
};

// Sliding stride-1 pairs over a T x d window matrix: T - sequence_len samples.
inline std::vector<SamplePair> make_samples(const Eigen::MatrixXd& windows,
                                            Eigen::Index sequence_len) {
  if (sequence_len < 1) throw ArgumentError("make_samples: sequence_len must be >= 1");
  const Eigen::Index T = windows.rows();
  if (T < sequence_len + 1)
    throw ArgumentError("make_samples: need at least sequence_len + 1 = " +
                        std::to_string(sequence_len + 1) + " windows, got " +
                        std::to_string(T));
  std::vector<SamplePair> out(static_cast<std::size_t>(T - sequence_len));
  for (Eigen::Index i = 0; i + sequence_len < T; ++i) {
    out[static_cast<std::size_t>(i)].x = windows.middleRows(i, sequence_len);
    out[static_cast<std::size_t>(i)].y = windows.row(i + sequence_len);
  }
  return out;
}

struct BatchRecord {
  int pass = 0;
  Eigen::Index batch = 0;
  double lower_bound = 0.0;      // Jensen bound of the batch log-evidence
  double innovation_norm = 0.0;  // ||Y - mean forecast||
  double sigma_eps = 0.0;        // noise variance in effect for this batch
};

struct PosteriorModel {
  Ensemble weight_ensemble;  // weight_count(shape) x N
  LstmShape shape;
  double sigma_eps = 1.0;    // final noise-variance estimate
  std::vector<BatchRecord> training_log;
  int passes = 0;
  std::int64_t batches_done = 0;  // within the final pass
};

// Closed-form maximizer of the Jensen-style likelihood lower bound: the mean
// squared residual per scalar coordinate, averaged over members and targets.
// member_outputs[j] holds the per-member predictions for target j as columns.
inline double estimate_noise_variance(const std::vector<Eigen::VectorXd>& targets,
                                      const std::vector<Eigen::MatrixXd>& member_outputs) {
  if (targets.empty()) throw ArgumentError("estimate_noise_variance: no targets");
  if (member_outputs.size() != targets.size())
    throw ShapeError("estimate_noise_variance: outputs/targets length mismatch");
  const Eigen::Index q = targets.front().size();
  const Eigen::Index N = member_outputs.front().cols();
  if (q < 1 || N < 1) throw ShapeError("estimate_noise_variance: empty instance");
  double ss = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j].size() != q || member_outputs[j].rows() != q ||
        member_outputs[j].cols() != N)
      throw ShapeError("estimate_noise_variance: inconsistent dimensions at target " +
                       std::to_string(j));
    ss += (member_outputs[j].colwise() - targets[j]).squaredNorm();
  }
  const double denom = double(q) * double(targets.size()) * double(N);
  if (ss == 0.0) {
    std::cerr << "warning: all residuals are exactly zero; clamping noise variance to 1e-12\n";
    return 1e-12;
  }
  return ss / denom;
}

// Propagates one flat weight vector through the LSTM for a whole batch of
// sequences at once (shared input tensor, per-gate GEMMs).
class LstmPropagator {
 public:
  explicit LstmPropagator(LstmShape shape) : shape_(shape) { validate_shape(shape); }

  Eigen::Index weight_dim() const { return weight_count(shape_); }
  Eigen::Index output_dim() const { return shape_.output_dim; }

  void begin_batch(const SamplePair* batch, Eigen::Index count) {
    if (count < 1) throw ArgumentError("begin_batch: empty batch");
    const Eigen::Index l = batch[0].x.rows();
    steps_.assign(static_cast<std::size_t>(l),
                  Eigen::MatrixXd(shape_.input_dim, count));
    for (Eigen::Index c = 0; c < count; ++c) {
      const SamplePair& s = batch[c];
      if (s.x.rows() != l || s.x.cols() != shape_.input_dim ||
          s.y.size() != shape_.output_dim)
        throw ShapeError("begin_batch: sample " + std::to_string(c) +
                         " has inconsistent dimensions");
      for (Eigen::Index t = 0; t < l; ++t)
        steps_[static_cast<std::size_t>(t)].col(c) = s.x.row(t);
    }
  }

  // y gets the final-step outputs, output_dim x count. Thread-safe across
  // concurrent calls once begin_batch has run.
  void propagate(const double* weights, Eigen::MatrixXd& y) const {
    WeightView view(weights, shape_);
    LstmWork wk;
    forward_batch(view, shape_, steps_, wk);
    y = wk.y;
  }

 private:
  LstmShape shape_;
  std::vector<Eigen::MatrixXd> steps_;
};

struct ResumeState {
  Ensemble weights;
  std::int64_t batches_done = 0;
};

struct TrainCoreResult {
  Ensemble weights;
  double sigma_eps = 0.0;
  std::vector<BatchRecord> log;
  int passes = 0;
  std::int64_t batches_done = 0;  // within the final pass
};

// Batch-mode assimilation: per batch, forward-propagate every member, augment
// the outputs with the member's weights, update the augmented ensemble
// against the stacked batch targets, and carry only the weight block forward.
// With MLE enabled the whole pass is rerun from the prior with the refreshed
// noise variance until the estimate settles.
template <class Propagator>
TrainCoreResult train_core(const std::vector<SamplePair>& samples, const TrainingConfig& cfg,
                           Propagator& prop, const ResumeState* resume = nullptr) {
  validate_config(cfg);
  if (samples.empty()) throw ArgumentError("train: no samples");
  if (resume && cfg.mle_enabled)
    throw ConfigError("resuming requires mle_enabled = false (the noise-variance loop "
                      "restarts training from the prior)");

  const Eigen::Index q = prop.output_dim();
  const Eigen::Index W = prop.weight_dim();
  const Eigen::Index N = cfg.n_members;
  const Eigen::Index M = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index n_batches = (M + cfg.batch_size - 1) / cfg.batch_size;
  const int workers = effective_workers(cfg);

  if (resume) {
    if (resume->weights.dim() != W || resume->weights.n_members() != N)
      throw ShapeError("resume checkpoint dimensions do not match the configuration");
    if (resume->batches_done < 0 || resume->batches_done > n_batches)
      throw ArgumentError("resume checkpoint step out of range");
  }

  Rng prior_rng(derive_seed(cfg.seed, RngStream::prior_sampling));
  const Ensemble prior = sample_prior(W, cfg.sigma_w, N, prior_rng);

  TrainCoreResult result;
  double sigma2 = cfg.sigma_eps_init;
  const int max_passes = cfg.mle_enabled ? cfg.mle_max_iters : 1;

  for (int pass = 0; pass < max_passes; ++pass) {
    Ensemble weights = resume ? resume->weights : prior;
    const Eigen::Index start_batch = resume ? static_cast<Eigen::Index>(resume->batches_done) : 0;
    Eigen::Index end_batch = n_batches;
    if (cfg.max_batches >= 0)
      end_batch = std::min(n_batches, start_batch + cfg.max_batches);

    for (Eigen::Index b = start_batch; b < end_batch; ++b) {
      const Eigen::Index first = b * cfg.batch_size;
      const Eigen::Index count = std::min(cfg.batch_size, M - first);
      const Eigen::Index obs_dim = count * q;
      prop.begin_batch(samples.data() + first, count);

      Ensemble aug;
      aug.members.resize(obs_dim + W, N);
      aug.members.bottomRows(W) = weights.members;
      detail::parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t j) {
        Eigen::MatrixXd y;
        prop.propagate(aug.members.col(static_cast<Eigen::Index>(j)).tail(W).data(), y);
        aug.members.col(static_cast<Eigen::Index>(j)).head(obs_dim) =
            Eigen::Map<const Eigen::VectorXd>(y.data(), obs_dim);
      });
      if (!aug.members.topRows(obs_dim).allFinite())
        throw NumericalError("batch " + std::to_string(b) +
                             ": non-finite member outputs; training aborted");

      Eigen::VectorXd obs(obs_dim);
      for (Eigen::Index c = 0; c < count; ++c)
        obs.segment(c * q, q) = samples[static_cast<std::size_t>(first + c)].y;

      const auto forecast = aug.members.topRows(obs_dim);
      const double forecast_ss = (forecast.colwise() - obs).squaredNorm();
      BatchRecord rec;
      rec.pass = pass;
      rec.batch = b;
      rec.sigma_eps = sigma2;
      rec.lower_bound = -0.5 * double(obs_dim) * std::log(2.0 * M_PI * sigma2) -
                        forecast_ss / (2.0 * sigma2 * double(N));
      rec.innovation_norm = (obs - forecast.rowwise().mean()).norm();
      result.log.push_back(rec);

      Rng pert_rng(derive_seed(cfg.seed, RngStream::perturbations,
                               (std::uint64_t(pass) << 32) | std::uint64_t(b)));
      try {
        aug = analysis_update(aug, obs, ObservationModel{obs_dim, sigma2}, pert_rng);
      } catch (const NumericalError& e) {
        throw NumericalError("batch " + std::to_string(b) + ": " + e.what());
      }
      weights.members = aug.members.bottomRows(W);
    }

    result.weights = std::move(weights);
    result.passes = pass + 1;
    result.batches_done = end_batch;
    if (!cfg.mle_enabled) {
      result.sigma_eps = sigma2;
      return result;
    }

    // Refresh the noise variance from the posterior residuals over all data.
    prop.begin_batch(samples.data(), M);
    Eigen::MatrixXd targets(q, M);
    for (Eigen::Index j = 0; j < M; ++j)
      targets.col(j) = samples[static_cast<std::size_t>(j)].y;
    std::vector<double> member_ss(static_cast<std::size_t>(N), 0.0);
    detail::parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t i) {
      Eigen::MatrixXd y;
      prop.propagate(result.weights.members.col(static_cast<Eigen::Index>(i)).data(), y);
      member_ss[i] = (y - targets).squaredNorm();
    });
    double ss = 0.0;
    for (double v : member_ss) ss += v;
    double estimate = ss / (double(q) * double(M) * double(N));
    if (ss == 0.0) {
      std::cerr << "warning: all residuals are exactly zero; clamping noise variance to 1e-12\n";
      estimate = 1e-12;
    }
    const double rel_change = std::abs(estimate - sigma2) / sigma2;
    sigma2 = estimate;
    result.sigma_eps = sigma2;
    if (rel_change < cfg.mle_rel_tol) return result;
  }
  return result;
}

inline PosteriorModel train(const std::vector<SamplePair>& samples, const TrainingConfig& cfg,
                            const ResumeState* resume = nullptr) {
  if (samples.empty()) throw ArgumentError("train: no samples");
  const Eigen::Index d = samples.front().x.cols();
  LstmShape shape{d, cfg.hidden_dim, d};
  LstmPropagator prop(shape);
  TrainCoreResult core = train_core(samples, cfg, prop, resume);
  PosteriorModel model;
  model.weight_ensemble = std::move(core.weights);
  model.shape = shape;
  model.sigma_eps = core.sigma_eps;
  model.training_log = std::move(core.log);
  model.passes = core.passes;
  model.batches_done = core.batches_done;
  return model;
}

struct PredictiveDistribution {
  Eigen::MatrixXd samples;  // N x q, row j = f(x*, w_j)
  Eigen::VectorXd mean;     // q
  Eigen::MatrixXd cov;      // q x q: sample covariance + sigma_eps * I
};

inline PredictiveDistribution predict(const PosteriorModel& model,
                                      const Eigen::MatrixXd& x_star, int workers = 0) {
  if (x_star.rows() < 1) throw ArgumentError("predict: empty input sequence");
  if (x_star.cols() != model.shape.input_dim)
    throw ShapeError("predict: input width does not match input_dim");
  const Eigen::Index N = model.weight_ensemble.n_members();
  const Eigen::Index q = model.shape.output_dim;
  if (model.weight_ensemble.dim() != weight_count(model.shape))
    throw ShapeError("predict: weight ensemble does not match model shape");

  std::vector<Eigen::MatrixXd> steps(static_cast<std::size_t>(x_star.rows()));
  for (Eigen::Index t = 0; t < x_star.rows(); ++t)
    steps[static_cast<std::size_t>(t)] = x_star.row(t).transpose();

  PredictiveDistribution out;
  out.samples.resize(N, q);
  const int w = workers > 0 ? workers : detail::default_workers();
  detail::parallel_for(static_cast<std::size_t>(N), w, [&](std::size_t j) {
    WeightView view(model.weight_ensemble.members.col(static_cast<Eigen::Index>(j)).data(),
                    model.shape);
    LstmWork wk;
    forward_batch(view, model.shape, steps, wk);
    out.samples.row(static_cast<Eigen::Index>(j)) = wk.y.col(0);
  });

  out.mean = out.samples.colwise().mean();
  Eigen::MatrixXd centered = out.samples.rowwise() - out.mean.transpose();
  out.cov = Eigen::MatrixXd::Zero(q, q);
  out.cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                     1.0 / double(N - 1));
  out.cov.triangularView<Eigen::StrictlyUpper>() = out.cov.transpose();
  out.cov.diagonal().array() += model.sigma_eps;
  return out;
}

// --- model_v1 checkpoint: JSON header + embedded ensemble_v1 payload ---

inline void save_model(const std::string& path, const PosteriorModel& model,
                       const TrainingConfig& cfg) {
  auto out = detail::open_output(path, true);
  nlohmann::json header{{"format", "model_v1"},
                        {"input_dim", model.shape.input_dim},
                        {"hidden_dim", model.shape.hidden_dim},
                        {"output_dim", model.shape.output_dim},
                        {"sigma_eps", model.sigma_eps},
                        {"passes", model.passes},
                        {"sequence_len", cfg.sequence_len},
                        {"batch_size", cfg.batch_size},
                        {"n_members", cfg.n_members},
                        {"sigma_w", cfg.sigma_w},
                        {"sigma_eps_init", cfg.sigma_eps_init},
                        {"mle_enabled", cfg.mle_enabled},
                        {"seed", cfg.seed}};
  detail::write_json_header(out, header);
  write_ensemble(out, model.weight_ensemble, cfg.seed, model.passes);
  if (!out) throw IoError("write failed: " + path);
}

inline PosteriorModel load_model(const std::string& path, TrainingConfig* cfg_out = nullptr) {
  auto in = detail::open_input(path, true);
  nlohmann::json h = detail::read_json_header(in, path);
  if (h.value("format", "") != "model_v1") throw IoError("unexpected format in " + path);
  PosteriorModel model;
  model.shape = LstmShape{h.at("input_dim").get<Eigen::Index>(),
                          h.at("hidden_dim").get<Eigen::Index>(),
                          h.at("output_dim").get<Eigen::Index>()};
  model.sigma_eps = h.at("sigma_eps").get<double>();
  model.passes = h.at("passes").get<int>();
  EnsembleCheckpoint ck = read_ensemble(in, path);
  if (ck.ensemble.dim() != weight_count(model.shape))
    throw IoError("model ensemble does not match its shape header: " + path);
  model.weight_ensemble = std::move(ck.ensemble);
  if (cfg_out) {
    cfg_out->sequence_len = h.at("sequence_len").get<Eigen::Index>();
    cfg_out->batch_size = h.at("batch_size").get<Eigen::Index>();
    cfg_out->n_members = h.at("n_members").get<Eigen::Index>();
    cfg_out->hidden_dim = model.shape.hidden_dim;
    cfg_out->sigma_w = h.at("sigma_w").get<double>();
    cfg_out->sigma_eps_init = h.at("sigma_eps_init").get<double>();
    cfg_out->mle_enabled = h.at("mle_enabled").get<bool>();
    cfg_out->seed = h.at("seed").get<std::uint64_t>();
  }
  return model;
}

}  // namespace enkf_lstm
