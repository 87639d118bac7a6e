#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "enkf_lstm/enkf_lstm.hpp"

namespace fs = std::filesystem;
namespace el = enkf_lstm;

namespace {

std::string out_path(const el::RunConfig& c, const char* name) {
  return (fs::path(c.out_dir) / name).string();
}

void prepare_out_dir(const el::RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw el::IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  std::ofstream echo(out_path(c, "effective_config.txt"), std::ios::trunc);
  if (!echo) throw el::IoError("cannot write effective_config.txt");
  echo << el::render_config(c);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  auto out = el::detail::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw el::IoError("write failed: " + path);
}

std::vector<std::string> split_keywords(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto pos = csv.find(',', start);
    const std::string item =
        csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<el::WindowEmbedding> stream_to_windows(const el::SyntheticStream& s) {
  std::vector<el::WindowEmbedding> out(static_cast<std::size_t>(s.windows.rows()));
  for (Eigen::Index t = 0; t < s.windows.rows(); ++t) {
    auto& w = out[static_cast<std::size_t>(t)];
    w.index = t;
    w.start_time = s.timestamps[static_cast<std::size_t>(t)];
    w.n_sentences = 0;
    w.vector = s.windows.row(t).transpose();
  }
  return out;
}

int cmd_synth(const el::RunConfig& c) {
  prepare_out_dir(c);
  el::SynthConfig sc;
  sc.n_windows = c.synth_windows;
  const auto d = el::latent_dim_value(c);
  sc.dim = d ? *d : 5;
  sc.hidden_dim = c.synth_hidden;
  sc.n_outliers = c.synth_outliers;
  sc.magnitude = c.synth_magnitude;
  sc.noise_std = c.synth_noise_std;
  sc.min_index = c.synth_min_index;
  sc.min_gap = c.synth_min_gap;
  sc.start_time = el::detail::parse_iso8601(c.synth_start_time);
  sc.window_minutes = c.window_minutes;

  el::Rng rng(el::derive_seed(c.seed, el::RngStream::synthetic));
  const el::SyntheticStream stream = el::generate_synthetic(sc, rng);
  el::write_windows_csv(out_path(c, "windows.csv"), stream_to_windows(stream));
  el::write_ground_truth_csv(out_path(c, "ground_truth.csv"), stream.truth, "injected");
  nlohmann::json summary{{"windows", sc.n_windows},
                         {"dim", sc.dim},
                         {"outliers", static_cast<std::int64_t>(stream.truth.intervals.size())},
                         {"magnitude", sc.magnitude}};
  write_json_file(out_path(c, "synth_summary.json"), summary);
  std::cout << "wrote " << out_path(c, "windows.csv") << " and "
            << out_path(c, "ground_truth.csv") << "\n";
  return 0;
}

int cmd_embed(const el::RunConfig& c) {
  if (c.records_path.empty()) throw el::ConfigError("embed requires records=<path>");
  if (c.word_vectors_path.empty()) throw el::ConfigError("embed requires word.vectors=<path>");
  if (c.ppca_fit_on != "windows" && c.ppca_fit_on != "words")
    throw el::ConfigError("ppca.fit.on must be 'windows' or 'words'");
  prepare_out_dir(c);

  el::EventSpec spec;
  spec.name = "run";
  spec.collection_start = c.collection_start.empty()
                              ? std::numeric_limits<std::int64_t>::min() / 4
                              : el::detail::parse_iso8601(c.collection_start);
  spec.collection_end = c.collection_end.empty() ? std::numeric_limits<std::int64_t>::max() / 4
                                                 : el::detail::parse_iso8601(c.collection_end);
  spec.event_time = spec.collection_start;
  spec.keywords = split_keywords(c.keywords);
  const el::IngestResult ingested = el::ingest(c.records_path, spec);
  if (ingested.records.empty())
    throw el::DataError("no records left after filtering " + c.records_path);

  const el::WordVectorTable table = el::load_word_vectors(c.word_vectors_path);
  el::EmbeddingConfig ec;
  ec.window_minutes = c.window_minutes;
  ec.latent_dim = el::latent_dim_value(c);
  ec.fit_on_words = c.ppca_fit_on == "words";
  const el::EmbeddingResult res = el::pipeline(ingested.records, table, ec);

  el::write_windows_csv(out_path(c, "windows.csv"), res.windows);
  el::save_ppca(out_path(c, "ppca_model.bin"), res.ppca);
  nlohmann::json summary{{"records_kept", ingested.kept},
                         {"records_dropped", ingested.dropped},
                         {"records_malformed", ingested.malformed},
                         {"windows", res.windows.size()},
                         {"latent_dim", res.ppca.d},
                         {"explained_variance", res.ppca.explained_variance},
                         {"residual_variance", res.ppca.residual_variance},
                         {"skipped_vector_lines", table.skipped_lines}};
  write_json_file(out_path(c, "embed_summary.json"), summary);
  std::cout << "wrote " << out_path(c, "windows.csv") << " (" << res.windows.size()
            << " windows, d=" << res.ppca.d << ")\n";
  return 0;
}

int cmd_train(const el::RunConfig& c) {
  prepare_out_dir(c);
  const std::string windows_file =
      c.windows_path.empty() ? out_path(c, "windows.csv") : c.windows_path;
  const auto windows = el::read_windows_csv(windows_file);
  const Eigen::MatrixXd series = el::windows_matrix(windows);
  const auto samples = el::make_samples(series, c.sequence_len);
  const el::TrainingConfig tc = el::training_config(c);

  el::PosteriorModel model;
  if (!c.resume_from.empty()) {
    const el::EnsembleCheckpoint ck = el::load_ensemble(c.resume_from);
    el::ResumeState rs{ck.ensemble, ck.step};
    model = el::train(samples, tc, &rs);
  } else {
    model = el::train(samples, tc);
  }

  el::save_model(out_path(c, "model.bin"), model, tc);
  el::save_ensemble(out_path(c, "ensemble.ckpt"), model.weight_ensemble, c.seed,
                    model.batches_done);
  {
    auto log = el::detail::open_output(out_path(c, "training_log.jsonl"));
    for (const auto& r : model.training_log) {
      nlohmann::json j{{"pass", r.pass},
                       {"batch", r.batch},
                       {"lower_bound", r.lower_bound},
                       {"innovation_norm", r.innovation_norm},
                       {"sigma_eps", r.sigma_eps}};
      log << j.dump() << '\n';
    }
    if (!log) throw el::IoError("write failed: training_log.jsonl");
  }
  nlohmann::json summary{{"samples", samples.size()},
                         {"passes", model.passes},
                         {"batches_done", model.batches_done},
                         {"sigma_eps", model.sigma_eps}};
  write_json_file(out_path(c, "train_summary.json"), summary);
  std::cout << "trained on " << samples.size() << " samples; sigma_eps = " << model.sigma_eps
            << "; wrote " << out_path(c, "model.bin") << "\n";
  return 0;
}

int cmd_detect(const el::RunConfig& c) {
  prepare_out_dir(c);
  const std::string model_file = c.model_path.empty() ? out_path(c, "model.bin") : c.model_path;
  const std::string windows_file =
      c.windows_path.empty() ? out_path(c, "windows.csv") : c.windows_path;
  el::TrainingConfig mc;
  const el::PosteriorModel model = el::load_model(model_file, &mc);
  const auto windows = el::read_windows_csv(windows_file);
  const Eigen::MatrixXd series = el::windows_matrix(windows);
  std::vector<std::int64_t> timestamps;
  timestamps.reserve(windows.size());
  for (const auto& w : windows) timestamps.push_back(w.start_time);

  const auto reports = el::detect(series, timestamps, model, mc.sequence_len, c.workers);
  el::write_reports_csv(out_path(c, "report.csv"), reports);
  write_json_file(out_path(c, "detect_summary.json"), el::reports_summary(reports));
  std::size_t flagged = 0;
  for (const auto& r : reports) flagged += r.is_outlier ? 1 : 0;
  std::cout << "evaluated " << reports.size() << " windows, flagged " << flagged << "; wrote "
            << out_path(c, "report.csv") << "\n";
  return 0;
}

int cmd_eval(const el::RunConfig& c) {
  prepare_out_dir(c);
  const std::string reports_file =
      c.reports_path.empty() ? out_path(c, "report.csv") : c.reports_path;
  const std::string truth_file =
      c.ground_truth_path.empty() ? out_path(c, "ground_truth.csv") : c.ground_truth_path;
  const auto reports = el::read_reports_csv(reports_file);
  const el::GroundTruth truth = el::read_ground_truth_csv(truth_file);
  const auto window_seconds =
      static_cast<std::int64_t>(std::llround(c.window_minutes * 60.0));
  const el::DetectionMetrics m =
      el::evaluate(reports, truth, c.tolerance_windows, window_seconds);
  write_json_file(out_path(c, "metrics.json"), el::metrics_json(m));
  std::cout << "tp=" << m.true_positives << " fp=" << m.false_positives
            << " fn=" << m.false_negatives << "; wrote " << out_path(c, "metrics.json") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-event detection: EnKF-trained Bayesian LSTM over windowed text embeddings"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;  // dotted key -> raw value

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    auto opt = [&, sub](const char* flag, const char* key, const char* help) {
      sub->add_option_function<std::string>(
             flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help)
          ->expected(1);
    };
    opt("--seed", "seed", "master RNG seed");
    opt("--out-dir", "out.dir", "output directory");
    opt("--window-minutes", "window.minutes", "time-window length in minutes");
    opt("--latent-dim", "latent.dim", "latent dimension or 'auto99'");
    opt("--sequence-len", "sequence.len", "windows per training sample");
    opt("--batch-size", "batch.size", "samples per assimilation step");
    opt("--members", "members", "ensemble size");
    opt("--hidden-dim", "hidden.dim", "LSTM cells");
    opt("--sigma-w", "sigma.w", "prior weight standard deviation");
    opt("--sigma-eps", "sigma.eps", "initial observation-noise variance");
    opt("--mle-max-iters", "mle.max.iters", "max noise-variance refit passes");
    opt("--mle-rel-tol", "mle.rel.tol", "noise-variance convergence tolerance");
    opt("--tolerance-windows", "tolerance.windows", "matching slack, in windows");
    opt("--workers", "workers", "worker threads (0 = all cores)");
    opt("--max-batches", "max.batches", "stop each pass after this many batches");
    opt("--ppca-fit-on", "ppca.fit.on", "fit PPCA on 'windows' or 'words'");
    opt("--records", "records", "JSON-lines records file");
    opt("--word-vectors", "word.vectors", "word-vector text file");
    opt("--ground-truth", "ground.truth", "ground-truth CSV");
    opt("--windows-file", "windows.file", "window-embedding CSV input");
    opt("--model-file", "model.file", "model checkpoint input");
    opt("--reports-file", "reports.file", "detection report CSV input");
    opt("--resume-from", "resume.from", "ensemble checkpoint to resume from");
    opt("--keywords", "keywords", "comma-separated include keywords");
    opt("--collection-start", "collection.start", "ingest window start (ISO 8601)");
    opt("--collection-end", "collection.end", "ingest window end (ISO 8601)");
    opt("--synth-windows", "synth.windows", "synthetic series length");
    opt("--synth-outliers", "synth.outliers", "injected outlier count");
    opt("--synth-magnitude", "synth.magnitude", "injection size in marginal stds");
    opt("--synth-hidden", "synth.hidden", "synthetic base-dynamics LSTM cells");
    opt("--synth-noise-std", "synth.noise.std", "synthetic driving-noise std");
    opt("--synth-min-index", "synth.min.index", "first injectable window");
    opt("--synth-min-gap", "synth.min.gap", "minimum spacing between injections");
    opt("--synth-start-time", "synth.start.time", "synthetic grid origin (ISO 8601)");
    sub->add_flag_function(
        "--mle", [&overrides](std::int64_t) { overrides["mle"] = "true"; },
        "enable the noise-variance MLE loop");
    sub->add_flag_function(
        "--no-mle", [&overrides](std::int64_t) { overrides["mle"] = "false"; },
        "disable the noise-variance MLE loop");
  };

  CLI::App* sub_embed = app.add_subcommand("embed", "records -> windowed latent embeddings");
  CLI::App* sub_train = app.add_subcommand("train", "fit the weight ensemble on windows");
  CLI::App* sub_detect = app.add_subcommand("detect", "flag outlier windows under a model");
  CLI::App* sub_eval = app.add_subcommand("eval", "score a report against ground truth");
  CLI::App* sub_synth = app.add_subcommand("synth", "generate a synthetic windowed stream");
  for (CLI::App* s : {sub_embed, sub_train, sub_detect, sub_eval, sub_synth}) add_common(s);

  CLI11_PARSE(app, argc, argv);

  try {
    el::RunConfig config;
    if (!config_path.empty()) el::apply_config_file(config, config_path);
    for (const auto& [key, value] : overrides) el::apply_config_value(config, key, value);

    if (sub_embed->parsed()) return cmd_embed(config);
    if (sub_train->parsed()) return cmd_train(config);
    if (sub_detect->parsed()) return cmd_detect(config);
    if (sub_eval->parsed()) return cmd_eval(config);
    if (sub_synth->parsed()) return cmd_synth(config);
    return 2;
  } catch (const el::Error& e) {
    nlohmann::json err{{"error", {{"category", el::category_name(e.category())},
                                  {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"category", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
