/*
 * Copyright 2026 The cyclosync Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyclosync/cyclosync.hpp"

namespace cs = cyclosync;
namespace fs = std::filesystem;

namespace {

constexpr int kInputError = 2;
constexpr int kNumericError = 3;

struct VideoInput {
  cs::FrameSeries video;
  cs::VideoDescriptor descriptor;
  std::optional<cs::EcgTrace> ecg;
  fs::path dir;
};

VideoInput load_video_dir(const fs::path& dir) {
  VideoInput v;
  v.dir = dir;
  v.descriptor = cs::load_descriptor(dir / "descriptor.json");
  v.video = cs::load_frame_series(dir);
  if (fs::exists(dir / "ecg.csv")) v.ecg = cs::load_ecg(dir / "ecg.csv", v.descriptor.timing());
  return v;
}

cs::ContrastWindow window_for(const cs::FrameSeries& video, bool contrast_window) {
  return contrast_window ? cs::extract_contrast_window(video) : cs::ContrastWindow{0, video.size()};
}

// A phase file is either a truth file with per-frame phases or a peak list.
cs::PhaseTrack phase_from_file(const fs::path& path, std::size_t frames) {
  const auto j = cs::load_json(path);
  if (j.contains("phases")) {
    cs::PhaseTrack t;
    t.phases = j["phases"].get<std::vector<double>>();
    t.valid = j.contains("valid") ? j["valid"].get<std::vector<std::uint8_t>>()
                                  : std::vector<std::uint8_t>(t.phases.size(), 1);
    cs::require(t.phases.size() == frames && t.valid.size() == frames, cs::Errc::dimension_mismatch,
                path.string() + ": phase count does not match the video's " + std::to_string(frames) + " frames");
    return t;
  }
  return cs::compute_phase(cs::peaks_from_json(j), frames);
}

cs::PhaseTrack phase_for(const VideoInput& v, const std::string& phase_file, const cs::PeakDetectionConfig& peaks) {
  if (!phase_file.empty()) return phase_from_file(phase_file, v.video.size());
  if (fs::exists(v.dir / "truth.json")) return phase_from_file(v.dir / "truth.json", v.video.size());
  cs::require(v.ecg.has_value(), cs::Errc::missing_field,
              v.dir.string() + ": oracle embedding needs truth.json, a phase file or ecg.csv");
  return cs::compute_phase(cs::detect_r_peaks(*v.ecg, peaks), v.video.size());
}

struct EmbedOptions {
  std::string kind = "oracle";
  std::string model;
  std::size_t dim = 8;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

std::unique_ptr<cs::Embedder> make_embedder(const EmbedOptions& o, const VideoInput& v, const std::string& phase_file,
                                            const std::string& features, const cs::PeakDetectionConfig& peaks) {
  if (o.kind == "oracle") return cs::phase_oracle_embedder(phase_for(v, phase_file, peaks), o.dim, o.noise, o.seed);
  if (o.kind == "mlp") {
    cs::require(!o.model.empty(), cs::Errc::missing_field, "--model is required for the mlp embedder");
    return std::make_unique<cs::MlpEmbedder>(cs::load_mlp(o.model));
  }
  cs::require(!features.empty(), cs::Errc::missing_field, "feature files are required for the features embedder");
  return std::make_unique<cs::PrecomputedEmbedder>(cs::load_feature_series(features));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  cs::require(out.good(), cs::Errc::io, "cannot write " + path.string());
  out << text;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void add_search_options(CLI::App* cmd, cs::PathSearchConfig& search) {
  cmd->add_option("--stride", search.start_stride, "Start every n-th cell of row 0 and column 0")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-length", search.min_length_fraction, "Minimum path length as a fraction of min(H, W)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

void add_peak_options(CLI::App* cmd, cs::PeakDetectionConfig& peaks) {
  cmd->add_option("--sigma", peaks.sigma_s, "ECG smoothing sigma in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--min-gap", peaks.min_gap_s, "Minimum R-peak spacing in seconds")->capture_default_str()->check(CLI::PositiveNumber);
}

void write_truth(const cs::SyntheticView& view, const fs::path& path) {
  nlohmann::json j;
  j["peaks_frames"] = view.peaks.peaks_frames;
  j["phases"] = view.phase.phases;
  j["valid"] = view.phase.valid;
  j["ecg_peaks_frames"] = view.ecg_peaks.peaks_frames;
  cs::store_json(j, path);
}

void write_view(const cs::SyntheticView& view, const fs::path& dir) {
  cs::store_frames(view.video, dir);
  cs::VideoDescriptor d;
  d.video_id = view.video.video_id;
  d.patient_id = view.patient_id;
  d.fps = view.video.fps;
  d.ecg_hz = view.ecg.ecg_hz;
  d.frame0_time_s = view.ecg.frame0_time_s;
  cs::store_json(cs::to_json(d), dir / "descriptor.json");
  cs::store_ecg(view.ecg, dir / "ecg.csv");
  write_truth(view, dir / "truth.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardiac-phase synchronization of two angiography videos"};
  app.fallthrough();
  app.set_version_flag("--version", std::string(cs::kVersion));
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->envname("CYCLOSYNC_THREADS");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic two-view dataset");
  cs::PairConfig pair;
  std::optional<double> fps_b;
  std::optional<double> ecg_noise;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  simulate->add_option("--hr-a", pair.hr_a, "Heart rate of view A (bpm)")->capture_default_str();
  simulate->add_option("--hr-b", pair.hr_b, "Heart rate of view B (bpm)")->capture_default_str();
  simulate->add_option("--fps", pair.fps_a, "Frame rate of view A")->capture_default_str();
  simulate->add_option("--fps-b", fps_b, "Frame rate of view B (default: --fps)");
  simulate->add_option("--dur", pair.duration_s, "Duration in seconds")->capture_default_str();
  simulate->add_option("--noise", pair.noise_sigma, "Pixel noise sigma")->capture_default_str();
  simulate->add_option("--ecg-noise", ecg_noise, "ECG noise sigma (default: --noise)");
  simulate->add_option("--size", pair.frame_size, "Frame side length in pixels")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "View A uses seed, view B seed + 1")->capture_default_str();
  simulate->add_option("--patient", pair.patient_id, "Patient id written to both descriptors")->capture_default_str();
  simulate->add_flag("--biplane", pair.biplane, "Both views share view A's clock");
  simulate->add_flag("!--no-envelope", pair.contrast_envelope, "Full contrast in every frame");
  simulate->add_option("--out", sim_out, "Output directory (gets a/ and b/)")->required();

  // detect-peaks
  auto* detect = app.add_subcommand("detect-peaks", "Detect ECG R-peaks in video-frame coordinates");
  std::string detect_video, detect_ecg, detect_descriptor, detect_out;
  cs::EcgTiming detect_timing;
  cs::PeakDetectionConfig detect_cfg;
  detect->add_option("--video", detect_video, "Video directory holding ecg.csv and descriptor.json");
  detect->add_option("--ecg", detect_ecg, "ECG CSV file");
  detect->add_option("--descriptor", detect_descriptor, "Descriptor JSON with fps, ecg_hz and frame0_time_s");
  detect->add_option("--fps", detect_timing.fps, "Video frame rate");
  detect->add_option("--ecg-hz", detect_timing.ecg_hz, "ECG sampling rate");
  detect->add_option("--frame0", detect_timing.frame0_time_s, "ECG time of video frame 0 (s)");
  add_peak_options(detect, detect_cfg);
  detect->add_option("--out", detect_out, "Output peaks JSON")->required();

  // embed
  auto* embed = app.add_subcommand("embed", "Embed the contrast window of a video as feature vectors");
  std::string embed_video, embed_phase, embed_out;
  EmbedOptions embed_opts;
  bool embed_window = true;
  cs::PeakDetectionConfig embed_peaks;
  embed->add_option("--video", embed_video, "Video directory")->required();
  embed->add_option("--embedder", embed_opts.kind, "oracle or mlp")->capture_default_str()->check(CLI::IsMember({"oracle", "mlp"}));
  embed->add_option("--model", embed_opts.model, "CSMLP model file (mlp)");
  embed->add_option("--phase", embed_phase, "Truth or peaks JSON for the oracle (default: truth.json, then ECG)");
  embed->add_option("--dim", embed_opts.dim, "Oracle feature dimension")->capture_default_str();
  embed->add_option("--noise", embed_opts.noise, "Oracle feature noise sigma")->capture_default_str();
  embed->add_option("--seed", embed_opts.seed, "Oracle noise seed")->capture_default_str();
  embed->add_flag("!--no-contrast-window", embed_window, "Use every frame");
  add_peak_options(embed, embed_peaks);
  embed->add_option("--out", embed_out, "Output CSFEAT file")->required();

  // simmatrix
  auto* simmatrix = app.add_subcommand("simmatrix", "Cosine similarity matrix of two feature files");
  std::string sm_a, sm_b, sm_out, sm_pgm;
  simmatrix->add_option("--a", sm_a, "Features of video A")->required();
  simmatrix->add_option("--b", sm_b, "Features of video B")->required();
  simmatrix->add_option("--out", sm_out, "Output CSMAT file")->required();
  simmatrix->add_option("--pgm", sm_pgm, "Also write the matrix as an 8-bit image");

  // sync
  auto* sync = app.add_subcommand("sync", "Best synchronization path through a similarity matrix");
  std::string sync_sim, sync_a, sync_b, sync_out, sync_svg;
  cs::PathSearchConfig sync_search;
  sync->add_option("--sim", sync_sim, "Similarity CSMAT file");
  sync->add_option("--a", sync_a, "Features of video A (instead of --sim)");
  sync->add_option("--b", sync_b, "Features of video B (instead of --sim)");
  add_search_options(sync, sync_search);
  sync->add_option("--out", sync_out, "Output path JSON")->required();
  sync->add_option("--svg", sync_svg, "Also write an SVG of the path over the matrix");

  // groundtruth
  auto* groundtruth = app.add_subcommand("groundtruth", "Ground-truth matrix from the ECGs of two videos");
  std::string gt_a, gt_b, gt_out;
  bool gt_window = true;
  cs::PeakDetectionConfig gt_peaks;
  groundtruth->add_option("--a", gt_a, "Video directory A")->required();
  groundtruth->add_option("--b", gt_b, "Video directory B")->required();
  groundtruth->add_flag("!--no-contrast-window", gt_window, "Use every frame");
  add_peak_options(groundtruth, gt_peaks);
  groundtruth->add_option("--out", gt_out, "Output CSMAT file")->required();

  // score
  auto* score = app.add_subcommand("score", "Normalized score of a path against a ground-truth matrix");
  std::string score_path, score_gt, score_out;
  std::size_t score_trim = 0;
  cs::PathSearchConfig score_search;
  score->add_option("--path", score_path, "Path JSON")->required();
  score->add_option("--gt", score_gt, "Ground-truth CSMAT file")->required();
  score->add_option("--trim", score_trim, "Drop this many points from each end")->capture_default_str();
  add_search_options(score, score_search);
  score->add_option("--out", score_out, "Output score JSON")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the toy MLP embedder with the soft pair loss");
  std::string train_data, train_out, train_history;
  cs::TrainConfig tcfg;
  bool train_window = true;
  cs::PeakDetectionConfig train_peaks;
  train->add_option("--data", train_data, "Directory of video directories (each with ecg.csv)")->required();
  train->add_option("--fc", tcfg.fc, "Output feature size")->capture_default_str();
  train->add_option("--hidden", tcfg.hidden, "Hidden units")->capture_default_str();
  train->add_option("--bs", tcfg.batch_size, "Frames per mini-batch")->capture_default_str();
  train->add_option("--dr", tcfg.dropout_rate, "Dropout rate")->capture_default_str();
  train->add_option("--mc", tcfg.max_cycles, "Max cycles between paired frames (0 = off)")->capture_default_str();
  train->add_flag("--ivp", tcfg.inter_video_pairs, "Pair frames across two videos of one patient");
  train->add_flag("--da", tcfg.data_augmentation, "Random flips and intensity scaling");
  train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--momentum", tcfg.momentum, "SGD momentum")->capture_default_str();
  train->add_option("--epochs", tcfg.epochs, "Epochs")->capture_default_str();
  train->add_option("--batches", tcfg.batches_per_epoch, "Mini-batches per epoch (0 = one per video)")->capture_default_str();
  train->add_option("--seed", tcfg.seed, "Random seed")->capture_default_str();
  train->add_flag("!--no-contrast-window", train_window, "Train on every frame");
  add_peak_options(train, train_peaks);
  train->add_option("--out", train_out, "Output CSMLP model file")->required();
  train->add_option("--history", train_history, "Also write the loss history as JSON");

  // run
  auto* run = app.add_subcommand("run", "Whole pipeline on two video directories");
  std::string run_a, run_b, run_out, run_phase_a, run_phase_b, run_feat_a, run_feat_b;
  EmbedOptions run_opts;
  cs::PipelineConfig pcfg;
  bool no_timestamp = false;
  bool run_svg = false;
  run->add_option("--a", run_a, "Video directory A")->required();
  run->add_option("--b", run_b, "Video directory B")->required();
  run->add_option("--embedder", run_opts.kind, "oracle, mlp or features")
      ->capture_default_str()
      ->check(CLI::IsMember({"oracle", "mlp", "features"}));
  run->add_option("--model", run_opts.model, "CSMLP model file (mlp)");
  run->add_option("--phase-a", run_phase_a, "Oracle phase source for A");
  run->add_option("--phase-b", run_phase_b, "Oracle phase source for B");
  run->add_option("--features-a", run_feat_a, "CSFEAT file for A (features)");
  run->add_option("--features-b", run_feat_b, "CSFEAT file for B (features)");
  run->add_option("--dim", run_opts.dim, "Oracle feature dimension")->capture_default_str();
  run->add_option("--noise", run_opts.noise, "Oracle feature noise sigma")->capture_default_str();
  run->add_option("--seed", run_opts.seed, "Oracle seed for A; B uses seed + 1")->capture_default_str();
  run->add_option("--trim", pcfg.trim, "Drop this many path points from each end before scoring")->capture_default_str();
  run->add_flag("!--no-contrast-window", pcfg.contrast_window, "Use every frame");
  add_search_options(run, pcfg.search);
  add_peak_options(run, pcfg.peaks);
  run->add_flag("--no-timestamp", no_timestamp, "Leave the timestamp out of report.json");
  run->add_flag("--svg", run_svg, "Also write path.svg");
  run->add_option("--out", run_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << "\n" << app.help() << std::flush;
    return kInputError;
  }

  try {
    if (simulate->parsed()) {
      pair.fps_b = fps_b.value_or(pair.fps_a);
      auto view_config = [&](bool is_a) {
        cs::ViewConfig vc;
        vc.hr_bpm = is_a || pair.biplane ? pair.hr_a : pair.hr_b;
        vc.fps = is_a || pair.biplane ? pair.fps_a : pair.fps_b;
        vc.duration_s = pair.duration_s;
        vc.frame_size = pair.frame_size;
        vc.texture_seed = is_a ? sim_seed : sim_seed + 1;
        vc.noise_sigma = pair.noise_sigma;
        vc.ecg_noise = ecg_noise;
        vc.contrast_envelope = pair.contrast_envelope;
        vc.video_id = is_a ? "a" : "b";
        vc.patient_id = pair.patient_id;
        return vc;
      };
      write_view(cs::generate_view(view_config(true)), fs::path(sim_out) / "a");
      write_view(cs::generate_view(view_config(false)), fs::path(sim_out) / "b");
    } else if (detect->parsed()) {
      cs::EcgTrace trace;
      if (!detect_video.empty()) {
        const auto d = cs::load_descriptor(fs::path(detect_video) / "descriptor.json");
        cs::EcgTiming t = d.timing();
        if (detect_timing.fps) t.fps = detect_timing.fps;
        if (detect_timing.ecg_hz) t.ecg_hz = detect_timing.ecg_hz;
        if (detect_timing.frame0_time_s) t.frame0_time_s = detect_timing.frame0_time_s;
        trace = cs::load_ecg(fs::path(detect_video) / "ecg.csv", t);
      } else {
        cs::require(!detect_ecg.empty(), cs::Errc::missing_field, "give --video or --ecg");
        cs::EcgTiming t = detect_timing;
        if (!detect_descriptor.empty()) {
          const auto d = cs::load_descriptor(detect_descriptor).timing();
          if (!t.fps) t.fps = d.fps;
          if (!t.ecg_hz) t.ecg_hz = d.ecg_hz;
          if (!t.frame0_time_s) t.frame0_time_s = d.frame0_time_s;
        }
        trace = cs::load_ecg(detect_ecg, t);
      }
      const auto peaks = cs::run_stage("detect-peaks", [&] { return cs::detect_r_peaks(trace, detect_cfg); });
      ensure_parent(detect_out);
      cs::store_json(cs::to_json(peaks), detect_out);
    } else if (embed->parsed()) {
      const auto v = load_video_dir(embed_video);
      const auto window = cs::run_stage("contrast-window", [&] { return window_for(v.video, embed_window); });
      const auto embedder = make_embedder(embed_opts, v, embed_phase, "", embed_peaks);
      const auto features = cs::run_stage(
          "embed", [&] { return cs::quantize(cs::embed_series(*embedder, cs::make_windows(v.video, window))); });
      ensure_parent(embed_out);
      cs::store_feature_series(features, embed_out);
    } else if (simmatrix->parsed()) {
      const auto fa = cs::load_feature_series(sm_a);
      const auto fb = cs::load_feature_series(sm_b);
      const auto m = cs::run_stage("similarity", [&] { return cs::quantize(cs::similarity_matrix(fa, fb, threads)); });
      ensure_parent(sm_out);
      cs::store_sync_matrix(m, sm_out);
      if (!sm_pgm.empty()) cs::store_sync_matrix_pgm(m, sm_pgm);
    } else if (sync->parsed()) {
      cs::SyncMatrix sim;
      if (!sync_sim.empty()) {
        sim = cs::load_sync_matrix(sync_sim);
      } else {
        cs::require(!sync_a.empty() && !sync_b.empty(), cs::Errc::missing_field, "give --sim or both --a and --b");
        const auto fa = cs::load_feature_series(sync_a);
        const auto fb = cs::load_feature_series(sync_b);
        sim = cs::run_stage("similarity", [&] { return cs::quantize(cs::similarity_matrix(fa, fb, threads)); });
      }
      sync_search.threads = threads;
      const auto path = cs::run_stage("pathfinding", [&] { return cs::find_best_path(cs::to_cost(sim), sync_search); });
      ensure_parent(sync_out);
      cs::store_json(cs::to_json(path), sync_out);
      if (!sync_svg.empty()) write_text(sync_svg, cs::path_overlay_svg(sim, path));
    } else if (groundtruth->parsed()) {
      const auto a = load_video_dir(gt_a);
      const auto b = load_video_dir(gt_b);
      cs::require(a.ecg && b.ecg, cs::Errc::missing_field, "both videos need ecg.csv");
      const auto wa = cs::run_stage("contrast-window A", [&] { return window_for(a.video, gt_window); });
      const auto wb = cs::run_stage("contrast-window B", [&] { return window_for(b.video, gt_window); });
      const auto gt = cs::run_stage(
          "ground-truth", [&] { return cs::ground_truth_from_ecg(a.video, *a.ecg, wa, b.video, *b.ecg, wb, gt_peaks); });
      ensure_parent(gt_out);
      cs::store_sync_matrix(gt, gt_out);
    } else if (score->parsed()) {
      const auto path = cs::path_from_json(cs::load_json(score_path));
      const auto gt = cs::load_sync_matrix(score_gt);
      score_search.threads = threads;
      const auto s = cs::run_stage("score", [&] { return cs::score_with_trim(path, gt, score_search, score_trim); });
      ensure_parent(score_out);
      cs::store_json(cs::to_json(s), score_out);
    } else if (train->parsed()) {
      cs::TrainingSet set;
      std::vector<fs::path> dirs;
      for (const auto& entry : fs::directory_iterator(train_data))
        if (entry.is_directory() && fs::exists(entry.path() / "descriptor.json")) dirs.push_back(entry.path());
      std::sort(dirs.begin(), dirs.end());
      cs::require(!dirs.empty(), cs::Errc::missing_field, train_data + ": no video directories found");
      for (const auto& dir : dirs) {
        auto v = load_video_dir(dir);
        cs::require(v.ecg.has_value(), cs::Errc::missing_field, dir.string() + ": training needs ecg.csv");
        const auto peaks = cs::run_stage("detect-peaks " + dir.filename().string(),
                                         [&] { return cs::detect_r_peaks(*v.ecg, train_peaks); });
        const auto window = cs::run_stage("contrast-window " + dir.filename().string(),
                                          [&] { return window_for(v.video, train_window); });
        const std::string patient = v.descriptor.patient_id.empty() ? v.video.video_id : v.descriptor.patient_id;
        set.videos.push_back(cs::make_training_video(std::move(v.video), peaks, patient, window));
      }
      const auto result = cs::run_stage("train", [&] { return cs::train(set, tcfg); });
      ensure_parent(train_out);
      cs::store_mlp(result.model, train_out);
      if (!train_history.empty()) {
        cs::store_json({{"loss", result.loss_history},
                        {"batches_per_epoch", result.batches_per_epoch},
                        {"final_loss", result.final_loss()}},
                       train_history);
      }
      std::cout << "final loss " << result.final_loss() << "\n";
    } else if (run->parsed()) {
      const auto a = load_video_dir(run_a);
      const auto b = load_video_dir(run_b);
      EmbedOptions opts_b = run_opts;
      opts_b.seed = run_opts.seed + 1;
      const auto ea = cs::run_stage("embedder A", [&] { return make_embedder(run_opts, a, run_phase_a, run_feat_a, pcfg.peaks); });
      const auto eb = cs::run_stage("embedder B", [&] { return make_embedder(opts_b, b, run_phase_b, run_feat_b, pcfg.peaks); });
      pcfg.threads = threads;
      pcfg.provenance = {{"embedder", run_opts.kind}, {"seed", run_opts.seed}};
      if (run_opts.kind == "oracle") {
        pcfg.provenance["dim"] = run_opts.dim;
        pcfg.provenance["noise"] = run_opts.noise;
      } else if (run_opts.kind == "mlp") {
        pcfg.provenance["model"] = fs::path(run_opts.model).filename().string();
      }
      const cs::PipelineVideo pa{a.video, a.ecg};
      const cs::PipelineVideo pb{b.video, b.ecg};
      const auto r = cs::run_pipeline(pa, pb, *ea, *eb, pcfg);
      const fs::path out(run_out);
      fs::create_directories(out);
      cs::store_json(cs::to_json(r.path), out / "path.json");
      cs::store_sync_matrix(r.similarity, out / "similarity.csmat");
      cs::store_feature_series(r.features_a, out / "features_a.csfeat");
      cs::store_feature_series(r.features_b, out / "features_b.csfeat");
      if (r.ground_truth) cs::store_sync_matrix(*r.ground_truth, out / "gt.csmat");
      if (r.score) cs::store_json(cs::to_json(*r.score), out / "score.json");
      if (run_svg) write_text(out / "path.svg", cs::path_overlay_svg(r.similarity, r.path));
      auto report = cs::make_report(pa, pb, r, pcfg);
      if (!no_timestamp) report["generated_at"] = utc_timestamp();
      cs::store_json(report, out / "report.json");
      if (r.score) std::cout << "normalized score " << r.score->normalized << "\n";
    }
  } catch (const cs::Error& e) {
    std::cerr << "cyclosync: " << e.what() << "\n";
    return cs::is_numeric(e.code()) ? kNumericError : kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "cyclosync: malformed JSON: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "cyclosync: " << e.what() << "\n";
    return kInputError;
  }
  return 0;
}
