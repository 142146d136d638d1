// Command-line front end. Exit codes: 0 success, 1 data error, 2 usage error.

#include "pothole/area_metrics.hpp"
#include "pothole/bench.hpp"
#include "pothole/dataset.hpp"
#include "pothole/detection_metrics.hpp"
#include "pothole/error.hpp"
#include "pothole/io.hpp"
#include "pothole/mbtp.hpp"
#include "pothole/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;
using namespace pothole;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json report_json(const metrics::AreaConsistencyReport& r) {
  json rows = json::array();
  for (const auto& t : r.per_track) {
    json row = {{"track_id", t.track_id}, {"length", t.length}, {"mean_area_m2", t.mean_area},
                {"mae", t.mae}, {"cv", t.cv}, {"afd", t.afd}};
    row["nis"] = t.has_nis ? json(t.nis_mean) : json(nullptr);
    rows.push_back(row);
  }
  json j = {{"format_version", io::kFormatVersion}, {"mae", r.mae}, {"cv", r.cv}, {"afd", r.afd},
            {"track_count", r.track_count}, {"excluded_tracks", r.excluded_tracks}, {"objective_j", r.objective()}};
  j["nis"] = r.has_nis ? json(r.nis_mean) : json(nullptr);
  j["tracks"] = rows;
  return j;
}

cdkf::NoiseMode mode_from_flag(const std::string& s) {
  try {
    return cdkf::parse_noise_mode(s);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void emit(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    io::write_file(out_path, text);
  }
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string manifest, out;
  bool no_smoothing = false, parallel = false, quiet = false;
  std::string mode = "combined";
  double lambda = cdkf::CdkfConfig{}.lambda;
  double theta = cdkf::CdkfConfig{}.theta;
  std::uint64_t seed = 0;
};

int run_estimate(const EstimateArgs& a) {
  PipelineConfig cfg;
  cfg.smoothing = !a.no_smoothing;
  cfg.parallel = a.parallel;
  cfg.seed = a.seed;
  cfg.cdkf.mode = mode_from_flag(a.mode);
  cfg.cdkf.lambda = a.lambda;
  cfg.cdkf.theta = a.theta;

  ManifestSource source(io::load_manifest(a.manifest));
  std::ofstream file;
  if (!a.out.empty()) {
    io::write_file(a.out, "");
    file.open(a.out, std::ios::binary | std::ios::app);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  const auto summary = run_pipeline(
      source, cfg, [&](const FrameResultRecord& r) { os << format_record(r) << '\n'; },
      [&](const std::string& msg) {
        if (!a.quiet) std::cerr << "warning: " << msg << '\n';
      });
  os.flush();
  if (!a.quiet) {
    std::cerr << "processed " << summary.frames << " frames, " << summary.records << " records, "
              << summary.tracks.size() << " tracks, " << summary.skipped_detections << " skipped detections\n";
  }
  return 0;
}

int run_eval_area(const std::string& results, long min_len, bool raw, const std::string& out) {
  if (min_len < 1) throw UsageError("--min-track-len must be at least 1");
  const auto records = parse_results(io::read_file(results));
  emit(report_json(metrics::evaluate_area_consistency(series_from_records(records, !raw), min_len)), out);
  return 0;
}

int run_eval_det(const std::string& dets, const std::string& gts, double iou, const std::string& out) {
  if (!(iou > 0.0 && iou <= 1.0)) throw UsageError("--iou must be in (0, 1]");
  const auto d = io::parse_detections(io::read_file(dets));
  const auto g = io::parse_detections(io::read_file(gts));
  const auto rep = metrics::evaluate_detections(d, g, iou);
  emit({{"format_version", io::kFormatVersion},
        {"iou_threshold", rep.iou_threshold},
        {"tp", rep.counts.tp},
        {"fp", rep.counts.fp},
        {"fn", rep.counts.fn},
        {"precision", rep.pr.precision},
        {"recall", rep.pr.recall},
        {"f1", rep.pr.f1},
        {"ap50", rep.ap50},
        {"ap50_95", rep.ap50_95}},
       out);
  return 0;
}

struct OptimizeArgs {
  std::string manifest, out, mode = "combined";
  std::uint64_t seed = 0;
  int n_init = 5, n_iter = 30;
  long min_len = 5;
};

int run_optimize(const OptimizeArgs& a) {
  PipelineConfig cfg;
  cfg.smoothing = false;
  cfg.seed = a.seed;
  cfg.cdkf.mode = mode_from_flag(a.mode);
  if (a.n_init < 1 || a.n_iter < 0) throw UsageError("--n-init must be >= 1 and --n-iter >= 0");

  ManifestSource source(io::load_manifest(a.manifest));
  const auto summary = run_pipeline(source, cfg, {});

  bayesopt::SearchSpec spec;
  spec.seed = a.seed;
  spec.n_init = a.n_init;
  spec.n_iter = a.n_iter;
  const auto res = optimize_noise_weights(summary.tracks, cfg.cdkf, spec, a.min_len);

  json hist = json::array();
  for (const auto& e : res.history) {
    hist.push_back({{"lambda", e.point(0)}, {"theta", e.point(1)}, {"j", e.value}, {"acquisition", e.from_acquisition}});
  }
  emit({{"format_version", io::kFormatVersion},
        {"mode", std::string(cdkf::to_string(cfg.cdkf.mode))},
        {"seed", a.seed},
        {"lambda", res.best_point(0)},
        {"theta", res.best_point(1)},
        {"objective_j", res.best_value},
        {"history", hist}},
       a.out);
  return 0;
}

int run_ablation_cmd(const std::string& manifest, std::uint64_t seed, long min_len, double lambda, double theta,
                     const std::string& out) {
  PipelineConfig cfg;
  cfg.seed = seed;
  cfg.cdkf.lambda = lambda;
  cfg.cdkf.theta = theta;
  const auto m = io::load_manifest(manifest);
  const auto rows = run_ablation([&] { return std::make_unique<ManifestSource>(m); }, cfg, min_len);
  json jr = json::array();
  for (const auto& r : rows) {
    json row = report_json(r.report);
    row.erase("format_version");
    row.erase("tracks");
    row["method"] = r.name;
    jr.push_back(row);
  }
  emit({{"format_version", io::kFormatVersion}, {"rows", jr}}, out);
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
              bool embed_motion) {
  auto spec = synth::parse_scene_spec(io::read_file(spec_path));
  if (seed) spec.seed = *seed;
  synth::DatasetOptions opts;
  opts.embed_true_motion = embed_motion;
  const auto manifest = synth::write_dataset(spec, out_dir, opts);
  std::cout << manifest.generic_string() << '\n';
  return 0;
}

int run_bench(const BenchOptions& a) {
  try {
    a.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const BenchResult r = run_mbtp_bench(a);
  std::cout << json({{"format_version", io::kFormatVersion},
                     {"width", a.width},
                     {"height", a.height},
                     {"boxes", a.boxes},
                     {"box_size", a.box_size},
                     {"iters", a.iters},
                     {"mean_ms", r.mean_ms},
                     {"p95_ms", r.p95_ms},
                     {"min_ms", r.min_ms},
                     {"max_ms", r.max_ms},
                     {"checksum_m2", r.checksum_m2}})
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pothole area estimation from detections and depth maps"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Track detections and estimate per-frame areas");
  c_est->add_option("--manifest", est.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
  c_est->add_option("--out", est.out, "Result file (default: stdout)");
  c_est->add_flag("--no-smoothing", est.no_smoothing, "Disable the area filter");
  c_est->add_flag("--parallel", est.parallel, "Parse depth and estimate areas on a worker thread");
  c_est->add_option("--mode", est.mode, "Noise mode: combined, confidence_only, distance_only");
  c_est->add_option("--lambda", est.lambda, "Confidence noise weight")->check(CLI::PositiveNumber);
  c_est->add_option("--theta", est.theta, "Distance noise weight")->check(CLI::PositiveNumber);
  c_est->add_option("--seed", est.seed, "Seed for motion estimation");
  c_est->add_flag("--quiet", est.quiet, "Suppress warnings and the summary line");

  std::string results, out_area;
  long min_len = 5;
  bool raw = false;
  auto* c_area = app.add_subcommand("eval-area", "Area consistency report for a result file");
  c_area->add_option("--results", results, "Result records")->required()->check(CLI::ExistingFile);
  c_area->add_option("--min-track-len", min_len, "Shortest track that is scored");
  c_area->add_flag("--raw", raw, "Score raw instead of smoothed areas");
  c_area->add_option("--out", out_area, "Report file (default: stdout)");

  std::string dets, gts, out_det;
  double iou = 0.7;
  auto* c_det = app.add_subcommand("eval-det", "Detection precision, recall and AP");
  c_det->add_option("--dets", dets, "Detection records")->required()->check(CLI::ExistingFile);
  c_det->add_option("--gt", gts, "Ground-truth records")->required()->check(CLI::ExistingFile);
  c_det->add_option("--iou", iou, "IoU threshold for a true positive");
  c_det->add_option("--out", out_det, "Report file (default: stdout)");

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "Tune the noise weights for the area objective");
  c_opt->add_option("--manifest", opt.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
  c_opt->add_option("--mode", opt.mode, "Noise mode");
  c_opt->add_option("--seed", opt.seed, "Optimizer seed");
  c_opt->add_option("--n-init", opt.n_init, "Initial design size");
  c_opt->add_option("--n-iter", opt.n_iter, "Acquisition iterations");
  c_opt->add_option("--min-track-len", opt.min_len, "Shortest track that is scored");
  c_opt->add_option("--out", opt.out, "Report file (default: stdout)");

  std::string abl_manifest, abl_out;
  std::uint64_t abl_seed = 0;
  long abl_min_len = 5;
  double abl_lambda = cdkf::CdkfConfig{}.lambda, abl_theta = cdkf::CdkfConfig{}.theta;
  auto* c_abl = app.add_subcommand("ablation", "Compare corner-point, raw and filtered area series");
  c_abl->add_option("--manifest", abl_manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
  c_abl->add_option("--seed", abl_seed, "Seed for motion estimation");
  c_abl->add_option("--min-track-len", abl_min_len, "Shortest track that is scored");
  c_abl->add_option("--lambda", abl_lambda, "Confidence noise weight")->check(CLI::PositiveNumber);
  c_abl->add_option("--theta", abl_theta, "Distance noise weight")->check(CLI::PositiveNumber);
  c_abl->add_option("--out", abl_out, "Report file (default: stdout)");

  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  bool synth_motion = false;
  auto* c_syn = app.add_subcommand("synth", "Render a synthetic sequence with ground truth");
  c_syn->add_option("--spec", spec_path, "Scene spec")->required()->check(CLI::ExistingFile);
  c_syn->add_option("--out", synth_out, "Output directory")->required();
  c_syn->add_option("--seed", synth_seed, "Override the spec seed");
  c_syn->add_flag("--embed-motion", synth_motion, "Write true camera motion into the manifest");

  BenchOptions bench;
  auto* c_bench = app.add_subcommand("bench-mbtp", "Time area estimation on a synthetic frame");
  c_bench->add_option("--width", bench.width, "Image width");
  c_bench->add_option("--height", bench.height, "Image height");
  c_bench->add_option("--boxes", bench.boxes, "Boxes per frame");
  c_bench->add_option("--box-size", bench.box_size, "Box side in pixels");
  c_bench->add_option("--iters", bench.iters, "Timed frames");
  c_bench->add_option("--seed", bench.seed, "Seed for the synthetic frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_est) return run_estimate(est);
    if (*c_area) return run_eval_area(results, min_len, raw, out_area);
    if (*c_det) return run_eval_det(dets, gts, iou, out_det);
    if (*c_opt) return run_optimize(opt);
    if (*c_abl) return run_ablation_cmd(abl_manifest, abl_seed, abl_min_len, abl_lambda, abl_theta, abl_out);
    if (*c_syn) return run_synth(spec_path, synth_out, synth_seed, synth_motion);
    if (*c_bench) return run_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
