// Command-line front end for the waste detection-to-grasp pipeline.
//
//   wastegrasp reconstruct       masks -> per-object PLY clouds
//   wastegrasp grasp             full per-frame pipeline -> FrameResult JSON
//   wastegrasp evaluate          predictions vs ground truth -> EvalReport
//   wastegrasp validate-dataset  manifest checks
//   wastegrasp export-ply        grasp markers for a single cloud
//
// Exit codes: 0 success (per-object grasp failures included), 2 input or
// validation error, 3 internal error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "wastegrasp/dataset_io.hpp"
#include "wastegrasp/error.hpp"
#include "wastegrasp/evaluation.hpp"
#include "wastegrasp/image_io.hpp"
#include "wastegrasp/pipeline.hpp"
#include "wastegrasp/ply_io.hpp"

namespace fs = std::filesystem;
using namespace wastegrasp;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;
constexpr const char* kConfigEnv = "WASTEGRASP_CONFIG";

struct CommonOptions {
  std::string config_path;
  std::string output_dir;
  std::size_t jobs = 0;
  bool jobs_set = false;
};

struct FrameOptions {
  std::string color;
  std::string depth;
  std::string intrinsics;
  std::string detections;
  std::string image_id;
};

void log_line(const std::string& message) { std::cerr << "[wastegrasp] " << message << '\n'; }

PipelineConfig resolve_config(const CommonOptions& common) {
  PipelineConfig config;
  std::string path = common.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  if (!path.empty()) {
    config = load_pipeline_config(path);
    log_line("loaded config " + path);
  }
  if (!common.output_dir.empty()) config.output_dir = common.output_dir;
  if (common.jobs_set) config.jobs = common.jobs;
  config.validate();
  fs::create_directories(config.output_dir);
  return config;
}

void add_frame_options(CLI::App* cmd, FrameOptions& frame) {
  cmd->add_option("--color", frame.color, "8-bit RGB PNG")->required()->check(CLI::ExistingFile);
  cmd->add_option("--depth", frame.depth, "16-bit depth PNG")->required()->check(CLI::ExistingFile);
  cmd->add_option("--intrinsics", frame.intrinsics, "camera sidecar JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--detections", frame.detections, "predictions JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--image-id", frame.image_id, "keep only detections of this image");
}

FrameInputs load_frame(const FrameOptions& options) {
  const CameraSidecar sidecar = read_intrinsics_json(options.intrinsics);
  FrameInputs frame;
  frame.intrinsics = sidecar.intrinsics;
  frame.depth = read_depth_png(options.depth, sidecar.depth_scale);
  frame.color = read_color_png(options.color);
  return frame;
}

std::vector<DetectionRecord> load_frame_detections(const FrameOptions& options) {
  std::vector<DetectionRecord> all = load_predictions(options.detections);
  std::vector<DetectionRecord> kept;
  std::set<std::string> ids;
  for (auto& det : all) {
    if (!options.image_id.empty() && det.image_id != options.image_id) continue;
    ids.insert(det.image_id);
    kept.push_back(std::move(det));
  }
  if (ids.size() > 1) {
    throw Error(ErrorCode::InvalidArgument,
                "detections cover several images; select one with --image-id");
  }
  return kept;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text << '\n';
}

std::string object_stem(const std::string& image_id, std::size_t index, ClassLabel label) {
  return (image_id.empty() ? std::string("frame") : image_id) + "_obj" + std::to_string(index) + "_" +
         std::string(class_name(label));
}

int run_reconstruct(const CommonOptions& common, const FrameOptions& frame_options, bool ascii) {
  const PipelineConfig config = resolve_config(common);
  const FrameInputs frame = load_frame(frame_options);
  const std::vector<DetectionRecord> detections = load_frame_detections(frame_options);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path path = config.output_dir / (object_stem(detections[i].image_id, i, detections[i].label) + ".ply");
    try {
      const PointCloud cloud = reconstruct_object(frame, load_mask(detections[i].mask), config);
      write_ply(path, cloud, ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      log_line("object " + std::to_string(i) + ": " + std::to_string(cloud.size()) + " points -> " +
               path.string() + " (" + std::to_string(ms) + " ms)");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DimensionMismatch || e.code() == ErrorCode::IoError) throw;
      log_line("object " + std::to_string(i) + " skipped: " + e.what());
    }
  }
  return 0;
}

int run_grasp(const CommonOptions& common, const FrameOptions& frame_options, bool export_markers,
              const std::string& out_name) {
  const PipelineConfig config = resolve_config(common);
  const FrameInputs frame = load_frame(frame_options);
  const std::vector<DetectionRecord> detections = load_frame_detections(frame_options);
  const FrameResult result = run_pipeline(frame, detections, config);

  for (const auto& o : result.objects) {
    std::ostringstream line;
    line << "object " << o.detection_index << " (" << class_name(o.label) << "): backprojection "
         << o.timings.backprojection_ms << " ms, conditioning " << o.timings.conditioning_ms
         << " ms, normals " << o.timings.normals_ms << " ms, grasp " << o.timings.grasp_ms << " ms -> "
         << (o.error ? std::string(error_code_name(*o.error)) : std::string("ok"));
    log_line(line.str());
    if (export_markers && o.grasp) {
      const fs::path path = config.output_dir / (object_stem(result.image_id, o.detection_index, o.label) + "_grasp.ply");
      export_ply_markers(o.conditioned_cloud, *o.grasp, path);
    }
  }
  log_line("frame total " + std::to_string(result.total_ms) + " ms");

  const fs::path out = config.output_dir / out_name;
  write_text(out, frame_result_json(result));
  log_line("wrote " + out.string());
  return 0;
}

int run_evaluate(const CommonOptions& common, const std::string& ground_truth,
                 const std::string& predictions, std::size_t max_dets, const std::string& environment) {
  const PipelineConfig config = resolve_config(common);
  const DatasetManifest manifest = load_manifest(ground_truth);
  std::vector<DetectionRecord> detections = load_predictions(predictions);

  std::vector<AnnotationRecord> annotations = manifest.annotations;
  if (!environment.empty()) {
    auto keep = [&](const std::string& image_id) {
      const ImageEntry* image = manifest.find_image(image_id);
      return image && environment_name(image->environment) == environment;
    };
    std::erase_if(annotations, [&](const AnnotationRecord& a) { return !keep(a.image_id); });
    std::erase_if(detections, [&](const DetectionRecord& d) { return !keep(d.image_id); });
  }

  EvalParams params;
  params.max_detections = max_dets;
  const auto start = std::chrono::steady_clock::now();
  const EvalReport report = coco_summary(detections, annotations, params);
  log_line("evaluation took " +
           std::to_string(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()) +
           " ms");
  const fs::path out = config.output_dir / "eval_report.json";
  write_text(out, eval_report_json(report));
  std::cout << format_eval_table(report);
  log_line("wrote " + out.string());
  return 0;
}

int run_validate(const std::string& manifest_path, double max_ratio) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  ValidationOptions options;
  options.max_class_ratio = max_ratio;
  const ValidationReport report = validate_manifest(manifest, options);
  for (const auto& finding : report.findings) {
    std::cout << (finding.severity == ValidationFinding::Severity::Error ? "error: " : "warning: ")
              << finding.message << '\n';
  }
  std::cout << manifest.images.size() << " images, " << manifest.annotations.size() << " annotations; "
            << report.error_count() << " errors, " << report.warning_count() << " warnings\n";
  return report.valid() ? 0 : kExitInput;
}

int run_export(const CommonOptions& common, const std::string& cloud_path, const std::string& out_path,
               bool condition) {
  const PipelineConfig config = resolve_config(common);
  PointCloud cloud = read_ply(cloud_path);
  if (condition) {
    cloud = remove_statistical_outliers(voxel_downsample(cloud, config.voxel_size), config.outlier_k,
                                        config.outlier_sigma);
  }
  if (!cloud.has_normals()) cloud = estimate_normals(cloud, config.normal_k);
  const GraspReport report = compute_best_grasp(cloud, config.gripper, config.grasp);
  const fs::path out = out_path.empty() ? config.output_dir / "grasp_markers.ply" : fs::path(out_path);
  export_ply_markers(cloud, report, out);
  const GraspCandidate& best = report.candidates.front();
  std::cout << "best grasp: score " << best.score << ", opening " << best.opening << " m\n";
  log_line("wrote " + out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waste detection to two-finger grasp pipeline"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path,
                    std::string("pipeline config JSON (default: $") + kConfigEnv + ")");
    cmd->add_option("--output-dir", common.output_dir, "directory for outputs");
    cmd->add_option("--jobs", common.jobs, "worker threads, 0 = all cores")
        ->each([&](const std::string&) { common.jobs_set = true; });
  };

  FrameOptions frame;
  bool ascii = false;
  auto* reconstruct = app.add_subcommand("reconstruct", "back-project detection masks into object clouds");
  add_common(reconstruct);
  add_frame_options(reconstruct, frame);
  reconstruct->add_flag("--ascii", ascii, "write ASCII instead of binary PLY");

  bool export_markers = false;
  std::string result_name = "frame_result.json";
  auto* grasp = app.add_subcommand("grasp", "run the full per-frame pipeline");
  add_common(grasp);
  add_frame_options(grasp, frame);
  grasp->add_flag("--export-ply", export_markers, "also write marker PLYs per grasped object");
  grasp->add_option("--result-name", result_name, "FrameResult file name inside the output dir");

  std::string ground_truth;
  std::string predictions;
  std::size_t max_dets = 100;
  std::string environment;
  auto* evaluate = app.add_subcommand("evaluate", "COCO mask AP of predictions against ground truth");
  add_common(evaluate);
  evaluate->add_option("--ground-truth", ground_truth, "dataset manifest JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--predictions", predictions, "predictions JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--max-dets", max_dets, "detections kept per image and class")->check(CLI::PositiveNumber);
  evaluate->add_option("--environment", environment, "restrict to indoor or outdoor images")
      ->check(CLI::IsMember({"indoor", "outdoor"}));

  std::string manifest;
  double max_ratio = 1.5;
  auto* validate = app.add_subcommand("validate-dataset", "check manifest files, masks and class balance");
  validate->add_option("--manifest", manifest, "dataset manifest JSON")->required()->check(CLI::ExistingFile);
  validate->add_option("--max-class-ratio", max_ratio, "class balance warning bound")->check(CLI::PositiveNumber);

  std::string cloud_path;
  std::string out_path;
  bool condition = false;
  auto* export_ply = app.add_subcommand("export-ply", "compute a grasp on a PLY cloud and export markers");
  add_common(export_ply);
  export_ply->add_option("--cloud", cloud_path, "object cloud PLY")->required()->check(CLI::ExistingFile);
  export_ply->add_option("--out", out_path, "output PLY (default <output-dir>/grasp_markers.ply)");
  export_ply->add_flag("--condition", condition, "voxel downsample and remove outliers first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*reconstruct) return run_reconstruct(common, frame, ascii);
    if (*grasp) return run_grasp(common, frame, export_markers, result_name);
    if (*evaluate) return run_evaluate(common, ground_truth, predictions, max_dets, environment);
    if (*validate) return run_validate(manifest, max_ratio);
    if (*export_ply) return run_export(common, cloud_path, out_path, condition);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
