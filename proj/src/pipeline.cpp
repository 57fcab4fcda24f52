#include "wastegrasp/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wastegrasp/ply_io.hpp"

namespace wastegrasp {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (!(depth_range.z_min >= 0.0 && depth_range.z_min < depth_range.z_max)) {
    throw Error(ErrorCode::InvalidArgument, "depth range must satisfy 0 <= z_min < z_max");
  }
  if (!(voxel_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel_size must be positive");
  if (outlier_k < 1) throw Error(ErrorCode::InvalidArgument, "outlier_k must be >= 1");
  if (!(outlier_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "outlier_sigma must be positive");
  if (normal_k < 3) throw Error(ErrorCode::InvalidArgument, "normal_k must be >= 3");
  if (!(low_confidence_ratio >= 0.0 && low_confidence_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "low_confidence_ratio must lie in [0, 1]");
  }
  gripper.validate();
  grasp.validate();
}

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace {

class ConfigReader {
 public:
  ConfigReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) fail(where_, "expected an object");
    for (const auto& [key, value] : object_.items()) pending_.push_back(key);
  }

  template <typename T>
  void read(const char* key, T& target) {
    auto it = object_.find(key);
    if (it == object_.end()) return;
    consumed(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t>) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
          fail(path(key), "expected a non-negative integer");
        }
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) fail(path(key), "expected a number");
      }
      target = it->template get<T>();
    } catch (const json::exception& e) {
      fail(path(key), e.what());
    }
  }

  const json* child(const char* key) {
    auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    consumed(key);
    return &*it;
  }

  std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    if (!pending_.empty()) fail(path(pending_.front().c_str()), "unknown configuration key");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::SchemaError, "config field '" + field + "': " + what);
  }

 private:
  void consumed(const char* key) { std::erase(pending_, std::string(key)); }

  const json& object_;
  std::string where_;
  std::vector<std::string> pending_;
};

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, PipelineConfig config) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  ConfigReader root(doc, "");
  if (const json* range = root.child("depth_range")) {
    ConfigReader r(*range, "depth_range");
    r.read("z_min", config.depth_range.z_min);
    r.read("z_max", config.depth_range.z_max);
    r.finish();
  }
  root.read("voxel_size", config.voxel_size);
  root.read("outlier_k", config.outlier_k);
  root.read("outlier_sigma", config.outlier_sigma);
  root.read("normal_k", config.normal_k);
  if (const json* gripper = root.child("gripper")) {
    ConfigReader r(*gripper, "gripper");
    r.read("max_opening", config.gripper.max_opening);
    r.read("min_opening", config.gripper.min_opening);
    r.read("finger_width", config.gripper.finger_width);
    r.finish();
  }
  if (const json* grasp = root.child("grasp")) {
    ConfigReader r(*grasp, "grasp");
    r.read("slice_epsilon", config.grasp.slice_epsilon);
    if (const json* weights = r.child("weights")) {
      ConfigReader w(*weights, "grasp.weights");
      w.read("antipodality", config.grasp.weights.antipodality);
      w.read("flatness", config.grasp.weights.flatness);
      w.read("plane_proximity", config.grasp.weights.plane_proximity);
      w.finish();
    }
    r.read("score_floor", config.grasp.score_floor);
    r.read("min_points", config.grasp.min_points);
    r.read("side_cap", config.grasp.side_cap);
    r.read("curvature_k", config.grasp.curvature_k);
    r.read("max_candidates", config.grasp.max_candidates);
    r.finish();
  }
  root.read("low_confidence_ratio", config.low_confidence_ratio);
  std::string output_dir = config.output_dir.string();
  root.read("output_dir", output_dir);
  config.output_dir = output_dir;
  root.read("jobs", config.jobs);
  root.finish();
  config.validate();
  return config;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_pipeline_config(text.str(), std::move(base));
}

std::string pipeline_config_json(const PipelineConfig& c) {
  const json doc = {
      {"depth_range", {{"z_min", c.depth_range.z_min}, {"z_max", c.depth_range.z_max}}},
      {"voxel_size", c.voxel_size},
      {"outlier_k", c.outlier_k},
      {"outlier_sigma", c.outlier_sigma},
      {"normal_k", c.normal_k},
      {"gripper",
       {{"max_opening", c.gripper.max_opening},
        {"min_opening", c.gripper.min_opening},
        {"finger_width", c.gripper.finger_width}}},
      {"grasp",
       {{"slice_epsilon", c.grasp.slice_epsilon},
        {"weights",
         {{"antipodality", c.grasp.weights.antipodality},
          {"flatness", c.grasp.weights.flatness},
          {"plane_proximity", c.grasp.weights.plane_proximity}}},
        {"score_floor", c.grasp.score_floor},
        {"min_points", c.grasp.min_points},
        {"side_cap", c.grasp.side_cap},
        {"curvature_k", c.grasp.curvature_k},
        {"max_candidates", c.grasp.max_candidates}}},
      {"low_confidence_ratio", c.low_confidence_ratio},
      {"output_dir", c.output_dir.string()},
      {"jobs", c.jobs},
  };
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_frame(const FrameInputs& frame) {
  frame.intrinsics.validate();
  frame.depth.validate();
  frame.color.validate();
  const int w = frame.intrinsics.width;
  const int h = frame.intrinsics.height;
  if (frame.depth.width != w || frame.depth.height != h || frame.color.width != w ||
      frame.color.height != h) {
    throw Error(ErrorCode::DimensionMismatch, "color, depth and intrinsics disagree on the frame size");
  }
}

PointCloud condition(const PointCloud& raw, const PipelineConfig& config) {
  PointCloud cloud = voxel_downsample(raw, config.voxel_size);
  if (cloud.size() < config.grasp.min_points) {
    throw Error(ErrorCode::InsufficientCloud, "cloud has " + std::to_string(cloud.size()) +
                                                  " points after downsampling, need at least " +
                                                  std::to_string(config.grasp.min_points));
  }
  return remove_statistical_outliers(cloud, config.outlier_k, config.outlier_sigma);
}

void process_object(const FrameInputs& frame, const InstanceMask& mask, const PipelineConfig& config,
                    ObjectResult& result) {
  try {
    auto start = Clock::now();
    result.depth_validity_ratio = depth_validity_ratio(frame.depth, mask, config.depth_range);
    const PointCloud raw =
        masked_backprojection(frame.depth, frame.color, mask, frame.intrinsics, config.depth_range);
    result.cloud.raw_points = raw.size();
    result.timings.backprojection_ms = elapsed_ms(start);

    start = Clock::now();
    PointCloud cloud = condition(raw, config);
    result.timings.conditioning_ms = elapsed_ms(start);
    result.cloud.conditioned_points = cloud.size();
    result.cloud.bbox = bounding_box(cloud);
    if (cloud.size() < config.grasp.min_points) {
      throw Error(ErrorCode::InsufficientCloud, "cloud has " + std::to_string(cloud.size()) +
                                                    " points after outlier removal, need at least " +
                                                    std::to_string(config.grasp.min_points));
    }

    start = Clock::now();
    cloud = estimate_normals(cloud, config.normal_k);
    result.timings.normals_ms = elapsed_ms(start);

    start = Clock::now();
    GraspReport report = compute_best_grasp(cloud, config.gripper, config.grasp);
    result.timings.grasp_ms = elapsed_ms(start);
    report.label = result.label;
    report.flags.depth_validity_ratio = result.depth_validity_ratio;
    report.flags.low_confidence = *result.depth_validity_ratio < config.low_confidence_ratio;
    result.grasp = std::move(report);
    result.conditioned_cloud = std::move(cloud);
  } catch (const Error& e) {
    result.error = e.code();
    result.error_message = e.what();
  }
}

}  // namespace

PointCloud reconstruct_object(const FrameInputs& frame, const InstanceMask& mask,
                              const PipelineConfig& config) {
  check_frame(frame);
  return condition(
      masked_backprojection(frame.depth, frame.color, mask, frame.intrinsics, config.depth_range), config);
}

FrameResult run_pipeline(const FrameInputs& frame, const std::vector<DetectionRecord>& detections,
                         const PipelineConfig& config) {
  const auto start = Clock::now();
  config.validate();
  check_frame(frame);

  std::vector<InstanceMask> masks;
  masks.reserve(detections.size());
  for (const auto& det : detections) {
    masks.push_back(load_mask(det.mask));
    if (masks.back().width != frame.depth.width || masks.back().height != frame.depth.height) {
      throw Error(ErrorCode::DimensionMismatch, "detection mask size differs from the frame");
    }
  }

  FrameResult result;
  if (!detections.empty()) result.image_id = detections.front().image_id;
  result.objects.resize(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    result.objects[i].detection_index = i;
    result.objects[i].label = detections[i].label;
    result.objects[i].detection_score = detections[i].score;
  }

  std::size_t workers = config.jobs > 0 ? config.jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, detections.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < detections.size(); i = next++) {
      try {
        process_object(frame, masks[i], config, result.objects[i]);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  result.total_ms = elapsed_ms(start);
  return result;
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json grasp_json(const GraspReport& report) {
  json candidates = json::array();
  for (const auto& c : report.candidates) {
    candidates.push_back({
        {"contact_a", vec3(c.contact_a)},
        {"contact_b", vec3(c.contact_b)},
        {"normal_a", vec3(c.normal_a)},
        {"normal_b", vec3(c.normal_b)},
        {"index_a", c.index_a},
        {"index_b", c.index_b},
        {"opening", c.opening},
        {"score", c.score},
        {"approach", vec3(c.approach)},
    });
  }
  json flags = {
      {"point_count", report.flags.point_count},
      {"low_confidence", report.flags.low_confidence},
      {"depth_validity_ratio", report.flags.depth_validity_ratio ? json(*report.flags.depth_validity_ratio)
                                                                 : json(nullptr)},
  };
  return {
      {"class", report.label ? json(std::string(class_name(*report.label))) : json(nullptr)},
      {"plane",
       {{"origin", vec3(report.plane.origin)}, {"normal", vec3(report.plane.normal)},
        {"epsilon", report.plane.epsilon}}},
      {"flags", flags},
      {"candidates", candidates},
  };
}

}  // namespace

std::string frame_result_json(const FrameResult& result) {
  json objects = json::array();
  for (const auto& o : result.objects) {
    json cloud = {{"raw_points", o.cloud.raw_points}, {"conditioned_points", o.cloud.conditioned_points}};
    if (o.cloud.bbox) cloud["bbox"] = {{"min", vec3(o.cloud.bbox->min)}, {"max", vec3(o.cloud.bbox->max)}};
    json entry = {
        {"detection_index", o.detection_index},
        {"class", std::string(class_name(o.label))},
        {"detection_score", o.detection_score},
        {"depth_validity_ratio", o.depth_validity_ratio ? json(*o.depth_validity_ratio) : json(nullptr)},
        {"cloud", cloud},
        {"status", o.error ? std::string(error_code_name(*o.error)) : std::string("ok")},
    };
    if (o.error) entry["error"] = o.error_message;
    if (o.grasp) entry["grasp"] = grasp_json(*o.grasp);
    objects.push_back(std::move(entry));
  }
  return json{{"image_id", result.image_id}, {"objects", objects}}.dump(2);
}

namespace {

constexpr int kDiscRings = 3;
constexpr int kDiscSpokes = 24;

}  // namespace

std::size_t marker_vertex_count() { return 2 + 1 + kDiscRings * kDiscSpokes; }

void export_ply_markers(const PointCloud& cloud, const GraspReport& report,
                        const std::filesystem::path& path) {
  if (report.candidates.empty()) {
    throw Error(ErrorCode::PreconditionViolation, "grasp report has no candidate to export");
  }
  cloud.check_consistent();
  const GraspCandidate& best = report.candidates.front();

  PointCloud out = cloud;
  const bool normals = cloud.has_normals();
  if (!out.has_colors()) out.colors.assign(out.size(), Rgb{200, 200, 200});
  auto add = [&](const Eigen::Vector3d& p, Rgb color, const Eigen::Vector3d& n) {
    out.points.push_back(p);
    out.colors.push_back(color);
    if (normals) out.normals.push_back(n);
  };
  add(best.contact_a, {255, 0, 0}, best.normal_a);
  add(best.contact_b, {0, 255, 0}, best.normal_b);

  // Disc in the grasping plane, centered on the plane origin.
  const Eigen::Vector3d& n = report.plane.normal;
  Eigen::Index least = 0;
  n.cwiseAbs().minCoeff(&least);
  const Eigen::Vector3d u = n.cross(Eigen::Vector3d::Unit(least)).normalized();
  const Eigen::Vector3d v = n.cross(u);
  const double radius = std::max(0.75 * best.opening, report.plane.epsilon);
  const Rgb blue{0, 0, 255};
  add(report.plane.origin, blue, n);
  for (int ring = 1; ring <= kDiscRings; ++ring) {
    const double r = radius * ring / kDiscRings;
    for (int s = 0; s < kDiscSpokes; ++s) {
      const double angle = 2.0 * std::numbers::pi * s / kDiscSpokes;
      add(report.plane.origin + r * (std::cos(angle) * u + std::sin(angle) * v), blue, n);
    }
  }
  write_ply(path, out, PlyFormat::BinaryLittleEndian);
}

}  // namespace wastegrasp
