#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wastegrasp/camera_geometry.hpp"
#include "wastegrasp/cloud_processing.hpp"
#include "wastegrasp/dataset_io.hpp"
#include "wastegrasp/error.hpp"
#include "wastegrasp/grasp_synthesis.hpp"

namespace wastegrasp {

struct PipelineConfig {
  DepthRange depth_range;        // [0.15, 3.0] m
  double voxel_size = 0.005;     // m
  std::size_t outlier_k = 16;
  double outlier_sigma = 1.0;
  std::size_t normal_k = 16;
  GripperSpec gripper;
  GraspConfig grasp;
  double low_confidence_ratio = 0.5;  // depth validity below this flags the grasp
  std::filesystem::path output_dir = ".";
  std::size_t jobs = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// Overlays the keys present in `json_text` onto `base`; unknown keys are
/// rejected so typos do not silently fall back to defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string pipeline_config_json(const PipelineConfig& config);

struct FrameInputs {
  ColorFrame color;
  DepthFrame depth;
  PinholeIntrinsics intrinsics;
};

struct CloudSummary {
  std::size_t raw_points = 0;
  std::size_t conditioned_points = 0;
  std::optional<AxisAlignedBox> bbox;  // of the conditioned cloud
};

struct StageTimings {
  double backprojection_ms = 0.0;
  double conditioning_ms = 0.0;
  double normals_ms = 0.0;
  double grasp_ms = 0.0;
};

struct ObjectResult {
  std::size_t detection_index = 0;
  ClassLabel label = ClassLabel::OpaquePlasticBottle;
  double detection_score = 0.0;
  std::optional<double> depth_validity_ratio;
  CloudSummary cloud;
  std::optional<GraspReport> grasp;
  std::optional<ErrorCode> error;
  std::string error_message;
  StageTimings timings;
  PointCloud conditioned_cloud;  // kept for marker export; not serialized
};

struct FrameResult {
  std::string image_id;
  std::vector<ObjectResult> objects;  // detection order
  double total_ms = 0.0;
};

/// Backprojects, conditions and grasps every detection of one frame.
/// Objects run concurrently; a failing object records its error and
/// never affects the others. Frame-level problems (dimension mismatch,
/// unreadable masks) throw.
FrameResult run_pipeline(const FrameInputs& frame, const std::vector<DetectionRecord>& detections,
                         const PipelineConfig& config);

/// Masked backprojection followed by voxel downsampling and outlier
/// removal; no normals.
PointCloud reconstruct_object(const FrameInputs& frame, const InstanceMask& mask,
                              const PipelineConfig& config);

std::string frame_result_json(const FrameResult& result);

/// Object cloud plus marker vertices: the two contacts of the best
/// candidate (red, green) and a disc sampling the grasping plane (blue).
/// Throws PreconditionViolation without writing when the report is empty.
void export_ply_markers(const PointCloud& cloud, const GraspReport& report,
                        const std::filesystem::path& path);

/// Number of vertices export_ply_markers appends after the cloud.
std::size_t marker_vertex_count();

}  // namespace wastegrasp
