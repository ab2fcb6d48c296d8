#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>

#include "json.hpp"
#include "shaped_pick/trace.h"

namespace shaped_pick::analysis {

enum class Subject { kGripper, kObject };

std::string_view subject_name(Subject subject);
Subject subject_from_name(std::string_view name);

using AxisSteps = std::array<std::optional<int>, 3>;

struct TrajectoryReport {
  AxisSteps attainment_steps;
  // Absent when the subject never moves.
  std::optional<double> sequentiality_index;
  double l1_path_length = 0.0;
  double l2_path_length = 0.0;
  double final_object_goal_distance = 0.0;
};

// Per axis, the first position index from which the coordinate stays within
// `tol` of the goal through the end of the trace (index 0 is the initial
// state). Absent if the final position is off by more than `tol`.
AxisSteps axis_attainment(const EpisodeTrace& trace, double tol,
                          Subject subject = Subject::kGripper);

// sum_t max_axis |dp_t| / sum_t sum_axis |dp_t|: 1 for axis-aligned motion,
// 1/3 for body-diagonal motion.
std::optional<double> sequentiality_index(const EpisodeTrace& trace,
                                          Subject subject = Subject::kGripper);

struct PathLengths {
  double l1 = 0.0;
  double l2 = 0.0;
};

PathLengths path_lengths(const EpisodeTrace& trace,
                         Subject subject = Subject::kGripper);

TrajectoryReport analyze(const EpisodeTrace& trace, double attainment_tol,
                         Subject subject = Subject::kGripper);

nlohmann::json report_to_json(const TrajectoryReport& report);
TrajectoryReport report_from_json(const nlohmann::json& j);

// CSV: "# goal,x,y,z" comment line, header
// step,gx,gy,gz,ox,oy,oz,ax,ay,az,agrip,reward,success and one row per
// position; row 0 has empty action/reward/success fields. Throws
// std::runtime_error with the path on I/O failure.
void export_trace(const EpisodeTrace& trace, const std::filesystem::path& path);
EpisodeTrace import_trace(const std::filesystem::path& path);

}  // namespace shaped_pick::analysis
