#include "shaped_pick/analysis.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaped_pick {

void EpisodeTrace::validate() const {
  const std::size_t steps = actions.size();
  if (gripper_positions.size() != steps + 1 ||
      object_positions.size() != steps + 1 || rewards.size() != steps ||
      success_flags.size() != steps) {
    throw std::invalid_argument("episode trace: inconsistent list lengths");
  }
  if ((!features.empty() && features.size() != steps + 1) ||
      (!achieved_goals.empty() && achieved_goals.size() != steps + 1)) {
    throw std::invalid_argument("episode trace: inconsistent feature lengths");
  }
}

namespace analysis {

namespace {

const std::vector<Vec3>& positions(const EpisodeTrace& trace, Subject subject) {
  return subject == Subject::kGripper ? trace.gripper_positions
                                      : trace.object_positions;
}

Vec3 abs_delta(const Vec3& a, const Vec3& b) {
  return {std::abs(b.x - a.x), std::abs(b.y - a.y), std::abs(b.z - a.z)};
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::runtime_error(context + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string_view subject_name(Subject subject) {
  return subject == Subject::kGripper ? "gripper" : "object";
}

Subject subject_from_name(std::string_view name) {
  if (name == "gripper") return Subject::kGripper;
  if (name == "object") return Subject::kObject;
  throw std::invalid_argument("unknown subject '" + std::string(name) + "'");
}

AxisSteps axis_attainment(const EpisodeTrace& trace, double tol,
                          Subject subject) {
  if (!(tol > 0)) throw std::invalid_argument("axis_attainment: tol must be > 0");
  const auto& pos = positions(trace, subject);
  AxisSteps result;
  for (int axis = 0; axis < 3; ++axis) {
    // Walk backwards while the coordinate stays in the band.
    int first_held = static_cast<int>(pos.size());
    for (int t = static_cast<int>(pos.size()) - 1; t >= 0; --t) {
      if (std::abs(pos[t][axis] - trace.goal[axis]) > tol) break;
      first_held = t;
    }
    if (first_held < static_cast<int>(pos.size())) result[axis] = first_held;
  }
  return result;
}

std::optional<double> sequentiality_index(const EpisodeTrace& trace,
                                          Subject subject) {
  const auto& pos = positions(trace, subject);
  double max_sum = 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < pos.size(); ++t) {
    const Vec3 d = abs_delta(pos[t], pos[t + 1]);
    max_sum += std::max({d.x, d.y, d.z});
    total += d.x + d.y + d.z;
  }
  if (total <= 0.0) return std::nullopt;
  return max_sum / total;
}

PathLengths path_lengths(const EpisodeTrace& trace, Subject subject) {
  const auto& pos = positions(trace, subject);
  PathLengths lengths;
  for (std::size_t t = 0; t + 1 < pos.size(); ++t) {
    const Vec3 d = abs_delta(pos[t], pos[t + 1]);
    lengths.l1 += d.x + d.y + d.z;
    lengths.l2 += norm2(d);
  }
  return lengths;
}

TrajectoryReport analyze(const EpisodeTrace& trace, double attainment_tol,
                         Subject subject) {
  trace.validate();
  TrajectoryReport report;
  report.attainment_steps = axis_attainment(trace, attainment_tol, subject);
  report.sequentiality_index = sequentiality_index(trace, subject);
  const PathLengths lengths = path_lengths(trace, subject);
  report.l1_path_length = lengths.l1;
  report.l2_path_length = lengths.l2;
  report.final_object_goal_distance =
      distance(trace.object_positions.back(), trace.goal);
  return report;
}

nlohmann::json report_to_json(const TrajectoryReport& report) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : report.attainment_steps) {
    steps.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
  }
  return {{"attainment_steps", steps},
          {"sequentiality_index",
           report.sequentiality_index ? nlohmann::json(*report.sequentiality_index)
                                      : nlohmann::json(nullptr)},
          {"l1_path_length", report.l1_path_length},
          {"l2_path_length", report.l2_path_length},
          {"final_object_goal_distance", report.final_object_goal_distance}};
}

TrajectoryReport report_from_json(const nlohmann::json& j) {
  TrajectoryReport report;
  const auto& steps = j.at("attainment_steps");
  if (!steps.is_array() || steps.size() != 3) {
    throw std::invalid_argument("report: attainment_steps must have 3 entries");
  }
  for (std::size_t axis = 0; axis < 3; ++axis) {
    if (!steps[axis].is_null()) report.attainment_steps[axis] = steps[axis].get<int>();
  }
  if (!j.at("sequentiality_index").is_null()) {
    report.sequentiality_index = j.at("sequentiality_index").get<double>();
  }
  report.l1_path_length = j.at("l1_path_length").get<double>();
  report.l2_path_length = j.at("l2_path_length").get<double>();
  report.final_object_goal_distance = j.at("final_object_goal_distance").get<double>();
  return report;
}

void export_trace(const EpisodeTrace& trace, const std::filesystem::path& path) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  auto d = format_double;
  out << "# goal," << d(trace.goal.x) << ',' << d(trace.goal.y) << ','
      << d(trace.goal.z) << '\n';
  out << "step,gx,gy,gz,ox,oy,oz,ax,ay,az,agrip,reward,success\n";
  for (std::size_t t = 0; t < trace.gripper_positions.size(); ++t) {
    const Vec3& g = trace.gripper_positions[t];
    const Vec3& o = trace.object_positions[t];
    out << t << ',' << d(g.x) << ',' << d(g.y) << ',' << d(g.z) << ','
        << d(o.x) << ',' << d(o.y) << ',' << d(o.z) << ',';
    if (t == 0) {
      out << ",,,,,\n";
    } else {
      const Action& a = trace.actions[t - 1];
      out << d(a.dx) << ',' << d(a.dy) << ',' << d(a.dz) << ',' << d(a.grip)
          << ',' << d(trace.rewards[t - 1]) << ','
          << (trace.success_flags[t - 1] ? 1 : 0) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing trace " + path.string());
}

EpisodeTrace import_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trace " + path.string());
  const std::string ctx = path.string();
  EpisodeTrace trace;
  std::string line;
  bool have_goal = false;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = ctx + ":" + std::to_string(line_no);
    if (line.rfind("# goal,", 0) == 0) {
      const auto f = split(line.substr(7));
      if (f.size() != 3) throw std::runtime_error(where + ": malformed goal line");
      trace.goal = {parse_double(f[0], where), parse_double(f[1], where),
                    parse_double(f[2], where)};
      have_goal = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) {
      if (line != "step,gx,gy,gz,ox,oy,oz,ax,ay,az,agrip,reward,success") {
        throw std::runtime_error(where + ": unexpected header");
      }
      have_header = true;
      continue;
    }
    const auto f = split(line);
    if (f.size() != 13) throw std::runtime_error(where + ": expected 13 fields");
    const auto row = static_cast<std::size_t>(parse_double(f[0], where));
    if (row != trace.gripper_positions.size()) {
      throw std::runtime_error(where + ": steps out of order");
    }
    trace.gripper_positions.push_back({parse_double(f[1], where),
                                       parse_double(f[2], where),
                                       parse_double(f[3], where)});
    trace.object_positions.push_back({parse_double(f[4], where),
                                      parse_double(f[5], where),
                                      parse_double(f[6], where)});
    if (row == 0) continue;
    trace.actions.push_back({parse_double(f[7], where), parse_double(f[8], where),
                             parse_double(f[9], where), parse_double(f[10], where)});
    trace.rewards.push_back(parse_double(f[11], where));
    trace.success_flags.push_back(f[12] == "1");
  }
  if (!have_goal) throw std::runtime_error(ctx + ": missing '# goal' line");
  if (trace.gripper_positions.empty()) {
    throw std::runtime_error(ctx + ": no trace rows");
  }
  return trace;
}

}  // namespace analysis
}  // namespace shaped_pick
