#include "shaped_pick/analysis.h"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"

using namespace shaped_pick;
using namespace shaped_pick::analysis;
using shaped_pick::testing::random_vec;
using shaped_pick::testing::trace_through;

namespace {

// Axis-by-axis path from `from` to `to` in `n` dyadic steps per axis.
std::vector<Vec3> staircase(Vec3 from, const Vec3& to, int n) {
  std::vector<Vec3> points{from};
  for (int axis = 0; axis < 3; ++axis) {
    const double step = (to[axis] - from[axis]) / n;
    for (int i = 0; i < n; ++i) {
      from[axis] += step;
      points.push_back(from);
    }
  }
  return points;
}

}  // namespace

TEST_CASE("sequentiality index extremes") {
  SUBCASE("staircase is 1") {
    const auto trace = trace_through(staircase({0.125, 0.25, 0.75}, {0.625, 0.5, 0.25}, 8),
                                     {0.625, 0.5, 0.25});
    CHECK(sequentiality_index(trace) == 1.0);
  }
  SUBCASE("body diagonal is 1/3") {
    std::vector<Vec3> points;
    for (int i = 0; i <= 16; ++i) {
      const double s = 0.0625 * i;
      points.push_back({0.25 + s * 0.5, 0.75 - s * 0.5, 0.125 + s * 0.5});
    }
    const auto trace = trace_through(points, points.back());
    CHECK(sequentiality_index(trace) == 1.0 / 3.0);
  }
  SUBCASE("stationary subject has no index") {
    const auto trace = trace_through({{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}, {0.1, 0.1, 0.1});
    CHECK_FALSE(sequentiality_index(trace).has_value());
  }
}

TEST_CASE("axis attainment uses held-through-end semantics") {
  const Vec3 goal{0.5, 0.5, 0.5};
  std::vector<Vec3> points(21, Vec3{0.2, 0.5, 0.8});
  points[5].x = 0.5;  // touches the band, then leaves
  for (int t = 12; t <= 20; ++t) points[static_cast<std::size_t>(t)].x = 0.51;
  const AxisSteps steps = axis_attainment(trace_through(points, goal), 0.02);
  CHECK(steps[0] == 12);
  CHECK(steps[1] == 0);
  CHECK_FALSE(steps[2].has_value());
  CHECK_THROWS_AS(axis_attainment(trace_through(points, goal), 0.0),
                  std::invalid_argument);
}

TEST_CASE("attainment follows the requested subject") {
  const Vec3 goal{0.5, 0.5, 0.02};
  EpisodeTrace trace = trace_through({{0.9, 0.9, 0.9}, {0.9, 0.9, 0.9}}, goal);
  trace.object_positions = {{0.1, 0.5, 0.02}, {0.5, 0.5, 0.02}};
  const AxisSteps object = axis_attainment(trace, 0.02, Subject::kObject);
  CHECK(object[0] == 1);
  CHECK(object[1] == 0);
  CHECK(object[2] == 0);
  CHECK_FALSE(axis_attainment(trace, 0.02, Subject::kGripper)[0].has_value());
}

TEST_CASE("path length bounds on random traces") {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Vec3> points;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int t = 0; t <= n; ++t) points.push_back(random_vec(rng));
    const auto trace = trace_through(points, random_vec(rng));
    const PathLengths len = path_lengths(trace);
    CHECK(len.l2 <= len.l1 + 1e-12);
    CHECK(len.l1 <= std::sqrt(3.0) * len.l2 + 1e-12);
    CHECK(len.l2 >= distance(points.front(), points.back()) - 1e-12);
    const auto si = sequentiality_index(trace);
    REQUIRE(si.has_value());
    CHECK(*si >= 1.0 / 3.0 - 1e-12);
    CHECK(*si <= 1.0 + 1e-12);
  }
}

TEST_CASE("analyze and report json") {
  const Vec3 goal{0.5, 0.5, 0.5};
  auto trace = trace_through(staircase({0.25, 0.25, 0.25}, goal, 4), goal);
  trace.object_positions.back() = {0.5, 0.5, 0.3};
  const TrajectoryReport r = analyze(trace, 0.02);
  CHECK(r.attainment_steps[0] == 4);
  CHECK(r.attainment_steps[1] == 8);
  CHECK(r.attainment_steps[2] == 12);
  CHECK(r.sequentiality_index == 1.0);
  CHECK(r.l1_path_length == doctest::Approx(0.75));
  CHECK(r.final_object_goal_distance == doctest::Approx(0.2));

  const TrajectoryReport back =
      report_from_json(nlohmann::json::parse(report_to_json(r).dump()));
  CHECK(back.attainment_steps == r.attainment_steps);
  CHECK(back.sequentiality_index == r.sequentiality_index);
  CHECK(back.l2_path_length == r.l2_path_length);

  EpisodeTrace broken = trace;
  broken.rewards.pop_back();
  CHECK_THROWS_AS(analyze(broken, 0.02), std::invalid_argument);
}

TEST_CASE("trace csv round trip") {
  Rng rng(32);
  std::vector<Vec3> points;
  for (int t = 0; t <= 10; ++t) points.push_back(random_vec(rng));
  EpisodeTrace trace = trace_through(points, random_vec(rng));
  for (std::size_t t = 0; t < trace.object_positions.size(); ++t) {
    trace.object_positions[t] = random_vec(rng);
  }
  for (std::size_t t = 0; t < trace.actions.size(); ++t) {
    trace.actions[t] = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1),
                        uniform(rng, -1, 1)};
    trace.rewards[t] = uniform(rng, -3, 1);
    trace.success_flags[t] = t % 3 == 0;
  }

  testing::TempDir dir("trace");
  export_trace(trace, dir / "t.csv");
  const std::string text = testing::read_file(dir / "t.csv");
  CHECK(text.rfind("# goal,", 0) == 0);
  CHECK(text.find("step,gx,gy,gz,ox,oy,oz,ax,ay,az,agrip,reward,success") !=
        std::string::npos);

  const EpisodeTrace back = import_trace(dir / "t.csv");
  CHECK(back.goal == trace.goal);
  CHECK(back.gripper_positions == trace.gripper_positions);
  CHECK(back.object_positions == trace.object_positions);
  CHECK(back.rewards == trace.rewards);
  CHECK(back.success_flags == trace.success_flags);
  for (std::size_t t = 0; t < trace.actions.size(); ++t) {
    CHECK(back.actions[t].grip == trace.actions[t].grip);
  }

  SUBCASE("errors name the file") {
    testing::write_file(dir / "bad.csv", "# goal,1,2,3\nstep,gx\n0,abc\n");
    try {
      import_trace(dir / "bad.csv");
      FAIL("expected an error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(import_trace(dir / "missing.csv"), std::runtime_error);
  }
}

TEST_CASE("subject names") {
  CHECK(subject_from_name("object") == Subject::kObject);
  CHECK(subject_name(Subject::kGripper) == "gripper");
  CHECK_THROWS_AS(subject_from_name("arm"), std::invalid_argument);
}
