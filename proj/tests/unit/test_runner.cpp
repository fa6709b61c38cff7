#include <doctest.h>

#include <filesystem>
#include <string>

#include "branchwave/errors.hpp"
#include "branchwave/runner.hpp"

using namespace branchwave;
namespace fs = std::filesystem;

namespace {

std::string config(const std::string& name) { return read_text_file(std::string(BRANCHWAVE_CONFIG_DIR) + "/" + name); }

RunOptions quiet_in(const std::string& sub) {
  RunOptions o;
  o.out_dir = (fs::temp_directory_path() / "branchwave_runner_test" / sub).string();
  o.quiet = true;
  return o;
}

ErrorKind thrown_kind(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("distance run writes a versioned summary with the worked value") {
  const RunResult r = run_config(config("distance.json"), quiet_in("distance"));
  CHECK(r.summary_json.find("\"schema\": \"branchwave/1\"") != std::string::npos);
  CHECK(r.summary_json.find("2.8284271247461") != std::string::npos);
  CHECK(fs::exists(fs::path(quiet_in("distance").out_dir) / "summary.json"));
  CHECK(fs::exists(fs::path(quiet_in("distance").out_dir) / "distances.csv"));
}

TEST_CASE("identical configs give identical summaries") {
  const std::string a = run_config(config("spectrum.json"), quiet_in("det_a")).summary_json;
  const std::string b = run_config(config("spectrum.json"), quiet_in("det_b")).summary_json;
  CHECK(a == b);
}

TEST_CASE("validation names the violated clause") {
  CHECK(thrown_kind([] { validate_config(config("bad_grid.json")); }) == ErrorKind::BranchPointOnGrid);
  CHECK(exit_code_for(ErrorKind::BranchPointOnGrid) == 2);
  CHECK(exit_code_for(ErrorKind::BoundaryContamination) == 3);
  CHECK(thrown_kind([] { validate_config("{\"experiment\": \"teleport\"}"); }) == ErrorKind::InvalidConfig);
  CHECK(thrown_kind([] { validate_config("{\"experiment\": \"distance\", \"colour\": 1}"); }) ==
        ErrorKind::InvalidConfig);
  CHECK(thrown_kind([] { validate_config("not json"); }) == ErrorKind::InvalidConfig);
  const std::string coarse =
      R"({"experiment": "transmit", "geometry": {"h": 0.25, "box": [-8, 8, -40, 40]},
          "packet": {"a": 8, "s": 32}, "stepper": {"dt": 0.005, "T": 0.1}})";
  CHECK(thrown_kind([&] { validate_config(coarse); }) == ErrorKind::ResolutionViolation);
  const std::string on_cut =
      R"({"experiment": "same_sheet", "geometry": {"h": 0.125, "box": [-8, 8, -40, 40]},
          "packet": {"a": 8, "s": 32, "k": 1}, "stepper": {"dt": 0.003, "T": 0.12}})";
  CHECK(thrown_kind([&] { validate_config(on_cut); }) == ErrorKind::CutOverlap);
}

TEST_CASE("every shipped config validates") {
  for (const auto& entry : fs::directory_iterator(BRANCHWAVE_CONFIG_DIR)) {
    if (entry.path().filename() == "bad_grid.json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(validate_config(read_text_file(entry.path().string())));
  }
}

TEST_CASE("sweep consolidates runs and reports trends") {
  const std::string base = R"({"experiment": "spectrum", "geometry": {"h": 0.125}, "spectrum": {"count": 3}})";
  RunOptions o = quiet_in("sweep");
  const SweepResult s = run_sweep(base, "geometry.h", {0.125, 0.0625}, o);
  CHECK(s.failures == 0);
  CHECK(s.summary_json.find("\"max_rel_error\": \"strictly_decreasing\"") != std::string::npos);
  CHECK(fs::exists(fs::path(o.out_dir) / "sweep.csv"));
  CHECK(fs::exists(fs::path(o.out_dir) / "run_1" / "summary.json"));

  const SweepResult bad = run_sweep(base, "geometry.h", {0.125, 2.0 / 7.0}, quiet_in("sweep_bad"));
  CHECK(bad.failures == 1);
  CHECK(bad.first_error == ErrorKind::BranchPointOnGrid);
}

TEST_CASE("grid export writes adjacency and the initial state") {
  const std::string cfg =
      R"({"experiment": "evolve", "geometry": {"h": 0.25, "box": [-5, 5, -5, 5]},
          "packet": {"a": 2, "s": 4}, "stepper": {"dt": 0.02, "T": 0.1}})";
  const std::string dir = quiet_in("export").out_dir;
  const auto files = export_grid(cfg, dir);
  CHECK(files.size() == 2);
  CHECK(fs::file_size(fs::path(dir) / "initial_state.bin") == 32 + 2 * 40 * 40 * 16);
}
