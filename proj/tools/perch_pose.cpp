// perch_pose: scenario runner for the multi-marker perching-target estimator.
//
//   perch_pose run <config.json> [--out-dir D] [--seed N]
//   perch_pose calibrate <config.json> [--out F] [--seed N]
//   perch_pose sweep <config.json> --param P --values V... [--out-dir D] [--seed N]
//   perch_pose validate <config.json>
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perch/perch.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw perch::Error(perch::ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << text;
}

std::string dump(const perch::Json &j) { return j.dump(2) + "\n"; }

perch::Json load_with_seed(const std::string &path, std::optional<std::uint64_t> seed) {
  perch::Json j = perch::load_json_file(path);
  if (seed) {
    if (!j.is_object()) throw perch::Error(perch::ErrorCode::kConfig, path + ": expected a JSON object");
    j["seed"] = *seed;
  }
  return j;
}

/// "kf.n_max" -> "/kf/n_max"; a leading '/' is taken as a JSON pointer as is.
perch::Json::json_pointer param_pointer(const std::string &param) {
  if (!param.empty() && param.front() == '/') return perch::Json::json_pointer(param);
  std::string ptr;
  std::stringstream ss(param);
  for (std::string part; std::getline(ss, part, '.');) ptr += "/" + part;
  return perch::Json::json_pointer(ptr);
}

perch::Json parse_value(const std::string &text) {
  try {
    return perch::Json::parse(text);
  } catch (const perch::Json::parse_error &) {
    return perch::Json(text);  // bare strings such as trajectory types
  }
}

int cmd_run(const std::string &config, const std::string &out_dir, std::optional<std::uint64_t> seed) {
  const auto cfg = perch::parse_scenario(load_with_seed(config, seed));
  const auto run = perch::run_scenario(cfg);
  fs::create_directories(out_dir);
  std::ostringstream csv;
  perch::write_frames_csv(csv, run.frames);
  write_text(fs::path(out_dir) / "frames.csv", csv.str());
  write_text(fs::path(out_dir) / "metrics.json", dump(perch::metrics_to_json(run.metrics)));
  perch::log::info("wrote " + std::to_string(run.frames.size()) + " frames to " + out_dir);
  return kExitOk;
}

int cmd_calibrate(const std::string &config, const std::string &out, std::optional<std::uint64_t> seed) {
  const auto cfg = perch::parse_scenario(load_with_seed(config, seed));
  const auto &cal = cfg.calibration;
  const auto samples = perch::collect_calibration_run(cfg, cal.n_points, cal.samples_per_point);
  const perch::CalibResult result = cal.method == "lms"
                                        ? perch::fit_sigma_lms(samples, cal.lms_mu, cal.lms_epochs, cfg.seed)
                                        : perch::fit_sigma_closed_form(samples);
  for (int a = 0; a < 4; ++a) {
    if (result.indeterminate[a]) perch::log::warn("calibration axis " + std::to_string(a) + " is indeterminate");
  }
  perch::Json j = perch::calib_result_to_json(result);
  j["method"] = cal.method;
  j["source"] = cal.use_raw ? "raw" : "filtered";
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, dump(j));
  return kExitOk;
}

int cmd_sweep(const std::string &config, const std::string &param, const std::vector<std::string> &values,
              const std::string &out_dir, std::optional<std::uint64_t> seed) {
  const perch::Json base = load_with_seed(config, seed);
  const auto ptr = param_pointer(param);
  std::vector<perch::ScenarioConfig> configs;
  for (const auto &v : values) {
    perch::Json j = base;
    if (!j.contains(ptr)) {
      // Allow setting fields that fall back to defaults, as long as the parent exists.
      if (!j.contains(ptr.parent_pointer())) {
        throw perch::Error(perch::ErrorCode::kConfig, "sweep: no such parameter '" + param + "'");
      }
    }
    j[ptr] = parse_value(v);
    configs.push_back(perch::parse_scenario(j));
  }

  std::vector<std::future<perch::ScenarioRun>> jobs;
  for (const auto &c : configs) jobs.push_back(std::async(std::launch::async, [c] { return perch::run_scenario(c); }));

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "param,value,frames,frames_with_output,p2p_x_cm,p2p_y_cm,p2p_z_cm,p2p_psi_deg,rmse_x_cm,rmse_y_cm,"
         "rmse_z_cm,rmse_psi_deg,occ_none,occ_s1,occ_s2,occ_s3,dropout_bridges,track_lost\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto run = jobs[i].get();
    const auto &m = run.metrics;
    csv << param << ',' << values[i] << ',' << m.frames << ',' << m.frames_with_output;
    for (const auto *arr : {&m.peak_to_peak, &m.rmse, &m.occupancy}) {
      for (double v : *arr) csv << ',' << perch::Json(v).dump();
    }
    csv << ',' << m.dropout_bridges << ',' << m.track_lost << '\n';
    const fs::path run_dir = fs::path(out_dir) / ("run_" + std::to_string(i));
    fs::create_directories(run_dir);
    std::ostringstream frames;
    perch::write_frames_csv(frames, run.frames);
    write_text(run_dir / "frames.csv", frames.str());
    write_text(run_dir / "metrics.json", dump(perch::metrics_to_json(m)));
  }
  write_text(fs::path(out_dir) / "sweep.csv", csv.str());
  return kExitOk;
}

int cmd_validate(const std::string &config) {
  const auto cfg = perch::load_scenario(config);
  const auto det = cfg.effective_detector();
  std::cout << "ok: " << perch::to_string(cfg.trajectory.type) << " trajectory at " << cfg.frame_rate << " Hz";
  if (cfg.visibility) {
    const auto cal = perch::calibrate_thresholds(cfg.intrinsics, cfg.target, cfg.visibility->z1, cfg.visibility->z2);
    std::cout << "; thresholds large " << det.threshold_for(cfg.target.large.id) << " px, small "
              << det.threshold_for(cfg.target.small.id) << " px; large marker leaves FOV below "
              << cal.large_fov_loss_z << " m";
  }
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multi-marker perching-target pose estimation simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  std::string out_file = "sigma.json";
  std::string param;
  std::vector<std::string> values;
  std::optional<std::uint64_t> seed;

  auto *run = app.add_subcommand("run", "Run a scenario; writes frames.csv and metrics.json");
  run->add_option("config", config, "Scenario JSON")->required();
  run->add_option("--out-dir", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the scenario seed");

  auto *calibrate = app.add_subcommand("calibrate", "Fit blending coefficients; writes sigma.json");
  calibrate->add_option("config", config, "Scenario JSON")->required();
  calibrate->add_option("--out", out_file, "Output file");
  calibrate->add_option("--seed", seed, "Override the scenario seed");

  auto *sweep = app.add_subcommand("sweep", "Run one scenario per parameter value");
  sweep->add_option("config", config, "Scenario JSON")->required();
  sweep->add_option("--param", param, "Parameter path, e.g. kf.n_max")->required();
  sweep->add_option("--values", values, "Values to substitute (JSON literals)")->required();
  sweep->add_option("--out-dir", out_dir, "Output directory");
  sweep->add_option("--seed", seed, "Override the scenario seed");

  auto *validate = app.add_subcommand("validate", "Check a scenario config");
  validate->add_option("config", config, "Scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, out_dir, seed);
    if (*calibrate) return cmd_calibrate(config, out_file, seed);
    if (*sweep) return cmd_sweep(config, param, values, out_dir, seed);
    if (*validate) return cmd_validate(config);
  } catch (const perch::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == perch::ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const perch::Json::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
