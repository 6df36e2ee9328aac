// lanesim: closed-loop lateral-control evaluation toolkit.
//
// Subcommands:
//   synth     render a synthetic drive log from a track document
//   augment   produce viewpoint-shifted training samples with corrected labels
//   stats     steering-distribution summary of a log (with optional filtering
//             and resampling applied first)
//   simulate  replay logs against a controller and score autonomy
//   sweep     rank candidate projection geometries on one log
//   report    comparison table and plots from stored simulation runs
//
// Every run writes run_manifest.json (resolved config, seeds, input hashes)
// into the output directory before any other output.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "lanesim/lanesim.hpp"

namespace fs = std::filesystem;
using namespace lanesim;

namespace {

struct Settings {
  ProjectionSpec projection;
  FisheyeIntrinsics fisheye;
  VehicleParams vehicle;
  ControlGains gains;
  AugmentConfig augment;
  SelectionPolicy selection;
  SimConfig sim;
  ControllerSpec controller;

  static Settings from_config(const ConfigDoc& doc) {
    Settings s;
    s.projection = projection_from_config(doc);
    s.fisheye = fisheye_from_config(doc);
    s.vehicle = vehicle_from_config(doc);
    s.gains = gains_from_config(doc);
    s.augment = augment_from_config(doc);
    s.selection = selection_from_config(doc);
    s.sim = sim_from_config(doc);
    if (doc.has_section("controller")) s.controller = controller_from_config(doc);
    return s;
  }

  ConfigDoc to_config() const {
    ConfigDoc doc;
    projection_to_config(projection, doc);
    fisheye_to_config(fisheye, doc);
    vehicle_to_config(vehicle, doc);
    gains_to_config(gains, doc);
    augment_to_config(augment, doc);
    selection_to_config(selection, doc);
    sim_to_config(sim, doc);
    doc.set("controller", "kind", controller.kind);
    return doc;
  }
};

Settings load_settings(const std::string& config_path) {
  if (config_path.empty()) return Settings::from_config(ConfigDoc());
  return Settings::from_config(ConfigDoc::parse_file(config_path));
}

RunManifest make_manifest(const std::string& subcommand, const std::vector<std::string>& argv,
                          uint64_t seed, const Settings& settings) {
  RunManifest m;
  m.subcommand = subcommand;
  m.argv = argv;
  m.seed = seed;
  m.config_echo = settings.to_config().serialize();
  return m;
}

std::vector<std::string> collect_argv(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
  return out;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string track, out, config;
  double speed = 8.0;
  double seconds = 0.0;  // 0: drive the whole track
  double noise_deg = 1.0;
  uint64_t seed = 0;
};

int run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  Settings settings = load_settings(a.config);
  TrackSpec track = load_track(a.track);
  GroundTruth truth(track);

  fs::create_directories(a.out);
  RunManifest manifest = make_manifest("synth", argv, a.seed, settings);
  manifest.inputs.push_back({a.track, fnv1a64_file(a.track)});
  manifest.write(fs::path(a.out) / "run_manifest.json");

  LogGenConfig cfg;
  cfg.speed = a.speed;
  cfg.duration = a.seconds;
  cfg.noise_std = deg2rad(a.noise_deg);
  cfg.seed = a.seed;
  cfg.dt = settings.sim.dt;
  cfg.gains = settings.gains;
  cfg.vehicle = settings.vehicle;

  DriveLog log = generate_log(truth, settings.projection, cfg);
  save_drive_log(log, a.out);
  std::cout << "synth: wrote " << log.frames.size() << " frames ("
            << log.frames.size() * cfg.dt << " s at " << a.speed << " m/s) to " << a.out << "\n";
  return 0;
}

// -------------------------------------------------------------- augment ----

struct AugmentArgs {
  std::string log, out, config;
  uint64_t seed = 0;
  int samples_per_frame = 1;
  double min_speed = 2.0;
  double blinker_margin = 2.0;
  bool apply_selection = false;
};

int run_augment(const AugmentArgs& a, const std::vector<std::string>& argv) {
  Settings settings = load_settings(a.config);
  settings.augment.seed = a.seed;
  settings.selection.seed = a.seed;

  DriveLog log = load_drive_log(a.log);
  fs::create_directories(fs::path(a.out) / "frames");
  RunManifest manifest = make_manifest("augment", argv, a.seed, settings);
  manifest.inputs.push_back({a.log, fingerprint_log_dir(a.log)});
  manifest.write(fs::path(a.out) / "run_manifest.json");

  DriveLog filtered = filter_frames(log, a.min_speed, a.blinker_margin);
  std::vector<size_t> picks;
  if (a.apply_selection) {
    picks = select(filtered.frames, settings.selection);
  } else {
    picks.resize(filtered.frames.size());
    for (size_t i = 0; i < picks.size(); ++i) picks[i] = i;
  }

  std::ofstream labels(fs::path(a.out) / "labels.csv");
  labels << "sample_id,source_frame_id,de_m,dtheta_rad,speed_mps,label_deg\n";

  Rng rng = Rng(settings.augment.seed).split(1);
  WarpEnvelope env = settings.sim.envelope;
  size_t sample_id = 0;
  char name[24];
  for (size_t pick : picks) {
    const FrameRecord& rec = filtered.frames[pick];
    if (rec.speed <= kMinSpeed) continue;
    CylImage frame{filtered.spec, filtered.frame_image(pick)};
    for (int s = 0; s < a.samples_per_frame; ++s) {
      PoseOffset off = sample_offset(rng, settings.augment);
      auto [image, label] = augment_frame(frame, rec.steering, rec.speed, off, settings.gains, env);
      std::snprintf(name, sizeof(name), "%06zu", sample_id);
      write_png(fs::path(a.out) / "frames" / (std::string(name) + ".png"), image.image);
      labels << name << "," << rec.frame_id << "," << ConfigDoc::format_double(off.de) << ","
             << ConfigDoc::format_double(off.dtheta) << ","
             << ConfigDoc::format_double(rec.speed) << ","
             << ConfigDoc::format_double(rad2deg(label)) << "\n";
      ++sample_id;
    }
  }
  std::cout << "augment: wrote " << sample_id << " samples to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- stats ----

struct StatsArgs {
  std::string log, out, config;
  double min_speed = 0.0;
  double blinker_margin = 0.0;
  bool apply_selection = false;
  uint64_t seed = 0;
};

int run_stats(const StatsArgs& a, const std::vector<std::string>& argv) {
  Settings settings = load_settings(a.config);
  settings.selection.seed = a.seed;
  DriveLog log = load_drive_log(a.log);
  DriveLog filtered = (a.min_speed > 0.0 || a.blinker_margin > 0.0)
                          ? filter_frames(log, a.min_speed, a.blinker_margin)
                          : log;

  std::vector<double> angles;
  if (a.apply_selection)
    angles = steering_angles(filtered.frames, select(filtered.frames, settings.selection));
  else
    angles = steering_angles(filtered.frames);
  if (angles.empty()) throw DataError("stats: no frames left after filtering");

  DistributionStats st = distribution_stats(angles);
  std::ostringstream out;
  out << "frames          " << st.count << "\n";
  out << "steering std    " << std::fixed << std::setprecision(2) << rad2deg(st.stddev)
      << " deg\n";
  out << "small angles    " << st.small_count << "  (|angle| <= "
      << std::setprecision(1) << rad2deg(st.small_threshold) << " deg)\n";
  out << "histogram (bin " << std::setprecision(1) << rad2deg(st.bin_width) << " deg, from "
      << rad2deg(st.bin_min) << " deg)\n";
  size_t peak = 1;
  for (size_t b : st.histogram) peak = std::max(peak, b);
  for (size_t i = 0; i < st.histogram.size(); ++i) {
    if (st.histogram[i] == 0) continue;
    double lo = rad2deg(st.bin_min) + static_cast<double>(i) * rad2deg(st.bin_width);
    out << std::setw(7) << std::setprecision(1) << std::fixed << lo << " ";
    int bars = static_cast<int>(60.0 * static_cast<double>(st.histogram[i]) /
                                static_cast<double>(peak));
    for (int k = 0; k < std::max(bars, 1); ++k) out << "#";
    out << " " << st.histogram[i] << "\n";
  }
  std::cout << out.str();

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    RunManifest manifest = make_manifest("stats", argv, a.seed, settings);
    manifest.inputs.push_back({a.log, fingerprint_log_dir(a.log)});
    manifest.write(fs::path(a.out) / "run_manifest.json");
    std::ofstream f(fs::path(a.out) / "stats.txt");
    f << out.str();
  }
  return 0;
}

// ------------------------------------------------------------- simulate ----

struct SimulateArgs {
  std::vector<std::string> logs;
  std::vector<std::string> labels;
  std::string controller = "straight";
  std::string config, out;
  uint64_t seed = 0;
  int jobs = 0;
  bool traces = true;
  double initial_de = 0.0;
  double initial_dtheta_deg = 0.0;
};

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
  Settings settings = load_settings(a.config);
  if (!a.controller.empty()) {
    if (fs::exists(a.controller) && !fs::is_directory(a.controller))
      settings.controller = controller_from_config(ConfigDoc::parse_file(a.controller));
    else
      settings.controller = parse_controller_string(a.controller);
  }
  settings.sim.initial_offset = {a.initial_de, deg2rad(a.initial_dtheta_deg)};
  settings.sim.validate();

  if (a.logs.empty()) throw DataError("simulate: at least one --log is required");
  std::vector<std::string> labels = a.labels;
  labels.resize(a.logs.size());
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i].empty()) labels[i] = "scenario" + std::to_string(i);

  fs::create_directories(a.out);
  RunManifest manifest = make_manifest("simulate", argv, a.seed, settings);
  for (const auto& log : a.logs) manifest.inputs.push_back({log, fingerprint_log_dir(log)});
  manifest.write(fs::path(a.out) / "run_manifest.json");

  // One sequence per log, each with its own controller instance; sequences
  // are independent, so they parallelize freely.
  std::vector<DriveLog> logs;
  for (const auto& path : a.logs) logs.push_back(load_drive_log(path));

  std::vector<SequenceResult> results(logs.size());
  std::vector<std::string> errors(logs.size());
  std::atomic<size_t> next{0};
  unsigned hw = std::thread::hardware_concurrency();
  size_t jobs = a.jobs > 0 ? static_cast<size_t>(a.jobs) : std::max(1u, hw);
  jobs = std::min(jobs, logs.size());

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= logs.size()) return;
      try {
        ControllerContext ctx;
        ctx.log = &logs[i];
        ctx.delivery_spec = logs[i].spec;
        ctx.vehicle = settings.vehicle;
        ctx.gains = settings.gains;
        auto controller = make_controller(settings.controller, ctx);
        results[i] = run_sequence(logs[i], *controller, settings.sim);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (size_t i = 0; i < logs.size(); ++i)
    if (!errors[i].empty())
      throw ControllerError("sequence '" + labels[i] + "' failed: " + errors[i]);

  std::vector<std::pair<std::string, const SequenceResult*>> labeled;
  for (size_t i = 0; i < logs.size(); ++i) labeled.push_back({labels[i], &results[i]});
  AutonomyReport report = aggregate_results(labeled, settings.sim);
  report.controller = settings.controller.kind;
  report.seed = a.seed;

  std::ofstream(fs::path(a.out) / "report.json") << report_to_json(report).dump(2) << "\n";
  std::string table = render_report_table({report});
  std::ofstream(fs::path(a.out) / "report.txt") << table;
  std::cout << table;

  if (a.traces) {
    fs::create_directories(fs::path(a.out) / "traces");
    fs::create_directories(fs::path(a.out) / "plots");
    for (size_t i = 0; i < results.size(); ++i) {
      std::string stem = labels[i] + "_" + std::to_string(i);
      write_trace_csv(fs::path(a.out) / "traces" / (stem + ".csv"), results[i]);
      write_png(fs::path(a.out) / "plots" / (stem + "_deviation.png"),
                plot_deviation_trace(results[i], settings.sim.recovery_threshold));
      write_png(fs::path(a.out) / "plots" / (stem + "_trajectory.png"),
                plot_trajectories(results[i]));
    }
  }
  return 0;
}

// ---------------------------------------------------------------- sweep ----

struct SweepArgs {
  std::string log, controller = "tracker", config, out;
  std::vector<std::string> params;
  uint64_t seed = 0;
};

/// Grid syntax: field=lo:hi:n or field=v1,v2,v3 over projection fields
/// (horizon_row, hfov_deg, camera_height_m, vertical_scale).
std::vector<std::vector<double>> expand_param(const std::string& text, std::string& field) {
  auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep: expected field=values in '" + text + "'");
  field = text.substr(0, eq);
  std::string values = text.substr(eq + 1);
  std::vector<double> vals;
  if (values.find(':') != std::string::npos) {
    double lo, hi;
    int n;
    if (std::sscanf(values.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1)
      throw ConfigError("sweep: bad range '" + values + "' (want lo:hi:n)");
    for (int i = 0; i < n; ++i)
      vals.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  } else {
    std::istringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ','))
      vals.push_back(ConfigDoc::parse_double(item, "sweep value"));
    if (vals.empty()) throw ConfigError("sweep: no values in '" + text + "'");
  }
  return {vals};
}

void apply_param(ProjectionSpec& spec, const std::string& field, double value) {
  if (field == "horizon_row")
    spec.horizon_row = value;
  else if (field == "hfov_deg")
    spec.hfov = deg2rad(value);
  else if (field == "camera_height_m")
    spec.camera_height = value;
  else if (field == "vertical_scale")
    spec.vertical_scale = value;
  else
    throw ConfigError("sweep: unknown projection field '" + field + "'");
}

int run_sweep(const SweepArgs& a, const std::vector<std::string>& argv) {
  Settings settings = load_settings(a.config);
  settings.controller = parse_controller_string(a.controller);
  if (a.params.empty()) throw ConfigError("sweep: at least one --param is required");

  DriveLog log = load_drive_log(a.log);

  // Cartesian product of the parameter axes.
  std::vector<ProjectionSpec> grid{log.spec};
  for (const auto& ptext : a.params) {
    std::string field;
    auto axis = expand_param(ptext, field)[0];
    std::vector<ProjectionSpec> bigger;
    for (const auto& spec : grid)
      for (double v : axis) {
        ProjectionSpec s = spec;
        apply_param(s, field, v);
        // A fixed vertical scale keeps row geometry comparable across hfov.
        if (s.vertical_scale <= 0.0) s.vertical_scale = log.spec.vscale();
        bigger.push_back(s);
      }
    grid = std::move(bigger);
  }

  fs::create_directories(a.out);
  RunManifest manifest = make_manifest("sweep", argv, a.seed, settings);
  manifest.inputs.push_back({a.log, fingerprint_log_dir(a.log)});
  manifest.write(fs::path(a.out) / "run_manifest.json");

  auto factory = [&](const ProjectionSpec& delivery) {
    ControllerContext ctx;
    ctx.log = &log;  // controllers stay calibrated for the capture geometry
    ctx.delivery_spec = delivery;
    ctx.vehicle = settings.vehicle;
    ctx.gains = settings.gains;
    return make_controller(settings.controller, ctx);
  };
  auto points = sweep(grid, log, factory, settings.sim);

  std::ostringstream table;
  table << std::left << std::setw(6) << "rank" << std::setw(14) << "horizon_row"
        << std::setw(10) << "hfov" << std::setw(10) << "cam_h" << std::setw(8) << "aut%"
        << std::setw(10) << "mad_cm" << std::setw(12) << "recoveries" << "error\n";
  nlohmann::ordered_json jpoints = nlohmann::ordered_json::array();
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    table << std::left << std::setw(6) << i + 1 << std::setw(14) << p.spec.horizon_row
          << std::setw(10) << rad2deg(p.spec.hfov) << std::setw(10) << p.spec.camera_height;
    if (p.failed) {
      table << std::setw(8) << "-" << std::setw(10) << "-" << std::setw(12) << "-" << p.error;
    } else {
      std::ostringstream aut, mad;
      aut << std::fixed << std::setprecision(1) << 100.0 * p.score.autonomy;
      mad << std::fixed << std::setprecision(1) << p.score.mad_cm;
      table << std::setw(8) << aut.str() << std::setw(10) << mad.str() << std::setw(12)
            << p.score.recoveries;
    }
    table << "\n";
    nlohmann::ordered_json jp;
    jp["rank"] = i + 1;
    jp["horizon_row"] = p.spec.horizon_row;
    jp["hfov_deg"] = rad2deg(p.spec.hfov);
    jp["camera_height_m"] = p.spec.camera_height;
    jp["vertical_scale"] = p.spec.vertical_scale;
    jp["failed"] = p.failed;
    if (p.failed)
      jp["error"] = p.error;
    else
      jp["score"] = scenario_to_json(p.score);
    jpoints.push_back(jp);
  }
  std::cout << table.str();
  std::ofstream(fs::path(a.out) / "sweep.txt") << table.str();
  std::ofstream(fs::path(a.out) / "sweep.json") << jpoints.dump(2) << "\n";
  return 0;
}

// --------------------------------------------------------------- report ----

struct ReportArgs {
  std::vector<std::string> inputs;  // run directories from simulate
  std::string out;
};

int run_report(const ReportArgs& a, const std::vector<std::string>& argv) {
  if (a.inputs.empty()) throw DataError("report: at least one --in run directory is required");
  std::vector<AutonomyReport> reports;
  for (const auto& dir : a.inputs) reports.push_back(load_report(fs::path(dir) / "report.json"));

  fs::create_directories(a.out);
  Settings defaults;
  RunManifest manifest = make_manifest("report", argv, 0, defaults);
  for (const auto& dir : a.inputs)
    manifest.inputs.push_back({dir, fnv1a64_file(fs::path(dir) / "report.json")});
  manifest.write(fs::path(a.out) / "run_manifest.json");

  std::string table = render_report_table(reports);
  std::cout << table;
  std::ofstream(fs::path(a.out) / "comparison.txt") << table;

  // Re-render plots for any run that carries traces but no plots.
  for (const auto& dir : a.inputs) {
    fs::path traces = fs::path(dir) / "traces";
    if (!fs::exists(traces)) continue;
    AutonomyReport rep = load_report(fs::path(dir) / "report.json");
    fs::path plotdir = fs::path(a.out) / "plots";
    fs::create_directories(plotdir);
    for (const auto& entry : fs::directory_iterator(traces)) {
      if (entry.path().extension() != ".csv") continue;
      SequenceResult res = read_trace_csv(entry.path(), rep.dt);
      std::string stem = rep.controller + "_" + entry.path().stem().string();
      write_png(plotdir / (stem + "_deviation.png"),
                plot_deviation_trace(res, rep.recovery_threshold));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop lateral-control evaluation toolkit"};
  app.require_subcommand(1);
  std::vector<std::string> full_argv = collect_argv(argc, argv);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic drive log from a track");
  synth_cmd->add_option("--track", synth.track, "Track document")->required();
  synth_cmd->add_option("--out", synth.out, "Output drive-log directory")->required();
  synth_cmd->add_option("--config", synth.config, "Config document");
  synth_cmd->add_option("--speed", synth.speed, "Constant speed, m/s");
  synth_cmd->add_option("--seconds", synth.seconds, "Duration; 0 drives the whole track");
  synth_cmd->add_option("--noise-deg", synth.noise_deg, "Steering noise std, degrees");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Generate viewpoint-shifted labeled samples");
  aug_cmd->add_option("--log", aug.log, "Input drive-log directory")->required();
  aug_cmd->add_option("--out", aug.out, "Output sample directory")->required();
  aug_cmd->add_option("--config", aug.config, "Config document");
  aug_cmd->add_option("--seed", aug.seed, "Random seed");
  aug_cmd->add_option("--samples-per-frame", aug.samples_per_frame, "Offsets drawn per frame");
  aug_cmd->add_option("--min-speed", aug.min_speed, "Drop frames slower than this, m/s");
  aug_cmd->add_option("--blinker-margin", aug.blinker_margin, "Seconds dropped around blinkers");
  aug_cmd->add_flag("--select", aug.apply_selection, "Apply the [selection] resampling policy");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Steering-distribution summary of a log");
  stats_cmd->add_option("--log", stats.log, "Drive-log directory")->required();
  stats_cmd->add_option("--out", stats.out, "Optional output directory");
  stats_cmd->add_option("--config", stats.config, "Config document");
  stats_cmd->add_option("--min-speed", stats.min_speed, "Filter: minimum speed, m/s");
  stats_cmd->add_option("--blinker-margin", stats.blinker_margin, "Filter: blinker margin, s");
  stats_cmd->add_flag("--select", stats.apply_selection, "Apply the [selection] policy first");
  stats_cmd->add_option("--seed", stats.seed, "Selection seed");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop replay against a controller");
  sim_cmd->add_option("--log", sim.logs, "Drive-log directory (repeatable)")->required();
  sim_cmd->add_option("--scenario-label", sim.labels, "Label per log (repeatable)");
  sim_cmd->add_option("--controller", sim.controller,
                      "straight[:deg] | replay | oracle | tracker | external:<cmd> | config file");
  sim_cmd->add_option("--config", sim.config, "Config document");
  sim_cmd->add_option("--seed", sim.seed, "Random seed (recorded; controllers may use it)");
  sim_cmd->add_option("--out", sim.out, "Output run directory")->required();
  sim_cmd->add_option("--jobs", sim.jobs, "Parallel sequences; 0 = all cores");
  sim_cmd->add_flag("!--no-traces", sim.traces, "Skip per-frame traces and plots");
  sim_cmd->add_option("--initial-de", sim.initial_de, "Initial lateral offset, m");
  sim_cmd->add_option("--initial-dtheta-deg", sim.initial_dtheta_deg, "Initial heading offset, deg");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Rank projection geometries on one log");
  sweep_cmd->add_option("--log", sweep_args.log, "Drive-log directory")->required();
  sweep_cmd->add_option("--controller", sweep_args.controller, "Controller under test");
  sweep_cmd->add_option("--config", sweep_args.config, "Config document");
  sweep_cmd->add_option("--out", sweep_args.out, "Output directory")->required();
  sweep_cmd->add_option("--param", sweep_args.params,
                        "projection field grid, e.g. horizon_row=10:20:6 (repeatable)");
  sweep_cmd->add_option("--seed", sweep_args.seed, "Random seed");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Comparison table from stored runs");
  rep_cmd->add_option("--in", rep.inputs, "Run directory from simulate (repeatable)")->required();
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) return run_synth(synth, full_argv);
    if (*aug_cmd) return run_augment(aug, full_argv);
    if (*stats_cmd) return run_stats(stats, full_argv);
    if (*sim_cmd) return run_simulate(sim, full_argv);
    if (*sweep_cmd) return run_sweep(sweep_args, full_argv);
    if (*rep_cmd) return run_report(rep, full_argv);
  } catch (const ControllerError& e) {
    std::cerr << "controller error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
