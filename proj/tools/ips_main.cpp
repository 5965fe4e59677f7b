// ips - fiber-link vibration sensing from transport-hardware telemetry.
//
// Subcommands: simulate, serve-agent, collect, detect, calibrate, replay,
// report. Exit codes: 0 success, 1 validation error, 2 runtime/IO error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ips/changepoint.hpp"
#include "ips/collector.hpp"
#include "ips/config.hpp"
#include "ips/mock_agent.hpp"
#include "ips/report.hpp"
#include "ips/simulator.hpp"
#include "ips/trace_io.hpp"

namespace {

using ips::config::ExperimentConfig;
namespace fs = std::filesystem;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

enum LogLevel { kDebug = 0, kInfo, kWarn, kError };
LogLevel g_log_level = kInfo;

void log(LogLevel level, const std::string& msg) {
  static const char* names[] = {"debug", "info", "warn", "error"};
  if (level >= g_log_level) std::cerr << "[" << names[level] << "] " << msg << "\n";
}

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format;
  std::string log_level = "info";
};

ExperimentConfig load_config(const GlobalOptions& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig::defaults()
                                                  : ExperimentConfig::from_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out_dir.empty()) cfg.output.out_dir = opts.out_dir;
  if (!opts.format.empty()) cfg.output.format = ips::io::parse_format(opts.format);
  return cfg;
}

ips::io::TraceFormat trace_format_of(const fs::path& path, const std::string& override_format) {
  if (!override_format.empty()) return ips::io::parse_format(override_format);
  if (path.extension() == ".jsonl") return ips::io::TraceFormat::jsonl;
  return ips::io::TraceFormat::csv;
}

ips::detect::SignalField parse_field(const std::string& name) {
  if (name == "ber") return ips::detect::SignalField::ber;
  if (name == "oss") return ips::detect::SignalField::oss;
  throw std::invalid_argument("field must be ber or oss, got '" + name + "'");
}

fs::path prepared_out_dir(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output.out_dir);
  return cfg.output.out_dir;
}

// ------------------------------------------------------------- subcommands

int cmd_simulate(const GlobalOptions& opts, const std::string& schedule_arg) {
  ExperimentConfig cfg = load_config(opts);
  if (!schedule_arg.empty()) {
    cfg.schedule.reset();
    cfg.schedule_name = schedule_arg;
  }
  const ips::sim::StressSchedule schedule = cfg.resolve_schedule();
  const std::vector<ips::SignalSample> trace =
      ips::sim::simulate(schedule, cfg.channel, cfg.seed, cfg.link_id);

  const fs::path dir = prepared_out_dir(cfg);
  const fs::path trace_path = dir / ("trace" + ips::io::format_extension(cfg.output.format));
  ips::io::write_trace(trace_path, cfg.output.format, trace);

  nlohmann::json meta;
  meta["config_hash"] = cfg.hash();
  meta["seed"] = cfg.seed;
  meta["schedule"] = schedule.name;
  meta["samples"] = trace.size();
  meta["sample_rate_hz"] = schedule.sample_rate_hz;
  std::ofstream meta_out(dir / "trace.meta.json");
  meta_out << meta.dump(2) << "\n";

  log(kInfo, "wrote " + std::to_string(trace.size()) + " samples to " + trace_path.string());
  std::cout << trace_path.string() << "\n";
  return 0;
}

int cmd_detect(const GlobalOptions& opts, const std::string& trace_arg, const std::string& field_arg,
               double threshold_override) {
  ExperimentConfig cfg = load_config(opts);
  const ips::detect::SignalField field = parse_field(field_arg);
  ips::detect::DetectorConfig detector = cfg.detector(field);
  if (threshold_override >= 0) detector.threshold = threshold_override;

  const fs::path trace_path = trace_arg;
  const ips::io::LoadResult loaded = ips::io::load_trace(trace_path, trace_format_of(trace_path, ""));
  for (const std::string& w : loaded.warnings) log(kWarn, w);

  const ips::detect::DetectResult result =
      ips::detect::detect_changes(loaded.samples, field, detector);
  for (const std::string& w : result.warnings) log(kWarn, w);

  const fs::path dir = prepared_out_dir(cfg);
  const fs::path events_path = dir / "events.jsonl";
  ips::io::write_events(events_path, result.events);

  double max_kld = 0.0;
  std::size_t kl_events = 0, lost_events = 0;
  for (const auto& ev : result.events) {
    if (ev.kind == ips::detect::EventKind::kl_change) {
      ++kl_events;
      max_kld = std::max(max_kld, ev.kl_divergence);
    } else {
      ++lost_events;
    }
  }
  std::cout << "events: " << result.events.size() << " (kl_change " << kl_events << ", signal_lost "
            << lost_events << "), max KLD " << max_kld << ", threshold " << detector.threshold
            << ", written to " << events_path.string() << "\n";
  return 0;
}

int cmd_calibrate(const GlobalOptions& opts, const std::string& trace_arg,
                  const std::string& field_arg, double target_rate) {
  ExperimentConfig cfg = load_config(opts);
  const ips::detect::SignalField field = parse_field(field_arg);
  const fs::path trace_path = trace_arg;
  const ips::io::LoadResult loaded = ips::io::load_trace(trace_path, trace_format_of(trace_path, ""));
  for (const std::string& w : loaded.warnings) log(kWarn, w);
  const double threshold =
      ips::detect::calibrate_threshold(loaded.samples, field, cfg.detector(field), target_rate);
  std::cout << ips::io::format_double(threshold) << "\n";
  return 0;
}

int cmd_serve_agent(const GlobalOptions& opts, const std::string& schedule_arg, double duration_s,
                    double time_scale, int port) {
  ExperimentConfig cfg = load_config(opts);
  if (!schedule_arg.empty()) {
    cfg.schedule.reset();
    cfg.schedule_name = schedule_arg;
  }
  if (time_scale > 0) cfg.agent.time_scale = time_scale;
  if (port >= 0) cfg.agent.port = static_cast<std::uint16_t>(port);
  if (cfg.agent.oids.empty()) cfg.agent.oids = ips::sim::default_oid_map();
  cfg.agent.bit_rate_bps = cfg.channel.bit_rate_bps;

  const ips::sim::StressSchedule schedule = cfg.resolve_schedule();
  std::vector<ips::SignalSample> trace =
      ips::sim::simulate(schedule, cfg.channel, cfg.seed, cfg.link_id);

  ips::sim::MockAgent agent(cfg.agent, std::move(trace), schedule.sample_rate_hz);
  agent.start();
  std::cout << "agent listening on " << cfg.agent.bind_host << ":" << agent.port() << " (schedule "
            << schedule.name << ", x" << cfg.agent.time_scale << " clock)" << std::endl;

  const auto started = std::chrono::steady_clock::now();
  while (!g_stop) {
    if (duration_s > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= duration_s) {
      break;
    }
    if (duration_s <= 0 && agent.finished()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  agent.stop();
  log(kInfo, "agent served " + std::to_string(agent.request_count()) + " requests");
  return 0;
}

int cmd_collect(const GlobalOptions& opts, double duration_s) {
  ExperimentConfig cfg = load_config(opts);
  if (cfg.targets.empty()) {
    throw std::invalid_argument("no [[targets]] configured; nothing to collect");
  }
  const fs::path dir = prepared_out_dir(cfg);
  const fs::path trace_path = dir / ("collected" + ips::io::format_extension(cfg.output.format));
  ips::io::TraceWriter writer(trace_path, cfg.output.format, ips::io::TraceStyle::collector);

  std::atomic<bool> stop{false};
  std::thread timer([&] {
    const auto started = std::chrono::steady_clock::now();
    while (!stop && !g_stop) {
      if (duration_s > 0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >=
              duration_s) {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    stop = true;
  });

  const ips::collect::CollectorSummary summary = ips::collect::run_collector(
      cfg.targets, [&writer](const ips::SignalSample& s) { writer.write(s); }, stop);
  stop = true;
  timer.join();
  writer.close();

  for (const auto& t : summary.targets) {
    std::cout << "target " << t.link_id << ": ok " << t.ok << ", timeout " << t.timeout
              << ", decode_errors " << t.decode_errors << ", rate " << t.achieved_rate_hz << " Hz\n";
  }
  std::cout << "trace written to " << trace_path.string() << "\n";
  if (summary.sink_failed) {
    log(kError, "collector stopped on sink failure: " + summary.error);
    return 2;
  }
  return 0;
}

int cmd_replay(const GlobalOptions& opts, const std::string& trace_arg) {
  ExperimentConfig cfg = load_config(opts);
  const fs::path trace_path = trace_arg;
  const ips::io::LoadResult loaded = ips::io::load_trace(trace_path, trace_format_of(trace_path, ""));
  for (const std::string& w : loaded.warnings) log(kWarn, w);

  const fs::path dir = prepared_out_dir(cfg);
  const fs::path out_path = dir / ("replay" + ips::io::format_extension(cfg.output.format));
  ips::io::write_trace(out_path, cfg.output.format, loaded.samples);

  std::map<std::string, std::size_t> counts;
  for (const auto& s : loaded.samples) ++counts[s.link_id];
  std::cout << "replayed " << loaded.samples.size() << " samples across " << counts.size()
            << " link(s) to " << out_path.string() << "\n";
  for (const auto& [link, n] : counts) std::cout << "  " << link << ": " << n << " samples\n";
  return 0;
}

int cmd_report(const GlobalOptions& opts, const std::string& trace_arg, const std::string& events_arg) {
  ExperimentConfig cfg = load_config(opts);
  const fs::path trace_path = trace_arg;
  const ips::io::LoadResult loaded = ips::io::load_trace(trace_path, trace_format_of(trace_path, ""));
  for (const std::string& w : loaded.warnings) log(kWarn, w);
  std::vector<ips::detect::DetectionEvent> events;
  if (!events_arg.empty()) events = ips::io::load_events(events_arg);

  const ips::report::ReportFiles files = ips::report::write_report(
      loaded.samples, events, cfg.detector_ber, cfg.detector_oss, prepared_out_dir(cfg));
  std::cout << "report: " << files.plots.size() << " plot(s), summary " << files.summary.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiber-link vibration sensing from transport-hardware telemetry"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::uint64_t seed_value = 0;
  app.add_option("--config", opts.config_path, "experiment config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "override the experiment seed");
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_option("--format", opts.format, "trace format (csv|jsonl)");
  app.add_option("--log-level", opts.log_level, "debug|info|warn|error");

  std::string schedule_arg, trace_arg, events_arg, field_arg = "ber";
  double target_rate = 0.05, duration_s = 0.0, time_scale = 0.0, threshold_override = -1.0;
  int port = -1;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a trace from a stress schedule");
  simulate->add_option("--schedule", schedule_arg, "canonical schedule name");

  CLI::App* serve = app.add_subcommand("serve-agent", "serve a simulated link over SNMP v2c");
  serve->add_option("--schedule", schedule_arg, "canonical schedule name");
  serve->add_option("--duration", duration_s, "seconds to serve (default: until trace end)");
  serve->add_option("--time-scale", time_scale, "simulated seconds per wall second");
  serve->add_option("--port", port, "UDP port (default from config; 0 = ephemeral)");

  CLI::App* collect = app.add_subcommand("collect", "poll configured SNMP targets");
  collect->add_option("--duration", duration_s, "seconds to poll (0 = until SIGINT)");

  CLI::App* detect = app.add_subcommand("detect", "run the change detector over a trace");
  detect->add_option("--trace", trace_arg, "trace file")->required();
  detect->add_option("--field", field_arg, "ber|oss");
  detect->add_option("--threshold", threshold_override, "override the detector threshold");

  CLI::App* calibrate = app.add_subcommand("calibrate", "select a threshold from a quiescent trace");
  calibrate->add_option("--trace", trace_arg, "quiescent trace file")->required();
  calibrate->add_option("--field", field_arg, "ber|oss");
  calibrate->add_option("--target-rate", target_rate, "acceptable false-event rate");

  CLI::App* replay = app.add_subcommand("replay", "normalize and re-emit a recorded trace");
  replay->add_option("--trace", trace_arg, "trace file")->required();

  CLI::App* report = app.add_subcommand("report", "plots and summaries for a trace + events");
  report->add_option("--trace", trace_arg, "trace file")->required();
  report->add_option("--events", events_arg, "events file (JSON lines)");

  CLI11_PARSE(app, argc, argv);

  if (seed_opt->count() > 0) opts.seed = seed_value;
  if (opts.log_level == "debug") g_log_level = kDebug;
  else if (opts.log_level == "info") g_log_level = kInfo;
  else if (opts.log_level == "warn") g_log_level = kWarn;
  else if (opts.log_level == "error") g_log_level = kError;
  else {
    std::cerr << "unknown log level '" << opts.log_level << "'\n";
    return 1;
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  try {
    if (simulate->parsed()) return cmd_simulate(opts, schedule_arg);
    if (serve->parsed()) return cmd_serve_agent(opts, schedule_arg, duration_s, time_scale, port);
    if (collect->parsed()) return cmd_collect(opts, duration_s);
    if (detect->parsed()) return cmd_detect(opts, trace_arg, field_arg, threshold_override);
    if (calibrate->parsed()) return cmd_calibrate(opts, trace_arg, field_arg, target_rate);
    if (replay->parsed()) return cmd_replay(opts, trace_arg);
    if (report->parsed()) return cmd_report(opts, trace_arg, events_arg);
  } catch (const ips::config::config_error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const ips::io::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
