#include "commands.hpp"

#include <attctl/diagnostics.hpp>
#include <attctl/errors.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace attctl::cli {

namespace {

namespace fs = std::filesystem;

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::string& dir, const std::string& name, std::string& path) {
  fs::create_directories(dir);
  path = (fs::path(dir) / name).string();
  std::ofstream os(path);
  if (!os) throw ConfigError(path + ": cannot open for writing");
  return os;
}

template <typename Fn> int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (...) {
    return failure_exit_code(std::current_exception(), err);
  }
}

Metrics summarize(const TrajectoryLog& log, const ScenarioConfig& cfg) {
  return metrics(log, cfg.window.t_start, cfg.window_end(), cfg.window.eps_pe);
}

std::vector<double> lyapunov_column(const TrajectoryLog& log, const Scenario& sc) {
  std::vector<double> v;
  for (const auto& s : lyapunov_series(log, sc.theta_true, sc.gains)) v.push_back(s.V_total);
  return v;
}

// Labels made unique by suffixing the input position.
std::vector<std::string> unique_labels(const std::vector<ScenarioConfig>& cfgs) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::string l = cfgs[i].scenario.label;
    for (std::size_t j = 0; j < cfgs.size(); ++j)
      if (j != i && cfgs[j].scenario.label == l) {
        l += "#" + std::to_string(i + 1);
        break;
      }
    labels.push_back(l);
  }
  return labels;
}

}  // namespace

int failure_exit_code(std::exception_ptr error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const UnwindingError& e) {
    err << "unwinding guard breached at t=" << e.time() << " (q_e4 = " << e.qe4()
        << "): " << e.what() << '\n';
    return kUnwinding;
  } catch (const NonFiniteError& e) {
    err << "non-finite state at t=" << e.time() << '\n' << e.what() << '\n';
    return kNonFinite;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigFailure;
  }
}

ScenarioConfig load_config(const std::string& path, const CommonOptions& opts) {
  ConfigDocument doc = ConfigDocument::load_file(path);
  for (const auto& s : opts.sets) doc.set(s);
  if (opts.seed) doc.set("seed", std::to_string(*opts.seed), "--seed");
  return doc.resolve();
}

void write_provenance(std::ostream& os, const std::string& command,
                      const std::vector<ScenarioConfig>& configs) {
  os << "# attctl " << kVersion << '\n';
  os << "# command: " << command << '\n';
  for (const auto& cfg : configs) {
    os << "# scenario: " << cfg.scenario.label << " (" << cfg.source << ")\n";
    os << "#   config_hash: " << hex(config_hash(cfg)) << '\n';
    os << "#   seed: " << cfg.scenario.seed << '\n';
    for (const auto& [k, v] : resolved_parameters(cfg)) os << "#   " << k << " = " << v << '\n';
  }
}

GridAxis parse_grid_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--grid " + spec + ": expected key=v1,v2,...");
  GridAxis axis;
  axis.key = spec.substr(0, eq);
  if (!is_numeric_key(axis.key))
    throw ConfigError("--grid " + spec + ": '" + axis.key + "' is not a numeric key");
  std::stringstream values(spec.substr(eq + 1));
  for (std::string v; std::getline(values, v, ',');)
    if (!v.empty()) axis.values.push_back(v);
  if (axis.values.empty()) throw ConfigError("--grid " + spec + ": no values");
  return axis;
}

std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(
    const std::vector<GridAxis>& axes) {
  if (axes.empty()) throw ConfigError("sweep needs at least one --grid axis");
  std::vector<std::vector<std::pair<std::string, std::string>>> cells{{}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("grid axis '" + axis.key + "' has no values");
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& cell : cells) {
      for (const auto& v : axis.values) {
        auto c = cell;
        c.emplace_back(axis.key, v);
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

int cmd_run(const std::string& scenario, const CommonOptions& opts, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig cfg = load_config(scenario, opts);
    const TrajectoryLog log = run_scenario(cfg.scenario);
    const Metrics m = summarize(log, cfg);

    std::string traj_path, metrics_path;
    std::ofstream traj = open_output(opts.out_dir, cfg.scenario.label + "_trajectory.csv", traj_path);
    write_provenance(traj, "run", {cfg});
    write_trajectory_csv(traj, log, {{"V[-]", lyapunov_column(log, cfg.scenario)}});

    std::ofstream mcsv = open_output(opts.out_dir, cfg.scenario.label + "_metrics.csv", metrics_path);
    write_provenance(mcsv, "run", {cfg});
    write_metrics_csv(mcsv, std::vector<Metrics>{m});

    write_metrics_report(out, std::vector<Metrics>{m});
    out << "wrote " << traj_path << " (" << log.samples.size() << " rows)\n";
    out << "wrote " << metrics_path << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_verify(bool corrupt_mu2, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto checks = run_verification(corrupt_mu2);
    bool ok = true;
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %-52s %14s  %s\n", "status", "check", "max deviation",
                  "bound");
    out << line;
    for (const auto& c : checks) {
      std::snprintf(line, sizeof line, "%-6s %-52s %14.6g  %s\n", c.ok ? "pass" : "FAIL",
                    c.name.c_str(), c.deviation, c.bound.c_str());
      out << line;
      ok = ok && c.ok;
    }
    out << (ok ? "all checks passed\n" : "verification FAILED\n");
    return static_cast<int>(ok ? kOk : kVerifyFailure);
  });
}

int cmd_compare(const std::vector<std::string>& scenarios, const CommonOptions& opts,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (scenarios.size() < 2) throw ConfigError("compare needs at least two scenario files");
    std::vector<ScenarioConfig> cfgs;
    for (const auto& path : scenarios) cfgs.push_back(load_config(path, opts));
    for (const auto& c : cfgs) {
      if (c.scenario.step != cfgs.front().scenario.step ||
          c.scenario.step_count() != cfgs.front().scenario.step_count())
        throw ConfigError("compare needs a common time grid (same step and duration)");
    }

    std::vector<TrajectoryLog> logs(cfgs.size());
    std::vector<Metrics> rows(cfgs.size());
    parallel_for(cfgs.size(), opts.jobs, [&](std::size_t i) {
      logs[i] = run_scenario(cfgs[i].scenario);
      rows[i] = summarize(logs[i], cfgs[i]);
    });
    const auto labels = unique_labels(cfgs);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].label = labels[i];

    std::string norms_path, rms_path;
    std::ofstream norms = open_output(opts.out_dir, "compare_norms.csv", norms_path);
    write_provenance(norms, "compare", cfgs);
    norms << "t[s]";
    for (const auto& l : labels)
      norms << ',' << l << ":q_ev_norm[-]," << l << ":omega_e_norm[rad/s]," << l
            << ":u_norm[N*m]," << l << ":theta_err_norm[kg*m^2]";
    norms << '\n';
    for (std::size_t k = 0; k < logs.front().samples.size(); ++k) {
      norms << num(logs.front().samples[k].t);
      for (const auto& log : logs) {
        const LogSample& s = log.samples[k];
        norms << ',' << num(s.q_e.head<3>().norm()) << ',' << num(s.omega_e.norm()) << ','
              << num(s.u.norm()) << ',' << num(s.theta_err.norm());
      }
      norms << '\n';
    }

    std::ofstream rms = open_output(opts.out_dir, "compare_rms.csv", rms_path);
    write_provenance(rms, "compare", cfgs);
    write_metrics_csv(rms, rows);

    write_metrics_report(out, rows);
    for (std::size_t i = 0; i < cfgs.size(); ++i)
      out << labels[i] << ": seed " << cfgs[i].scenario.seed << ", config "
          << hex(config_hash(cfgs[i])) << '\n';
    out << "wrote " << norms_path << '\n' << "wrote " << rms_path << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const std::string& base, const std::vector<std::string>& grid,
              const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<GridAxis> axes;
    for (const auto& g : grid) axes.push_back(parse_grid_axis(g));
    const auto cells = expand_grid(axes);

    ConfigDocument doc = ConfigDocument::load_file(base);
    for (const auto& s : opts.sets) doc.set(s);
    if (opts.seed) doc.set("seed", std::to_string(*opts.seed), "--seed");
    const ScenarioConfig base_cfg = doc.resolve();

    std::vector<ScenarioConfig> cfgs;
    for (const auto& cell : cells) {
      ConfigDocument d = doc;
      std::string tag;
      for (const auto& [k, v] : cell) {
        d.set(k, v, "--grid " + k + "=" + v);
        tag += (tag.empty() ? "" : ";") + k + "=" + v;
      }
      ScenarioConfig cfg = d.resolve();
      cfg.scenario.label = base_cfg.scenario.label + "[" + tag + "]";
      cfgs.push_back(std::move(cfg));
    }

    // A cell that aborts is a result of the sweep: its row records the failure.
    std::vector<Metrics> rows(cfgs.size());
    std::vector<std::string> status(cfgs.size(), "ok");
    parallel_for(cfgs.size(), opts.jobs, [&](std::size_t i) {
      try {
        rows[i] = summarize(run_scenario(cfgs[i].scenario), cfgs[i]);
      } catch (const UnwindingError& e) {
        status[i] = "unwinding@" + num(e.time());
      } catch (const NonFiniteError& e) {
        status[i] = "non-finite@" + num(e.time());
      }
      if (status[i] != "ok") {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        Metrics& m = rows[i];
        m.label = cfgs[i].scenario.label;
        m.seed = cfgs[i].scenario.seed;
        m.t_start = cfgs[i].window.t_start;
        m.t_end = cfgs[i].window_end();
        m.rms_qev = m.rms_omega_e = m.rms_theta_err = m.rms_qev_true = m.rms_omega_e_true = nan;
        m.min_abs_qe4 = m.sync_ratio_spread = nan;
      }
    });

    std::ostringstream body;
    write_metrics_csv(body, rows);
    std::string path;
    std::ofstream os = open_output(opts.out_dir, "sweep_metrics.csv", path);
    write_provenance(os, "sweep", {base_cfg});
    for (const auto& a : axes) {
      os << "# grid " << a.key << ":";
      for (const auto& v : a.values) os << ' ' << v;
      os << '\n';
    }
    for (const auto& c : cfgs)
      os << "# cell " << c.scenario.label << " config_hash " << hex(config_hash(c)) << '\n';

    std::istringstream lines(body.str());
    std::string line;
    std::getline(lines, line);
    for (const auto& a : axes) os << a.key << ',';
    os << line << ",status\n";
    for (std::size_t i = 0; i < cells.size() && std::getline(lines, line); ++i) {
      for (const auto& kv : cells[i]) os << kv.second << ',';
      os << line << ',' << status[i] << '\n';
    }
    for (std::size_t i = 0; i < cfgs.size(); ++i)
      if (status[i] != "ok") err << cfgs[i].scenario.label << ": " << status[i] << '\n';

    write_metrics_report(out, rows);
    out << "wrote " << path << " (" << rows.size() << " cells)\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace attctl::cli
