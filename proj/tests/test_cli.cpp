#include <attctl/errors.hpp>
#include <commands.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

using namespace attctl;
using namespace attctl::cli;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = ATTCTL_SCENARIO_DIR;

std::string scenario(const std::string& name) { return kScenarios + "/" + name + ".yaml"; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("attctl_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch("files") / name;
  std::ofstream(p) << text;
  return p;
}

struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::out_of_range("no column " + name);
  }
  double value(std::size_t row, const std::string& name) const {
    return std::stod(rows.at(row).at(column(name)));
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  EXPECT_TRUE(in.good()) << p;
  Table t;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
    } else if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

int run_cmd(const std::string& file, CommonOptions opts, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cmd_run(file, opts, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const std::vector<std::string> kShipped{"nominal_case1",   "nominal_case2",
                                        "finite_time",     "fixed_time",
                                        "perturbed_case2", "perturbed_ce_baseline",
                                        "excitation_cut"};

}  // namespace

TEST(Config, ShippedScenariosResolve) {
  for (const auto& name : kShipped) {
    const ScenarioConfig cfg = load_config(scenario(name), {});
    EXPECT_EQ(cfg.scenario.label, name);
    EXPECT_EQ(cfg.scenario.gains.k_p(), 1.5);
  }
}

TEST(Config, ShippedScenariosMatchTheSimulationParameters) {
  const Scenario sc = load_config(scenario("nominal_case1"), {}).scenario;
  EXPECT_EQ(sc.gains.gamma, 25.0);
  EXPECT_EQ(sc.gains.lambda, 0.01);
  EXPECT_EQ(sc.gains.drem.k_I, 1e9);
  EXPECT_EQ(sc.gains.drem.k_N, 8.0);
  EXPECT_EQ(sc.gains.drem.a, 5.0);
  EXPECT_EQ(sc.gains.drem.b, 0.5);
  EXPECT_EQ(sc.gains.aef.alpha, 0.5);
  EXPECT_EQ(sc.gains.aef.beta, 0.1);
  EXPECT_EQ(sc.estimate0, (Vector6() << 10, 30, 8, 0, 0, 0).finished());
  EXPECT_EQ(sc.initial.q.coeffs(), case_attitude(1).coeffs());

  const ScenarioConfig p = load_config(scenario("perturbed_case2"), {});
  ASSERT_TRUE(p.scenario.noise.has_value());
  EXPECT_EQ(p.scenario.noise->gyro_std, 1e-3);
  EXPECT_EQ(p.scenario.noise->seed, p.scenario.seed);
  EXPECT_TRUE(p.scenario.disturbance);
  EXPECT_EQ(p.window.t_start, 40.0);
  EXPECT_EQ(p.window_end(), 100.0);
  EXPECT_EQ(load_config(scenario("fixed_time"), {}).scenario.variant,
            EstimatorVariant::FixedTime);
}

TEST(Config, UnknownKeyIsRejectedWithItsLine) {
  const auto p = write_file("typo.yaml", "label: x\nduration: 1.0\ngains:\n  gama: 3\n");
  try {
    ConfigDocument::load_file(p.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("typo.yaml:4:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("gains.gama"), std::string::npos) << msg;
  }
  EXPECT_THROW(ConfigDocument::load_string("nonsense: 1\n", "s"), ConfigError);
  EXPECT_THROW(ConfigDocument::load_string("gains: 3\n", "s"), ConfigError);
}

TEST(Config, MalformedFileReportsLine) {
  const auto p = write_file("bad.yaml", "label: x\nduration: [1.0\nstep: 0.01\n");
  try {
    ConfigDocument::load_file(p.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.yaml:"), std::string::npos) << e.what();
  }
  std::string err;
  EXPECT_EQ(run_cmd(p.string(), {}, nullptr, &err), kConfigFailure);
  EXPECT_NE(err.find("bad.yaml:"), std::string::npos);
}

TEST(Config, BadValueNamesTheKeyAndLocation) {
  auto doc = ConfigDocument::load_string("duration: soon\n", "v.yaml");
  try {
    doc.resolve();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("v.yaml:1:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("duration"), std::string::npos) << msg;
  }
  EXPECT_THROW(ConfigDocument::load_string("estimate0: [1, 2]\n", "v").resolve(), ConfigError);
  EXPECT_THROW(ConfigDocument::load_string("variant: bogus\n", "v").resolve(), ConfigError);
  EXPECT_THROW(ConfigDocument::load_string("initial:\n  case: 3\n", "v").resolve(), ConfigError);
}

TEST(Config, OverridesUseDottedKeys) {
  ConfigDocument doc = ConfigDocument::load_file(scenario("nominal_case1"));
  doc.set("gains.gamma=125");
  doc.set("estimate0=[1, 2, 3, 0, 0, 0]");
  doc.set("initial.case=2");
  const Scenario sc = doc.resolve().scenario;
  EXPECT_EQ(sc.gains.gamma, 125.0);
  EXPECT_EQ(sc.estimate0(2), 3.0);
  EXPECT_LT(sc.initial.q.w, 0.0);
  EXPECT_THROW(doc.set("gains.gamm=1"), ConfigError);
  EXPECT_THROW(doc.set("novalue"), ConfigError);
}

TEST(Config, BothAttitudeFormsInOneFileAreRejected) {
  auto doc = ConfigDocument::load_string("initial:\n  case: 1\n  attitude: [0, 0, 0, 1]\n", "a");
  EXPECT_THROW(doc.resolve(), ConfigError);
}

TEST(Config, SeedOverrideReachesTheNoiseGenerator) {
  CommonOptions opts;
  opts.seed = 77;
  const ScenarioConfig cfg = load_config(scenario("perturbed_case2"), opts);
  EXPECT_EQ(cfg.scenario.seed, 77u);
  EXPECT_EQ(cfg.scenario.noise->seed, 77u);
}

TEST(Config, ResolvedParametersRoundTrip) {
  const ScenarioConfig a = load_config(scenario("perturbed_case2"), {});
  ConfigDocument doc = ConfigDocument::load_string("", "empty");
  for (const auto& [k, v] : resolved_parameters(a)) doc.set(k, v, "resolved");
  const ScenarioConfig b = doc.resolve();
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(b.scenario.initial.q.coeffs(), a.scenario.initial.q.coeffs());
  EXPECT_EQ(b.scenario.theta_true.theta, a.scenario.theta_true.theta);
}

TEST(Config, HashTracksEveryParameter) {
  const ScenarioConfig a = load_config(scenario("nominal_case1"), {});
  CommonOptions opts;
  opts.sets = {"gains.k_N=8.000001"};
  EXPECT_NE(config_hash(a), config_hash(load_config(scenario("nominal_case1"), opts)));
  EXPECT_EQ(config_hash(a), config_hash(load_config(scenario("nominal_case1"), {})));
  for (const auto& key : known_keys()) {
    if (key == "initial.case") continue;  // resolved into initial.attitude
    bool listed = false;
    for (const auto& [k, v] : resolved_parameters(load_config(scenario("perturbed_case2"), {})))
      listed = listed || k == key;
    EXPECT_TRUE(listed) << key;
  }
}

TEST(Run, NominalCase1WritesTrajectoryAndMetrics) {
  const fs::path dir = scratch("run");
  CommonOptions opts;
  opts.out_dir = dir.string();
  std::string out;
  ASSERT_EQ(run_cmd(scenario("nominal_case1"), opts, &out), kOk) << out;
  const Table traj = read_csv(dir / "nominal_case1_trajectory.csv");
  EXPECT_EQ(traj.rows.size(), 4001u);
  EXPECT_EQ(traj.header.front(), "t[s]");
  EXPECT_EQ(traj.header.back(), "V[-]");
  ASSERT_FALSE(traj.comments.empty());
  EXPECT_EQ(traj.comments.front(), std::string("# attctl ") + kVersion);
  std::string all;
  for (const auto& c : traj.comments) all += c + "\n";
  EXPECT_NE(all.find("config_hash: "), std::string::npos);
  EXPECT_NE(all.find("seed: 1"), std::string::npos);
  EXPECT_NE(all.find("gains.k_I = 1e+09"), std::string::npos);
  EXPECT_NE(all.find("initial.attitude = "), std::string::npos);
  EXPECT_EQ(traj.value(4000, "t[s]"), 40.0);

  const Table m = read_csv(dir / "nominal_case1_metrics.csv");
  ASSERT_EQ(m.rows.size(), 1u);
  EXPECT_FALSE(m.comments.empty());
  EXPECT_GT(m.value(0, "min_abs_qe4[-]"), 0.1);
  EXPECT_NE(out.find("nominal_case1"), std::string::npos);
}

TEST(Run, IdenticalInvocationsGiveIdenticalFiles) {
  CommonOptions a, b;
  a.out_dir = scratch("det_a").string();
  b.out_dir = scratch("det_b").string();
  a.sets = b.sets = {"duration=5", "metrics.t_start=0", "metrics.t_end=5"};
  ASSERT_EQ(run_cmd(scenario("perturbed_case2"), a), kOk);
  ASSERT_EQ(run_cmd(scenario("perturbed_case2"), b), kOk);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(fs::path(a.out_dir) / "perturbed_case2_trajectory.csv"),
            slurp(fs::path(b.out_dir) / "perturbed_case2_trajectory.csv"));
}

TEST(Run, ShippedScenariosRunWithoutNonFiniteValues) {
  std::mutex m;
  parallel_for(kShipped.size(), 0, [&](std::size_t i) {
    CommonOptions opts;
    opts.out_dir = scratch("shipped_" + kShipped[i]).string();
    const int code = run_cmd(scenario(kShipped[i]), opts);
    const Table t = read_csv(fs::path(opts.out_dir) / (kShipped[i] + "_trajectory.csv"));
    std::lock_guard<std::mutex> lock(m);
    EXPECT_EQ(code, kOk) << kShipped[i];
    for (const auto& row : t.rows)
      for (const auto& cell : row) {
        const double v = std::stod(cell);
        ASSERT_TRUE(std::isfinite(v)) << kShipped[i];
      }
  });
}

TEST(Run, PermissibleSetPreconditionIsAConfigError) {
  CommonOptions opts;
  opts.out_dir = scratch("permissible").string();
  opts.sets = {"initial.attitude=[1, 0, 0, 0]"};
  std::string err;
  EXPECT_EQ(run_cmd(scenario("nominal_case1"), opts, nullptr, &err), kConfigFailure);
  EXPECT_NE(err.find("1e-6"), std::string::npos) << err;
  opts.sets = {"initial.attitude=[0.9999999999995, 0, 0, 1e-6]"};
  EXPECT_EQ(run_cmd(scenario("nominal_case1"), opts), kConfigFailure);
}

TEST(Run, NonFiniteAbortExitsThree) {
  CommonOptions opts;
  opts.out_dir = scratch("nonfinite").string();
  opts.sets = {"gains.gamma=1e12", "duration=1"};
  std::string err;
  EXPECT_EQ(run_cmd(scenario("nominal_case1"), opts, nullptr, &err), kNonFinite);
  EXPECT_NE(err.find("non-finite"), std::string::npos);
}

TEST(Run, MissingFileExitsOne) {
  EXPECT_EQ(run_cmd(kScenarios + "/does_not_exist.yaml", {}), kConfigFailure);
}

TEST(ExitCodes, EachFailureClassHasItsCode) {
  std::ostringstream err;
  auto code = [&](auto e) { return failure_exit_code(std::make_exception_ptr(e), err); };
  EXPECT_EQ(code(ConfigError("c")), 1);
  EXPECT_EQ(code(UnwindingError("u", 2.5, 0.0)), 2);
  EXPECT_EQ(code(NonFiniteError("n", 1.0)), 3);
  EXPECT_EQ(code(std::runtime_error("r")), 1);
  EXPECT_NE(err.str().find("t=2.5"), std::string::npos);
}

TEST(Verify, PristineBuildPasses) {
  const auto checks = run_verification();
  ASSERT_GE(checks.size(), 8u);
  for (const auto& c : checks) EXPECT_TRUE(c.ok) << c.name << " " << c.deviation;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(false, out, err), kOk);
  EXPECT_NE(out.str().find("max deviation"), std::string::npos);
  EXPECT_NE(out.str().find("all checks passed"), std::string::npos);
}

TEST(Verify, CorruptedMu2CoefficientFailsTheJacobianCheck) {
  const auto checks = run_verification(true);
  int failed = 0;
  for (const auto& c : checks) {
    if (c.ok) continue;
    ++failed;
    EXPECT_NE(c.name.find("d mu/d omega"), std::string::npos) << c.name;
    EXPECT_GT(c.deviation, 1e-3);
  }
  EXPECT_EQ(failed, 1);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(true, out, err), kVerifyFailure);
  EXPECT_NE(out.str().find("FAIL"), std::string::npos);
}

TEST(Compare, SingleScenarioIsAConfigError) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_compare({scenario("nominal_case1")}, {}, out, err), kConfigFailure);
}

TEST(Compare, MismatchedTimeGridsAreRejected) {
  std::ostringstream out, err;
  CommonOptions opts;
  opts.out_dir = scratch("compare_grid").string();
  EXPECT_EQ(cmd_compare({scenario("nominal_case1"), scenario("perturbed_case2")}, opts, out, err),
            kConfigFailure);
}

TEST(Compare, ImmersionControllerBeatsCeBaseline) {
  const fs::path dir = scratch("compare");
  CommonOptions opts;
  opts.out_dir = dir.string();
  opts.jobs = 2;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare({scenario("perturbed_case2"), scenario("perturbed_ce_baseline")}, opts,
                        out, err),
            kOk)
      << err.str();
  const Table rms = read_csv(dir / "compare_rms.csv");
  ASSERT_EQ(rms.rows.size(), 2u);
  EXPECT_EQ(rms.rows[0][0], "perturbed_case2");
  for (const char* col : {"rms_qev[-]", "rms_omega_e[rad/s]", "rms_theta_err[kg*m^2]"})
    EXPECT_LT(rms.value(0, col), rms.value(1, col)) << col;
  EXPECT_EQ(rms.value(0, "seed"), 1.0);
  EXPECT_EQ(rms.value(0, "t_start[s]"), 40.0);

  const Table norms = read_csv(dir / "compare_norms.csv");
  EXPECT_EQ(norms.rows.size(), 10001u);
  EXPECT_EQ(norms.header.size(), 1u + 4u * 2u);
  EXPECT_EQ(norms.header[1], "perturbed_case2:q_ev_norm[-]");
  EXPECT_EQ(norms.header[8], "perturbed_ce_baseline:theta_err_norm[kg*m^2]");
  int seeds = 0;
  for (const auto& c : norms.comments) seeds += c.find("seed: 1") != std::string::npos;
  EXPECT_EQ(seeds, 2);
  EXPECT_NE(out.str().find("perturbed_ce_baseline: seed 1"), std::string::npos);
}

TEST(Compare, DuplicateLabelsAreDisambiguated) {
  const fs::path dir = scratch("compare_dup");
  CommonOptions opts;
  opts.out_dir = dir.string();
  opts.sets = {"duration=2"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare({scenario("nominal_case1"), scenario("nominal_case1")}, opts, out, err),
            kOk);
  const Table norms = read_csv(dir / "compare_norms.csv");
  EXPECT_EQ(std::set<std::string>(norms.header.begin(), norms.header.end()).size(),
            norms.header.size());
}

TEST(Sweep, GammaLambdaGridHasSixRows) {
  const fs::path dir = scratch("sweep");
  CommonOptions opts;
  opts.out_dir = dir.string();
  opts.sets = {"duration=10"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(scenario("nominal_case1"),
                      {"gains.gamma=5,25,125", "gains.lambda=0.001,0.01"}, opts, out, err),
            kOk)
      << err.str();
  const Table t = read_csv(dir / "sweep_metrics.csv");
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.header[0], "gains.gamma");
  EXPECT_EQ(t.header[1], "gains.lambda");
  EXPECT_EQ(t.rows[0][0], "5");
  EXPECT_EQ(t.rows[0][1], "0.001");
  EXPECT_EQ(t.rows[5][0], "125");
  EXPECT_EQ(t.rows[5][1], "0.01");
  std::set<std::string> labels;
  for (const auto& r : t.rows) labels.insert(r[t.column("label")]);
  EXPECT_EQ(labels.size(), 6u);
  // gamma = 5 drives Delta past the RK4 stability limit of the LTV filters at h = 0.01
  const std::size_t st = t.column("status");
  for (std::size_t i = 0; i < 6; ++i) {
    if (i < 2) {
      EXPECT_EQ(t.rows[i][st].rfind("non-finite@", 0), 0u) << t.rows[i][st];
      EXPECT_TRUE(std::isnan(t.value(i, "rms_qev[-]")));
    } else {
      EXPECT_EQ(t.rows[i][st], "ok");
      EXPECT_TRUE(std::isfinite(t.value(i, "rms_theta_err[kg*m^2]")));
    }
  }
  EXPECT_NE(err.str().find("non-finite@"), std::string::npos);
}

TEST(Sweep, DetectionTimeIsNonIncreasingInExtensionWeight) {
  const fs::path dir = scratch("sweep_kN");
  CommonOptions opts;
  opts.out_dir = dir.string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(scenario("nominal_case1"), {"gains.k_N=1,8,64"}, opts, out, err), kOk);
  const Table t = read_csv(dir / "sweep_metrics.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  std::vector<double> ts;
  for (std::size_t i = 0; i < 3; ++i) ts.push_back(t.value(i, "T_s_detected[s]"));
  for (double v : ts) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(ts[1], ts[0]);
  EXPECT_LE(ts[2], ts[1]);
}

TEST(Sweep, EmptyOrInvalidGridIsAConfigError) {
  std::ostringstream out, err;
  CommonOptions opts;
  opts.out_dir = scratch("sweep_empty").string();
  EXPECT_EQ(cmd_sweep(scenario("nominal_case1"), {}, opts, out, err), kConfigFailure);
  EXPECT_EQ(cmd_sweep(scenario("nominal_case1"), {"gains.gamma="}, opts, out, err),
            kConfigFailure);
  EXPECT_EQ(cmd_sweep(scenario("nominal_case1"), {"variant=exponential"}, opts, out, err),
            kConfigFailure);
  EXPECT_EQ(cmd_sweep(scenario("nominal_case1"), {"gains.gama=1,2"}, opts, out, err),
            kConfigFailure);
  EXPECT_THROW(expand_grid({}), ConfigError);
  EXPECT_EQ(expand_grid({{"a", {"1", "2"}}, {"b", {"3", "4", "5"}}}).size(), 6u);
}

TEST(WorkerPool, VisitsEveryIndexOnceAndRethrowsFirstError) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
  try {
    parallel_for(10, 4, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error("task " + std::to_string(i));
    });
    FAIL() << "expected rethrow";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "task 3");
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Binary, ExitCodesFromTheCommandLine) {
  const std::string bin = ATTCTL_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string out = scratch("binary").string();
  EXPECT_EQ(status(bin + " --version"), 0);
  EXPECT_EQ(status(bin), 1);
  EXPECT_EQ(status(bin + " run"), 1);
  EXPECT_EQ(status(bin + " run " + scenario("nominal_case1") + " --out " + out +
                   " --set duration=2 --seed 3"),
            0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "nominal_case1_trajectory.csv"));
  EXPECT_EQ(status(bin + " run " + scenario("nominal_case1") + " --set gains.gama=1"), 1);
  EXPECT_EQ(status(bin + " compare " + scenario("nominal_case1")), 1);
  EXPECT_EQ(status(bin + " verify --corrupt-mu2"), 4);
  EXPECT_EQ(status(bin + " sweep " + scenario("nominal_case1") + " --out " + out), 1);
}
