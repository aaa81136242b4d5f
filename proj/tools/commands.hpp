#pragma once

#include "config.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#ifndef ATTCTL_VERSION
#define ATTCTL_VERSION "0.0.0"
#endif

namespace attctl::cli {

inline constexpr const char* kVersion = ATTCTL_VERSION;

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigFailure = 1,
  kUnwinding = 2,
  kNonFinite = 3,
  kVerifyFailure = 4,
};

struct CommonOptions {
  std::string out_dir = ".";
  std::vector<std::string> sets;  // key=value overrides, applied in order
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// Reports a failed command on err and returns its exit code.
int failure_exit_code(std::exception_ptr error, std::ostream& err);

/// Loads a scenario file and applies --set / --seed.
ScenarioConfig load_config(const std::string& path, const CommonOptions& opts);

/// Comment block written at the top of every output file.
void write_provenance(std::ostream& os, const std::string& command,
                      const std::vector<ScenarioConfig>& configs);

/// One axis of a sweep, parsed from "key=v1,v2,...".
struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};
GridAxis parse_grid_axis(const std::string& spec);
/// Cartesian product, first axis varying slowest. Throws ConfigError if empty.
std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(
    const std::vector<GridAxis>& axes);

struct VerifyCheck {
  std::string name;
  double deviation;
  std::string bound;
  bool ok;
};
/// Identity and lemma checks on random states and short runs. corrupt_mu2
/// perturbs the quadratic coefficient of mu2 so the Jacobian check must fail.
std::vector<VerifyCheck> run_verification(bool corrupt_mu2 = false);

int cmd_run(const std::string& scenario, const CommonOptions& opts, std::ostream& out,
            std::ostream& err);
int cmd_verify(bool corrupt_mu2, std::ostream& out, std::ostream& err);
int cmd_compare(const std::vector<std::string>& scenarios, const CommonOptions& opts,
                std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& base, const std::vector<std::string>& grid,
              const CommonOptions& opts, std::ostream& out, std::ostream& err);

/// Runs body(i) for i in [0, n) on at most `jobs` threads. The first
/// exception by index is rethrown after all workers finish.
template <typename Fn> void parallel_for(std::size_t n, unsigned jobs, Fn&& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace attctl::cli
