#pragma once

#include <chrono>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "nftm/oracle.hpp"
#include "nftm/quantities.hpp"
#include "nftm/ranges.hpp"
#include "nftm/window.hpp"

namespace nftm {

// n_process isolated workers, each using n_threads for the reductions of
// one window.
struct BenchConfig {
  unsigned n_process = 1;
  unsigned n_threads = 1;
  unsigned repetitions = 1;

  std::string label() const { return std::to_string(n_process) + "x" + std::to_string(n_threads); }
};

struct WorkerResult {
  Count packets = 0;
  std::uint64_t windows = 0;
  double seconds = 0;
};

struct BenchResult {
  std::string config;
  Count packets = 0;
  double seconds = 0;
  double pps = 0;
  std::vector<WorkerResult> workers;
};

// Parses "PxT".
inline BenchConfig parse_bench_config(std::string_view s) {
  auto x = s.find_first_of("xX");
  if (x == std::string_view::npos) throw std::invalid_argument("config must look like PxT");
  auto p = parse_uint<unsigned>(trim(s.substr(0, x)));
  auto t = parse_uint<unsigned>(trim(s.substr(x + 1)));
  if (!p || !t || *p == 0 || *t == 0) throw std::invalid_argument("bad config '" + std::string(s) + "'");
  return {*p, *t, 1};
}

// Powers of two up to max_threads: 1x1, 1x2, 1x4, ... for the
// single-process sweep, 1x1, 2x1, 4x1, ... for the multi-process sweep.
inline std::vector<BenchConfig> sweep_configs(std::string_view kind, unsigned max_threads) {
  if (kind != "single-process" && kind != "multi-process")
    throw std::invalid_argument("sweep must be single-process or multi-process");
  std::vector<BenchConfig> out;
  for (unsigned n = 1; n <= std::max(1u, max_threads); n *= 2) {
    if (kind == "single-process") out.push_back({1, n, 1});
    else out.push_back({n, 1, 1});
    if (n > (1u << 30)) break;
  }
  return out;
}

inline unsigned available_cores() { return std::max(1u, std::thread::hardware_concurrency()); }

struct BenchReport {
  std::vector<BenchResult> results;
  std::vector<std::string> warnings;
  // Window checked against the brute-force oracle before timing.
  std::uint64_t validated_window = 0;
};

inline constexpr double kMinStableSeconds = 0.05;

// Times analyze_window over `windows` for each config. Windows are dealt
// round-robin to workers; the only shared state is the read-only corpus.
inline BenchReport run_bench(const std::vector<Window>& windows, const GridRanges& ranges,
                             const std::vector<BenchConfig>& configs, std::uint64_t seed = 1) {
  BenchReport report;
  if (windows.empty()) throw std::invalid_argument("benchmark corpus has no windows");

  {
    std::mt19937_64 rng(seed);
    const auto k = static_cast<std::size_t>(rng() % windows.size());
    const auto got = compute_quantities(windows[k].matrix);
    const auto want = brute_force_quantities(windows[k].matrix.entries());
    if (!got.same_scalars(want))
      throw std::logic_error("self check failed: window " + std::to_string(k) + " disagrees with brute force");
    report.validated_window = k;
  }

  std::vector<Count> window_packets;
  window_packets.reserve(windows.size());
  for (const auto& w : windows) window_packets.push_back(w.matrix.valid_packets());

  for (const auto& cfg : configs) {
    if (cfg.n_process == 0 || cfg.n_threads == 0) throw std::invalid_argument("config " + cfg.label() + " is empty");
    if (static_cast<std::uint64_t>(cfg.n_process) * cfg.n_threads > available_cores())
      report.warnings.push_back("config " + cfg.label() + " oversubscribes " + std::to_string(available_cores()) +
                                " cores");
    BenchResult res;
    res.config = cfg.label();
    res.workers.resize(cfg.n_process);
    const unsigned reps = std::max(1u, cfg.repetitions);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto work = [&](unsigned p) {
      auto& wr = res.workers[p];
      const auto w0 = clock::now();
      for (unsigned rep = 0; rep < reps; ++rep)
        for (std::size_t i = p; i < windows.size(); i += cfg.n_process) {
          auto grid = analyze_window(windows[i], ranges, false, cfg.n_threads);
          wr.packets += grid.full.valid_packets;
          ++wr.windows;
        }
      wr.seconds = std::chrono::duration<double>(clock::now() - w0).count();
    };
    std::vector<std::thread> pool;
    for (unsigned p = 1; p < cfg.n_process; ++p) pool.emplace_back(work, p);
    work(0);
    for (auto& th : pool) th.join();
    res.seconds = std::chrono::duration<double>(clock::now() - t0).count();

    for (const auto& w : res.workers) res.packets += w.packets;
    Count expected = 0;
    for (auto c : window_packets) expected += c;
    if (res.packets != expected * reps) throw std::logic_error("benchmark lost packets in config " + res.config);
    res.pps = res.seconds > 0 ? static_cast<double>(res.packets) / res.seconds : 0.0;
    if (res.seconds < kMinStableSeconds)
      report.warnings.push_back("config " + res.config + " ran " + std::to_string(res.seconds) +
                                " s; corpus too small for stable timing (aim for >= " +
                                std::to_string(static_cast<std::uint64_t>(res.pps * 10 * kMinStableSeconds)) +
                                " packets or more repetitions)");
    report.results.push_back(std::move(res));
  }
  return report;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchResult>& results) {
  out << "config,packets,seconds,pps\n";
  for (const auto& r : results) out << r.config << ',' << r.packets << ',' << r.seconds << ',' << r.pps << '\n';
}

}  // namespace nftm
