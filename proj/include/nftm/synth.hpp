#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nftm/anon.hpp"
#include "nftm/flow.hpp"
#include "nftm/ranges.hpp"

namespace nftm {

struct SynthParams {
  std::uint64_t flows = 10000;
  std::uint64_t seed = 1;
  // Tail exponent of the per-source flow-count distribution,
  // P(d) ~ d^-alpha. Must exceed 1.
  double alpha = 2.5;
  // Tail exponent of destination popularity.
  double dest_alpha = 2.0;
  EpochSeconds start_time = 1'600'000'000;
  // Flow start times are spread evenly over this many seconds.
  std::uint64_t duration = 3600;
  // Each flow lasts 1..max_flow_seconds one-second bins.
  std::uint64_t max_flow_seconds = 10;
  double mean_packets = 100.0;
  double reverse_fraction = 0.5;
};

// Deterministic heavy-tailed generator. Only mt19937_64 (whose output is
// fixed by the standard) feeds it, and every transform below is written
// out, so a seed yields the same corpus on every platform.
class SyntheticFlows {
public:
  explicit SyntheticFlows(SynthParams p)
      : p_(p), rng_(p.seed),
        src_map_(AnonKey{{p.seed ^ 0x5EEDull, 0x5A17ull}, 4}),
        dst_map_(AnonKey{{p.seed ^ 0xD057ull, 0xC0FFEEull}, 4}) {
    if (!(p.alpha > 1.0) || !(p.dest_alpha > 1.0)) throw std::invalid_argument("power-law exponents must exceed 1");
    if (p.max_flow_seconds == 0) throw std::invalid_argument("max_flow_seconds must be >= 1");
    if (!(p.mean_packets >= 1.0)) throw std::invalid_argument("mean_packets must be >= 1");
  }

  std::vector<FlowRecord> generate() {
    // Per-source flow counts d with P(D >= k) = k^-(alpha-1).
    std::vector<Addr> sources;
    sources.reserve(p_.flows);
    std::uint32_t source_index = 0;
    while (sources.size() < p_.flows) {
      const auto d = power_law(p_.alpha, p_.flows - sources.size());
      const Addr src = src_map_.forward(source_index++);
      for (std::uint64_t k = 0; k < d; ++k) sources.push_back(src);
    }
    // Interleave sources in time.
    for (std::size_t i = sources.size(); i > 1; --i) std::swap(sources[i - 1], sources[below(i)]);

    std::vector<FlowRecord> out;
    out.reserve(p_.flows);
    for (std::uint64_t i = 0; i < p_.flows; ++i) {
      FlowRecord r;
      r.start = p_.start_time + static_cast<EpochSeconds>(static_cast<unsigned __int128>(i) * p_.duration / p_.flows);
      r.end = r.start + static_cast<EpochSeconds>(below(p_.max_flow_seconds));
      r.src = sources[i];
      r.dst = dst_map_.forward(static_cast<Addr>(power_law(p_.dest_alpha, 0xFFFFFFFFull) - 1));
      r.fwd_pkts = geometric(p_.mean_packets);
      r.rev_pkts = uniform() < p_.reverse_fraction ? r.fwd_pkts / 2 : 0;
      out.push_back(r);
    }
    return out;
  }

private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

  // floor(U^(-1/(a-1))) for U in (0, 1], capped.
  std::uint64_t power_law(double a, std::uint64_t cap) {
    const double u = 1.0 - uniform();
    const double x = std::floor(std::pow(u, -1.0 / (a - 1.0)));
    if (!(x < static_cast<double>(cap))) return cap;
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(x));
  }

  // Geometric on {1, 2, ...} with the given mean.
  Count geometric(double mean) {
    if (mean <= 1.0) return 1;
    const double u = 1.0 - uniform();
    const double k = std::floor(std::log(u) / std::log1p(-1.0 / mean));
    return 1 + static_cast<Count>(std::min(k, 1e15));
  }

  SynthParams p_;
  std::mt19937_64 rng_;
  AddressPermutation src_map_;
  AddressPermutation dst_map_;
};

inline std::vector<FlowRecord> generate_synthetic(const SynthParams& p) { return SyntheticFlows(p).generate(); }

inline constexpr const char* kFlowCsvHeader = "start,end,src,dst,fwd_pkts,rev_pkts";

inline void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& flows) {
  out << kFlowCsvHeader << '\n';
  for (const auto& r : flows)
    out << r.start << ',' << r.end << ',' << format_addr(r.src) << ',' << format_addr(r.dst) << ',' << r.fwd_pkts
        << ',' << r.rev_pkts << '\n';
}

}  // namespace nftm
