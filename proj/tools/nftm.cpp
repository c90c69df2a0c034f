#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "nftm/nftm.hpp"

using namespace nftm;

namespace {

// Path or "-" for the standard streams.
class InFile {
public:
  explicit InFile(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw DataError("cannot open " + path);
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

private:
  std::unique_ptr<std::ifstream> file_;
};

class OutFile {
public:
  explicit OutFile(const std::string& path) : path_(path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw DataError("cannot create " + path);
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }
  void close() {
    get().flush();
    if (!get()) throw DataError("write to " + path_ + " failed");
  }

private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

std::string slurp(const std::string& path) {
  InFile in(path);
  return {std::istreambuf_iterator<char>(in.get()), std::istreambuf_iterator<char>()};
}

GridRanges load_ranges(const std::string& path) {
  if (path.empty()) return default_grid_ranges();
  InFile in(path);
  return parse_ranges_config(in.get());
}

void write_ranges_config(std::ostream& out, const GridRanges& g) {
  for (std::size_t k = 0; k < 3; ++k) {
    out << '[' << kGridSectionNames[k] << "]\n";
    for (const auto& iv : g[k].intervals()) out << format_addr(iv.lo) << '-' << format_addr(iv.hi) << '\n';
  }
}

struct WindowOptions {
  Count leaf_nv = WindowConfig{}.leaf_nv;
  unsigned levels = WindowConfig{}.levels;
  std::string ranges;

  void add_to(CLI::App* app) {
    app->add_option("--leaf-nv", leaf_nv, "packets per leaf window")->capture_default_str();
    app->add_option("--levels", levels, "number of window sizes, leaf included")->capture_default_str();
    app->add_option("--ranges", ranges, "subrange config file (default: built-in ranges)");
  }
  WindowConfig config() const {
    WindowConfig c{leaf_nv, levels};
    c.validate();
    return c;
  }
};

// Feeds every window of a TML stream, leaves and parents, to `sink`.
void for_each_window(std::istream& in, const WindowConfig& cfg, const std::function<void(Window)>& sink) {
  TmlReader reader(in);
  WindowPacker packer(cfg);
  HierarchyBuilder tree(cfg);
  auto leaf = [&](Window w) { tree.push(std::move(w), sink); };
  while (auto e = reader.next()) packer.push(e->first, e->second, leaf);
  packer.finish(leaf);
}

// ---- subcommands ----

struct IngestCmd {
  std::string input = "-", output = "-";
  bool crc = false;
  std::size_t max_open = 1u << 16;

  void run() {
    InFile in(input);
    OutFile out(output);
    TmlWriter writer(out.get(), crc ? tml::kFlagCrc : 0);
    SecondAccumulator acc(max_open);
    auto sink = [&](SecondAccumulator::Output o) { writer.write(o.first, o.second); };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in.get(), line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      if (lineno == 1 && is_flow_csv_header(line)) continue;
      auto bins = normalize_flow(parse_flow_csv(line, lineno));
      acc.add(bins, sink);
    }
    acc.finish(sink);
    out.close();
  }
};

struct AnalyzeCmd {
  std::string input = "-", output = "-";
  WindowOptions win;
  bool keep = false;
  unsigned threads = 1;

  void run() {
    const auto cfg = win.config();
    const auto ranges = load_ranges(win.ranges);
    InFile in(input);
    OutFile out(output);
    AggBulkWriter writer(out.get());
    for_each_window(in.get(), cfg, [&](Window w) {
      writer.append(analyze_window(w, ranges, keep, threads), WindowMeta::of(w, cfg.leaf_nv));
    });
    writer.finish();
    out.close();
  }
};

// Triple text: one "t src dst count" line per entry, ascending t. A line
// holding only "t" stands for an empty matrix at t.
std::vector<TimedMatrix> read_triple_text(std::istream& in) {
  std::vector<TimedMatrix> seq;
  std::vector<Triple> cur;
  std::optional<EpochSeconds> cur_t;
  auto flush = [&] {
    if (cur_t) seq.emplace_back(*cur_t, matrix_from_triples(std::move(cur)));
    cur.clear();
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    std::istringstream fields{std::string(body)};
    std::vector<std::string> f{std::istream_iterator<std::string>(fields), std::istream_iterator<std::string>()};
    if (f.size() != 1 && f.size() != 4) throw ParseError(lineno, "expected 't' or 't src dst count'");
    auto t = parse_uint<EpochSeconds>(f[0]);
    if (!t) throw ParseError(lineno, "bad timestamp '" + f[0] + "'");
    if (cur_t && *t < *cur_t) throw ParseError(lineno, "timestamps must not decrease");
    if (!cur_t || *t != *cur_t) {
      flush();
      cur_t = *t;
    }
    if (f.size() == 1) continue;
    auto s = parse_addr(f[1]);
    auto d = parse_addr(f[2]);
    auto c = parse_uint<Count>(f[3]);
    if (!s || !d) throw ParseError(lineno, "bad address");
    if (!c) throw ParseError(lineno, "bad count '" + f[3] + "'");
    cur.push_back({*s, *d, *c});
  }
  flush();
  return seq;
}

struct EncodeCmd {
  std::string input = "-", output = "-";
  bool crc = false;

  void run() {
    InFile in(input);
    auto seq = read_triple_text(in.get());
    OutFile out(output);
    TmlWriter writer(out.get(), crc ? tml::kFlagCrc : 0);
    for (const auto& [t, m] : seq) writer.write(t, m);
    out.close();
  }
};

struct DecodeCmd {
  std::string input = "-", output = "-";

  void run() {
    InFile in(input);
    OutFile out(output);
    TmlReader reader(in.get());
    auto& os = out.get();
    while (auto e = reader.next()) {
      if (e->second.empty()) os << e->first << '\n';
      for (const auto& x : e->second)
        os << e->first << ' ' << format_addr(x.coord.src) << ' ' << format_addr(x.coord.dst) << ' ' << x.count
           << '\n';
    }
    out.close();
  }
};

struct AnonCmd {
  std::string input = "-", output = "-";
  std::string key_file;
  bool inverse = false;
  std::string ranges_in, ranges_out;
  std::uint64_t cap = kDefaultRangeImageCap;

  void run() {
    const auto key = load_anon_key(key_file.empty() ? std::nullopt : std::optional<std::string>(key_file));
    if (!ranges_out.empty()) {
      if (inverse) throw std::invalid_argument("--ranges-out cannot be combined with --inverse");
      OutFile rout(ranges_out);
      write_ranges_config(rout.get(), anonymize_grid_ranges(load_ranges(ranges_in), key, cap));
      rout.close();
    }
    AddressPermutation pi(key);
    InFile in(input);
    TmlReader reader(in.get());
    OutFile out(output);
    TmlWriter writer(out.get(), reader.flags());
    while (auto e = reader.next())
      writer.write(e->first, inverse ? deanonymize_matrix(e->second, pi) : anonymize_matrix(e->second, pi));
    out.close();
  }
};

struct StatsCmd {
  std::string input = "-";
  bool json = false;

  void run() {
    InFile in(input);
    const auto s = tml_stats(in.get());
    if (json) {
      nlohmann::json j{{"entries", s.entries},
                       {"total_packets", s.total_packets},
                       {"total_bytes", s.total_bytes},
                       {"bits_per_packet", std::isinf(s.bits_per_packet) ? nlohmann::json("inf")
                                                                         : nlohmann::json(s.bits_per_packet)}};
      std::cout << j.dump() << '\n';
    } else {
      std::cout << "entries " << s.entries << "\ntotal_packets " << s.total_packets << "\ntotal_bytes "
                << s.total_bytes << "\nbits_per_packet " << s.bits_per_packet << '\n';
    }
  }
};

nlohmann::json sparse_json(const SparseVector& v) {
  auto a = nlohmann::json::array();
  for (const auto& [i, x] : v) a.push_back({i, x});
  return a;
}

nlohmann::json quantities_json(const NetworkQuantities& q) {
  nlohmann::json j;
  const auto s = q.scalars();
  for (std::size_t k = 0; k < s.size(); ++k) j[std::string(NetworkQuantities::kScalarNames[k])] = s[k];
  if (q.distributions) {
    const auto& d = *q.distributions;
    j["distributions"] = {{std::string(kDistributionNames[0]), sparse_json(d.source_packets)},
                          {std::string(kDistributionNames[1]), sparse_json(d.source_fanout)},
                          {std::string(kDistributionNames[2]), sparse_json(d.destination_packets)},
                          {std::string(kDistributionNames[3]), sparse_json(d.destination_fanin)}};
  }
  return j;
}

struct DumpCmd {
  std::string input = "-", output = "-";
  std::string format = "csv";

  void run() {
    const auto records = read_aggregate_file(slurp(input));
    OutFile out(output);
    auto& os = out.get();
    if (format == "csv") {
      os << "record,level,seq,t_start,t_end,complete,cell,src_range,dst_range";
      for (auto n : NetworkQuantities::kScalarNames) os << ',' << n;
      os << '\n';
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto row = [&](const std::string& cell, const std::string& sr, const std::string& dr,
                       const NetworkQuantities& q) {
          os << i << ',' << r.meta.level << ',' << r.meta.seq << ',' << r.meta.t_start << ',' << r.meta.t_end << ','
             << (r.meta.complete ? 1 : 0) << ',' << cell << ',' << sr << ',' << dr;
          for (auto v : q.scalars()) os << ',' << v;
          os << '\n';
        };
        row("full", "", "", r.grid.full);
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b)
            row(cell_section_name(a, b), r.grid.ranges[a].name(), r.grid.ranges[b].name(), r.grid.cells[a][b]);
      }
    } else {
      for (const auto& r : records) {
        nlohmann::json j{{"level", r.meta.level},     {"seq", r.meta.seq},
                         {"t_start", r.meta.t_start}, {"t_end", r.meta.t_end},
                         {"leaf_nv", r.meta.leaf_nv}, {"complete", r.meta.complete}};
        auto ranges = nlohmann::json::array();
        for (const auto& g : r.grid.ranges) {
          auto ivs = nlohmann::json::array();
          for (const auto& iv : g.intervals()) ivs.push_back({format_addr(iv.lo), format_addr(iv.hi)});
          ranges.push_back({{"name", g.name()}, {"intervals", ivs}});
        }
        j["ranges"] = ranges;
        j["full"] = quantities_json(r.grid.full);
        auto cells = nlohmann::json::array();
        for (const auto& row : r.grid.cells) {
          auto jr = nlohmann::json::array();
          for (const auto& c : row) jr.push_back(quantities_json(c));
          cells.push_back(jr);
        }
        j["cells"] = cells;
        os << j.dump() << '\n';
      }
    }
    out.close();
  }
};

struct BenchCmd {
  std::string input = "-", csv;
  WindowOptions win;
  std::vector<std::string> configs;
  std::string sweep;
  unsigned max_threads = available_cores();
  unsigned repetitions = 1;
  std::uint64_t seed = 1;

  void run() {
    const auto cfg = win.config();
    const auto ranges = load_ranges(win.ranges);
    std::vector<BenchConfig> plan;
    if (!sweep.empty()) plan = sweep_configs(sweep, max_threads);
    for (const auto& c : configs) plan.push_back(parse_bench_config(c));
    if (plan.empty()) plan.push_back({1, 1, 1});
    for (auto& p : plan) p.repetitions = repetitions;

    std::vector<Window> windows;
    {
      InFile in(input);
      for_each_window(in.get(), cfg, [&](Window w) { windows.push_back(std::move(w)); });
    }
    if (windows.empty()) throw DataError("input holds no traffic");
    const auto report = run_bench(windows, ranges, plan, seed);
    std::cerr << "self check passed on window " << report.validated_window << " of " << windows.size() << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    write_bench_csv(std::cout, report.results);
    if (!csv.empty()) {
      OutFile out(csv);
      write_bench_csv(out.get(), report.results);
      out.close();
    }
  }
};

struct SynthCmd {
  std::string output = "-";
  SynthParams p;

  void run() {
    OutFile out(output);
    write_flow_csv(out.get(), generate_synthetic(p));
    out.close();
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"Traffic matrix tools: flow ingest, windowed analytics, TML streams, anonymization"};
  app.require_subcommand(1);
  std::function<void()> run;

  IngestCmd ingest;
  auto* s = app.add_subcommand("ingest", "flow CSV -> per-second TML stream");
  s->add_option("input", ingest.input, "flow CSV (start,end,src,dst,fwd_pkts,rev_pkts) or -")->capture_default_str();
  s->add_option("-o,--output", ingest.output, "TML output or -")->capture_default_str();
  s->add_flag("--crc", ingest.crc, "append a CRC32C to every entry");
  s->add_option("--max-open-seconds", ingest.max_open, "open-second budget")->capture_default_str();
  s->callback([&] { run = [&] { ingest.run(); }; });

  AnalyzeCmd analyze;
  s = app.add_subcommand("analyze", "TML stream -> aggregate file of windowed quantities");
  s->add_option("input", analyze.input, "TML input or -")->capture_default_str();
  s->add_option("-o,--output", analyze.output, "aggregate output or -")->capture_default_str();
  analyze.win.add_to(s);
  s->add_flag("--keep-distributions", analyze.keep, "store per-address distributions");
  s->add_option("--threads", analyze.threads, "threads per window")->check(CLI::PositiveNumber)->capture_default_str();
  s->callback([&] { run = [&] { analyze.run(); }; });

  EncodeCmd encode;
  s = app.add_subcommand("encode", "triple text -> TML");
  s->add_option("input", encode.input, "lines of 't src dst count' or -")->capture_default_str();
  s->add_option("-o,--output", encode.output, "TML output or -")->capture_default_str();
  s->add_flag("--crc", encode.crc, "append a CRC32C to every entry");
  s->callback([&] { run = [&] { encode.run(); }; });

  DecodeCmd decode;
  s = app.add_subcommand("decode", "TML -> triple text");
  s->add_option("input", decode.input, "TML input or -")->capture_default_str();
  s->add_option("-o,--output", decode.output, "text output or -")->capture_default_str();
  s->callback([&] { run = [&] { decode.run(); }; });

  AnonCmd anon;
  s = app.add_subcommand("anon", "relabel addresses of a TML stream with a keyed permutation");
  s->footer(std::string("The key is 32 hex digits read from --key-file or the ") + kAnonKeyEnv +
            " environment variable.");
  s->add_option("input", anon.input, "TML input or -")->capture_default_str();
  s->add_option("-o,--output", anon.output, "TML output or -")->capture_default_str();
  s->add_option("--key-file", anon.key_file, "file holding the key");
  s->add_flag("--inverse", anon.inverse, "undo a previous anonymization");
  s->add_option("--ranges", anon.ranges_in, "subrange config to carry through the permutation");
  s->add_option("--ranges-out", anon.ranges_out, "write the permuted subrange config here");
  s->add_option("--range-cap", anon.cap, "largest range (in addresses) to permute")->capture_default_str();
  s->callback([&] { run = [&] { anon.run(); }; });

  StatsCmd stats;
  s = app.add_subcommand("stats", "entries, packets, bytes and bits per packet of a TML stream");
  s->add_option("input", stats.input, "TML input or -")->capture_default_str();
  s->add_flag("--json", stats.json, "print one JSON object");
  s->callback([&] { run = [&] { stats.run(); }; });

  DumpCmd dump;
  s = app.add_subcommand("dump", "aggregate file -> CSV or JSON lines");
  s->add_option("input", dump.input, "aggregate input or -")->capture_default_str();
  s->add_option("-o,--output", dump.output, "output or -")->capture_default_str();
  s->add_option("--format", dump.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  s->callback([&] { run = [&] { dump.run(); }; });

  BenchCmd bench;
  s = app.add_subcommand("bench", "time windowed analysis over a TML corpus");
  s->add_option("input", bench.input, "TML input or -")->capture_default_str();
  bench.win.add_to(s);
  s->add_option("--config", bench.configs, "PxT: P isolated workers with T threads each (repeatable)");
  s->add_option("--sweep", bench.sweep, "single-process or multi-process")
      ->check(CLI::IsMember({"single-process", "multi-process"}));
  s->add_option("--max-threads", bench.max_threads, "largest sweep point")->capture_default_str();
  s->add_option("--repetitions", bench.repetitions, "passes over the corpus per config")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s->add_option("--seed", bench.seed, "selects the self-check window")->capture_default_str();
  s->add_option("--csv", bench.csv, "also write results to this file");
  s->callback([&] { run = [&] { bench.run(); }; });

  SynthCmd synth;
  s = app.add_subcommand("synth", "generate a heavy-tailed synthetic flow CSV");
  s->add_option("-o,--output", synth.output, "CSV output or -")->capture_default_str();
  s->add_option("-n,--flows", synth.p.flows, "number of flow records")->capture_default_str();
  s->add_option("--seed", synth.p.seed)->capture_default_str();
  s->add_option("--alpha", synth.p.alpha, "source degree tail exponent")->capture_default_str();
  s->add_option("--dest-alpha", synth.p.dest_alpha, "destination popularity exponent")->capture_default_str();
  s->add_option("--start", synth.p.start_time, "first flow start (epoch seconds)")->capture_default_str();
  s->add_option("--duration", synth.p.duration, "seconds over which flows start")->capture_default_str();
  s->add_option("--max-flow-seconds", synth.p.max_flow_seconds)->capture_default_str();
  s->add_option("--mean-packets", synth.p.mean_packets, "mean forward packets per flow")->capture_default_str();
  s->add_option("--reverse-fraction", synth.p.reverse_fraction)->capture_default_str();
  s->callback([&] { run = [&] { synth.run(); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    run();
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
