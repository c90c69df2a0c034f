#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nftm/error.hpp"
#include "nftm/flow.hpp"
#include "nftm/matrix.hpp"

namespace nftm {

struct WindowConfig {
  Count leaf_nv = Count{1} << 17;
  unsigned levels = 11;

  void validate() const {
    if (leaf_nv == 0) throw std::invalid_argument("leaf_nv must be >= 1");
    if (levels == 0) throw std::invalid_argument("levels must be >= 1");
    if (levels > 64 || (levels > 1 && (leaf_nv >> (65 - levels)) != 0))
      throw std::invalid_argument("leaf_nv * 2^(levels-1) overflows 64 bits");
  }

  Count packets_at(unsigned level) const { return leaf_nv << level; }
};

struct Window {
  unsigned level = 0;
  std::uint64_t seq = 0;
  EpochSeconds t_start = 0;
  EpochSeconds t_end = 0;
  TrafficMatrix matrix;
  bool complete = false;
};

// Repackages an ascending per-second matrix stream into leaf windows of
// exactly leaf_nv packets. Entries of a second are consumed in canonical
// order; the entry that crosses a window boundary is divided so that the
// earlier window reaches leaf_nv exactly.
class WindowPacker {
public:
  explicit WindowPacker(WindowConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  template <typename Sink>
  void push(EpochSeconds tbin, const TrafficMatrix& m, Sink&& sink) {
    if (seen_any_ && tbin < last_tbin_)
      throw DataError("per-second matrices out of order: " + std::to_string(tbin) + " after " +
                      std::to_string(last_tbin_));
    seen_any_ = true;
    last_tbin_ = tbin;
    for (const auto& e : m) {
      Count left = e.count;
      while (left > 0) {
        if (buffer_.empty()) t_start_ = tbin;
        t_end_ = tbin;
        const Count take = std::min(left, cfg_.leaf_nv - filled_);
        buffer_.push_back({e.coord.src, e.coord.dst, take});
        filled_ += take;
        left -= take;
        if (filled_ == cfg_.leaf_nv) emit(true, sink);
      }
    }
  }

  // Emits the trailing partial window, if any.
  template <typename Sink>
  void finish(Sink&& sink) {
    if (!buffer_.empty()) emit(false, sink);
  }

private:
  template <typename Sink>
  void emit(bool complete, Sink& sink) {
    Window w;
    w.level = 0;
    w.seq = next_seq_++;
    w.t_start = t_start_;
    w.t_end = t_end_;
    // A window spans several seconds, so the same coordinate can appear in
    // more than one run of the buffer.
    w.matrix = matrix_from_triples(std::move(buffer_));
    w.complete = complete;
    buffer_.clear();
    filled_ = 0;
    sink(std::move(w));
  }

  WindowConfig cfg_;
  std::vector<Triple> buffer_;
  Count filled_ = 0;
  EpochSeconds t_start_ = 0;
  EpochSeconds t_end_ = 0;
  EpochSeconds last_tbin_ = 0;
  bool seen_any_ = false;
  std::uint64_t next_seq_ = 0;
};

// Batch form of WindowPacker.
inline std::vector<Window> pack_windows(std::span<const std::pair<EpochSeconds, TrafficMatrix>> seconds,
                                        WindowConfig cfg) {
  std::vector<Window> out;
  WindowPacker packer(cfg);
  auto sink = [&](Window w) { out.push_back(std::move(w)); };
  for (const auto& [t, m] : seconds) packer.push(t, m, sink);
  packer.finish(sink);
  return out;
}

// Streaming binary aggregation. Level-k window i is the sum of level-(k-1)
// windows 2i and 2i+1; at most one window per level is pending.
class HierarchyBuilder {
public:
  explicit HierarchyBuilder(WindowConfig cfg) : cfg_(cfg), pending_(cfg.levels) { cfg_.validate(); }

  // Emits the leaf itself, then every parent it completes. An incomplete
  // leaf is emitted but never aggregated, and ends the stream.
  template <typename Sink>
  void push(Window leaf, Sink&& sink) {
    if (leaf.level != 0) throw std::invalid_argument("hierarchy input must be leaf windows");
    if (closed_) throw std::logic_error("leaf pushed after an incomplete leaf");
    if (leaf.seq != next_leaf_) throw std::invalid_argument("leaf windows must arrive in sequence order");
    ++next_leaf_;
    if (!leaf.complete) {
      closed_ = true;
      sink(std::move(leaf));
      return;
    }
    Window carry = leaf;
    sink(std::move(leaf));
    for (unsigned level = 0; level + 1 < cfg_.levels; ++level) {
      auto& slot = pending_[level];
      if (!slot) {
        slot = std::move(carry);
        return;
      }
      Window parent;
      parent.level = level + 1;
      parent.seq = slot->seq / 2;
      parent.t_start = slot->t_start;
      parent.t_end = carry.t_end;
      parent.matrix = matrix_add(slot->matrix, carry.matrix);
      parent.complete = true;
      slot.reset();
      carry = parent;
      sink(std::move(parent));
    }
  }

private:
  WindowConfig cfg_;
  std::vector<std::optional<Window>> pending_;
  std::uint64_t next_leaf_ = 0;
  bool closed_ = false;
};

inline std::vector<Window> build_hierarchy(std::vector<Window> leaves, WindowConfig cfg) {
  std::vector<Window> out;
  HierarchyBuilder hb(cfg);
  auto sink = [&](Window w) { out.push_back(std::move(w)); };
  for (auto& l : leaves) hb.push(std::move(l), sink);
  return out;
}

}  // namespace nftm
