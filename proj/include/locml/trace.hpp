#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace locml {

enum class AccessKind : std::uint8_t { read = 0, write = 1 };

/// Well-known object id namespaces used by the built-in generators and the
/// instrumented learners. Traces may use any ids; these are just the
/// conventional ones (the sidecar file names them).
namespace object_id {
inline constexpr std::uint32_t train_set = 0;
inline constexpr std::uint32_t model = 1;
inline constexpr std::uint32_t query_set = 2;
inline constexpr std::uint32_t stencil_a = 3;
inline constexpr std::uint32_t stencil_b = 4;
}  // namespace object_id

struct AccessEvent {
  std::uint32_t object = 0;
  std::uint64_t element = 0;
  AccessKind kind = AccessKind::read;
  std::uint64_t stamp = 0;

  bool operator==(const AccessEvent&) const = default;
};

/// Recorded sequence of (object, element) accesses with strictly increasing
/// step stamps. Traces model logical data objects (training points, queries,
/// array elements), not byte addresses. Recording is single-threaded.
class AccessTrace {
 public:
  void record(std::uint32_t object, std::uint64_t element,
              AccessKind kind = AccessKind::read) {
    events_.push_back({object, element, kind, next_stamp_++});
  }

  const std::vector<AccessEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<AccessEvent> events_;
  std::uint64_t next_stamp_ = 0;
};

/// Sub-trace containing only accesses to `object`, restamped 0..n-1. Gap
/// statistics on the sub-trace count steps within that object's stream,
/// which is how the per-object reuse claims are phrased.
AccessTrace filter_object(const AccessTrace& trace, std::uint32_t object);

/// Reuse-distance statistics. Two distance notions are reported:
///   - stack distance: distinct (object, element) pairs touched between
///     consecutive accesses to the same element; this is what drives LRU
///     hit/miss behaviour. First accesses land in the cold-miss bucket.
///   - step gap: raw difference of step stamps between consecutive accesses
///     to the same element. For a uniform loop touching one element per
///     iteration, the gap equals the loop-iteration reuse distance and the
///     stack distance is one less.
struct ReuseStats {
  std::map<std::uint64_t, std::uint64_t> stack_histogram;
  std::uint64_t cold_misses = 0;
  std::uint64_t total_accesses = 0;

  struct GapStats {
    std::uint64_t min = 0;
    std::uint64_t max = 0;
    double mean = 0.0;
    std::uint64_t count = 0;  // number of gaps (accesses - 1)
  };
  std::map<std::pair<std::uint32_t, std::uint64_t>, GapStats> per_element;
};

/// O(n log n) stack-distance computation (last-access map + Fenwick tree).
ReuseStats stack_distances(const AccessTrace& trace);

/// Fully associative LRU cache. A line covers `line_size` consecutive
/// element indices within one object namespace. Cycle costs default to the
/// 4-cycle hit / 40-cycle miss model.
struct CacheConfig {
  std::size_t capacity_lines = 1;
  std::size_t line_size = 1;
};

struct CacheResult {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  double hit_rate = 0.0;
  std::uint64_t cost_cycles = 0;
  std::map<std::uint32_t, std::uint64_t> misses_by_object;
};

CacheResult simulate_cache(const AccessTrace& trace, const CacheConfig& config,
                           std::uint64_t hit_cost = 4, std::uint64_t miss_cost = 40);

enum class LoopOrder { ij, ji };

/// 3-point column stencil A[i,j] = B[i-1,j] + B[i,j] + B[i+1,j] over an
/// N x M iteration space, element indices linearized column-major. `ij`
/// sweeps rows in the outer loop, `ji` sweeps columns (the interchanged
/// form, which matches the column-major layout).
AccessTrace gen_stencil_trace(std::size_t n, std::size_t m, LoopOrder order);

/// Training-point touches of the (mini-batch) gradient-descent template:
/// one read per point visit, batched per epoch. With shuffle off the trace
/// is the canonical fixed-order epoch structure; with shuffle on it matches
/// an instrumented training run using the same seed.
AccessTrace gen_sgd_trace(std::size_t n_points, std::size_t epochs, std::size_t batch_size,
                          bool shuffle, std::uint64_t seed = 0);

/// Data touches of the brute-force instance-learner scan with query
/// batching: per query block, each training point is read once and compared
/// against every query in the block.
AccessTrace gen_knn_trace(std::size_t n_train, std::size_t n_queries,
                          std::size_t query_batch);

/// Training-set touches of k-fold cross validation with contiguous folds.
/// Naive mode re-reads the k-1 training folds per round and then reads the
/// test fold; streamed mode reads every point exactly once per sweep.
AccessTrace gen_cv_trace(std::size_t n_points, std::size_t k, bool streamed);

/// Training-set touches of repeated bootstrap sampling (one read per drawn
/// index). Reuse here is statistical; measure it, don't assert it.
AccessTrace gen_bootstrap_trace(std::size_t n_points, std::size_t n_boot,
                                std::uint64_t seed);

/// Binary trace file: packed little-endian records
/// (object u32, element u64, kind u8, stamp u64), plus a JSON sidecar at
/// `path + ".json"` describing the object namespaces.
void write_trace(const AccessTrace& trace, const std::string& path,
                 const std::map<std::uint32_t, std::string>& namespaces = {});
AccessTrace read_trace(const std::string& path);

/// Histogram CSV: "distance,count" rows, cold misses as distance "cold".
void write_histogram_csv(const ReuseStats& stats, const std::string& path);

}  // namespace locml
