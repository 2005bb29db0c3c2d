#include "locml/trace.hpp"

#include <algorithm>
#include <fstream>
#include <list>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "locml/dataset.hpp"

namespace locml {

AccessTrace filter_object(const AccessTrace& trace, std::uint32_t object) {
  AccessTrace out;
  for (const auto& e : trace.events())
    if (e.object == object) out.record(e.object, e.element, e.kind);
  return out;
}

namespace {

// Fenwick tree over timestamps; a set bit marks "this position is the most
// recent access of some element".
class BitTree {
 public:
  explicit BitTree(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t i, int delta) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  // sum of [0, i]
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (++i; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

struct PairHash {
  std::size_t operator()(const std::pair<std::uint32_t, std::uint64_t>& p) const {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(p.first) << 48) ^ p.second ^
                                      (p.second >> 16));
  }
};

}  // namespace

ReuseStats stack_distances(const AccessTrace& trace) {
  if (trace.empty()) throw std::invalid_argument("stack_distances: empty trace");

  ReuseStats stats;
  stats.total_accesses = trace.size();
  BitTree live(trace.size());
  std::unordered_map<std::pair<std::uint32_t, std::uint64_t>, std::size_t, PairHash> last_pos;
  last_pos.reserve(trace.size());

  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& e = trace.events()[t];
    const std::pair<std::uint32_t, std::uint64_t> key{e.object, e.element};
    const auto it = last_pos.find(key);
    if (it == last_pos.end()) {
      ++stats.cold_misses;
      last_pos.emplace(key, t);
    } else {
      const std::size_t prev = it->second;
      // Distinct elements touched strictly between prev and t: each one is
      // represented by exactly one live marker in (prev, t).
      const std::int64_t distance = live.prefix(t - 1) - live.prefix(prev);
      stats.stack_histogram[static_cast<std::uint64_t>(distance)]++;
      auto& gap = stats.per_element[key];
      const std::uint64_t step_gap = trace.events()[t].stamp - trace.events()[prev].stamp;
      if (gap.count == 0) {
        gap.min = gap.max = step_gap;
      } else {
        gap.min = std::min(gap.min, step_gap);
        gap.max = std::max(gap.max, step_gap);
      }
      gap.mean += static_cast<double>(step_gap);
      ++gap.count;
      live.add(prev, -1);
      it->second = t;
    }
    live.add(t, +1);
  }
  for (auto& [key, gap] : stats.per_element)
    if (gap.count > 0) gap.mean /= static_cast<double>(gap.count);
  return stats;
}

CacheResult simulate_cache(const AccessTrace& trace, const CacheConfig& config,
                           std::uint64_t hit_cost, std::uint64_t miss_cost) {
  if (config.capacity_lines == 0) throw std::invalid_argument("simulate_cache: zero capacity");
  if (config.line_size == 0) throw std::invalid_argument("simulate_cache: zero line size");

  using Line = std::pair<std::uint32_t, std::uint64_t>;
  std::list<Line> lru;  // front = most recent
  std::unordered_map<Line, std::list<Line>::iterator, PairHash> where;
  where.reserve(config.capacity_lines * 2);

  CacheResult result;
  for (const auto& e : trace.events()) {
    const Line line{e.object, e.element / config.line_size};
    const auto it = where.find(line);
    if (it != where.end()) {
      ++result.hits;
      lru.splice(lru.begin(), lru, it->second);
    } else {
      ++result.misses;
      ++result.misses_by_object[e.object];
      lru.push_front(line);
      where[line] = lru.begin();
      if (lru.size() > config.capacity_lines) {
        where.erase(lru.back());
        lru.pop_back();
      }
    }
  }
  const std::uint64_t total = result.hits + result.misses;
  result.hit_rate = total == 0 ? 0.0 : static_cast<double>(result.hits) / static_cast<double>(total);
  result.cost_cycles = hit_cost * result.hits + miss_cost * result.misses;
  return result;
}

AccessTrace gen_stencil_trace(std::size_t n, std::size_t m, LoopOrder order) {
  if (n < 2 || m < 2) throw std::invalid_argument("gen_stencil_trace: need N, M >= 2");

  AccessTrace trace;
  // B has n+2 rows (halo above and below); both arrays column-major.
  const std::size_t b_rows = n + 2;
  const auto visit = [&](std::size_t i, std::size_t j) {
    trace.record(object_id::stencil_b, (i + 0) + j * b_rows, AccessKind::read);
    trace.record(object_id::stencil_b, (i + 1) + j * b_rows, AccessKind::read);
    trace.record(object_id::stencil_b, (i + 2) + j * b_rows, AccessKind::read);
    trace.record(object_id::stencil_a, i + j * n, AccessKind::write);
  };
  if (order == LoopOrder::ij) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) visit(i, j);
  } else {
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) visit(i, j);
  }
  return trace;
}

AccessTrace gen_sgd_trace(std::size_t n_points, std::size_t epochs, std::size_t batch_size,
                          bool shuffle, std::uint64_t seed) {
  if (n_points < 1) throw std::invalid_argument("gen_sgd_trace: need at least one point");
  AccessTrace trace;
  BatchStream stream(n_points, batch_size, epochs, seed, shuffle);
  while (auto batch = stream.next())
    for (std::size_t idx : batch->indices) trace.record(object_id::train_set, idx);
  return trace;
}

AccessTrace gen_knn_trace(std::size_t n_train, std::size_t n_queries,
                          std::size_t query_batch) {
  if (n_train < 1 || query_batch < 1)
    throw std::invalid_argument("gen_knn_trace: sizes must be >= 1");
  AccessTrace trace;
  for (std::size_t q0 = 0; q0 < n_queries; q0 += query_batch) {
    const std::size_t q1 = std::min(q0 + query_batch, n_queries);
    for (std::size_t j = 0; j < n_train; ++j) {
      trace.record(object_id::train_set, j);
      for (std::size_t i = q0; i < q1; ++i) trace.record(object_id::query_set, i);
    }
  }
  return trace;
}

AccessTrace gen_cv_trace(std::size_t n_points, std::size_t k, bool streamed) {
  if (k < 2 || k > n_points) throw std::invalid_argument("gen_cv_trace: need 2 <= k <= n_points");
  // Contiguous folds, sizes differing by at most one, larger folds first.
  std::vector<std::pair<std::size_t, std::size_t>> folds;  // [begin, end)
  const std::size_t base = n_points / k;
  const std::size_t rem = n_points % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < rem ? 1 : 0);
    folds.emplace_back(pos, pos + size);
    pos += size;
  }

  AccessTrace trace;
  if (streamed) {
    for (const auto& [begin, end] : folds)
      for (std::size_t p = begin; p < end; ++p) trace.record(object_id::train_set, p);
  } else {
    for (std::size_t round = 0; round < k; ++round) {
      for (std::size_t f = 0; f < k; ++f) {
        if (f == round) continue;
        for (std::size_t p = folds[f].first; p < folds[f].second; ++p)
          trace.record(object_id::train_set, p);
      }
      for (std::size_t p = folds[round].first; p < folds[round].second; ++p)
        trace.record(object_id::train_set, p);
    }
  }
  return trace;
}

AccessTrace gen_bootstrap_trace(std::size_t n_points, std::size_t n_boot,
                                std::uint64_t seed) {
  if (n_points < 1 || n_boot < 1)
    throw std::invalid_argument("gen_bootstrap_trace: sizes must be >= 1");
  AccessTrace trace;
  for (std::size_t b = 0; b < n_boot; ++b)
    for (std::size_t idx : bootstrap_indices(n_points, derive_seed(seed, b)))
      trace.record(object_id::train_set, idx);
  return trace;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_uint(const char* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

constexpr std::size_t record_bytes = 4 + 8 + 1 + 8;

}  // namespace

void write_trace(const AccessTrace& trace, const std::string& path,
                 const std::map<std::uint32_t, std::string>& namespaces) {
  std::string blob;
  blob.reserve(trace.size() * record_bytes);
  for (const auto& e : trace.events()) {
    put_u32(blob, e.object);
    put_u64(blob, e.element);
    blob.push_back(static_cast<char>(e.kind));
    put_u64(blob, e.stamp);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("trace write failure: " + path);

  nlohmann::json side;
  side["schema"] = "locml-trace-v1";
  side["record"] = "object:u32,element:u64,kind:u8,stamp:u64 little-endian";
  side["events"] = trace.size();
  nlohmann::json names = nlohmann::json::object();
  for (const auto& [id, name] : namespaces) names[std::to_string(id)] = name;
  side["namespaces"] = names;
  std::ofstream sidecar(path + ".json");
  if (!sidecar) throw std::runtime_error("cannot open trace sidecar for writing");
  sidecar << side.dump(2) << "\n";
}

AccessTrace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() % record_bytes != 0)
    throw std::runtime_error("trace file truncated: " + path);

  AccessTrace trace;
  for (std::size_t off = 0; off < blob.size(); off += record_bytes) {
    const char* p = blob.data() + off;
    const auto object = static_cast<std::uint32_t>(get_uint(p, 4));
    const std::uint64_t element = get_uint(p + 4, 8);
    const auto kind = static_cast<AccessKind>(get_uint(p + 12, 1));
    trace.record(object, element, kind);
  }
  return trace;
}

void write_histogram_csv(const ReuseStats& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open histogram file for writing: " + path);
  out << "distance,count\n";
  out << "cold," << stats.cold_misses << "\n";
  for (const auto& [distance, count] : stats.stack_histogram)
    out << distance << "," << count << "\n";
}

}  // namespace locml
