#include "locml/ensemble.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"
#include "locml/rng.hpp"

namespace locml {

void Learner::prepare_incremental(const Dataset&) {
  throw std::logic_error("learner does not support incremental updates");
}

void Learner::update(const Dataset&, std::span<const std::size_t>) {
  throw std::logic_error("learner does not support incremental updates");
}

double accuracy(const Learner& learner, const Dataset& test) {
  if (test.n_points == 0) throw std::invalid_argument("accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.n_points; ++i)
    if (learner.predict(test.point(i)) == test.class_id(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.n_points);
}

std::string CVReport::to_json() const {
  nlohmann::json j;
  j["fold_accuracy"] = fold_accuracy;
  j["mean_accuracy"] = mean_accuracy;
  j["train_point_loads"] = train_point_loads;
  return j.dump(2);
}

CVReport cross_validate(const LearnerFactory& factory, const Dataset& dataset,
                        std::size_t k, std::uint64_t seed) {
  const FoldPartition folds = partition_folds(dataset.n_points, k, seed);
  CVReport report;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train_idx = folds.complement_indices(f);
    const auto test_idx = folds.fold_indices(f);
    const Dataset train_set = subset(dataset, train_idx);
    const Dataset test_set = subset(dataset, test_idx);
    auto learner = factory(derive_seed(seed, f));
    learner->train(train_set);
    report.train_point_loads += learner->point_loads();
    report.fold_accuracy.push_back(accuracy(*learner, test_set));
  }
  double total = 0.0;
  for (double a : report.fold_accuracy) total += a;
  report.mean_accuracy = total / static_cast<double>(k);
  return report;
}

CVReport cross_validate_streamed(const LearnerFactory& factory, const Dataset& dataset,
                                 std::size_t k, std::size_t epochs, std::uint64_t seed) {
  const FoldPartition folds = partition_folds(dataset.n_points, k, seed);
  std::vector<std::unique_ptr<Learner>> learners;
  for (std::size_t i = 0; i < k; ++i) {
    auto learner = factory(derive_seed(seed, i));
    if (!learner->supports_incremental())
      throw std::invalid_argument("streamed cross validation needs incremental learners");
    learner->prepare_incremental(dataset);
    learners.push_back(std::move(learner));
  }

  std::vector<std::vector<std::size_t>> fold_points(k);
  for (std::size_t f = 0; f < k; ++f) fold_points[f] = folds.fold_indices(f);

  CVReport report;
  for (std::size_t sweep = 0; sweep < epochs; ++sweep) {
    for (std::size_t f = 0; f < k; ++f) {
      // One load of the fold feeds every instance that trains on it.
      report.train_point_loads += fold_points[f].size();
      for (std::size_t i = 0; i < k; ++i) {
        if (i == f) continue;
        learners[i]->update(dataset, fold_points[f]);
      }
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    const Dataset test_set = subset(dataset, fold_points[f]);
    report.fold_accuracy.push_back(accuracy(*learners[f], test_set));
  }
  double total = 0.0;
  for (double a : report.fold_accuracy) total += a;
  report.mean_accuracy = total / static_cast<double>(k);
  return report;
}

double bootstrap_variance_with_seeds(
    const LearnerFactory& factory, const Dataset& dataset,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> run_seeds,
    const Dataset& test_set) {
  if (run_seeds.size() < 2)
    throw std::invalid_argument("bootstrap_variance: need at least two runs");
  std::vector<double> metrics;
  metrics.reserve(run_seeds.size());
  for (const auto& [sample_seed, learner_seed] : run_seeds) {
    const auto idx = bootstrap_indices(dataset.n_points, sample_seed);
    const Dataset sample = subset(dataset, idx);
    auto learner = factory(learner_seed);
    learner->train(sample);
    metrics.push_back(accuracy(*learner, test_set));
  }
  double mean = 0.0;
  for (double m : metrics) mean += m;
  mean /= static_cast<double>(metrics.size());
  double var = 0.0;
  for (double m : metrics) var += (m - mean) * (m - mean);
  return var / static_cast<double>(metrics.size());
}

double bootstrap_variance(const LearnerFactory& factory, const Dataset& dataset,
                          std::size_t n_boot, const Dataset& test_set,
                          std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> run_seeds;
  run_seeds.reserve(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b)
    run_seeds.emplace_back(derive_seed(seed, 2 * b), derive_seed(seed, 2 * b + 1));
  return bootstrap_variance_with_seeds(factory, dataset, run_seeds, test_set);
}

int BaggedEnsemble::predict(std::span<const double> x) const {
  std::vector<std::size_t> votes(n_classes, 0);
  for (const auto& m : members) {
    const int label = m->predict(x);
    if (label >= 0 && static_cast<std::size_t>(label) < n_classes)
      ++votes[static_cast<std::size_t>(label)];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c)
    if (votes[c] > votes[best]) best = c;
  return static_cast<int>(best);
}

BaggedEnsemble bagging_with_seeds(
    const LearnerFactory& factory, const Dataset& dataset,
    std::span<const std::pair<std::uint64_t, std::uint64_t>> member_seeds) {
  if (member_seeds.empty()) throw std::invalid_argument("bagging: need at least one model");
  BaggedEnsemble ensemble;
  ensemble.n_classes = dataset.n_classes();
  for (const auto& [sample_seed, learner_seed] : member_seeds) {
    const auto idx = bootstrap_indices(dataset.n_points, sample_seed);
    const Dataset sample = subset(dataset, idx);
    auto learner = factory(learner_seed);
    learner->train(sample);
    ensemble.members.push_back(std::move(learner));
  }
  return ensemble;
}

BaggedEnsemble bagging(const LearnerFactory& factory, const Dataset& dataset,
                       std::size_t n_models, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> member_seeds;
  member_seeds.reserve(n_models);
  for (std::size_t m = 0; m < n_models; ++m)
    member_seeds.emplace_back(derive_seed(seed, 2 * m), derive_seed(seed, 2 * m + 1));
  return bagging_with_seeds(factory, dataset, member_seeds);
}

PredictionCache::PredictionCache(std::size_t n_models, std::size_t n_points)
    : n_points_(n_points),
      cache_(n_models * n_points),
      per_model_misses_(n_models, 0) {}

int PredictionCache::get(std::size_t model, std::size_t point,
                         const std::function<int()>& evaluate) {
  auto& slot = cache_[model * n_points_ + point];
  if (slot) {
    ++hits_;
    return *slot;
  }
  ++misses_;
  ++per_model_misses_[model];
  slot = evaluate();
  return *slot;
}

std::string to_string(BoostDegeneracy d) {
  switch (d) {
    case BoostDegeneracy::none: return "none";
    case BoostDegeneracy::m1_perfect: return "m1-perfect";
    case BoostDegeneracy::m1_all_wrong: return "m1-all-wrong";
    case BoostDegeneracy::empty_disagreement: return "empty-disagreement";
  }
  return "?";
}

int BoostEnsemble::predict(std::span<const double> x) const {
  std::vector<int> preds;
  preds.reserve(members.size());
  for (const auto& m : members) preds.push_back(m->predict(x));
  int best = preds.front();
  std::size_t best_count = 0;
  for (int candidate : preds) {
    const std::size_t count =
        static_cast<std::size_t>(std::count(preds.begin(), preds.end(), candidate));
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }
  return best;
}

namespace {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t size,
                                                    Rng& rng) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  rng.shuffle(all);
  all.resize(size);
  return all;
}

}  // namespace

Boost3Result boost3(const LearnerFactory& factory, const Dataset& dataset,
                    const Dataset& test_set, std::size_t sample_size, std::uint64_t seed) {
  if (dataset.n_classes() != 2)
    throw std::invalid_argument("boost3: binary classification required");
  if (sample_size < 1 || sample_size > dataset.n_points)
    throw std::invalid_argument("boost3: need 1 <= sample_size <= |T|");
  (void)test_set;  // reserved for metric reporting by callers

  Rng rng(seed);
  Boost3Result result;
  PredictionCache cache(2, dataset.n_points);

  const auto s1 = sample_without_replacement(dataset.n_points, sample_size, rng);
  auto m1 = factory(rng.next_u64());
  m1->train(subset(dataset, s1));

  // M1's verdict over T, computed once into the cache.
  std::vector<std::size_t> right, wrong;
  for (std::size_t i = 0; i < dataset.n_points; ++i) {
    const int pred = cache.get(0, i, [&] { return m1->predict(dataset.point(i)); });
    (pred == dataset.class_id(i) ? right : wrong).push_back(i);
  }

  const auto finish = [&](BoostEnsemble ensemble) {
    result.ensemble = std::move(ensemble);
    result.cache_hits = cache.hits();
    result.cache_misses = cache.misses();
    result.m1_evaluations = cache.evaluations(0);
    result.m2_evaluations = cache.evaluations(1);
    return std::move(result);
  };

  if (wrong.empty() || right.empty()) {
    BoostEnsemble ensemble;
    ensemble.degeneracy =
        wrong.empty() ? BoostDegeneracy::m1_perfect : BoostDegeneracy::m1_all_wrong;
    ensemble.members.push_back(std::move(m1));
    return finish(std::move(ensemble));
  }

  // Half right, half wrong, as large as the pools allow.
  const std::size_t s =
      std::min(sample_size, 2 * std::min(right.size(), wrong.size()));
  rng.shuffle(right);
  rng.shuffle(wrong);
  std::vector<std::size_t> s2(right.begin(), right.begin() + s / 2);
  s2.insert(s2.end(), wrong.begin(), wrong.begin() + (s - s / 2));

  auto m2 = factory(rng.next_u64());
  m2->train(subset(dataset, s2));

  std::vector<std::size_t> disagreement;
  for (std::size_t i = 0; i < dataset.n_points; ++i) {
    const int p1 = cache.get(0, i, [&] { return m1->predict(dataset.point(i)); });
    const int p2 = cache.get(1, i, [&] { return m2->predict(dataset.point(i)); });
    if (p1 != p2) disagreement.push_back(i);
  }

  if (disagreement.empty()) {
    BoostEnsemble ensemble;
    ensemble.degeneracy = BoostDegeneracy::empty_disagreement;
    ensemble.members.push_back(std::move(m1));
    ensemble.members.push_back(std::move(m2));
    return finish(std::move(ensemble));
  }

  auto m3 = factory(rng.next_u64());
  m3->train(subset(dataset, disagreement));

  BoostEnsemble ensemble;
  ensemble.members.push_back(std::move(m1));
  ensemble.members.push_back(std::move(m2));
  ensemble.members.push_back(std::move(m3));
  return finish(std::move(ensemble));
}

}  // namespace locml
