#include "locml/bayes.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace locml {

std::string NBModel::to_json() const {
  nlohmann::json j;
  j["n_classes"] = n_classes;
  j["n_features"] = n_features;
  j["priors"] = priors;
  j["means"] = means;
  j["variances"] = variances;
  j["var_floor"] = var_floor;
  return j.dump(2);
}

NBModel NBModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NBModel m;
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.priors = j.at("priors").get<std::vector<double>>();
  m.means = j.at("means").get<std::vector<double>>();
  m.variances = j.at("variances").get<std::vector<double>>();
  m.var_floor = j.at("var_floor").get<double>();
  return m;
}

NBFitResult fit_nb(const Dataset& train, double var_floor, AccessTrace* trace) {
  if (train.label_kind != LabelKind::classification)
    throw std::invalid_argument("fit_nb: classification dataset required");
  if (train.n_points == 0) throw std::invalid_argument("fit_nb: empty dataset");
  if (var_floor <= 0.0) throw std::invalid_argument("fit_nb: variance floor must be positive");

  const std::size_t n_classes = train.n_classes();
  const std::size_t n_features = train.n_features;
  std::vector<std::uint64_t> counts(n_classes, 0);
  std::vector<double> means(n_classes * n_features, 0.0);
  std::vector<double> m2(n_classes * n_features, 0.0);

  NBFitResult result;
  for (std::size_t i = 0; i < train.n_points; ++i) {
    const auto x = train.point(i);
    const auto c = static_cast<std::size_t>(train.class_id(i));
    ++result.point_reads;
    if (trace) trace->record(object_id::train_set, i);
    ++counts[c];
    const double n = static_cast<double>(counts[c]);
    for (std::size_t f = 0; f < n_features; ++f) {
      double& mean = means[c * n_features + f];
      const double delta = x[f] - mean;
      mean += delta / n;
      m2[c * n_features + f] += delta * (x[f] - mean);
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c)
    if (counts[c] == 0)
      throw std::invalid_argument("fit_nb: class " + std::to_string(c) +
                                  " has no training points");

  NBModel model;
  model.n_classes = n_classes;
  model.n_features = n_features;
  model.var_floor = var_floor;
  model.priors.resize(n_classes);
  model.means = std::move(means);
  model.variances.resize(n_classes * n_features);
  for (std::size_t c = 0; c < n_classes; ++c) {
    model.priors[c] = static_cast<double>(counts[c]) / static_cast<double>(train.n_points);
    for (std::size_t f = 0; f < n_features; ++f) {
      const double var = m2[c * n_features + f] / static_cast<double>(counts[c]);
      model.variances[c * n_features + f] = std::max(var, var_floor);
    }
  }
  result.model = std::move(model);
  return result;
}

NBPrediction predict_nb(const NBModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw std::invalid_argument("predict_nb: feature count mismatch");

  constexpr double log_two_pi = 1.8378770664093454835606594728112;
  NBPrediction pred;
  pred.log_scores.resize(model.n_classes);
  for (std::size_t c = 0; c < model.n_classes; ++c) {
    double score = std::log(model.priors[c]);
    for (std::size_t f = 0; f < model.n_features; ++f) {
      const double var = model.variance(c, f);
      const double d = x[f] - model.mean(c, f);
      score += -0.5 * (log_two_pi + std::log(var)) - d * d / (2.0 * var);
    }
    pred.log_scores[c] = score;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < model.n_classes; ++c)
    if (pred.log_scores[c] > pred.log_scores[best]) best = c;
  pred.label = static_cast<int>(best);
  return pred;
}

}  // namespace locml
