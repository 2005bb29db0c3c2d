#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "locml/dataset.hpp"
#include "locml/trace.hpp"

namespace locml {

/// Gaussian naive Bayes model: class priors plus an independent Gaussian
/// per (class, feature). Variances are population variances floored at
/// `var_floor` so constant features cannot produce infinities.
struct NBModel {
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::vector<double> priors;
  std::vector<double> means;      // class-major: [c * n_features + f]
  std::vector<double> variances;  // same layout
  double var_floor = 1e-9;

  double mean(std::size_t c, std::size_t f) const { return means[c * n_features + f]; }
  double variance(std::size_t c, std::size_t f) const {
    return variances[c * n_features + f];
  }

  std::string to_json() const;
  static NBModel from_json(const std::string& text);
};

struct NBFitResult {
  NBModel model;
  std::uint64_t point_reads = 0;  // exactly n_points: the fit is one epoch
};

/// Fits priors, means and variances in a single pass over the training
/// points (Welford accumulation per class/feature). The returned counter
/// records one read per training point.
NBFitResult fit_nb(const Dataset& train, double var_floor = 1e-9,
                   AccessTrace* trace = nullptr);

struct NBPrediction {
  int label = 0;
  std::vector<double> log_scores;
};

/// Log-space posterior numerator per class:
/// log P(c) + sum_f log N(x_f; mean, var); the evidence term is a shared
/// constant and is dropped. Ties go to the smallest class id.
NBPrediction predict_nb(const NBModel& model, std::span<const double> x);

}  // namespace locml
