#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "locml/linear.hpp"
#include "locml/optim.hpp"
#include "locml/trace.hpp"

using namespace locml;

namespace {

// 1-D quadratic (t - w)^2 around the dataset's regression target.
const PointGradFn quad_grad = [](std::span<const double> w, std::span<const double>,
                                 double y, std::span<double> out) {
  out[0] = 2.0 * (w[0] - y);
};
const PointLossFn quad_loss = [](std::span<const double> w, std::span<const double>,
                                 double y) {
  const double d = y - w[0];
  return d * d;
};

Dataset quad_dataset(std::vector<double> targets) {
  const std::size_t n = targets.size();
  return Dataset::regression(1, std::vector<double>(n, 0.0), std::move(targets));
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("one vanilla step on a quadratic") {
  const Dataset data = quad_dataset({4.0});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 1;
  config.step_size = 0.25;
  std::vector<double> w = {0.0};
  train(w, quad_grad, quad_loss, data, config);
  CHECK(w[0] == 2.0);  // g = 2(0-4) = -8, w <- 0 - 0.25*(-8)
}

TEST_CASE("gradient descent converges to the quadratic minimum") {
  const Dataset data = quad_dataset({4.0});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 200;
  config.step_size = 0.25;
  std::vector<double> w = {0.0};
  const auto report = train(w, quad_grad, quad_loss, data, config);
  CHECK(std::abs(w[0] - 4.0) < 1e-6);
  CHECK(report.epoch_loss.size() == 200);
}

TEST_CASE("weight decay shrinks weights multiplicatively") {
  const PointGradFn zero_grad = [](std::span<const double>, std::span<const double>, double,
                                   std::span<double> out) { out[0] = 0.0; };
  const PointLossFn zero_loss = [](std::span<const double>, std::span<const double>,
                                   double) { return 0.0; };
  const Dataset data = quad_dataset({0.0});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 1;
  config.step_size = 0.1;
  config.weight_decay = 0.1;
  std::vector<double> w = {1.0};
  train(w, zero_grad, zero_loss, data, config);
  CHECK(w[0] == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("update rules") {
  OptimizerConfig config;

  SUBCASE("vanilla") {
    auto state = UpdateRuleState::init(UpdateKind::vanilla, 1);
    std::vector<double> w = {1.0};
    const std::vector<double> g = {2.0};
    apply_update(state, w, g, 0.1, 0.0, config);
    CHECK(w[0] == doctest::Approx(0.8).epsilon(1e-15));
  }

  SUBCASE("momentum unrolls to -0.29 after two unit-gradient steps") {
    config.rule = UpdateKind::momentum;
    config.momentum_mu = 0.9;
    auto state = UpdateRuleState::init(UpdateKind::momentum, 1);
    std::vector<double> w = {0.0};
    const std::vector<double> g = {1.0};
    apply_update(state, w, g, 0.1, 0.0, config);
    apply_update(state, w, g, 0.1, 0.0, config);
    CHECK(w[0] == doctest::Approx(-0.29).epsilon(1e-12));
  }

  SUBCASE("adam's first step has magnitude ~eta for any nonzero gradient") {
    config.rule = UpdateKind::adam;
    for (const double g0 : {0.5, -3.0, 1e-3, 250.0}) {
      auto state = UpdateRuleState::init(UpdateKind::adam, 1);
      std::vector<double> w = {0.0};
      const std::vector<double> g = {g0};
      apply_update(state, w, g, 0.01, 0.0, config);
      CHECK(std::abs(w[0]) == doctest::Approx(0.01).epsilon(1e-4));
      CHECK(std::signbit(w[0]) == !std::signbit(g0));
    }
  }

  SUBCASE("adagrad scales by accumulated squared gradients") {
    config.rule = UpdateKind::adagrad;
    config.adagrad_eps = 1e-8;
    auto state = UpdateRuleState::init(UpdateKind::adagrad, 1);
    std::vector<double> w = {0.0};
    const std::vector<double> g = {2.0};
    apply_update(state, w, g, 0.1, 0.0, config);
    CHECK(w[0] == doctest::Approx(-0.1 * 2.0 / std::sqrt(4.0 + 1e-8)).epsilon(1e-12));
    CHECK(state.grad_sq_sum[0] == 4.0);
  }

  SUBCASE("shape and NaN errors") {
    auto state = UpdateRuleState::init(UpdateKind::vanilla, 2);
    std::vector<double> w = {0.0, 0.0};
    const std::vector<double> short_g = {1.0};
    CHECK_THROWS_AS(apply_update(state, w, short_g, 0.1, 0.0, config),
                    std::invalid_argument);
    const std::vector<double> nan_g = {1.0, std::nan("")};
    CHECK_THROWS_AS(apply_update(state, w, nan_g, 0.1, 0.0, config), std::invalid_argument);
  }
}

TEST_CASE("config validation") {
  OptimizerConfig config;
  config.step_size = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.step_size = 0.1;
  config.momentum_mu = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.momentum_mu = 0.9;
  config.adam_beta2 = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("swsgd with an empty window reproduces plain training bitwise") {
  const Dataset data = generate_blobs(20, 2, 3, {{0, 0, 0}, {2, 2, 2}}, 1.0, 5);
  Rng rng(314);
  for (int trial = 0; trial < 5; ++trial) {
    OptimizerConfig config;
    config.batch_size = 1 + rng.below(data.n_points);
    config.epochs = 1 + rng.below(4);
    config.step_size = 0.01 + 0.3 * rng.next_double();
    config.rule = static_cast<UpdateKind>(rng.below(4));
    config.weight_decay = rng.below(2) == 0 ? 0.0 : 0.01;
    config.seed = rng.next_u64();
    config.window_batches = 0;

    std::vector<double> w_plain(data.n_features, 0.0);
    std::vector<double> w_window(data.n_features, 0.0);
    const auto grad = linear_grad_fn(LinearLoss::logistic);
    const auto loss = linear_loss_fn(LinearLoss::logistic);
    const auto r_plain = train(w_plain, grad, loss, data, config);
    const auto r_window = train_swsgd(w_window, grad, loss, data, config);
    CHECK(w_plain == w_window);
    CHECK(r_plain.epoch_loss == r_window.epoch_loss);
    CHECK(r_plain.epoch_point_loads == r_window.epoch_point_loads);
    CHECK(r_plain.epoch_grad_evals == r_window.epoch_grad_evals);
  }
}

TEST_CASE("sliding window fills then saturates") {
  // |T| = 6, n = 1, w = 2: effective batch sizes 1,2,3,3,3,3.
  const Dataset data = quad_dataset({1, 2, 3, 4, 5, 6});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 1;
  config.step_size = 0.01;
  config.shuffle = false;
  config.window_batches = 2;
  std::vector<double> w = {0.0};
  const auto report = train_swsgd(w, quad_grad, quad_loss, data, config);
  CHECK(report.grad_evals() == 1 + 2 + 3 + 3 + 3 + 3);
  CHECK(report.point_loads() == 6);  // window re-reads are not charged

  SUBCASE("second epoch keeps a full window") {
    OptimizerConfig two = config;
    two.epochs = 2;
    std::vector<double> w2 = {0.0};
    const auto r2 = train_swsgd(w2, quad_grad, quad_loss, data, two);
    CHECK(r2.grad_evals() == 15 + 6 * 3);
    CHECK(r2.point_loads() == 12);
  }
}

TEST_CASE("window gradients average over new and cached points") {
  // Two points with targets 0 and 12, fixed order, w = 1, eta = 0.5.
  // Step 1: G = 2(w-0) = 0 -> w stays 0... start from w0 = 3:
  //   step 1 (new {t=0}):        G = 2(3-0) = 6,  w <- 3 - 3 = 0
  //   step 2 (new {t=12} + {t=0}): G = (2(0-12) + 2(0-0))/2 = -12, w <- 6
  const Dataset data = quad_dataset({0.0, 12.0});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 1;
  config.step_size = 0.5;
  config.shuffle = false;
  config.window_batches = 1;
  std::vector<double> w = {3.0};
  train_swsgd(w, quad_grad, quad_loss, data, config);
  CHECK(w[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("gd loss is non-increasing on a convex quadratic") {
  const Dataset data = quad_dataset({1.0, 2.0, 3.0, 4.0, 5.0});
  OptimizerConfig config;
  config.batch_size = data.n_points;  // full-batch GD
  config.epochs = 50;
  config.step_size = 0.05;
  std::vector<double> w = {-2.0};
  const auto report = train(w, quad_grad, quad_loss, data, config);
  for (std::size_t e = 1; e < report.epoch_loss.size(); ++e)
    CHECK(report.epoch_loss[e] <= report.epoch_loss[e - 1] + 1e-12);
}

TEST_CASE("fixed-order SGD touches each point every |T| steps") {
  const Dataset data = quad_dataset({1, 2, 3, 4, 5, 6, 7});
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 3;
  config.step_size = 0.001;
  config.shuffle = false;
  std::vector<double> w = {0.0};
  AccessTrace trace;
  train(w, quad_grad, quad_loss, data, config, &trace);
  const auto stats = stack_distances(trace);
  REQUIRE(stats.stack_histogram.size() == 1);
  CHECK(stats.stack_histogram.begin()->first == data.n_points - 1);
  for (const auto& [key, gap] : stats.per_element) {
    CHECK(gap.min == data.n_points);
    CHECK(gap.max == data.n_points);
  }
}

TEST_CASE("divergence aborts with the epoch index") {
  const Dataset data = quad_dataset({4.0});
  const PointGradFn explode = [](std::span<const double> w, std::span<const double>, double,
                                 std::span<double> out) {
    out[0] = w[0] == 0.0 ? 1e308 : w[0] * 1e308;  // overflows on the second step
  };
  OptimizerConfig config;
  config.batch_size = 1;
  config.epochs = 5;
  config.step_size = 1.0;
  std::vector<double> w = {0.0};
  try {
    train(w, explode, quad_loss, data, config);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch == 1);
  }
}

TEST_CASE("report serialization") {
  const Dataset data = quad_dataset({4.0, 2.0});
  OptimizerConfig config;
  config.batch_size = 2;
  config.epochs = 3;
  config.step_size = 0.1;
  std::vector<double> w = {0.0};
  const auto report = train(w, quad_grad, quad_loss, data, config);
  const auto json = report.to_json();
  CHECK(json.find("\"epoch_loss\"") != std::string::npos);
  CHECK(report.epoch_point_loads == std::vector<std::uint64_t>{2, 4, 6});

  const auto path =
      (std::filesystem::temp_directory_path() / "locml_report.csv").string();
  report.to_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,mean_loss,point_loads,grad_evals");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line) && !line.empty();) ++rows;
  CHECK(rows == 3);
}

}  // TEST_SUITE
