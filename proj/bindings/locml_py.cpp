#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "locml/bayes.hpp"
#include "locml/dataset.hpp"
#include "locml/ensemble.hpp"
#include "locml/instance.hpp"
#include "locml/learners.hpp"
#include "locml/linear.hpp"
#include "locml/nn.hpp"
#include "locml/optim.hpp"
#include "locml/trace.hpp"
#include "locml/version.hpp"

namespace py = pybind11;
using namespace locml;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("matrix needs at least one row");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (rows[r].size() != m.cols) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) rows[r][c] = m(r, c);
  return rows;
}

py::dict report_to_dict(const TrainReport& report) {
  py::dict d;
  d["epoch_loss"] = report.epoch_loss;
  d["epoch_point_loads"] = report.epoch_point_loads;
  d["epoch_grad_evals"] = report.epoch_grad_evals;
  d["point_loads"] = report.point_loads();
  d["grad_evals"] = report.grad_evals();
  return d;
}

py::dict instance_report_to_dict(const InstanceReport& report) {
  py::dict d;
  d["distance_computations"] = report.distance_computations;
  d["train_point_loads"] = report.train_point_loads;
  d["wall_ns"] = report.wall_ns;
  return d;
}

py::dict cv_report_to_dict(const CVReport& report) {
  py::dict d;
  d["fold_accuracy"] = report.fold_accuracy;
  d["mean_accuracy"] = report.mean_accuracy;
  d["train_point_loads"] = report.train_point_loads;
  return d;
}

LearnerFactory factory_from_name(const std::string& learner, const OptimizerConfig& config,
                                 std::size_t knn_k) {
  return make_learner_factory(learner, config, knn_k, 0);
}

}  // namespace

PYBIND11_MODULE(_locml, m) {
  m.doc() = "Locality-aware machine learning kernels and trace toolkit";
  m.attr("__version__") = version;

  py::enum_<LabelKind>(m, "LabelKind")
      .value("classification", LabelKind::classification)
      .value("regression", LabelKind::regression);

  py::class_<Dataset>(m, "Dataset")
      .def_static(
          "classification",
          [](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
            const Matrix values = matrix_from_rows(rows);
            return Dataset::classification(values.cols, values.data, labels);
          },
          py::arg("rows"), py::arg("labels"))
      .def_static(
          "regression",
          [](const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
            const Matrix values = matrix_from_rows(rows);
            return Dataset::regression(values.cols, values.data, y);
          },
          py::arg("rows"), py::arg("targets"))
      .def_readonly("n_points", &Dataset::n_points)
      .def_readonly("n_features", &Dataset::n_features)
      .def_readonly("values", &Dataset::values)
      .def_readonly("labels", &Dataset::labels)
      .def_property_readonly("n_classes", &Dataset::n_classes)
      .def("point",
           [](const Dataset& ds, std::size_t i) {
             const auto p = ds.point(i);
             return std::vector<double>(p.begin(), p.end());
           })
      .def("class_id", &Dataset::class_id)
      .def("__len__", [](const Dataset& ds) { return ds.n_points; });

  m.def("load_csv", &load_csv, py::arg("path"), py::arg("label_column"),
        py::arg("kind") = LabelKind::classification, py::arg("has_header") = false);
  m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"),
        py::arg("header") = false);
  m.def("generate_blobs", &generate_blobs, py::arg("n_per_class"), py::arg("n_classes"),
        py::arg("n_features"), py::arg("centers"), py::arg("sigma"), py::arg("seed"));
  m.def("subset", [](const Dataset& ds, const std::vector<std::size_t>& idx) {
    return subset(ds, idx);
  });
  m.def("partition_folds",
        [](std::size_t n, std::size_t k, std::uint64_t seed) {
          return partition_folds(n, k, seed).assignment;
        },
        py::arg("n_points"), py::arg("k"), py::arg("seed"));
  m.def("bootstrap_indices", &bootstrap_indices, py::arg("n_points"), py::arg("seed"));

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init([](std::size_t batch_size, std::size_t epochs, double step_size,
                       const std::string& rule, double weight_decay,
                       std::size_t window_batches, std::uint64_t seed, bool shuffle) {
             OptimizerConfig config;
             config.batch_size = batch_size;
             config.epochs = epochs;
             config.step_size = step_size;
             config.rule = update_kind_from_string(rule);
             config.weight_decay = weight_decay;
             config.window_batches = window_batches;
             config.seed = seed;
             config.shuffle = shuffle;
             config.validate();
             return config;
           }),
           py::arg("batch_size") = 16, py::arg("epochs") = 10, py::arg("step_size") = 0.1,
           py::arg("rule") = "vanilla", py::arg("weight_decay") = 0.0,
           py::arg("window_batches") = 0, py::arg("seed") = 0, py::arg("shuffle") = true)
      .def_readwrite("batch_size", &OptimizerConfig::batch_size)
      .def_readwrite("epochs", &OptimizerConfig::epochs)
      .def_readwrite("step_size", &OptimizerConfig::step_size)
      .def_readwrite("weight_decay", &OptimizerConfig::weight_decay)
      .def_readwrite("window_batches", &OptimizerConfig::window_batches)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("shuffle", &OptimizerConfig::shuffle);

  m.def(
      "train_linear",
      [](const Dataset& dataset, const std::string& loss, const OptimizerConfig& config) {
        const LinearLoss kind = linear_loss_from_string(loss);
        std::vector<double> weights(dataset.n_features, 0.0);
        const auto report = train_swsgd(weights, linear_grad_fn(kind), linear_loss_fn(kind),
                                        dataset, config);
        return py::make_tuple(weights, report_to_dict(report));
      },
      py::arg("dataset"), py::arg("loss"), py::arg("config"),
      "Trains a linear model from zero weights; window_batches > 0 engages "
      "the sliding window.");

  py::class_<LinearModel>(m, "LinearModel")
      .def(py::init([](const std::string& loss, const std::vector<double>& weights) {
             LinearModel model;
             model.loss = linear_loss_from_string(loss);
             model.weights = weights;
             return model;
           }),
           py::arg("loss"), py::arg("weights"))
      .def_readwrite("weights", &LinearModel::weights)
      .def("predict",
           [](const LinearModel& model, const std::vector<double>& x) {
             return predict(model, x);
           })
      .def("decision_value",
           [](const LinearModel& model, const std::vector<double>& x) {
             return decision_value(model, x);
           })
      .def("to_json", &LinearModel::to_json)
      .def_static("from_json", &LinearModel::from_json);

  m.def(
      "knn_classify",
      [](const Dataset& train, const Dataset& queries, std::size_t k,
         std::size_t query_batch) {
        const auto result = knn_classify(train, queries, k, query_batch);
        return py::make_tuple(result.labels, instance_report_to_dict(result.report));
      },
      py::arg("train"), py::arg("queries"), py::arg("k"), py::arg("query_batch") = 1);
  m.def(
      "prw_classify",
      [](const Dataset& train, const Dataset& queries, double bandwidth) {
        const auto result =
            prw_classify(train, queries, {KernelSpec::Kind::gaussian, bandwidth});
        return py::make_tuple(result.labels, instance_report_to_dict(result.report));
      },
      py::arg("train"), py::arg("queries"), py::arg("bandwidth"));
  m.def(
      "joint_classify",
      [](const Dataset& train, const Dataset& queries, std::size_t k, double bandwidth,
         std::size_t query_batch) {
        const auto result = joint_classify(train, queries, k,
                                           {KernelSpec::Kind::gaussian, bandwidth},
                                           query_batch);
        py::dict d;
        d["knn_labels"] = result.knn_labels;
        d["prw_labels"] = result.prw_labels;
        d["report"] = instance_report_to_dict(result.report);
        return d;
      },
      py::arg("train"), py::arg("queries"), py::arg("k"), py::arg("bandwidth"),
      py::arg("query_batch") = 1);

  py::class_<NBModel>(m, "NBModel")
      .def_readonly("priors", &NBModel::priors)
      .def_readonly("means", &NBModel::means)
      .def_readonly("variances", &NBModel::variances)
      .def("predict",
           [](const NBModel& model, const std::vector<double>& x) {
             const auto pred = predict_nb(model, x);
             return py::make_tuple(pred.label, pred.log_scores);
           })
      .def("to_json", &NBModel::to_json)
      .def_static("from_json", &NBModel::from_json);

  m.def(
      "fit_nb",
      [](const Dataset& train, double var_floor) {
        const auto fit = fit_nb(train, var_floor);
        return py::make_tuple(fit.model, fit.point_reads);
      },
      py::arg("train"), py::arg("var_floor") = 1e-9);

  py::class_<MLP>(m, "MLP")
      .def_static(
          "init",
          [](const std::vector<std::size_t>& layers, const std::string& head,
             std::uint64_t seed) { return MLP::init(layers, output_head_from_string(head), seed); },
          py::arg("layer_sizes"), py::arg("head") = "softmax-cross-entropy",
          py::arg("seed") = 0)
      .def_readonly("layer_sizes", &MLP::layer_sizes)
      .def_property_readonly("n_params", &MLP::n_params)
      .def("forward",
           [](const MLP& mlp, const std::vector<std::vector<double>>& batch) {
             return matrix_to_rows(forward(mlp, matrix_from_rows(batch)).output());
           },
           py::arg("batch"),
           "Batch columns are individual inputs (input_size x batch_size).")
      .def("grad_check",
           [](MLP& mlp, const std::vector<std::vector<double>>& batch,
              const std::vector<std::vector<double>>& targets, double eps) {
             const Matrix b = matrix_from_rows(batch);
             const Matrix t = matrix_from_rows(targets);
             return grad_check(mlp, b, t, eps);
           },
           py::arg("batch"), py::arg("targets"), py::arg("eps") = 1e-5)
      .def("to_json", &MLP::to_json)
      .def_static("from_json", &MLP::from_json);

  m.def(
      "gemm_blocked",
      [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
         std::size_t tile) {
        return matrix_to_rows(gemm_blocked(matrix_from_rows(a), matrix_from_rows(b), tile));
      },
      py::arg("a"), py::arg("b"), py::arg("tile") = 32);

  m.def(
      "cross_validate",
      [](const Dataset& dataset, std::size_t k, std::uint64_t seed,
         const std::string& learner, const OptimizerConfig& config, std::size_t knn_k) {
        return cv_report_to_dict(
            cross_validate(factory_from_name(learner, config, knn_k), dataset, k, seed));
      },
      py::arg("dataset"), py::arg("k"), py::arg("seed"), py::arg("learner") = "logistic",
      py::arg("config") = OptimizerConfig{}, py::arg("knn_k") = 1);
  m.def(
      "cross_validate_streamed",
      [](const Dataset& dataset, std::size_t k, std::size_t epochs, std::uint64_t seed,
         const std::string& learner, const OptimizerConfig& config) {
        return cv_report_to_dict(cross_validate_streamed(
            factory_from_name(learner, config, 1), dataset, k, epochs, seed));
      },
      py::arg("dataset"), py::arg("k"), py::arg("epochs"), py::arg("seed"),
      py::arg("learner") = "logistic", py::arg("config") = OptimizerConfig{});
  m.def(
      "bootstrap_variance",
      [](const Dataset& dataset, std::size_t n_boot, const Dataset& test_set,
         std::uint64_t seed, const std::string& learner, const OptimizerConfig& config,
         std::size_t knn_k) {
        return bootstrap_variance(factory_from_name(learner, config, knn_k), dataset,
                                  n_boot, test_set, seed);
      },
      py::arg("dataset"), py::arg("n_boot"), py::arg("test_set"), py::arg("seed"),
      py::arg("learner") = "knn", py::arg("config") = OptimizerConfig{},
      py::arg("knn_k") = 1);
  m.def(
      "boost3",
      [](const Dataset& dataset, const Dataset& test_set, std::size_t sample_size,
         std::uint64_t seed, const std::string& learner, const OptimizerConfig& config) {
        const auto result =
            boost3(factory_from_name(learner, config, 1), dataset, test_set, sample_size,
                   seed);
        py::dict d;
        d["degeneracy"] = to_string(result.ensemble.degeneracy);
        d["members"] = result.ensemble.members.size();
        d["cache_hits"] = result.cache_hits;
        d["cache_misses"] = result.cache_misses;
        d["m1_evaluations"] = result.m1_evaluations;
        d["m2_evaluations"] = result.m2_evaluations;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test_set.n_points; ++i)
          if (result.ensemble.predict(test_set.point(i)) == test_set.class_id(i)) ++correct;
        d["test_accuracy"] =
            static_cast<double>(correct) / static_cast<double>(test_set.n_points);
        return d;
      },
      py::arg("dataset"), py::arg("test_set"), py::arg("sample_size"), py::arg("seed"),
      py::arg("learner") = "logistic", py::arg("config") = OptimizerConfig{});

  py::class_<AccessTrace>(m, "AccessTrace")
      .def(py::init<>())
      .def("record",
           [](AccessTrace& trace, std::uint32_t object, std::uint64_t element, bool write) {
             trace.record(object, element, write ? AccessKind::write : AccessKind::read);
           },
           py::arg("object"), py::arg("element"), py::arg("write") = false)
      .def("__len__", &AccessTrace::size);

  m.def("filter_object", &filter_object, py::arg("trace"), py::arg("object"));
  m.def(
      "gen_stencil_trace",
      [](std::size_t n, std::size_t mm, const std::string& order) {
        return gen_stencil_trace(n, mm, order == "ji" ? LoopOrder::ji : LoopOrder::ij);
      },
      py::arg("n"), py::arg("m"), py::arg("order") = "ij");
  m.def("gen_sgd_trace", &gen_sgd_trace, py::arg("n_points"), py::arg("epochs"),
        py::arg("batch_size"), py::arg("shuffle") = false, py::arg("seed") = 0);
  m.def("gen_knn_trace", &gen_knn_trace, py::arg("n_train"), py::arg("n_queries"),
        py::arg("query_batch") = 1);
  m.def("gen_cv_trace", &gen_cv_trace, py::arg("n_points"), py::arg("k"),
        py::arg("streamed") = false);
  m.def("gen_bootstrap_trace", &gen_bootstrap_trace, py::arg("n_points"), py::arg("n_boot"),
        py::arg("seed") = 0);
  m.def(
      "stack_distances",
      [](const AccessTrace& trace) {
        const auto stats = stack_distances(trace);
        py::dict d;
        py::dict hist;
        for (const auto& [dist, count] : stats.stack_histogram)
          hist[py::int_(dist)] = count;
        d["histogram"] = hist;
        d["cold_misses"] = stats.cold_misses;
        d["total_accesses"] = stats.total_accesses;
        return d;
      },
      py::arg("trace"));
  m.def(
      "simulate_cache",
      [](const AccessTrace& trace, std::size_t capacity_lines, std::size_t line_size,
         std::uint64_t hit_cost, std::uint64_t miss_cost) {
        const auto result =
            simulate_cache(trace, {capacity_lines, line_size}, hit_cost, miss_cost);
        py::dict d;
        d["hits"] = result.hits;
        d["misses"] = result.misses;
        d["hit_rate"] = result.hit_rate;
        d["cost_cycles"] = result.cost_cycles;
        return d;
      },
      py::arg("trace"), py::arg("capacity_lines"), py::arg("line_size") = 1,
      py::arg("hit_cost") = 4, py::arg("miss_cost") = 40);
  m.def("write_trace", &write_trace, py::arg("trace"), py::arg("path"),
        py::arg("namespaces") = std::map<std::uint32_t, std::string>{});
  m.def("read_trace", &read_trace, py::arg("path"));
}
