#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "distilkit/adaptation.hpp"
#include "distilkit/checkpoint.hpp"
#include "distilkit/config.hpp"
#include "distilkit/errors.hpp"
#include "distilkit/gradcheck.hpp"
#include "distilkit/harness.hpp"
#include "distilkit/losses.hpp"
#include "distilkit/report.hpp"

namespace py = pybind11;
using namespace distilkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

py::tuple loss_pair(const LossResult& r) { return py::make_tuple(r.loss, to_array(r.grad)); }

LabeledBatch batch_of(const Array& teacher, const std::vector<std::size_t>& labels, const Array& logits) {
    return LabeledBatch{to_matrix(teacher), labels, to_matrix(logits)};
}

py::list epochs_to_list(const AdaptationReport& report) {
    py::list out;
    for (const EpochStats& e : report.epochs) {
        py::dict d;
        d["epoch"] = e.epoch;
        d["phase"] = e.phase == Phase::Warmup ? "warmup" : "main";
        d["loss"] = e.loss;
        d["teacher_accuracy"] = e.teacher_accuracy;
        d["soft_fraction"] = e.soft_fraction;
        d["samples"] = e.samples;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_distilkit, m) {
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    m.def("softmax", [](const Array& logits, double t) { return to_array(softmax(to_matrix(logits), t)); },
          py::arg("logits"), py::arg("temperature") = 1.0);
    m.def("kl_divergence", [](std::vector<double> p, std::vector<double> q) {
        return kl_divergence(ProbVector(std::move(p)), ProbVector(std::move(q)));
    });
    m.def("entropy", [](std::vector<double> p) { return entropy(ProbVector(std::move(p))); });

    m.def("hard_ce_loss", [](const std::vector<std::size_t>& labels, const Array& logits) {
        return loss_pair(hard_ce_loss(labels, to_matrix(logits)));
    });
    m.def(
        "soft_ts_loss",
        [](const Array& teacher, const Array& logits, double t) {
            const Matrix p = to_matrix(teacher);
            return loss_pair(soft_ts_loss(LabeledBatch{p, std::vector<std::size_t>(p.rows(), 0), to_matrix(logits)}, t));
        },
        py::arg("teacher_posteriors"), py::arg("student_logits"), py::arg("temperature") = 1.0);
    m.def(
        "interpolated_loss",
        [](const Array& teacher, const std::vector<std::size_t>& labels, const Array& logits, double lambda,
           double t) { return loss_pair(interpolated_loss(batch_of(teacher, labels, logits), InterpolationWeight(lambda), t)); },
        py::arg("teacher_posteriors"), py::arg("labels"), py::arg("student_logits"), py::arg("lam"),
        py::arg("temperature") = 1.0);
    m.def(
        "conditional_loss",
        [](const Array& teacher, const std::vector<std::size_t>& labels, const Array& logits, double t) {
            const auto targets = conditional_targets(to_matrix(teacher), labels);
            return loss_pair(conditional_loss(targets, to_matrix(logits), t));
        },
        py::arg("teacher_posteriors"), py::arg("labels"), py::arg("student_logits"), py::arg("temperature") = 1.0);
    m.def("conditional_mask", [](const Array& teacher, const std::vector<std::size_t>& labels) {
        std::vector<bool> soft;
        for (const auto& target : conditional_targets(to_matrix(teacher), labels)) soft.push_back(target.is_soft());
        return soft;
    });

    py::class_<Network>(m, "Network")
        .def_static("from_json", &network_from_json)
        .def_static("load", &load_checkpoint)
        .def_static("glorot",
                    [](const std::vector<std::size_t>& dims, std::uint64_t seed) {
                        Rng rng(seed);
                        return Network::glorot(dims, rng);
                    },
                    py::arg("dims"), py::arg("seed"))
        .def("to_json", &network_to_json)
        .def("save", [](const Network& net, const std::filesystem::path& path) { save_checkpoint(net, path); })
        .def("logits", [](const Network& net, const Array& x) { return to_array(logits_of(net, to_matrix(x))); })
        .def("predict", [](const Network& net, const Array& x) { return argmax_rows(logits_of(net, to_matrix(x))); })
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("num_parameters", &Network::num_parameters)
        .def("__eq__", [](const Network& a, const Network& b) { return a == b; });

    m.def(
        "adapt",
        [](const Network& teacher, const Array& source, const Array& target, const std::vector<std::size_t>& labels,
           const std::string& mode, double lam, std::size_t warmup, std::size_t epochs, double lr,
           std::size_t batch_size, std::uint64_t seed) {
            AdaptationSchedule s;
            s.mode = adapt_mode_from_string(mode);
            s.lambda = lam;
            s.warmup_epochs = warmup;
            s.conditional_epochs = epochs;
            s.lr = lr;
            s.batch_size = batch_size;
            s.seed = seed;
            const ParallelDataset data{to_matrix(source), to_matrix(target), labels, teacher.output_dim()};
            const AdaptationReport report = domain_adapt(teacher, data, s);
            return py::make_tuple(report.student, epochs_to_list(report));
        },
        py::arg("teacher"), py::arg("source"), py::arg("target"), py::arg("labels"), py::arg("mode") = "conditional",
        py::arg("lam") = 0.5, py::arg("warmup_epochs") = 0, py::arg("epochs") = 10, py::arg("lr") = 0.02,
        py::arg("batch_size") = 32, py::arg("seed") = 1);

    m.def(
        "gradcheck",
        [](std::size_t nets, double step, std::uint64_t seed) {
            GradcheckOptions options;
            options.nets = nets;
            options.step = step;
            options.seed = seed;
            py::dict out;
            for (const LossCheck& c : run_gradcheck(options).losses) out[py::str(c.loss)] = c.worst_error;
            return out;
        },
        py::arg("nets") = kGradcheckNets, py::arg("step") = kGradcheckStep, py::arg("seed") = kGradcheckSeed);

    m.def(
        "run_experiment_json",
        [](const std::string& config_json, std::size_t threads) {
            const ExperimentConfig config = parse_config(config_json);
            py::gil_scoped_release release;
            const ExperimentResult result = run_experiment(config, TeacherSource::AlwaysTrain, false, threads);
            std::vector<ResultRow> rows = result.teacher_rows;
            rows.insert(rows.end(), result.rows.begin(), result.rows.end());
            return rows_to_json(rows);
        },
        py::arg("config_json") = "", py::arg("threads") = 1);
}
