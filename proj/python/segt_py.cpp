#include "segt/checkpoint.hpp"
#include "segt/config.hpp"
#include "segt/data.hpp"
#include "segt/error.hpp"
#include "segt/image_io.hpp"
#include "segt/losses.hpp"
#include "segt/metrics.hpp"
#include "segt/model.hpp"
#include "segt/synthetic.hpp"
#include "segt/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

namespace py = pybind11;

namespace {

template <typename T>
using carray = py::array_t<T, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const carray<float>& a) {
    std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
    return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

torch::Tensor to_tensor64(const carray<double>& a) {
    std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
    return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

py::array to_numpy(const torch::Tensor& t_in) {
    auto t = t_in.detach().contiguous();
    std::vector<py::ssize_t> shape(t.sizes().begin(), t.sizes().end());
    switch (t.scalar_type()) {
        case torch::kFloat32: {
            py::array_t<float> out(shape);
            std::memcpy(out.mutable_data(), t.data_ptr<float>(), t.nbytes());
            return out;
        }
        case torch::kFloat64: {
            py::array_t<double> out(shape);
            std::memcpy(out.mutable_data(), t.data_ptr<double>(), t.nbytes());
            return out;
        }
        case torch::kUInt8: {
            py::array_t<uint8_t> out(shape);
            std::memcpy(out.mutable_data(), t.data_ptr<uint8_t>(), t.nbytes());
            return out;
        }
        default:
            return to_numpy(t.to(torch::kFloat32));
    }
}

// H×W maps are lifted to 1×1×H×W for the loss functions.
torch::Tensor as_map(const carray<double>& a) {
    auto t = to_tensor64(a);
    if (t.dim() != 2) {
        throw segt::InputError("expected an H×W array");
    }
    return t.unsqueeze(0).unsqueeze(0);
}

segt::TrainConfig parse_config(const std::string& yaml, const std::map<std::string, std::string>& overrides) {
    auto config = yaml.empty() ? segt::TrainConfig{} : segt::config_from_yaml(yaml);
    for (const auto& [k, v] : overrides) {
        segt::apply_override(config, k, v);
    }
    segt::validate(config);
    return config;
}

struct PyModel {
    segt::SegTNet net{nullptr};

    py::dict forward(const carray<float>& images) {
        auto x = to_tensor(images);
        if (x.dim() != 4 || x.size(1) != 3) {
            throw segt::InputError("forward: expected a B×3×H×W array");
        }
        net->eval();
        torch::NoGradGuard guard;
        auto out = net->forward(x.to(net->parameters().front().scalar_type()));
        py::dict d;
        py::list maps;
        for (const auto& m : out.supervised()) {
            maps.append(to_numpy(m));
        }
        py::list pyramid;
        for (int i = 0; i < 4; ++i) {
            pyramid.append(to_numpy(out.pyramid.level(i + 1)));
        }
        d["supervised"] = maps;
        d["pyramid"] = pyramid;
        d["final_logits"] = to_numpy(out.final_logits);
        d["edge_prob"] = to_numpy(out.edge.edge_prob);
        return d;
    }

    py::dict predict(const carray<float>& image, double threshold) {
        auto p = segt::predict(*net, to_tensor(image), threshold);
        py::dict d;
        d["probability"] = to_numpy(p.probability);
        d["mask"] = to_numpy(p.mask);
        d["overlay"] = to_numpy(p.overlay);
        return d;
    }
};

py::dict report_dict(const segt::MetricsReport& r) {
    py::dict d;
    d["m_dice"] = r.m_dice;
    d["m_iou"] = r.m_iou;
    d["mae"] = r.mae_mean;
    py::list rows;
    for (const auto& m : r.per_image) {
        rows.append(py::make_tuple(m.id, m.dice, m.iou, m.mae));
    }
    d["per_image"] = rows;
    return d;
}

}  // namespace

PYBIND11_MODULE(_segt, m) {
    m.doc() = "SegT polyp segmentation core";
    torch::set_num_threads(1);

    py::register_exception<segt::InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<segt::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("edge_ground_truth", [](const carray<float>& mask) {
        return to_numpy(segt::make_edge_ground_truth(to_tensor(mask)));
    }, py::arg("mask"), "Inner one-pixel boundary of a binary H×W mask.");
    m.def("scaled_size", &segt::scaled_size, py::arg("base"), py::arg("scale"));
    m.def("pixel_weight_map", [](const carray<double>& gt) {
        return to_numpy(segt::pixel_weight_map(as_map(gt))[0][0]);
    }, py::arg("gt"));
    m.def("weighted_bce", [](const carray<double>& logits, const carray<double>& gt, const carray<double>& w) {
        return segt::weighted_bce(as_map(logits), as_map(gt), as_map(w)).item<double>();
    }, py::arg("logits"), py::arg("gt"), py::arg("weight"));
    m.def("weighted_iou", [](const carray<double>& logits, const carray<double>& gt, const carray<double>& w) {
        return segt::weighted_iou(as_map(logits), as_map(gt), as_map(w)).item<double>();
    }, py::arg("logits"), py::arg("gt"), py::arg("weight"));
    m.def("dice", [](const carray<float>& p, const carray<float>& g) { return segt::dice(to_tensor(p), to_tensor(g)); },
          py::arg("pred"), py::arg("gt"));
    m.def("iou", [](const carray<float>& p, const carray<float>& g) { return segt::iou(to_tensor(p), to_tensor(g)); },
          py::arg("pred"), py::arg("gt"));
    m.def("mae", [](const carray<float>& p, const carray<float>& g) { return segt::mae(to_tensor(p), to_tensor(g)); },
          py::arg("prob"), py::arg("gt"));

    m.def("default_config", [] { return segt::to_yaml(segt::TrainConfig{}); });
    m.def("resolve_config", [](const std::string& yaml, const std::map<std::string, std::string>& overrides) {
        return segt::to_yaml(parse_config(yaml, overrides));
    }, py::arg("yaml") = "", py::arg("overrides") = std::map<std::string, std::string>{});

    m.def("write_synthetic_dataset", &segt::write_synthetic_dataset, py::arg("root"), py::arg("count"),
          py::arg("size"), py::arg("seed") = 0);

    py::class_<PyModel>(m, "Model")
        .def(py::init([](const std::string& yaml, const std::map<std::string, std::string>& overrides) {
                 const auto config = parse_config(yaml, overrides);
                 return PyModel{segt::build_model(config.model, config.seed)};
             }),
             py::arg("yaml") = "", py::arg("overrides") = std::map<std::string, std::string>{})
        .def_static("load", [](const std::filesystem::path& path) {
            return PyModel{segt::model_from_checkpoint(segt::load_checkpoint(path))};
        }, py::arg("checkpoint"))
        .def("forward", &PyModel::forward, py::arg("images"))
        .def("predict", &PyModel::predict, py::arg("image"), py::arg("threshold") = 0.5)
        .def("evaluate", [](PyModel& self, const std::filesystem::path& root, int64_t size, double threshold) {
            const auto split = segt::load_dataset(root, {size, size});
            return report_dict(segt::evaluate(*self.net, split, threshold));
        }, py::arg("root"), py::arg("size"), py::arg("threshold") = 0.5)
        .def_property_readonly("parameter_count", [](const PyModel& self) { return self.net->parameter_count(); });

    m.def("train", [](const std::string& yaml, const std::map<std::string, std::string>& overrides,
                      const std::optional<std::filesystem::path>& checkpoint) {
        const auto config = parse_config(yaml, overrides);
        std::optional<std::filesystem::path> manifest;
        if (!config.manifest.empty()) {
            manifest = config.manifest;
        }
        const auto split = segt::load_dataset(config.train_root, {config.base_size, config.base_size}, manifest);
        segt::TrainResult result;
        {
            py::gil_scoped_release release;
            result = segt::train(config, split);
        }
        if (checkpoint) {
            segt::save_checkpoint(result.checkpoint, *checkpoint);
        }
        py::list log;
        for (const auto& s : result.log) {
            log.append(py::make_tuple(s.step, s.epoch, s.batch, s.scale,
                                      std::vector<double>(s.losses.begin(), s.losses.end())));
        }
        return py::make_tuple(PyModel{result.model}, log);
    }, py::arg("yaml") = "", py::arg("overrides") = std::map<std::string, std::string>{},
       py::arg("checkpoint") = std::nullopt,
       "Train on config.train_root; returns (model, [(step, epoch, batch, scale, losses)]).");
}
