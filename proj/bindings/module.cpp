#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "dynimg/classifier.hpp"
#include "dynimg/gestalt.hpp"
#include "dynimg/image_io.hpp"
#include "dynimg/manifest.hpp"
#include "dynimg/pipeline.hpp"
#include "dynimg/rng.hpp"
#include "dynimg/synth.hpp"

namespace py = pybind11;
using namespace dynimg;
using nlohmann::json;

namespace {

py::object json_to_py(const json& value) {
    switch (value.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(value.get<bool>());
        case json::value_t::number_integer: return py::int_(value.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(value.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(value.get<double>());
        case json::value_t::string: return py::str(value.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const json& item : value) out.append(json_to_py(item));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [key, item] : value.items()) out[py::str(key)] = json_to_py(item);
            return out;
        }
        default: return py::none();
    }
}

std::vector<FeatureVector> features_from_array(const py::array_t<double>& arr) {
    if (arr.ndim() != 2) throw DataError("expected a (T, dim) float array");
    const auto view = arr.unchecked<2>();
    std::vector<FeatureVector> features(static_cast<std::size_t>(view.shape(0)));
    for (py::ssize_t t = 0; t < view.shape(0); ++t) {
        features[t].resize(static_cast<std::size_t>(view.shape(1)));
        for (py::ssize_t i = 0; i < view.shape(1); ++i) features[t][i] = view(t, i);
    }
    return features;
}

py::array_t<double> vector_to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

DynamicImage image_from_array(const py::array_t<double>& arr, Modality modality) {
    if (arr.ndim() != 3) throw DataError("expected an (H, W, C) float array");
    const auto view = arr.unchecked<3>();
    FeatureVector values(static_cast<std::size_t>(view.shape(0) * view.shape(1) * view.shape(2)));
    std::size_t o = 0;
    for (py::ssize_t y = 0; y < view.shape(0); ++y)
        for (py::ssize_t x = 0; x < view.shape(1); ++x)
            for (py::ssize_t c = 0; c < view.shape(2); ++c) values[o++] = view(y, x, c);
    return to_dynamic_image(values, static_cast<int>(view.shape(0)),
                            static_cast<int>(view.shape(1)), static_cast<int>(view.shape(2)),
                            modality);
}

py::array_t<double> image_to_array(const DynamicImage& img) {
    py::array_t<double> out({img.height, img.width, img.channels});
    std::copy(img.values.begin(), img.values.end(), out.mutable_data());
    return out;
}

PoolingInput input_from_string(const std::string& mode) {
    if (mode == "raw_frames") return PoolingInput::RAW_FRAMES;
    if (mode == "time_averaged") return PoolingInput::TIME_AVERAGED;
    throw DataError("mode must be 'raw_frames' or 'time_averaged'");
}

PipelineConfig config_from_kwargs(const py::dict& kwargs) {
    json doc = json::object();
    for (const auto& item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        const py::handle value = item.second;
        if (py::isinstance<py::bool_>(value))
            doc[key] = py::cast<bool>(value);
        else if (py::isinstance<py::int_>(value))
            doc[key] = py::cast<std::int64_t>(value);
        else if (py::isinstance<py::float_>(value))
            doc[key] = py::cast<double>(value);
        else if (py::isinstance<py::str>(value))
            doc[key] = py::cast<std::string>(value);
        else if (py::isinstance<py::dict>(value)) {
            json nested = json::object();
            for (const auto& sub : py::cast<py::dict>(value)) {
                const std::string sub_key = py::cast<std::string>(sub.first);
                if (py::isinstance<py::int_>(sub.second))
                    nested[sub_key] = py::cast<std::int64_t>(sub.second);
                else
                    nested[sub_key] = py::cast<double>(sub.second);
            }
            doc[key] = nested;
        } else {
            throw DataError("unsupported config value for key: " + key);
        }
    }
    return pipeline_config_from_json(doc.dump(), PipelineConfig{});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rank-pooled dynamic images, NFA pruning, and RGB-D activity classification";

    py::register_exception<DataError>(m, "DataError");

    py::enum_<Modality>(m, "Modality")
        .value("RGB", Modality::RGB)
        .value("DEPTH", Modality::DEPTH);

    m.def(
        "load_sequence",
        [](const std::filesystem::path& dir, Modality modality) {
            const FrameSequence seq = load_sequence(dir, modality);
            py::array_t<double> out(
                {seq.frame_count(), seq.height(), seq.width(), seq.channels()});
            double* dst = out.mutable_data();
            for (const Frame& f : seq.frames) dst = std::copy(f.data.begin(), f.data.end(), dst);
            return out;
        },
        py::arg("dir"), py::arg("modality"),
        "Load a frame directory as a (T, H, W, C) array of values in [0, 1].");

    m.def(
        "approx_pool",
        [](const py::array_t<double>& features, const std::string& mode) {
            return vector_to_array(approx_pool(features_from_array(features),
                                               input_from_string(mode)));
        },
        py::arg("features"), py::arg("mode") = "raw_frames",
        "Closed-form rank pooling of (T, dim) features.");

    m.def(
        "approx_coefficients",
        [](std::size_t frames, const std::string& mode) {
            return vector_to_array(approx_coefficients(frames, input_from_string(mode)));
        },
        py::arg("frames"), py::arg("mode") = "raw_frames");

    m.def(
        "solve_exact",
        [](const py::array_t<double>& features, const std::string& mode, double lambda,
           int max_iters, double step0, double step_decay, double tol) {
            const PoolingProblem problem =
                make_problem(features_from_array(features), input_from_string(mode), lambda);
            SolverConfig cfg;
            cfg.max_iters = max_iters;
            cfg.step0 = step0;
            cfg.step_decay = step_decay;
            cfg.tol = tol;
            return vector_to_array(solve_exact(problem, cfg));
        },
        py::arg("features"), py::arg("mode") = "raw_frames", py::arg("lambda_") = 1.0,
        py::arg("max_iters") = 500, py::arg("step0") = 0.1, py::arg("step_decay") = 0.01,
        py::arg("tol") = 1e-8, "Subgradient-descent solution of the ranking objective.");

    m.def(
        "objective",
        [](const py::array_t<double>& d, const py::array_t<double>& features,
           const std::string& mode, double lambda) {
            const PoolingProblem problem =
                make_problem(features_from_array(features), input_from_string(mode), lambda);
            std::vector<double> dv(d.data(), d.data() + d.size());
            return objective(dv, problem);
        },
        py::arg("d"), py::arg("features"), py::arg("mode") = "raw_frames",
        py::arg("lambda_") = 1.0);

    m.def("binomial_tail", &binomial_tail, py::arg("N"), py::arg("n"), py::arg("p"),
          "Upper tail P(X >= n) for X ~ Binomial(N, p).");

    m.def(
        "normalize_image",
        [](const py::array_t<double>& img, Modality modality) {
            return image_to_array(normalize_image(image_from_array(img, modality)));
        },
        py::arg("image"), py::arg("modality") = Modality::RGB);

    m.def(
        "prune_image",
        [](const py::array_t<double>& img, Modality modality, double tau_b, int delta,
           double epsilon) {
            const PruneResult result =
                prune_full(image_from_array(img, modality), tau_b, delta, epsilon);
            return py::make_tuple(image_to_array(result.image),
                                  json_to_py(json::parse(sweep_report_json(result))));
        },
        py::arg("image"), py::arg("modality") = Modality::RGB, py::arg("tau_b") = 0.05,
        py::arg("delta") = 100, py::arg("epsilon") = 1.0,
        "Prune weak components from a normalized image; returns (pruned, sweep_report).");

    m.def(
        "embed_image",
        [](const py::array_t<double>& img, Modality modality, int embed_h, int embed_w) {
            return vector_to_array(embed(image_from_array(img, modality), embed_h, embed_w).values);
        },
        py::arg("image"), py::arg("modality") = Modality::RGB, py::arg("embed_h") = 32,
        py::arg("embed_w") = 32);

    m.def(
        "read_dimg",
        [](const std::filesystem::path& path) {
            const DynamicImage img = read_dimg(path);
            return py::make_tuple(image_to_array(img), img.modality, img.value_min, img.value_max);
        },
        py::arg("path"), "Read a .dimg file; returns (values, modality, min, max).");

    m.def(
        "write_dimg",
        [](const std::filesystem::path& path, const py::array_t<double>& img, Modality modality) {
            write_dimg(path, image_from_array(img, modality));
        },
        py::arg("path"), py::arg("image"), py::arg("modality") = Modality::RGB);

    m.def(
        "synth_generate",
        [](const std::filesystem::path& out_dir, int num_classes, int videos_per_class, int height,
           int width, int frames, int noise_min, int noise_max, bool distractor,
           std::uint64_t seed) {
            SynthConfig cfg;
            cfg.num_classes = num_classes;
            cfg.videos_per_class = videos_per_class;
            cfg.height = height;
            cfg.width = width;
            cfg.frames = frames;
            cfg.noise_min = noise_min;
            cfg.noise_max = noise_max;
            cfg.distractor = distractor;
            cfg.seed = seed;
            synth_generate(cfg, out_dir);
            return (out_dir / "manifest.json").string();
        },
        py::arg("out_dir"), py::arg("num_classes") = 7, py::arg("videos_per_class") = 4,
        py::arg("height") = 32, py::arg("width") = 32, py::arg("frames") = 12,
        py::arg("noise_min") = 3, py::arg("noise_max") = 6, py::arg("distractor") = true,
        py::arg("seed") = 0, "Write a synthetic RGB-D dataset; returns the manifest path.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& manifest_path, const std::filesystem::path& work_dir,
           const py::kwargs& kwargs) {
            const DatasetManifest manifest = load_manifest(manifest_path);
            const PipelineConfig cfg = config_from_kwargs(kwargs);
            const EvalReport report = run_pipeline(manifest, cfg, work_dir);
            return json_to_py(json::parse(report_json(report)));
        },
        py::arg("manifest"), py::arg("work_dir") = std::filesystem::path(),
        "Full split/train/eval run; keyword arguments override the default config.");
}
