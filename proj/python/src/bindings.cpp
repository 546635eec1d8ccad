#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "polyinr/checkpoint.hpp"
#include "polyinr/image_io.hpp"
#include "polyinr/inversion.hpp"
#include "polyinr/manipulation.hpp"
#include "polyinr/metrics.hpp"
#include "polyinr/training.hpp"

namespace py = pybind11;
using namespace polyinr;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (H, W, 3) float32 copy of an image.
Array to_numpy(const ImageBuffer<float>& img) {
  Array out({img.height(), img.width(), std::size_t{3}});
  std::copy(img.pixels().data().begin(), img.pixels().data().end(), out.mutable_data());
  return out;
}

ImageBuffer<float> from_numpy(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) {
    throw ArgumentError("image array must have shape (H, W, 3)");
  }
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  Tensor<float> px({h * w, 3});
  std::copy(a.data(), a.data() + a.size(), px.data().begin());
  return ImageBuffer<float>(h, w, std::move(px));
}

std::vector<Array> affine_to_numpy(const AffineParams<float>& a) {
  std::vector<Array> out;
  for (const auto& t : a.levels) {
    Array arr({t.rows(), std::size_t{3}});
    std::copy(t.data().begin(), t.data().end(), arr.mutable_data());
    out.push_back(std::move(arr));
  }
  return out;
}

AffineParams<float> affine_from_numpy(const std::vector<Array>& levels) {
  AffineParams<float> a;
  for (const auto& arr : levels) {
    if (arr.ndim() != 2 || arr.shape(1) != 3) {
      throw ArgumentError("affine levels must have shape (n, 3)");
    }
    Tensor<float> t({static_cast<std::size_t>(arr.shape(0)), 3});
    std::copy(arr.data(), arr.data() + arr.size(), t.data().begin());
    a.levels.push_back(std::move(t));
  }
  return a;
}

AffineParams<float> seed_affine(const Generator& gen, std::uint64_t seed,
                                std::optional<std::size_t> class_id) {
  const auto z = random_latent<float>(gen.config(), seed);
  return affine_from_w<float>(gen, map_latent<float>(gen, z, class_id));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Poly-INR coordinate generator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto arg = py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", base.ptr());
  auto numeric = py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", numeric.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  auto format = py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<BadMagicError>(m, "BadMagicError", format.ptr());
  py::register_exception<UnsupportedVersionError>(m, "UnsupportedVersionError", format.ptr());
  py::register_exception<TruncationError>(m, "TruncationError", format.ptr());
  py::register_exception<RecordMismatchError>(m, "RecordMismatchError", format.ptr());
  (void)arg;

  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init([](std::size_t z_dim, std::size_t w_dim, std::size_t levels,
                       std::size_t feature_dim, std::size_t num_classes, double leaky_slope) {
             GeneratorConfig c;
             c.z_dim = z_dim;
             c.w_dim = w_dim;
             c.levels = levels;
             c.feature_dim = feature_dim;
             c.num_classes = num_classes;
             c.leaky_slope = leaky_slope;
             c.validate();
             return c;
           }),
           py::arg("z_dim") = 64, py::arg("w_dim") = 512, py::arg("levels") = 10,
           py::arg("feature_dim") = 512, py::arg("num_classes") = 0, py::arg("leaky_slope") = 0.2)
      .def_readonly("z_dim", &GeneratorConfig::z_dim)
      .def_readonly("w_dim", &GeneratorConfig::w_dim)
      .def_readonly("levels", &GeneratorConfig::levels)
      .def_readonly("feature_dim", &GeneratorConfig::feature_dim)
      .def_readonly("num_classes", &GeneratorConfig::num_classes)
      .def_readonly("leaky_slope", &GeneratorConfig::leaky_slope)
      .def("to_json", &config_to_json)
      .def_static("from_json", &config_from_json)
      .def("__eq__", [](const GeneratorConfig& a, const GeneratorConfig& b) { return a == b; })
      .def("__repr__", [](const GeneratorConfig& c) {
        return "GeneratorConfig(levels=" + std::to_string(c.levels) +
               ", feature_dim=" + std::to_string(c.feature_dim) + ")";
      });

  m.def("count_params", &count_params, py::arg("config"));

  py::class_<Generator>(m, "Generator")
      .def_property_readonly("config", &Generator::config)
      .def("parameter_count", &Generator::parameter_count)
      .def("parameter_names",
           [](const Generator& g) {
             std::vector<std::string> out;
             for (const auto& p : g.parameters()) out.push_back(p.name);
             return out;
           })
      .def("to_bytes", [](const Generator& g) { return py::bytes(encode_checkpoint(g)); })
      .def_static("from_bytes",
                  [](const py::bytes& b) { return decode_checkpoint(std::string(b)); })
      .def("save", [](const Generator& g, const std::filesystem::path& p) { save_checkpoint(p, g); })
      .def_static("load", &load_checkpoint)
      .def("__eq__", [](const Generator& a, const Generator& b) { return bitwise_equal(a, b); });

  m.def("init_generator", [](const GeneratorConfig& c, std::uint64_t seed) {
    return init_generator<float>(c, seed);
  }, py::arg("config"), py::arg("seed") = 0);

  m.def("random_latent", [](const GeneratorConfig& c, std::uint64_t seed) {
    return random_latent<float>(c, seed);
  }, py::arg("config"), py::arg("seed"));

  m.def("affine_from_seed", [](const Generator& g, std::uint64_t seed,
                               std::optional<std::size_t> class_id) {
    return affine_to_numpy(seed_affine(g, seed, class_id));
  }, py::arg("generator"), py::arg("seed"), py::arg("class_id") = std::nullopt);

  m.def("affine_from_latent", [](const Generator& g, const std::vector<float>& z,
                                 std::optional<std::size_t> class_id) {
    return affine_to_numpy(affine_from_w<float>(g, map_latent<float>(g, z, class_id)));
  }, py::arg("generator"), py::arg("z"), py::arg("class_id") = std::nullopt);

  m.def("sample", [](const Generator& g, std::uint64_t seed, std::size_t height, std::size_t width,
                     std::optional<std::size_t> class_id) {
    const auto z = random_latent<float>(g.config(), seed);
    return to_numpy(sample<float>(g, z, class_id, height, width));
  }, py::arg("generator"), py::arg("seed"), py::arg("height"), py::arg("width"),
        py::arg("class_id") = std::nullopt);

  m.def("synthesize", [](const Generator& g, const std::vector<Array>& affine, std::size_t height,
                         std::size_t width, double margin) {
    const auto a = affine_from_numpy(affine);
    return to_numpy(synthesize(g, a, make_grid(height, width, Region::expanded(margin))));
  }, py::arg("generator"), py::arg("affine"), py::arg("height"), py::arg("width"),
        py::arg("margin") = 0.0, "Render on [-margin, 1 + margin]^2.");

  m.def("interpolate", [](const Generator& g, const std::vector<Array>& a,
                          const std::vector<Array>& b, double t, std::size_t height,
                          std::size_t width) {
    const Endpoint<float> ea = affine_from_numpy(a), eb = affine_from_numpy(b);
    return to_numpy(interpolate(g, ea, eb, t, InterpolationSpace::Affine, make_grid(height, width)));
  }, py::arg("generator"), py::arg("a"), py::arg("b"), py::arg("t"), py::arg("height"),
        py::arg("width"));

  m.def("style_mix", [](const Generator& g, const std::vector<Array>& a,
                        const std::vector<Array>& b, const std::string& levels,
                        std::size_t height, std::size_t width) {
    return to_numpy(style_mix(g, affine_from_numpy(a), affine_from_numpy(b),
                              LevelSet::parse(levels), make_grid(height, width)));
  }, py::arg("generator"), py::arg("a"), py::arg("b"), py::arg("levels"), py::arg("height"),
        py::arg("width"));

  m.def("extrapolate", [](const Generator& g, const std::vector<Array>& a, double margin,
                          std::size_t height, std::size_t width) {
    return to_numpy(extrapolate(g, affine_from_numpy(a), margin, height, width));
  }, py::arg("generator"), py::arg("affine"), py::arg("margin"), py::arg("height"),
        py::arg("width"));

  m.def("upsample", [](const Generator& g, const std::vector<Array>& a, std::size_t height,
                       std::size_t width, std::size_t factor, const std::string& mode) {
    if (mode != "nested" && mode != "standard") throw ArgumentError("mode must be nested or standard");
    return to_numpy(upsample_render(g, affine_from_numpy(a), height, width, factor,
                                    mode == "nested" ? UpsampleMode::Nested : UpsampleMode::Standard));
  }, py::arg("generator"), py::arg("affine"), py::arg("height"), py::arg("width"),
        py::arg("factor"), py::arg("mode") = "nested");

  m.def("heatmap", [](const Generator& g, const std::vector<Array>& a, std::size_t height,
                      std::size_t width, std::size_t level) {
    const auto map = heatmap(g, affine_from_numpy(a), make_grid(height, width), level);
    py::array_t<double> out({height, width});
    std::copy(map.values.begin(), map.values.end(), out.mutable_data());
    return out;
  }, py::arg("generator"), py::arg("affine"), py::arg("height"), py::arg("width"),
        py::arg("level"));

  m.def("fit_single_image", [](const GeneratorConfig& c, const Array& target, std::size_t steps,
                               double lr, std::uint64_t seed) {
    const auto img = from_numpy(target);
    std::optional<FitResult> r;
    {
      py::gil_scoped_release release;
      r.emplace(fit_single_image(c, img, steps, lr, seed));
    }
    return py::make_tuple(r->generator, r->loss_history, to_numpy(r->render));
  }, py::arg("config"), py::arg("target"), py::arg("steps"), py::arg("lr") = 1e-4,
        py::arg("seed") = 0, "Returns (generator, loss_history, render).");

  m.def("invert", [](const Generator& g, const Array& target, std::size_t steps, double lr,
                     const std::string& init, const std::string& loss, std::uint64_t seed,
                     std::size_t mean_samples) {
    InversionConfig ic;
    ic.steps = steps;
    ic.lr = lr;
    ic.seed = seed;
    ic.mean_samples = mean_samples;
    if (init == "mean") {
      ic.init = InversionInit::MeanAffine;
    } else if (init == "seed") {
      ic.init = InversionInit::FromSeed;
    } else {
      throw ArgumentError("init must be mean or seed");
    }
    if (loss == "mse") {
      ic.loss = InversionLoss::Mse;
    } else if (loss == "mse+gradient") {
      ic.loss = InversionLoss::MseGradient;
    } else {
      throw ArgumentError("loss must be mse or mse+gradient");
    }
    const auto img = from_numpy(target);
    InversionResult r;
    {
      py::gil_scoped_release release;
      r = invert(g, img, ic);
    }
    py::dict out;
    out["affine"] = affine_to_numpy(r.affine);
    out["loss_history"] = r.loss_history;
    out["best_loss"] = r.best_loss;
    out["psnr"] = r.psnr;
    out["ssim"] = r.ssim;
    return out;
  }, py::arg("generator"), py::arg("target"), py::arg("steps") = 1000, py::arg("lr") = 0.01,
        py::arg("init") = "mean", py::arg("loss") = "mse", py::arg("seed") = 0,
        py::arg("mean_samples") = 1000);

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy(a), from_numpy(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); });

  m.def("write_png", [](const std::filesystem::path& p, const Array& img) {
    write_png(p, from_numpy(img));
  }, py::arg("path"), py::arg("image"));
  m.def("read_png", [](const std::filesystem::path& p) { return to_numpy(read_png(p)); });
  m.def("save_affine", [](const std::filesystem::path& p, const std::vector<Array>& a) {
    save_affine(p, affine_from_numpy(a));
  });
  m.def("load_affine", [](const std::filesystem::path& p) { return affine_to_numpy(load_affine(p)); });
}
