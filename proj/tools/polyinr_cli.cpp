// polyinr command-line tool. Run `polyinr <command> --help` for flags.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "polyinr/checkpoint.hpp"
#include "polyinr/image_io.hpp"
#include "polyinr/inversion.hpp"
#include "polyinr/manipulation.hpp"
#include "polyinr/metrics.hpp"
#include "polyinr/run_config.hpp"
#include "polyinr/training.hpp"

namespace fs = std::filesystem;
using namespace polyinr;

namespace {

enum ExitCode { kOk = 0, kIo = 1, kArgument = 2, kFormat = 3, kNumeric = 4 };

struct Options {
  std::string ckpt;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_b;
  std::string out;
  std::string size = "64x64";
  std::string config;
  std::optional<std::size_t> class_id;
  std::string space = "affine";
  std::size_t frames = 8;
  std::string levels;
  double margin = 0.25;
  std::size_t factor = 2;
  std::string mode = "nested";
  std::size_t level = 0;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::string schedule;
  std::string target;
  std::string dataset;
  std::string affine;
  std::string affine_b;
  std::string render;
  std::string init = "mean";
  std::string loss = "mse";
  std::string sizes = "32,64,128,256";
  std::size_t repeats = 3;
  std::size_t log_every = 0;
};

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  std::size_t h = 0, w = 0;
  char x = 0;
  std::istringstream is(text);
  if (!(is >> h >> x >> w) || (x != 'x' && x != 'X') || !(is >> std::ws).eof() || h == 0 ||
      w == 0) {
    throw ArgumentError("bad --size '" + text + "', expected HxW");
  }
  return {h, w};
}

std::optional<RunConfig> run_config(const Options& o) {
  if (o.config.empty()) return std::nullopt;
  return load_run_config(o.config);
}

// Checkpoint when given, else a freshly initialized generator from --config
// (or defaults) and --seed.
Generator generator(const Options& o) {
  if (!o.ckpt.empty()) return load_checkpoint(o.ckpt);
  const auto rc = run_config(o);
  return init_generator(rc ? rc->generator : GeneratorConfig{}, o.seed);
}

AffineParams<float> affine_for(const Generator& gen, const std::string& file, std::uint64_t seed,
                               std::optional<std::size_t> class_id) {
  AffineParams<float> a;
  if (!file.empty()) {
    a = load_affine(file);
  } else {
    const auto z = random_latent<float>(gen.config(), seed);
    a = affine_from_w<float>(gen, map_latent<float>(gen, z, class_id));
  }
  a.check(gen.config().levels, gen.config().feature_dim);
  return a;
}

std::string require_out(const Options& o, const char* what) {
  if (o.out.empty()) throw ArgumentError(std::string("--out is required for ") + what);
  return o.out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string frame_name(std::size_t i) {
  std::ostringstream ss;
  ss << "frame_" << std::setw(4) << std::setfill('0') << i << ".png";
  return ss.str();
}

int cmd_params(const Options& o) {
  const Generator gen = generator(o);
  const auto& c = gen.config();
  std::cout << "config: levels=" << c.levels << " n=" << c.feature_dim << " z=" << c.z_dim
            << " w=" << c.w_dim << " classes=" << c.num_classes << "\n";
  for (const auto& p : gen.parameters()) {
    std::cout << "  " << std::left << std::setw(22) << p.name << shape_to_string(p.tensor->shape())
              << "\n";
  }
  std::cout << "total parameters: " << count_params(c) << "\n";
  return kOk;
}

int cmd_sample(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  const auto z = random_latent<float>(gen.config(), o.seed);
  write_png(require_out(o, "sample"), sample<float>(gen, z, o.class_id, h, w));
  return kOk;
}

int cmd_fit(const Options& o) {
  if (o.target.empty()) throw ArgumentError("--target is required for fit");
  const auto rc = run_config(o);
  const auto target = read_png(o.target);
  const std::size_t steps = o.steps.value_or(rc ? rc->fit.steps : 2000);
  const double lr = o.lr.value_or(rc ? rc->fit.lr : 1e-4);
  const auto cfg = rc ? rc->generator : GeneratorConfig{};
  const auto r = fit_single_image(cfg, target, steps, lr, o.seed);
  std::cout << "loss " << r.loss_history.front() << " -> " << r.loss_history.back() << ", psnr "
            << psnr(r.render, target) << " dB\n";
  save_checkpoint(require_out(o, "fit"), r.generator);
  if (!o.render.empty()) write_png(o.render, r.render);
  return kOk;
}

int cmd_train(const Options& o) {
  const auto rc = run_config(o);
  std::string dataset = o.dataset;
  if (dataset.empty() && rc && rc->dataset) dataset = rc->dataset->string();
  if (dataset.empty()) throw ArgumentError("--dataset (or config 'dataset') is required for train");
  Schedule schedule;
  if (!o.schedule.empty()) {
    schedule = parse_schedule(o.schedule);
  } else if (rc && rc->schedule) {
    schedule = *rc->schedule;
  } else {
    throw ArgumentError("--schedule (or config 'schedule') is required for train");
  }
  std::string out = o.out;
  if (out.empty() && rc && rc->output_checkpoint) out = rc->output_checkpoint->string();
  if (out.empty()) throw ArgumentError("--out is required for train");
  const auto images = load_png_directory(dataset);
  const auto seed = rc && o.seed == 0 ? rc->seed : o.seed;
  const auto r = train_adversarial(rc ? rc->generator : GeneratorConfig{}, images, schedule, seed);
  for (const auto& st : r.stages) {
    const std::size_t n = std::min<std::size_t>(100, st.d_loss.size());
    double d = 0, g = 0, acc = 0;
    for (std::size_t i = st.d_loss.size() - n; i < st.d_loss.size(); ++i) {
      d += st.d_loss[i];
      g += st.g_loss[i];
      acc += st.d_accuracy[i];
    }
    std::cout << "stage " << st.resolution << "x" << st.resolution << ": " << st.steps
              << " steps, d_loss " << d / n << ", g_loss " << g / n << ", d_acc " << acc / n
              << "\n";
  }
  save_checkpoint(out, r.generator);
  return kOk;
}

int cmd_interpolate(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  if (o.frames < 2) throw ArgumentError("--frames must be >= 2");
  const auto grid = make_grid(h, w);
  const std::uint64_t seed_b = o.seed_b.value_or(o.seed + 1);
  Endpoint<float> a, b;
  InterpolationSpace space;
  if (o.space == "latent") {
    space = InterpolationSpace::Latent;
    a = random_latent<float>(gen.config(), o.seed);
    b = random_latent<float>(gen.config(), seed_b);
  } else if (o.space == "affine") {
    space = InterpolationSpace::Affine;
    a = affine_for(gen, o.affine, o.seed, o.class_id);
    b = affine_for(gen, o.affine_b, seed_b, o.class_id);
  } else {
    throw ArgumentError("--space must be latent or affine");
  }
  const fs::path dir = require_out(o, "interpolate");
  make_dir(dir);
  for (std::size_t i = 0; i < o.frames; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(o.frames - 1);
    write_png(dir / frame_name(i), interpolate(gen, a, b, t, space, grid, o.class_id));
  }
  return kOk;
}

int cmd_stylemix(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  const auto a = affine_for(gen, o.affine, o.seed, o.class_id);
  const auto b = affine_for(gen, o.affine_b, o.seed_b.value_or(o.seed + 1), o.class_id);
  const LevelSet levels = LevelSet::parse(o.levels);
  write_png(require_out(o, "stylemix"), style_mix(gen, a, b, levels, make_grid(h, w)));
  return kOk;
}

int cmd_extrapolate(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  const auto a = affine_for(gen, o.affine, o.seed, o.class_id);
  write_png(require_out(o, "extrapolate"), extrapolate(gen, a, o.margin, h, w));
  return kOk;
}

int cmd_upsample(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  UpsampleMode mode;
  if (o.mode == "nested") {
    mode = UpsampleMode::Nested;
  } else if (o.mode == "standard") {
    mode = UpsampleMode::Standard;
  } else {
    throw ArgumentError("--mode must be nested or standard");
  }
  const auto a = affine_for(gen, o.affine, o.seed, o.class_id);
  write_png(require_out(o, "upsample"), upsample_render(gen, a, h, w, o.factor, mode));
  return kOk;
}

int cmd_heatmap(const Options& o) {
  const Generator gen = generator(o);
  const auto [h, w] = parse_size(o.size);
  const auto a = affine_for(gen, o.affine, o.seed, o.class_id);
  write_png(require_out(o, "heatmap"), heatmap_image(heatmap(gen, a, make_grid(h, w), o.level)));
  return kOk;
}

int cmd_invert(const Options& o) {
  if (o.target.empty()) throw ArgumentError("--target is required for invert");
  const Generator gen = generator(o);
  const auto rc = run_config(o);
  InversionConfig ic = rc ? rc->inversion : InversionConfig{};
  if (o.steps) ic.steps = *o.steps;
  if (o.lr) ic.lr = *o.lr;
  if (!rc || o.seed != 0) ic.seed = o.seed;
  if (!rc || o.init != "mean") {
    if (o.init == "mean") {
      ic.init = InversionInit::MeanAffine;
    } else if (o.init == "seed") {
      ic.init = InversionInit::FromSeed;
    } else {
      throw ArgumentError("--init must be mean or seed");
    }
  }
  if (!rc || o.loss != "mse") {
    if (o.loss == "mse") {
      ic.loss = InversionLoss::Mse;
    } else if (o.loss == "mse+gradient") {
      ic.loss = InversionLoss::MseGradient;
    } else {
      throw ArgumentError("--loss must be mse or mse+gradient");
    }
  }
  if (o.log_every) ic.log_every = o.log_every;
  ic.class_id = o.class_id;
  const auto target = read_png(o.target);
  const auto r = invert(gen, target, ic);
  std::cout << "best loss " << r.best_loss << ", psnr " << r.psnr << " dB, ssim " << r.ssim << "\n";
  save_affine(require_out(o, "invert"), r.affine);
  if (!o.render.empty()) {
    write_png(o.render, synthesize(gen, r.affine, make_grid(target.height(), target.width())));
  }
  return kOk;
}

int cmd_bench(const Options& o) {
  const Generator gen = generator(o);
  if (o.repeats == 0) throw ArgumentError("--repeats must be >= 1");
  const auto a = affine_for(gen, o.affine, o.seed, o.class_id);
  std::cout << "resolution  sec/image\n";
  std::stringstream ss(o.sizes);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t res = 0;
    try {
      res = std::stoul(item);
    } catch (const std::exception&) {
      throw ArgumentError("bad --sizes entry '" + item + "'");
    }
    if (res == 0) throw ArgumentError("bad --sizes entry '" + item + "'");
    const auto grid = make_grid(res, res);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < o.repeats; ++r) (void)synthesize(gen, a, grid);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << std::setw(10) << res << "  " << std::setprecision(4) << secs / o.repeats << "\n";
  }
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Poly-INR generator tool"};
  app.require_subcommand(1);
  Options o;

  auto shared = [&](CLI::App* c) {
    c->add_option("--ckpt", o.ckpt, "generator checkpoint");
    c->add_option("--seed", o.seed, "seed (latent, init or training)");
    c->add_option("--out", o.out, "output file or directory");
    c->add_option("--size", o.size, "HxW")->capture_default_str();
    c->add_option("--config", o.config, "run config JSON");
    c->add_option("--class", o.class_id, "class id for conditional generators");
    return c;
  };
  auto with_affine = [&](CLI::App* c) {
    c->add_option("--affine", o.affine, "affine file instead of --seed");
    return c;
  };

  struct Command {
    CLI::App* app;
    int (*fn)(const Options&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* c = shared(app.add_subcommand(name, help));
    commands.push_back({c, fn});
    return c;
  };

  add("params", "print parameter shapes and count", cmd_params);
  add("sample", "render one image from a seeded latent", cmd_sample);
  auto* fit = add("fit", "fit a generator to a single image", cmd_fit);
  fit->add_option("--target", o.target, "target PNG")->required();
  fit->add_option("--steps", o.steps);
  fit->add_option("--lr", o.lr);
  fit->add_option("--render", o.render, "also write the final render");
  auto* train = add("train", "progressive adversarial training", cmd_train);
  train->add_option("--dataset", o.dataset, "directory of PNGs");
  train->add_option("--schedule", o.schedule, "RES:BUDGETxBATCH,...");
  auto* interp = with_affine(add("interpolate", "interpolation frames", cmd_interpolate));
  interp->add_option("--space", o.space, "latent|affine")->capture_default_str();
  interp->add_option("--frames", o.frames)->capture_default_str();
  interp->add_option("--seed-b", o.seed_b, "second endpoint seed (default seed+1)");
  interp->add_option("--affine-b", o.affine_b, "second endpoint affine file");
  auto* mix = with_affine(add("stylemix", "copy A's affine levels into B", cmd_stylemix));
  mix->add_option("--levels", o.levels, "5-9 or 0,2,4")->required();
  mix->add_option("--seed-b", o.seed_b, "source B seed (default seed+1)");
  mix->add_option("--affine-b", o.affine_b, "source B affine file");
  auto* ext = with_affine(add("extrapolate", "render beyond the unit square", cmd_extrapolate));
  ext->add_option("--margin", o.margin)->capture_default_str();
  auto* up = with_affine(add("upsample", "render on a dense grid", cmd_upsample));
  up->add_option("--factor", o.factor)->capture_default_str();
  up->add_option("--mode", o.mode, "nested|standard")->capture_default_str();
  auto* heat = with_affine(add("heatmap", "feature heat-map at one level", cmd_heatmap));
  heat->add_option("--level", o.level)->required();
  auto* inv = add("invert", "embed an image into affine space", cmd_invert);
  inv->add_option("--target", o.target, "target PNG")->required();
  inv->add_option("--steps", o.steps);
  inv->add_option("--lr", o.lr);
  inv->add_option("--init", o.init, "mean|seed")->capture_default_str();
  inv->add_option("--loss", o.loss, "mse|mse+gradient")->capture_default_str();
  inv->add_option("--log-every", o.log_every);
  inv->add_option("--render", o.render, "also write the reconstruction");
  auto* bench = with_affine(add("bench", "seconds per rendered image", cmd_bench));
  bench->add_option("--sizes", o.sizes)->capture_default_str();
  bench->add_option("--repeats", o.repeats)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kArgument;
  }
  for (const auto& c : commands) {
    if (c.app->parsed()) return c.fn(o);
  }
  return kArgument;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArgument;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
