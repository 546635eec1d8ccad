#include "polyinr/run_config.hpp"

#include <json.hpp>

#include "polyinr/checkpoint.hpp"

namespace polyinr {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ArgumentError("unknown key '" + key + "' in " + where);
  }
}

template <typename V>
V get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ArgumentError(where + "." + key + ": " + e.what());
  }
}

template <typename V>
void get_if(const json& j, const char* key, V& out, const std::string& where) {
  if (j.contains(key)) out = get<V>(j, key, where);
}

Schedule parse_schedule_json(const json& j) {
  if (!j.is_array()) throw ArgumentError("schedule must be an array of stages");
  Schedule s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "schedule[" + std::to_string(i) + "]";
    const json& st = j[i];
    check_keys(st, {"resolution", "image_budget", "batch_size", "generator_lr", "discriminator_lr"},
               where);
    for (const char* k : {"resolution", "image_budget", "batch_size"}) {
      if (!st.contains(k)) throw ArgumentError(where + " is missing '" + k + "'");
    }
    Stage stage;
    stage.resolution = get<std::size_t>(st, "resolution", where);
    stage.image_budget = get<std::size_t>(st, "image_budget", where);
    stage.batch_size = get<std::size_t>(st, "batch_size", where);
    get_if(st, "generator_lr", stage.generator_lr, where);
    get_if(st, "discriminator_lr", stage.discriminator_lr, where);
    s.stages.push_back(stage);
  }
  s.validate();
  return s;
}

InversionConfig parse_inversion(const json& j) {
  const std::string where = "inversion";
  check_keys(j, {"steps", "lr", "init", "loss", "log_every", "mean_samples", "seed"}, where);
  InversionConfig c;
  get_if(j, "steps", c.steps, where);
  get_if(j, "lr", c.lr, where);
  get_if(j, "log_every", c.log_every, where);
  get_if(j, "mean_samples", c.mean_samples, where);
  get_if(j, "seed", c.seed, where);
  if (j.contains("init")) {
    const auto v = get<std::string>(j, "init", where);
    if (v == "mean") {
      c.init = InversionInit::MeanAffine;
    } else if (v == "seed") {
      c.init = InversionInit::FromSeed;
    } else {
      throw ArgumentError("inversion.init must be 'mean' or 'seed'");
    }
  }
  if (j.contains("loss")) {
    const auto v = get<std::string>(j, "loss", where);
    if (v == "mse") {
      c.loss = InversionLoss::Mse;
    } else if (v == "mse+gradient") {
      c.loss = InversionLoss::MseGradient;
    } else {
      throw ArgumentError("inversion.loss must be 'mse' or 'mse+gradient'");
    }
  }
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("run config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"generator", "seed", "schedule", "fit", "inversion", "dataset", "output"},
             "run config");
  if (!j.contains("generator")) throw ArgumentError("run config is missing 'generator'");
  RunConfig rc;
  if (j["generator"].contains("kind")) {
    throw ArgumentError("unknown key 'kind' in generator config");
  }
  rc.generator = config_from_json(j["generator"].dump());
  get_if(j, "seed", rc.seed, "run config");
  if (j.contains("schedule")) rc.schedule = parse_schedule_json(j["schedule"]);
  if (j.contains("fit")) {
    check_keys(j["fit"], {"steps", "lr"}, "fit");
    get_if(j["fit"], "steps", rc.fit.steps, "fit");
    get_if(j["fit"], "lr", rc.fit.lr, "fit");
    if (rc.fit.steps < 1 || !(rc.fit.lr > 0.0)) {
      throw ArgumentError("fit.steps must be >= 1 and fit.lr > 0");
    }
  }
  if (j.contains("inversion")) rc.inversion = parse_inversion(j["inversion"]);
  if (j.contains("dataset")) rc.dataset = get<std::string>(j, "dataset", "run config");
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, {"dir", "checkpoint"}, "output");
    if (o.contains("dir")) rc.output_dir = get<std::string>(o, "dir", "output");
    if (o.contains("checkpoint")) rc.output_checkpoint = get<std::string>(o, "checkpoint", "output");
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

}  // namespace polyinr
