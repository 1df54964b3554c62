#include "spiralforge/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "spiralforge/error.hpp"

namespace sf::runconfig {

namespace {

using nlohmann::json;

// Pulls `key` out of `section` if present (type-checked by json's get<>),
// then marks it consumed so leftovers can be flagged as unknown keys.
template <typename T>
void take(json& section, const char* key, T& dst) {
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError,
                std::string("config field has wrong type: ") + key);
  }
  section.erase(it);
}

void take_enum(json& section, const char* key, trajgen::Transition& dst) {
  std::string s;
  bool had = section.contains(key);
  take(section, key, s);
  if (had) dst = trajgen::transition_from_string(s);
}

void take_enum(json& section, const char* key, trajgen::Ordering& dst) {
  std::string s;
  bool had = section.contains(key);
  take(section, key, s);
  if (had) dst = trajgen::ordering_from_string(s);
}

void reject_leftovers(const json& section, const std::string& where) {
  if (!section.empty())
    throw Error(ErrorCode::ConfigError,
                "unknown config key: " + where + "." + section.begin().key());
}

json pop_section(json& root, const char* name) {
  auto it = root.find(name);
  if (it == root.end()) return json::object();
  if (!it->is_object())
    throw Error(ErrorCode::ConfigError,
                std::string("config section is not an object: ") + name);
  json out = std::move(*it);
  root.erase(it);
  return out;
}

}  // namespace

RunConfig from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse: ") + e.what());
  }
  if (!root.is_object())
    throw Error(ErrorCode::ConfigError, "config root must be a JSON object");

  RunConfig cfg;

  json s = pop_section(root, "system");
  take(s, "fov_mm", cfg.system.fov_mm);
  take(s, "matrix", cfg.system.matrix);
  take(s, "dwell_us", cfg.system.dwell_us);
  take(s, "readout_overhead_ms", cfg.system.readout_overhead_ms);
  take(s, "max_kstep", cfg.system.max_kstep);
  reject_leftovers(s, "system");

  json p = pop_section(root, "phantom");
  take(p, "n_series", cfg.phantom.n_series);
  take(p, "t_frames", cfg.phantom.t_frames);
  take(p, "height", cfg.phantom.height);
  take(p, "width", cfg.phantom.width);
  take(p, "n_coils", cfg.phantom.n_coils);
  take(p, "seed", cfg.phantom.seed);
  take(p, "noise_sigma", cfg.phantom.noise_sigma);
  take(p, "f_train", cfg.phantom.f_train);
  take(p, "f_val", cfg.phantom.f_val);
  take(p, "f_test", cfg.phantom.f_test);
  reject_leftovers(p, "phantom");

  json t = pop_section(root, "trajectory");
  take(t, "kind", cfg.trajectory_kind);
  take(t, "r_inner", cfg.trajectory.r_inner);
  take(t, "u_inner", cfg.trajectory.u_inner);
  take(t, "r_outer", cfg.trajectory.r_outer);
  take(t, "rho", cfg.trajectory.rho);
  take_enum(t, "transition", cfg.trajectory.transition);
  take_enum(t, "ordering", cfg.trajectory.ordering);
  take(t, "tr_ms", cfg.trajectory.tr_ms);
  take(t, "t_acq_ms", cfg.trajectory.t_acq_ms);
  reject_leftovers(t, "trajectory");

  json ss = pop_section(root, "search_space");
  take(ss, "r_inner_lo", cfg.search_space.r_inner_lo);
  take(ss, "r_inner_hi", cfg.search_space.r_inner_hi);
  take(ss, "u_inner_lo", cfg.search_space.u_inner_lo);
  take(ss, "u_inner_hi", cfg.search_space.u_inner_hi);
  take(ss, "rho_lo", cfg.search_space.rho_lo);
  take(ss, "rho_hi", cfg.search_space.rho_hi);
  take(ss, "tr_lo", cfg.search_space.tr_lo);
  take(ss, "tr_hi", cfg.search_space.tr_hi);
  take(ss, "t_acq_ms", cfg.search_space.t_acq_ms);
  reject_leftovers(ss, "search_space");

  json tr = pop_section(root, "training");
  take(tr, "c1", cfg.model.c1);
  take(tr, "c2", cfg.model.c2);
  take(tr, "c3", cfg.model.c3);
  take(tr, "lr", cfg.training.lr);
  take(tr, "batch", cfg.training.batch);
  take(tr, "epochs", cfg.train_epochs);
  take(tr, "seed", cfg.train_seed);
  reject_leftovers(tr, "training");

  json hb = pop_section(root, "hyperband");
  take(hb, "max_resource", cfg.hyperband.max_resource);
  take(hb, "eta", cfg.hyperband.eta);
  take(hb, "seed", cfg.hyperband.seed);
  reject_leftovers(hb, "hyperband");

  json st = pop_section(root, "stream");
  take(st, "mode", cfg.stream_mode);
  int window = cfg.stream.window;
  take(st, "window", window);
  cfg.stream.window = window;
  std::uint64_t cap = cfg.stream.queue_capacity;
  take(st, "queue_capacity", cap);
  cfg.stream.queue_capacity = static_cast<std::size_t>(cap);
  take(st, "inject_grid_ms", cfg.stream.inject_grid_ms);
  take(st, "inject_denoise_ms", cfg.stream.inject_denoise_ms);
  take(st, "inject_emit_ms", cfg.stream.inject_emit_ms);
  take(st, "source_timeout_ms", cfg.stream.source_timeout_ms);
  take(st, "warmup_outputs", cfg.stream.warmup_outputs);
  reject_leftovers(st, "stream");

  reject_leftovers(root, "<root>");

  if (cfg.stream_mode != "parallel" && cfg.stream_mode != "serial")
    throw Error(ErrorCode::ConfigError, "stream.mode must be parallel or serial");
  if (cfg.trajectory_kind != "spiral" && cfg.trajectory_kind != "uniform_spiral" &&
      cfg.trajectory_kind != "radial")
    throw Error(ErrorCode::ConfigError,
                "trajectory.kind must be spiral, uniform_spiral or radial");
  cfg.stream.mode =
      cfg.stream_mode == "serial" ? stream::Mode::Serial : stream::Mode::Parallel;
  return cfg;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string to_json_text(const RunConfig& cfg) {
  json root;
  root["system"] = {{"fov_mm", cfg.system.fov_mm},
                    {"matrix", cfg.system.matrix},
                    {"dwell_us", cfg.system.dwell_us},
                    {"readout_overhead_ms", cfg.system.readout_overhead_ms},
                    {"max_kstep", cfg.system.max_kstep}};
  root["phantom"] = {{"n_series", cfg.phantom.n_series},
                     {"t_frames", cfg.phantom.t_frames},
                     {"height", cfg.phantom.height},
                     {"width", cfg.phantom.width},
                     {"n_coils", cfg.phantom.n_coils},
                     {"seed", cfg.phantom.seed},
                     {"noise_sigma", cfg.phantom.noise_sigma},
                     {"f_train", cfg.phantom.f_train},
                     {"f_val", cfg.phantom.f_val},
                     {"f_test", cfg.phantom.f_test}};
  root["trajectory"] = {{"kind", cfg.trajectory_kind},
                        {"r_inner", cfg.trajectory.r_inner},
                        {"u_inner", cfg.trajectory.u_inner},
                        {"r_outer", cfg.trajectory.r_outer},
                        {"rho", cfg.trajectory.rho},
                        {"transition", trajgen::to_string(cfg.trajectory.transition)},
                        {"ordering", trajgen::to_string(cfg.trajectory.ordering)},
                        {"tr_ms", cfg.trajectory.tr_ms},
                        {"t_acq_ms", cfg.trajectory.t_acq_ms}};
  root["search_space"] = {{"r_inner_lo", cfg.search_space.r_inner_lo},
                          {"r_inner_hi", cfg.search_space.r_inner_hi},
                          {"u_inner_lo", cfg.search_space.u_inner_lo},
                          {"u_inner_hi", cfg.search_space.u_inner_hi},
                          {"rho_lo", cfg.search_space.rho_lo},
                          {"rho_hi", cfg.search_space.rho_hi},
                          {"tr_lo", cfg.search_space.tr_lo},
                          {"tr_hi", cfg.search_space.tr_hi},
                          {"t_acq_ms", cfg.search_space.t_acq_ms}};
  root["training"] = {{"c1", cfg.model.c1},
                      {"c2", cfg.model.c2},
                      {"c3", cfg.model.c3},
                      {"lr", cfg.training.lr},
                      {"batch", cfg.training.batch},
                      {"epochs", cfg.train_epochs},
                      {"seed", cfg.train_seed}};
  root["hyperband"] = {{"max_resource", cfg.hyperband.max_resource},
                       {"eta", cfg.hyperband.eta},
                       {"seed", cfg.hyperband.seed}};
  root["stream"] = {{"mode", cfg.stream_mode},
                    {"window", cfg.stream.window},
                    {"queue_capacity", cfg.stream.queue_capacity},
                    {"inject_grid_ms", cfg.stream.inject_grid_ms},
                    {"inject_denoise_ms", cfg.stream.inject_denoise_ms},
                    {"inject_emit_ms", cfg.stream.inject_emit_ms},
                    {"source_timeout_ms", cfg.stream.source_timeout_ms},
                    {"warmup_outputs", cfg.stream.warmup_outputs}};
  return root.dump(2) + "\n";
}

}  // namespace sf::runconfig
