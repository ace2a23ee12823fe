#include "pvar/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pvar/errors.hpp"

namespace pvar {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw config_error("config: unknown key '" + it.key() + "' in " +
                         where);
}

double want_number(const json& j, const std::string& key) {
  if (!j.at(key).is_number())
    throw config_error("config: key '" + key + "' must be a number");
  return j.at(key).get<double>();
}

int want_int(const json& j, const std::string& key) {
  if (!j.at(key).is_number_integer())
    throw config_error("config: key '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

std::string want_string(const json& j, const std::string& key) {
  if (!j.at(key).is_string())
    throw config_error("config: key '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

ExperimentConfig config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config: top level must be an object");

  reject_unknown(j,
                 {"experiment", "alpha", "beta", "p", "k", "c0", "sigma",
                  "lambda", "t_past", "jump_law", "kernel_family", "g0_mode",
                  "decay_rate", "n_grid", "reps", "seed", "workers",
                  "path_options", "tolerances"},
                 "the top level");

  ExperimentConfig cfg;
  if (j.contains("experiment")) cfg.experiment = want_string(j, "experiment");
  if (j.contains("alpha")) cfg.alpha = want_number(j, "alpha");
  if (j.contains("beta")) cfg.beta = want_number(j, "beta");
  if (j.contains("p")) cfg.p = want_number(j, "p");
  if (j.contains("k")) cfg.k = want_int(j, "k");
  if (j.contains("c0")) cfg.c0 = want_number(j, "c0");
  if (j.contains("sigma")) cfg.sigma = want_number(j, "sigma");
  if (j.contains("lambda")) cfg.lambda = want_number(j, "lambda");
  if (j.contains("t_past")) cfg.t_past = want_number(j, "t_past");
  if (j.contains("kernel_family"))
    cfg.kernel_family = kernel_family_from_string(want_string(j, "kernel_family"));
  if (j.contains("g0_mode"))
    cfg.g0_mode = g0_mode_from_string(want_string(j, "g0_mode"));
  if (j.contains("decay_rate")) cfg.decay_rate = want_number(j, "decay_rate");
  if (j.contains("reps")) cfg.reps = want_int(j, "reps");
  if (j.contains("workers")) cfg.workers = want_int(j, "workers");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw config_error("config: key 'seed' must be a nonnegative integer");
    cfg.seed = j.at("seed").get<unsigned long long>();
  }

  if (j.contains("n_grid")) {
    if (!j.at("n_grid").is_array())
      throw config_error("config: key 'n_grid' must be an array of integers");
    cfg.n_grid.clear();
    for (const auto& e : j.at("n_grid")) {
      if (!e.is_number_integer())
        throw config_error("config: n_grid entries must be integers");
      cfg.n_grid.push_back(e.get<int>());
    }
  }

  if (j.contains("jump_law")) {
    const json& jl = j.at("jump_law");
    if (!jl.is_object())
      throw config_error("config: 'jump_law' must be an object");
    reject_unknown(
        jl, {"law", "a", "theta_index", "x_min", "beta_js", "sigma_js",
             "bound"},
        "'jump_law'");
    if (jl.contains("law"))
      cfg.jump_law.law = jump_law_from_string(want_string(jl, "law"));
    if (jl.contains("a")) cfg.jump_law.a = want_number(jl, "a");
    if (jl.contains("theta_index"))
      cfg.jump_law.theta_index = want_number(jl, "theta_index");
    if (jl.contains("x_min")) cfg.jump_law.x_min = want_number(jl, "x_min");
    if (jl.contains("beta_js"))
      cfg.jump_law.beta_js = want_number(jl, "beta_js");
    if (jl.contains("sigma_js"))
      cfg.jump_law.sigma_js = want_number(jl, "sigma_js");
    if (jl.contains("bound")) cfg.jump_law.bound = want_number(jl, "bound");
  }

  if (j.contains("path_options")) {
    const json& po = j.at("path_options");
    if (!po.is_object())
      throw config_error("config: 'path_options' must be an object");
    reject_unknown(po, {"m_sub", "far_tol", "t_trunc", "poly_order"},
                   "'path_options'");
    if (po.contains("m_sub"))
      cfg.path_options.m_sub = want_int(po, "m_sub");
    if (po.contains("far_tol"))
      cfg.path_options.far_tol = want_number(po, "far_tol");
    if (po.contains("t_trunc"))
      cfg.path_options.t_trunc = want_number(po, "t_trunc");
    if (po.contains("poly_order"))
      cfg.path_options.poly_order = want_int(po, "poly_order");
  }

  if (j.contains("tolerances")) {
    const json& tl = j.at("tolerances");
    if (!tl.is_object())
      throw config_error("config: 'tolerances' must be an object");
    reject_unknown(tl,
                   {"ergodic_mean_rel", "jump_coupled_median_rel",
                    "jump_min_separation", "jump_ks", "smooth_median_rel",
                    "clt_ks", "stable_tail_index_abs",
                    "stable_asymmetry_min"},
                   "'tolerances'");
    ToleranceTable& t = cfg.tol;
    if (tl.contains("ergodic_mean_rel"))
      t.ergodic_mean_rel = want_number(tl, "ergodic_mean_rel");
    if (tl.contains("jump_coupled_median_rel"))
      t.jump_coupled_median_rel = want_number(tl, "jump_coupled_median_rel");
    if (tl.contains("jump_min_separation"))
      t.jump_min_separation = want_number(tl, "jump_min_separation");
    if (tl.contains("jump_ks")) t.jump_ks = want_number(tl, "jump_ks");
    if (tl.contains("smooth_median_rel"))
      t.smooth_median_rel = want_number(tl, "smooth_median_rel");
    if (tl.contains("clt_ks")) t.clt_ks = want_number(tl, "clt_ks");
    if (tl.contains("stable_tail_index_abs"))
      t.stable_tail_index_abs = want_number(tl, "stable_tail_index_abs");
    if (tl.contains("stable_asymmetry_min"))
      t.stable_asymmetry_min = want_number(tl, "stable_asymmetry_min");
  }
  return cfg;
}

std::string config_to_json_string(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["p"] = cfg.p;
  j["k"] = cfg.k;
  j["c0"] = cfg.c0;
  j["sigma"] = cfg.sigma;
  j["lambda"] = cfg.lambda;
  j["t_past"] = cfg.t_past;
  j["jump_law"] = {{"law", to_string(cfg.jump_law.law)},
                   {"a", cfg.jump_law.a},
                   {"theta_index", cfg.jump_law.theta_index},
                   {"x_min", cfg.jump_law.x_min},
                   {"beta_js", cfg.jump_law.beta_js},
                   {"sigma_js", cfg.jump_law.sigma_js},
                   {"bound", cfg.jump_law.bound}};
  j["kernel_family"] = to_string(cfg.kernel_family);
  j["g0_mode"] = to_string(cfg.g0_mode);
  j["decay_rate"] = cfg.decay_rate;
  j["n_grid"] = cfg.n_grid;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["path_options"] = {{"m_sub", cfg.path_options.m_sub},
                       {"far_tol", cfg.path_options.far_tol},
                       {"t_trunc", cfg.path_options.t_trunc},
                       {"poly_order", cfg.path_options.poly_order}};
  j["tolerances"] = {
      {"ergodic_mean_rel", cfg.tol.ergodic_mean_rel},
      {"jump_coupled_median_rel", cfg.tol.jump_coupled_median_rel},
      {"jump_min_separation", cfg.tol.jump_min_separation},
      {"jump_ks", cfg.tol.jump_ks},
      {"smooth_median_rel", cfg.tol.smooth_median_rel},
      {"clt_ks", cfg.tol.clt_ks},
      {"stable_tail_index_abs", cfg.tol.stable_tail_index_abs},
      {"stable_asymmetry_min", cfg.tol.stable_asymmetry_min}};
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_string(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("config: cannot open " + path + " for writing");
  out << config_to_json_string(cfg);
}

}  // namespace pvar
