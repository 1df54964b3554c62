#include "spiralforge/hyperband.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

namespace sf::hyperband {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json config_json(const trajgen::SpiralConfig& c) {
  return json{{"r_inner", c.r_inner},
              {"u_inner", c.u_inner},
              {"r_outer", c.r_outer},
              {"rho", c.rho},
              {"transition", trajgen::to_string(c.transition)},
              {"ordering", trajgen::to_string(c.ordering)},
              {"tr_ms", c.tr_ms},
              {"t_acq_ms", c.t_acq_ms}};
}

trajgen::SpiralConfig config_from(const json& j) {
  trajgen::SpiralConfig c;
  c.r_inner = j.at("r_inner");
  c.u_inner = j.at("u_inner");
  c.r_outer = j.at("r_outer");
  c.rho = j.at("rho");
  c.transition = trajgen::transition_from_string(j.at("transition"));
  c.ordering = trajgen::ordering_from_string(j.at("ordering"));
  c.tr_ms = j.at("tr_ms");
  c.t_acq_ms = j.at("t_acq_ms");
  return c;
}

}  // namespace

Schedule schedule(const HyperBandParams& params) {
  if (params.max_resource < 1)
    throw Error(ErrorCode::BoundsViolation, "R must be >= 1");
  if (params.eta < 2) throw Error(ErrorCode::BoundsViolation, "eta must be >= 2");

  const double big_r = params.max_resource;
  const double eta = params.eta;
  int s_max = 0;
  while (std::pow(eta, s_max + 1) <= big_r + 1e-12) ++s_max;
  double budget = (s_max + 1) * big_r;

  Schedule sched;
  for (int s = s_max; s >= 0; --s) {
    Bracket br;
    br.s = s;
    br.n = static_cast<int>(
        std::ceil(budget / big_r * std::pow(eta, s) / (s + 1) - 1e-12));
    br.r = big_r * std::pow(eta, -s);
    for (int i = 0; i <= s; ++i) {
      Rung rung;
      rung.n_configs = static_cast<int>(
          std::floor(br.n * std::pow(eta, -i) + 1e-12));
      rung.keep = i < s ? static_cast<int>(std::floor(br.n * std::pow(eta, -(i + 1)) + 1e-12))
                        : 0;
      rung.cumulative_epochs =
          std::max<int>(1, static_cast<int>(std::llround(br.r * std::pow(eta, i))));
      br.rungs.push_back(rung);
    }
    for (std::size_t i = 0; i < br.rungs.size(); ++i) {
      int prev = i == 0 ? 0 : br.rungs[i - 1].cumulative_epochs;
      sched.total_epochs += static_cast<std::int64_t>(br.rungs[i].n_configs) *
                            (br.rungs[i].cumulative_epochs - prev);
    }
    sched.brackets.push_back(br);
  }
  return sched;
}

trajgen::SpiralConfig sample_config(
    const SearchSpace& space, std::mt19937_64& rng,
    const std::function<bool(const trajgen::SpiralConfig&)>& feasible,
    int max_retries) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    trajgen::SpiralConfig c;
    c.r_inner = space.r_inner_lo + (space.r_inner_hi - space.r_inner_lo) * uni(rng);
    c.u_inner = space.u_inner_lo + (space.u_inner_hi - space.u_inner_lo) * uni(rng);
    c.r_outer = c.r_inner + (1.0 - 2.0 * c.r_inner) * uni(rng);
    c.rho = space.rho_lo + (space.rho_hi - space.rho_lo) * uni(rng);
    int trans = static_cast<int>(uni(rng) * 3.0);
    c.transition = trans == 0 ? trajgen::Transition::Linear
                  : trans == 1 ? trajgen::Transition::Hanning
                               : trajgen::Transition::Quadratic;
    c.ordering = uni(rng) < 0.5 ? trajgen::Ordering::Linear
                                : trajgen::Ordering::TinyGolden;
    c.tr_ms = space.tr_lo + (space.tr_hi - space.tr_lo) * uni(rng);
    c.t_acq_ms = space.t_acq_ms;
    if (!feasible || feasible(c)) return c;
  }
  throw Error(ErrorCode::ExhaustedRetries, "no feasible config found");
}

namespace {

struct Ledger {
  fs::path path;
  // Replayed state keyed by (trial, rung-within-bracket) and (bracket, rung).
  std::map<std::pair<int, int>, json> train_events;
  std::set<std::pair<int, int>> rung_events;
  std::map<int, json> sample_events;

  void load() {
    if (!fs::exists(path)) return;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      std::string ev = j.at("event");
      if (ev == "sample") {
        sample_events[j.at("trial").get<int>()] = j;
      } else if (ev == "train") {
        train_events[{j.at("trial").get<int>(), j.at("rung").get<int>()}] = j;
      } else if (ev == "rung") {
        rung_events.insert({j.at("bracket").get<int>(), j.at("rung").get<int>()});
      }
    }
  }

  void append(const json& j) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::IoError, "cannot append to ledger");
    out << j.dump() << "\n";
  }
};

}  // namespace

SearchResult run_search(const SearchSpace& space, const HyperBandParams& params,
                        const Evaluator& evaluator, const std::string& checkpoint_dir,
                        const RunOptions& options) {
  Schedule plan = schedule(params);
  fs::create_directories(fs::path(checkpoint_dir) / "trials");

  Ledger ledger;
  ledger.path = fs::path(checkpoint_dir) / "ledger.json";
  ledger.load();

  // Configs are re-derived deterministically from the seed, so a resumed run
  // sees the identical trial list without trusting the journal.
  std::mt19937_64 rng(params.seed);
  std::vector<TrialRecord> trials;
  std::vector<std::vector<int>> bracket_trials;  // trial ids per bracket
  for (const auto& br : plan.brackets) {
    std::vector<int> ids;
    for (int i = 0; i < br.n; ++i) {
      TrialRecord t;
      t.id = static_cast<int>(trials.size());
      t.bracket_s = br.s;
      t.config = sample_config(space, rng);
      ids.push_back(t.id);
      trials.push_back(t);
    }
    bracket_trials.push_back(ids);
  }
  for (const auto& t : trials) {
    if (!ledger.sample_events.count(t.id)) {
      json j{{"event", "sample"}, {"trial", t.id}, {"bracket", t.bracket_s},
             {"config", config_json(t.config)}};
      ledger.append(j);
    }
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::int64_t epochs_consumed = 0;
  int rungs_done = 0;
  bool stopped = false;

  for (std::size_t bi = 0; bi < plan.brackets.size() && !stopped; ++bi) {
    const Bracket& br = plan.brackets[bi];
    std::vector<int> active = bracket_trials[bi];
    for (std::size_t ri = 0; ri < br.rungs.size(); ++ri) {
      const Rung& rung = br.rungs[ri];
      for (int id : active) {
        TrialRecord& t = trials[static_cast<std::size_t>(id)];
        auto key = std::make_pair(id, static_cast<int>(ri));
        int add = rung.cumulative_epochs - t.epochs_consumed;
        auto it = ledger.train_events.find(key);
        if (it != ledger.train_events.end()) {
          const json& j = it->second;
          t.score = j.at("status") == "failed" ? neg_inf : j.at("score").get<double>();
          t.status = j.at("status") == "failed" ? "failed" : "running";
          t.epochs_consumed = rung.cumulative_epochs;
          t.checkpoint = j.value("checkpoint", "");
          epochs_consumed += add;
          continue;
        }
        std::string out_path =
            (fs::path(checkpoint_dir) / "trials" / std::to_string(id) / "state.ckpt")
                .string();
        fs::create_directories(fs::path(out_path).parent_path());
        {
          std::ofstream cfg_out(fs::path(out_path).parent_path() / "config.json");
          cfg_out << config_json(t.config).dump(2) << "\n";
        }
        json j{{"event", "train"}, {"trial", id}, {"bracket", br.s},
               {"rung", static_cast<int>(ri)}, {"epochs", rung.cumulative_epochs}};
        try {
          double score = evaluator(t.config, id, add, t.checkpoint, out_path);
          t.score = score;
          t.status = "running";
          t.checkpoint = out_path;
          j["score"] = score;
          j["status"] = "ok";
          j["checkpoint"] = out_path;
        } catch (const std::exception& e) {
          t.score = neg_inf;
          t.status = "failed";
          j["score"] = nullptr;
          j["status"] = "failed";
          j["error"] = e.what();
        }
        t.epochs_consumed = rung.cumulative_epochs;
        epochs_consumed += add;
        ledger.append(j);
      }

      // Promotion: descending score, ties broken by lower trial id.
      std::vector<int> order = active;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double sa = trials[static_cast<std::size_t>(a)].score;
        double sb = trials[static_cast<std::size_t>(b)].score;
        if (sa != sb) return sa > sb;
        return a < b;
      });
      std::vector<int> promoted(order.begin(), order.begin() + rung.keep);
      std::sort(promoted.begin(), promoted.end());
      for (int id : active) {
        TrialRecord& t = trials[static_cast<std::size_t>(id)];
        if (t.status == "failed") continue;
        bool kept = std::find(promoted.begin(), promoted.end(), id) != promoted.end();
        t.status = kept ? "promoted" : "discarded";
      }
      if (!ledger.rung_events.count({br.s, static_cast<int>(ri)})) {
        json j{{"event", "rung"}, {"bracket", br.s}, {"rung", static_cast<int>(ri)},
               {"promoted", promoted}};
        ledger.append(j);
      }
      active = promoted;
      ++rungs_done;
      if (options.stop_after_rungs >= 0 && rungs_done >= options.stop_after_rungs) {
        stopped = true;
        break;
      }
    }
  }

  SearchResult result;
  result.trials = trials;
  result.epochs_consumed = epochs_consumed;
  result.best_score = neg_inf;
  for (const auto& t : trials) {
    if (t.epochs_consumed > 0 && t.status != "failed" && t.score > result.best_score) {
      result.best_score = t.score;
      result.best_trial = t.id;
      result.best_config = t.config;
    }
  }
  if (!stopped) {
    if (result.best_trial >= 0) {
      std::ofstream best(fs::path(checkpoint_dir) / "best");
      best << result.best_trial << "\n";
    }
    write_search_report(result,
                        (fs::path(checkpoint_dir) / "search_report.json").string());
  }
  return result;
}

std::string config_to_json(const trajgen::SpiralConfig& config) {
  return config_json(config).dump(2);
}

trajgen::SpiralConfig config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

void write_search_report(const SearchResult& result, const std::string& path) {
  json trials = json::array();
  for (const auto& t : result.trials) {
    json j{{"id", t.id},
           {"bracket", t.bracket_s},
           {"config", config_json(t.config)},
           {"epochs", t.epochs_consumed},
           {"status", t.status}};
    if (t.status == "failed")
      j["score"] = nullptr;
    else
      j["score"] = t.score;
    trials.push_back(j);
  }
  json report{{"best_trial", result.best_trial},
              {"best_score", result.best_score},
              {"best_config", config_json(result.best_config)},
              {"epochs_consumed", result.epochs_consumed},
              {"trials", trials}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write report: " + path);
  out << report.dump(2) << "\n";
}

}  // namespace sf::hyperband
