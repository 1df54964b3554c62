#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spiralforge/trajgen.hpp"

namespace sf::hyperband {

// Table-row search ranges; t_acq is fixed.
struct SearchSpace {
  double r_inner_lo = 0.1, r_inner_hi = 0.3;
  double u_inner_lo = 12.0, u_inner_hi = 24.0;
  double rho_lo = 0.01, rho_hi = 0.35;
  double tr_lo = 2.88, tr_hi = 3.7;
  double t_acq_ms = 55.0;
};

struct HyperBandParams {
  int max_resource = 150;  // R, epochs
  int eta = 5;
  std::uint64_t seed = 0;
};

struct Rung {
  int n_configs = 0;        // trials entering this rung
  int keep = 0;             // trials promoted out (floor(n/eta); 0 on the last rung)
  int cumulative_epochs = 0;  // total epochs a surviving trial has consumed
};

struct Bracket {
  int s = 0;
  int n = 0;          // initial configs
  double r = 0.0;     // initial resource (epochs, possibly fractional)
  std::vector<Rung> rungs;
};

struct Schedule {
  std::vector<Bracket> brackets;
  std::int64_t total_epochs = 0;  // analytic total over all rungs
};

// Li et al. bracket table. Fractional rung resources round to the nearest
// epoch with a floor of 1; incremental epochs per rung are
// cumulative - consumed.
Schedule schedule(const HyperBandParams& params);

// Feasibility-filtered uniform sampling (r_outer uniform in
// [r_inner, 1 - r_inner]); resamples on infeasible configs, bounded retries.
trajgen::SpiralConfig sample_config(
    const SearchSpace& space, std::mt19937_64& rng,
    const std::function<bool(const trajgen::SpiralConfig&)>& feasible = {},
    int max_retries = 64);

// evaluator(config, trial_id, additional_epochs, state_in, state_out) trains
// the trial for additional_epochs more (resuming from state_in when present)
// and returns the validation score. Throwing marks the trial failed (-inf).
using Evaluator = std::function<double(
    const trajgen::SpiralConfig& config, int trial_id, int additional_epochs,
    const std::string& state_in, const std::string& state_out)>;

struct TrialRecord {
  int id = -1;
  int bracket_s = 0;
  trajgen::SpiralConfig config;
  int epochs_consumed = 0;
  double score = 0.0;
  std::string status = "pending";  // pending|promoted|discarded|failed
  std::string checkpoint;
};

struct SearchResult {
  trajgen::SpiralConfig best_config;
  double best_score = 0.0;
  int best_trial = -1;
  std::vector<TrialRecord> trials;
  std::int64_t epochs_consumed = 0;
};

struct RunOptions {
  // Stop after this many completed rungs (for interrupt/resume testing);
  // < 0 runs to completion.
  int stop_after_rungs = -1;
};

// Executes the schedule with synchronous successive halving. The checkpoint
// directory holds ledger.json (append-only journal), trials/<id>/, and the
// final search_report.json; a rerun over an existing ledger resumes.
SearchResult run_search(const SearchSpace& space, const HyperBandParams& params,
                        const Evaluator& evaluator,
                        const std::string& checkpoint_dir,
                        const RunOptions& options = {});

// Serialization helpers shared with the CLI.
std::string config_to_json(const trajgen::SpiralConfig& config);
trajgen::SpiralConfig config_from_json(const std::string& text);
void write_search_report(const SearchResult& result, const std::string& path);

}  // namespace sf::hyperband
