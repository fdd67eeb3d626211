#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polylearn/ensembles.hpp"
#include "polylearn/learner.hpp"
#include "polylearn/observation.hpp"

namespace polylearn {

/// n = max(1, round(10^c (d+1)^2 log(2p(d+1)/delta))).
std::uint64_t sample_count(double c, int p, int d, double delta);

/// Noise shared by every player; local noise uses q for each q_i.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::local;
    double q = 0.6;

    NoiseModel resolve(int num_players) const;
};

enum class LambdaMode { theory, fixed };

const char* to_string(LambdaMode mode);

using GameSpec = std::variant<RandomGameSpec, HardEnsembleSpec>;

struct TrialOptions {
    LearnerConfig learner;
    LambdaMode lambda_mode = LambdaMode::theory;
    double delta = 0.01;
    /// Wall-clock budget per trial in seconds; timed-out trials count as failures.
    std::optional<double> timeout_seconds;
    /// Random games without an equilibrium are redrawn at most this many times.
    int max_game_redraws = 100;
    /// When false every timing field is zero, so reports are byte-stable.
    bool record_timing = true;
    EnumerationOptions enumeration;
};

/// Outcome of checking a learned game against the true one.
struct Theorem1Evaluation {
    /// ||theta_hat^i - theta^i||_{1,2} per player.
    std::vector<double> parameter_errors;
    double max_parameter_error = 0.0;
    /// max_{i,x} |u_hat^i(x) - u^i(x)|
    double max_payoff_error = 0.0;
    bool payoff_bound_holds = false;
    /// 2 * max_parameter_error
    double epsilon = 0.0;
    bool learned_in_true_eps = false;
    bool true_in_learned_eps = false;
    bool separable = false;
    bool ne_equal = false;
    std::size_t true_ne_count = 0;
    std::size_t learned_ne_count = 0;

    /// Separability at epsilon must imply equal equilibrium sets.
    bool consistent() const { return payoff_bound_holds && learned_in_true_eps && true_in_learned_eps && (!separable || ne_equal); }
};

Theorem1Evaluation evaluate_theorem1(const PolymatrixGame& true_game, const PolymatrixGame& learned,
                                     const EnumerationOptions& options = {});
Theorem1Evaluation evaluate_theorem1(const PolymatrixGame& true_game, const LearnedModel& learned,
                                     const EnumerationOptions& options = {});

struct TrialRecord {
    int p = 0;
    int d = 0;
    double c = 0.0;
    std::uint64_t n = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    int game_redraws = 0;
    double lambda = 0.0;
    bool recovered = false;
    bool ne_equal = false;
    bool eps_contained = false;
    double max_payoff_error = 0.0;
    double max_parameter_error = 0.0;
    std::size_t true_ne_count = 0;
    std::size_t learned_ne_count = 0;
    bool converged = false;
    bool timed_out = false;
    bool failed = false;
    std::string error;
    double fit_seconds = 0.0;
};

/// Draws the game (redrawing random games that lack an equilibrium), samples
/// n = sample_count(c, ...) profiles from the noise model with `seed`, fits,
/// and compares equilibrium sets. Errors are caught and flagged.
TrialRecord recovery_trial(const GameSpec& game, const NoiseSpec& noise, double c, const TrialOptions& options,
                           std::uint64_t seed);

/// Same, on an explicit game and sample count.
TrialRecord recovery_trial(const PolymatrixGame& game, const NoiseSpec& noise, std::uint64_t n,
                           const TrialOptions& options, std::uint64_t seed);

/// Random game for a spec, redrawn with derived seeds until it has an equilibrium.
PolymatrixGame draw_game_with_equilibrium(const GameSpec& spec, int max_redraws, int* redraws = nullptr,
                                          const EnumerationOptions& options = {});

struct ExperimentSpec {
    std::vector<int> p_list{7};
    std::vector<int> d_list{1};
    int m = 3;
    NoiseSpec noise;
    int trials = 40;
    std::vector<double> c_grid{0.0, 1.0, 2.0, 3.0};
    std::uint64_t seed = 1;
    TrialOptions options;
};

void validate(const ExperimentSpec& spec);

struct ReportRow {
    int p = 0;
    int d = 0;
    double c = 0.0;
    std::uint64_t n = 0;
    int trials = 0;
    int recovered = 0;
    double probability = 0.0;
    double mean_fit_seconds = 0.0;
    int timed_out = 0;
    int failed = 0;
    int not_converged = 0;
};

struct ExperimentReport {
    ExperimentSpec spec;
    /// Ordered by p list, then d list, then c grid.
    std::vector<ReportRow> rows;
    /// Ordered like rows, trials ascending within a row.
    std::vector<TrialRecord> trials;
};

/// Trial t uses base seed xor t; the game depends on (trial seed, p, d) and
/// the data additionally on the c index. Trials run in parallel.
ExperimentReport phase_transition_sweep(const ExperimentSpec& spec);

void write_report_csv(std::ostream& out, const ExperimentReport& report);
void write_trials_csv(std::ostream& out, const ExperimentReport& report);

/// Population quantities at the true parameters under a noise model.
struct PopulationDiagnostics {
    /// Smallest eigenvalue of the support-restricted population Hessian on
    /// the identifiable subspace, per player.
    std::vector<double> c_min;
    /// ||E grad l^i(theta_true)||_{inf,2} per player.
    std::vector<double> nu;
    double c_min_overall = 0.0;
    double nu_overall = 0.0;
};

PopulationDiagnostics population_diagnostics(const PolymatrixGame& game, const NoiseModel& noise,
                                             const EnumerationOptions& options = {});

}  // namespace polylearn
