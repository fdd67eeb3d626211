#include "polylearn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>

#include "polylearn/error.hpp"
#include "polylearn/format.hpp"
#include "polylearn/rng.hpp"

namespace polylearn {

std::uint64_t sample_count(double c, int p, int d, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1), got " + std::to_string(delta));
    if (p < 1 || d < 0) throw InvalidParameter("sample count needs p >= 1 and d >= 0");
    if (!std::isfinite(c)) throw InvalidParameter("control exponent must be finite");
    const double dd = d + 1.0;
    const double raw = std::pow(10.0, c) * dd * dd * std::log(2.0 * p * dd / delta);
    if (!(raw < 1.8e19)) throw CapacityError("sample count overflows for c = " + format_double(c), format_double(raw));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(raw)));
}

NoiseModel NoiseSpec::resolve(int num_players) const {
    return kind == NoiseKind::global ? NoiseModel::global(q) : NoiseModel::local_uniform(num_players, q);
}

const char* to_string(LambdaMode mode) { return mode == LambdaMode::theory ? "theory" : "fixed"; }

// --- evaluation ---------------------------------------------------------------------

Theorem1Evaluation evaluate_theorem1(const PolymatrixGame& true_game, const PolymatrixGame& learned,
                                     const EnumerationOptions& options) {
    if (true_game.strategy_counts() != learned.strategy_counts()) {
        throw InvalidInput("games have different strategy counts");
    }
    const ProfileSpace& space = true_game.space();
    const std::uint64_t total = space.require_enumerable(options.cap);
    const int p = space.num_players();

    Theorem1Evaluation ev;
    std::vector<GroupedParameterVector> diffs;
    for (int i = 0; i < p; ++i) {
        GroupedParameterVector diff = pack_parameters(learned, i);
        diff.values() -= pack_parameters(true_game, i).values();
        ev.parameter_errors.push_back(diff.norm_12());
        diffs.push_back(std::move(diff));
    }
    ev.max_parameter_error = *std::max_element(ev.parameter_errors.begin(), ev.parameter_errors.end());

    // u_hat^i(x) - u^i(x) is linear in theta, so it is the score of the difference.
    double worst = 0.0;
#pragma omp parallel reduction(max : worst)
    {
        Profile x(static_cast<std::size_t>(p));
#pragma omp for schedule(static)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(total); ++k) {
            space.decode(static_cast<std::uint64_t>(k), x);
            for (int i = 0; i < p; ++i) {
                worst = std::max(worst, std::abs(diffs[static_cast<std::size_t>(i)].score(x[static_cast<std::size_t>(i)], x)));
            }
        }
    }
    ev.max_payoff_error = worst;
    ev.payoff_bound_holds = ev.max_payoff_error <= ev.max_parameter_error;
    ev.epsilon = 2.0 * ev.max_parameter_error;

    const PsneSet ne_true = enumerate_psne(true_game, options);
    const PsneSet ne_learned = enumerate_psne(learned, options);
    ev.true_ne_count = ne_true.size();
    ev.learned_ne_count = ne_learned.size();
    ev.ne_equal = ne_true.same_profiles(ne_learned);

    ev.learned_in_true_eps = true;
    for (const Profile& x : ne_learned.profiles()) {
        if (!is_eps_ne(true_game, x, ev.epsilon)) {
            ev.learned_in_true_eps = false;
            break;
        }
    }
    ev.true_in_learned_eps = true;
    for (const Profile& x : ne_true.profiles()) {
        if (!is_eps_ne(learned, x, ev.epsilon)) {
            ev.true_in_learned_eps = false;
            break;
        }
    }
    ev.separable = check_separability(true_game, ne_true, ev.epsilon);
    return ev;
}

Theorem1Evaluation evaluate_theorem1(const PolymatrixGame& true_game, const LearnedModel& learned,
                                     const EnumerationOptions& options) {
    return evaluate_theorem1(true_game, learned.game, options);
}

// --- trials ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kGameKey = 0x67616d65ULL;
constexpr std::uint64_t kDataKey = 0x64617461ULL;

int spec_players(const GameSpec& spec) {
    return std::visit([](const auto& s) { return s.p; }, spec);
}

int spec_degree(const GameSpec& spec) {
    return std::visit([](const auto& s) { return s.d; }, spec);
}

}  // namespace

PolymatrixGame draw_game_with_equilibrium(const GameSpec& spec, int max_redraws, int* redraws,
                                          const EnumerationOptions& options) {
    if (redraws) *redraws = 0;
    if (const auto* hard = std::get_if<HardEnsembleSpec>(&spec)) return hard_game(*hard);
    RandomGameSpec s = std::get<RandomGameSpec>(spec);
    const std::uint64_t base = s.seed;
    for (int attempt = 0; attempt <= max_redraws; ++attempt) {
        s.seed = attempt == 0 ? base : derive_seed(base, {kGameKey, static_cast<std::uint64_t>(attempt)});
        PolymatrixGame game = random_game(s);
        if (!enumerate_psne(game, options).empty()) {
            if (redraws) *redraws = attempt;
            return game;
        }
    }
    throw ModelUndefined("no random game with an equilibrium after " + std::to_string(max_redraws) + " redraws");
}

TrialRecord recovery_trial(const PolymatrixGame& game, const NoiseSpec& noise, std::uint64_t n,
                           const TrialOptions& options, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    TrialRecord rec;
    rec.p = game.num_players();
    rec.d = game.max_degree();
    rec.n = n;
    rec.seed = seed;
    try {
        if (n < 1) throw InvalidParameter("sample size must be at least 1");
        const ObservationModel model(game, noise.resolve(game.num_players()), options.enumeration);
        rec.true_ne_count = model.equilibria().size();

        // Both paths draw n i.i.d. profiles; counts are cheaper once n*p exceeds |A|.
        const std::uint64_t data_seed = derive_seed(seed, {kDataKey});
        const std::uint64_t space = game.space().size_saturated();
        WeightedProfiles data;
        if (n * static_cast<std::uint64_t>(rec.p) <= space) {
            data = WeightedProfiles::from_dataset(model.sample(static_cast<std::size_t>(n), data_seed));
        } else {
            const std::vector<std::uint64_t> counts = model.sample_counts(n, data_seed);
            data = WeightedProfiles::from_counts(game.space(), counts);
        }

        LearnerConfig cfg = options.learner;
        if (options.lambda_mode == LambdaMode::theory) {
            cfg.delta = options.delta;
            cfg.lambda = lambda_schedule(n, rec.p, rec.d, cfg);
        }
        rec.lambda = cfg.lambda;
        const auto start = clock::now();
        if (options.timeout_seconds) {
            cfg.deadline = start + std::chrono::duration_cast<clock::duration>(
                                       std::chrono::duration<double>(*options.timeout_seconds));
        }
        const LearnedModel learned = fit_game(data, cfg);
        const double seconds = std::chrono::duration<double>(clock::now() - start).count();
        rec.fit_seconds = options.record_timing ? seconds : 0.0;
        rec.converged = std::all_of(learned.fits.begin(), learned.fits.end(), [](const FitResult& f) { return f.converged; });
        rec.timed_out = std::any_of(learned.fits.begin(), learned.fits.end(), [](const FitResult& f) { return f.timed_out; });

        const Theorem1Evaluation ev = evaluate_theorem1(game, learned, options.enumeration);
        rec.ne_equal = ev.ne_equal;
        rec.eps_contained = ev.learned_in_true_eps && ev.true_in_learned_eps;
        rec.max_payoff_error = ev.max_payoff_error;
        rec.max_parameter_error = ev.max_parameter_error;
        rec.learned_ne_count = ev.learned_ne_count;
        rec.recovered = rec.ne_equal && rec.converged && !rec.timed_out;
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.recovered = false;
        rec.error = e.what();
    }
    return rec;
}

TrialRecord recovery_trial(const GameSpec& game_spec, const NoiseSpec& noise, double c, const TrialOptions& options,
                           std::uint64_t seed) {
    const int p = spec_players(game_spec);
    const int d = spec_degree(game_spec);
    int redraws = 0;
    TrialRecord rec;
    try {
        const PolymatrixGame game = draw_game_with_equilibrium(game_spec, options.max_game_redraws, &redraws,
                                                               options.enumeration);
        rec = recovery_trial(game, noise, sample_count(c, p, d, options.delta), options, seed);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.p = p;
    rec.d = d;
    rec.c = c;
    rec.seed = seed;
    rec.game_redraws = redraws;
    return rec;
}

// --- sweep ---------------------------------------------------------------------------

void validate(const ExperimentSpec& s) {
    if (s.trials < 1) throw InvalidParameter("trials must be at least 1");
    if (s.c_grid.empty()) throw InvalidParameter("c grid must not be empty");
    if (s.p_list.empty() || s.d_list.empty()) throw InvalidParameter("p and d lists must not be empty");
    if (!(s.options.delta > 0.0 && s.options.delta < 1.0)) throw InvalidParameter("delta must lie in (0, 1)");
    for (double c : s.c_grid)
        if (!std::isfinite(c)) throw InvalidParameter("c grid entries must be finite");
    for (int p : s.p_list) {
        for (int d : s.d_list) validate(RandomGameSpec{p, d, s.m, std::sqrt(2.0), 0});
    }
    if (s.options.timeout_seconds && !(*s.options.timeout_seconds > 0.0)) {
        throw InvalidParameter("trial timeout must be positive");
    }
    validate(s.options.learner);
}

ExperimentReport phase_transition_sweep(const ExperimentSpec& spec) {
    validate(spec);
    const std::size_t np = spec.p_list.size();
    const std::size_t nd = spec.d_list.size();
    const std::size_t nc = spec.c_grid.size();
    const auto nt = static_cast<std::size_t>(spec.trials);
    const std::size_t jobs = np * nd * nc * nt;

    // Each job writes its own slot, so the result does not depend on scheduling.
    std::vector<TrialRecord> records(jobs);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t job = 0; job < static_cast<std::int64_t>(jobs); ++job) {
        auto k = static_cast<std::size_t>(job);
        const std::size_t t = k % nt;
        k /= nt;
        const std::size_t ci = k % nc;
        k /= nc;
        const std::size_t di = k % nd;
        const std::size_t pi = k / nd;
        const int p = spec.p_list[pi];
        const int d = spec.d_list[di];
        const std::uint64_t trial_seed = spec.seed ^ static_cast<std::uint64_t>(t);
        RandomGameSpec game{p, d, spec.m, std::sqrt(2.0),
                            derive_seed(trial_seed, {kGameKey, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(d)})};
        const std::uint64_t data_seed =
            derive_seed(trial_seed, {kDataKey, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(d), ci});
        TrialRecord rec = recovery_trial(GameSpec(game), spec.noise, spec.c_grid[ci], spec.options, data_seed);
        rec.trial = static_cast<int>(t);
        records[static_cast<std::size_t>(job)] = std::move(rec);
    }

    ExperimentReport report;
    report.spec = spec;
    for (std::size_t r = 0; r < np * nd * nc; ++r) {
        const std::size_t ci = r % nc;
        const std::size_t di = (r / nc) % nd;
        const std::size_t pi = r / (nc * nd);
        ReportRow row;
        row.p = spec.p_list[pi];
        row.d = spec.d_list[di];
        row.c = spec.c_grid[ci];
        row.n = sample_count(row.c, row.p, row.d, spec.options.delta);
        row.trials = spec.trials;
        double seconds = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            const TrialRecord& rec = records[r * nt + t];
            row.recovered += rec.recovered ? 1 : 0;
            row.timed_out += rec.timed_out ? 1 : 0;
            row.failed += rec.failed ? 1 : 0;
            row.not_converged += (!rec.failed && !rec.converged) ? 1 : 0;
            seconds += rec.fit_seconds;
        }
        row.probability = static_cast<double>(row.recovered) / static_cast<double>(row.trials);
        row.mean_fit_seconds = seconds / static_cast<double>(row.trials);
        report.rows.push_back(row);
    }
    report.trials = std::move(records);
    return report;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "p,d,c,n,trials,recovered,probability,mean_fit_seconds\n";
    for (const ReportRow& r : report.rows) {
        out << r.p << ',' << r.d << ',' << format_double(r.c) << ',' << r.n << ',' << r.trials << ',' << r.recovered
            << ',' << format_double(r.probability) << ',' << format_double(r.mean_fit_seconds) << '\n';
    }
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch == '\n' ? ' ' : ch;
    }
    return out + "\"";
}

}  // namespace

void write_trials_csv(std::ostream& out, const ExperimentReport& report) {
    out << "p,d,c,n,trial,seed,game_redraws,lambda,recovered,ne_equal,eps_contained,max_payoff_error,"
           "max_parameter_error,true_ne,learned_ne,converged,timed_out,failed,fit_seconds,error\n";
    for (const TrialRecord& t : report.trials) {
        out << t.p << ',' << t.d << ',' << format_double(t.c) << ',' << t.n << ',' << t.trial << ',' << t.seed << ','
            << t.game_redraws << ',' << format_double(t.lambda) << ',' << int(t.recovered) << ',' << int(t.ne_equal)
            << ',' << int(t.eps_contained) << ',' << format_double(t.max_payoff_error) << ','
            << format_double(t.max_parameter_error) << ',' << t.true_ne_count << ',' << t.learned_ne_count << ','
            << int(t.converged) << ',' << int(t.timed_out) << ',' << int(t.failed) << ',' << format_double(t.fit_seconds)
            << ',' << csv_field(t.error) << '\n';
    }
}

// --- population diagnostics --------------------------------------------------------------

PopulationDiagnostics population_diagnostics(const PolymatrixGame& game, const NoiseModel& noise,
                                             const EnumerationOptions& options) {
    const ObservationModel model(game, noise, options);
    const std::vector<double> table = model.pmf_table();
    const WeightedProfiles population = WeightedProfiles::from_pmf(game.space(), table);
    PopulationDiagnostics out;
    const int p = game.num_players();
    for (int i = 0; i < p; ++i) {
        const GroupedParameterVector theta = pack_parameters(game, i);
        const PlayerObjective objective(population, i);
        Eigen::VectorXd grad;
        objective.loss_and_gradient(theta.values(), grad);
        out.nu.push_back(GroupedParameterVector(theta.layout(), grad).norm_inf2());
        out.c_min.push_back(diagnostics_min_eigen(theta, population, true, HessianSubspace::identifiable));
    }
    out.c_min_overall = *std::min_element(out.c_min.begin(), out.c_min.end());
    out.nu_overall = *std::max_element(out.nu.begin(), out.nu.end());
    return out;
}

}  // namespace polylearn
