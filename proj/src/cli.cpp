#include "polylearn/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "polylearn/ensembles.hpp"
#include "polylearn/error.hpp"
#include "polylearn/experiments.hpp"
#include "polylearn/format.hpp"
#include "polylearn/io.hpp"

namespace polylearn {

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 ok, 1 internal error, 2 usage or invalid input, 3 parse error, 4 capacity exceeded, "
    "5 numeric or model error.\n"
    "Errors are printed as one line: error code=<n> kind=<kind> message=\"<text>\".";

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += (ch == '\n' || ch == '\r') ? ' ' : ch;
    }
    return out;
}

void report_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
    err << "error code=" << code << " kind=" << kind << " message=\"" << escape(message) << "\"\n";
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, ',')) {
        const auto t = trim(cur);
        if (t.empty()) throw InvalidInput("empty entry in list '" + text + "'");
        out.emplace_back(t);
    }
    if (out.empty()) throw InvalidInput("empty list");
    return out;
}

std::vector<int> int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    for (const auto& s : split_list(text)) out.push_back(static_cast<int>(parse_int(s, what)));
    return out;
}

std::vector<double> real_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& s : split_list(text)) out.push_back(parse_double(s, what));
    return out;
}

/// Reads `key = value` lines into `--key=value` arguments.
std::vector<std::string> config_arguments(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    std::vector<std::string> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view(raw);
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("config line " + std::to_string(line) + ": expected 'key = value'");
        }
        const auto key = trim(view.substr(0, eq));
        const auto value = trim(view.substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(line) + ": empty key");
        if (key == "config") throw ParseError("config line " + std::to_string(line) + ": nested config files are not supported");
        out.push_back("--" + std::string(key) + "=" + std::string(value));
    }
    return out;
}

/// Pulls the value of --config out of the argument list.
std::optional<std::string> find_config(const std::vector<std::string>& args) {
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config") {
            if (k + 1 >= args.size()) throw InvalidInput("--config needs a path");
            return args[k + 1];
        }
        if (args[k].rfind("--config=", 0) == 0) return args[k].substr(9);
    }
    return std::nullopt;
}

struct Common {
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string config;
    int threads = 0;
    std::uint64_t cap = kDefaultEnumerationCap;
};

struct Command {
    CLI::App* app = nullptr;
    std::function<void(std::ostream&, ArtifactHeader&)> run;
};

void add_common(CLI::App* sub, Common& c, bool enumerates) {
    sub->add_option("--seed", c.seed, "Random seed (u64)");
    sub->add_option("--out", c.out, "Output path, '-' for standard output");
    sub->add_option("--config", c.config, "Text file of 'key = value' lines; flags override it");
    sub->add_option("--threads", c.threads, "Worker threads, 0 for all available")->check(CLI::NonNegativeNumber);
    if (enumerates) sub->add_option("--max-profiles", c.cap, "Largest profile space to enumerate");
}

/// Resolved options of a subcommand, in declaration order.
std::vector<std::pair<std::string, std::string>> resolved_options(const CLI::App* sub) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config" || name == "out") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->reduced_results()) value += (value.empty() ? "" : ",") + r;
            if (opt->get_type_size_max() == 0 && value.empty()) value = "true";
        } else {
            value = opt->get_default_str();
        }
        out.emplace_back(name, value);
    }
    return out;
}

void learner_options(CLI::App* sub, LearnerConfig& cfg, std::string& lambda, std::string& step,
                     std::string& threshold_mode) {
    sub->add_option("--lambda", lambda, "Regularization weight, or 'theory' for the sample-size schedule");
    sub->add_option("--delta", cfg.delta, "Failure probability used by the schedules");
    sub->add_option("--nu", cfg.nu_estimate, "Assumed mismatch level for the schedules");
    sub->add_option("--tolerance", cfg.tolerance, "Stop when the proximal-gradient mapping norm reaches this");
    sub->add_option("--max-iterations", cfg.max_iterations, "Iteration cap per player");
    sub->add_option("--edge-threshold", cfg.edge_threshold, "Group-norm cutoff for declaring an edge");
    sub->add_option("--threshold-mode", threshold_mode, "Edge cutoff: relative (to the largest group norm) or absolute")
        ->check(CLI::IsMember({"relative", "absolute"}));
    sub->add_option("--step", step, "Step rule: backtracking or fixed")->check(CLI::IsMember({"backtracking", "fixed"}));
}

NoiseModel noise_model(const std::string& kind, double q, const std::string& qi, int p) {
    if (kind == "global") {
        if (!qi.empty()) throw InvalidInput("--qi applies to local noise only");
        return NoiseModel::global(q);
    }
    if (qi.empty()) return NoiseModel::local_uniform(p, q);
    std::vector<double> values = real_list(qi, "q_i");
    if (values.size() == 1) values.assign(static_cast<std::size_t>(p), values.front());
    return NoiseModel::local(std::move(values));
}

void emit(const Common& c, const std::function<void(std::ostream&)>& body, std::ostream& out) {
    std::ostringstream buffer;
    body(buffer);
    if (c.out == "-") {
        out << buffer.str();
        return;
    }
    std::ofstream file(c.out, std::ios::binary);
    if (!file) throw InvalidInput("cannot open output file '" + c.out + "'");
    file << buffer.str();
    if (!file) throw InvalidInput("failed writing output file '" + c.out + "'");
}

std::string join_args(const std::vector<std::string>& args) {
    std::string s;
    for (std::size_t k = 0; k < args.size(); ++k) {
        const std::string& a = args[k];
        if (a == "--config" || a == "--out") {
            ++k;
            continue;
        }
        if (a.rfind("--config=", 0) == 0 || a.rfind("--out=", 0) == 0) continue;
        s += (s.empty() ? "" : " ") + a;
    }
    return s;
}

std::string profile_text(ProfileView x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i] + 1);
    return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& user_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learns sparse polymatrix games from observed joint actions and analyzes their pure Nash equilibria.",
                 "polylearn"};
    app.footer(kExitCodes);
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

    Common common;
    std::vector<Command> commands;
    int p = 7, d = 1, m = 3;
    double payoff_std = std::sqrt(2.0);
    std::string influential, target;
    std::string game_path, data_path, true_path, learned_path, input_path, rule = "supreme-court", details;
    std::string threshold_mode = "relative";
    std::string noise = "local", qi, lambda = "theory", step = "backtracking", p_list = "7", d_list = "1",
                c_grid = "0,1,2,3";
    double q = 0.6, epsilon = 0.0, trial_timeout = 0.0;
    std::uint64_t n = 1000;
    int trials = 40;
    int theory_d = -1;
    bool fill_abstain = false, no_header = false, no_timing = false;
    LearnerConfig cfg;

    // generate
    {
        CLI::App* sub = app.add_subcommand("generate", "Write a random game with in-degree d and normal edge payoffs");
        add_common(sub, common, false);
        sub->add_option("--p", p, "Players");
        sub->add_option("--d", d, "In-degree of every player");
        sub->add_option("--m", m, "Strategies per player");
        sub->add_option("--payoff-std", payoff_std, "Standard deviation of edge payoffs")
            ->default_str(format_double(payoff_std));
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const PolymatrixGame game = random_game(RandomGameSpec{p, d, m, payoff_std, common.seed});
                                write_header(o, h);
                                write_game(o, game);
                            }});
    }
    // hard-ensemble
    {
        CLI::App* sub = app.add_subcommand("hard-ensemble", "Write a game with a single known equilibrium");
        add_common(sub, common, false);
        sub->add_option("--p", p, "Players");
        sub->add_option("--d", d, "Number of influential players");
        sub->add_option("--m", m, "Strategies per player");
        sub->add_option("--influential", influential, "Comma-separated influential players (1-indexed)");
        sub->add_option("--target", target, "Comma-separated target strategies (1-indexed)");
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                HardEnsembleSpec spec{p, d, m, std::nullopt, std::nullopt, common.seed};
                                if (!influential.empty()) {
                                    std::vector<int> v = int_list(influential, "player");
                                    for (int& i : v) --i;
                                    spec.influential = v;
                                }
                                if (!target.empty()) {
                                    std::vector<int> v = int_list(target, "strategy");
                                    for (int& a : v) --a;
                                    spec.target = v;
                                }
                                const HardEnsemble e = hard_ensemble(spec);
                                std::string inf_text, tgt_text;
                                for (std::size_t k = 0; k < e.influential.size(); ++k) {
                                    inf_text += (k ? "," : "") + std::to_string(e.influential[k] + 1);
                                    tgt_text += (k ? "," : "") + std::to_string(e.target[k] + 1);
                                }
                                h.config.emplace_back("resolved_influential", inf_text);
                                h.config.emplace_back("resolved_target", tgt_text);
                                h.config.emplace_back("equilibrium", profile_text(e.equilibrium));
                                write_header(o, h);
                                write_game(o, e.game);
                            }});
    }
    // sample
    {
        CLI::App* sub = app.add_subcommand("sample", "Draw profiles from a game under a noise model");
        add_common(sub, common, true);
        sub->add_option("--game", game_path, "Game file")->required();
        sub->add_option("--noise", noise, "global or local")->check(CLI::IsMember({"global", "local"}));
        sub->add_option("--q", q, "Mixture weight (global) or shared q_i (local)");
        sub->add_option("--qi", qi, "Comma-separated per-player q_i for local noise");
        sub->add_option("--n", n, "Number of profiles")->check(CLI::PositiveNumber);
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const PolymatrixGame game = read_game_file(game_path);
                                const ObservationModel model(game, noise_model(noise, q, qi, game.num_players()),
                                                             EnumerationOptions{common.cap});
                                const Dataset data = model.sample(static_cast<std::size_t>(n), common.seed);
                                write_header(o, h);
                                write_dataset(o, data);
                            }});
    }
    // learn
    {
        CLI::App* sub = app.add_subcommand("learn", "Fit a polymatrix game to a dataset");
        add_common(sub, common, false);
        sub->add_option("--data", data_path, "Dataset CSV")->required();
        learner_options(sub, cfg, lambda, step, threshold_mode);
        sub->add_option("--d", theory_d, "Degree bound for the theory schedule (default p-1)");
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const Dataset data = read_dataset_file(data_path);
                                cfg.step_rule = step == "fixed" ? StepRule::fixed_lipschitz : StepRule::backtracking;
                                cfg.edge_threshold_relative = threshold_mode == "relative";
                                if (lambda == "theory") {
                                    const int deg = theory_d < 0 ? data.num_players() - 1 : theory_d;
                                    cfg.lambda = lambda_schedule(data.size(), data.num_players(), deg, cfg);
                                } else {
                                    cfg.lambda = parse_double(lambda, "lambda");
                                }
                                h.config.emplace_back("resolved_lambda", format_double(cfg.lambda));
                                h.config.emplace_back("samples", std::to_string(data.size()));
                                const LearnedModel model = fit_game(data, cfg);
                                write_header(o, h);
                                write_learned_model(o, model);
                            }});
    }
    // psne
    {
        CLI::App* sub = app.add_subcommand("psne", "List the pure (or epsilon) Nash equilibria of a game");
        add_common(sub, common, true);
        sub->add_option("--game", game_path, "Game file")->required();
        sub->add_option("--epsilon", epsilon, "Deviation slack; 0 gives exact equilibria");
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const PolymatrixGame game = read_game_file(game_path);
                                const PsneSet set = enumerate_eps_ne(game, epsilon, EnumerationOptions{common.cap});
                                h.config.emplace_back("count", std::to_string(set.size()));
                                write_header(o, h);
                                write_profiles(o, game.strategy_counts(), set.profiles());
                            }});
    }
    // compare
    {
        CLI::App* sub = app.add_subcommand("compare", "Check a learned game against the true one");
        add_common(sub, common, true);
        sub->add_option("--true", true_path, "True game file")->required();
        sub->add_option("--learned", learned_path, "Learned game or model file")->required();
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const PolymatrixGame truth = read_game_file(true_path);
                                const PolymatrixGame learned = read_game_file(learned_path);
                                const Theorem1Evaluation ev = evaluate_theorem1(truth, learned, EnumerationOptions{common.cap});
                                write_header(o, h);
                                std::string errors;
                                for (double b : ev.parameter_errors) errors += (errors.empty() ? "" : ",") + format_double(b);
                                o << "parameter_errors = " << errors << '\n'
                                  << "max_parameter_error = " << format_double(ev.max_parameter_error) << '\n'
                                  << "max_payoff_error = " << format_double(ev.max_payoff_error) << '\n'
                                  << "payoff_bound_holds = " << (ev.payoff_bound_holds ? "true" : "false") << '\n'
                                  << "epsilon = " << format_double(ev.epsilon) << '\n'
                                  << "learned_in_true_eps = " << (ev.learned_in_true_eps ? "true" : "false") << '\n'
                                  << "true_in_learned_eps = " << (ev.true_in_learned_eps ? "true" : "false") << '\n'
                                  << "separable = " << (ev.separable ? "true" : "false") << '\n'
                                  << "true_ne_count = " << ev.true_ne_count << '\n'
                                  << "learned_ne_count = " << ev.learned_ne_count << '\n'
                                  << "equal = " << (ev.ne_equal ? "true" : "false") << '\n';
                            }});
    }
    // poa
    {
        CLI::App* sub = app.add_subcommand("poa", "Price of anarchy over pure Nash equilibria");
        add_common(sub, common, true);
        sub->add_option("--game", game_path, "Game file")->required();
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                const PolymatrixGame game = read_game_file(game_path);
                                const EnumerationOptions opts{common.cap};
                                const PsneSet set = enumerate_psne(game, opts);
                                const PoaResult r = price_of_anarchy(game, set, opts);
                                write_header(o, h);
                                o << "psne_count = " << set.size() << '\n'
                                  << "shift = " << format_double(r.shift) << '\n'
                                  << "max_welfare = " << format_double(r.max_welfare) << '\n'
                                  << "max_welfare_profile = " << profile_text(r.argmax_profile) << '\n'
                                  << "min_psne_welfare = " << format_double(r.min_psne_welfare) << '\n'
                                  << "min_psne_welfare_profile = " << profile_text(r.argmin_psne_profile) << '\n'
                                  << "ratio = " << format_double(r.ratio) << '\n';
                            }});
    }
    // experiment
    {
        CLI::App* sub = app.add_subcommand("experiment", "Recovery-probability sweep over a grid of sample sizes");
        add_common(sub, common, true);
        sub->add_option("--p", p_list, "Comma-separated player counts");
        sub->add_option("--d", d_list, "Comma-separated in-degrees");
        sub->add_option("--m", m, "Strategies per player");
        sub->add_option("--noise", noise, "global or local")->check(CLI::IsMember({"global", "local"}));
        sub->add_option("--q", q, "Mixture weight (global) or shared q_i (local)");
        sub->add_option("--c-grid", c_grid, "Comma-separated control exponents c; n = 10^c (d+1)^2 log(2p(d+1)/delta)");
        sub->add_option("--trials", trials, "Trials per grid point")->check(CLI::PositiveNumber);
        learner_options(sub, cfg, lambda, step, threshold_mode);
        sub->add_option("--trial-timeout", trial_timeout, "Seconds per trial, 0 for none");
        sub->add_option("--details", details, "Also write per-trial records to this CSV");
        sub->add_flag("--no-timing", no_timing, "Write zero timings so reports are byte-stable")->default_str("false");
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                ExperimentSpec spec;
                                spec.p_list = int_list(p_list, "player count");
                                spec.d_list = int_list(d_list, "degree");
                                spec.m = m;
                                spec.noise = NoiseSpec{noise == "global" ? NoiseKind::global : NoiseKind::local, q};
                                spec.trials = trials;
                                spec.c_grid = real_list(c_grid, "c");
                                spec.seed = common.seed;
                                cfg.step_rule = step == "fixed" ? StepRule::fixed_lipschitz : StepRule::backtracking;
                                cfg.edge_threshold_relative = threshold_mode == "relative";
                                spec.options.learner = cfg;
                                spec.options.delta = cfg.delta;
                                if (lambda == "theory") {
                                    spec.options.lambda_mode = LambdaMode::theory;
                                } else {
                                    spec.options.lambda_mode = LambdaMode::fixed;
                                    spec.options.learner.lambda = parse_double(lambda, "lambda");
                                }
                                if (trial_timeout > 0.0) spec.options.timeout_seconds = trial_timeout;
                                spec.options.record_timing = !no_timing;
                                spec.options.enumeration.cap = common.cap;
                                h.config.emplace_back("lambda_mode", to_string(spec.options.lambda_mode));
                                const ExperimentReport report = phase_transition_sweep(spec);
                                if (!details.empty()) {
                                    std::ostringstream buf;
                                    write_header(buf, h);
                                    write_trials_csv(buf, report);
                                    std::ofstream file(details, std::ios::binary);
                                    if (!file) throw InvalidInput("cannot open details file '" + details + "'");
                                    file << buf.str();
                                }
                                write_header(o, h);
                                write_report_csv(o, report);
                            }});
    }
    // ingest
    {
        CLI::App* sub = app.add_subcommand("ingest", "Convert a vote table into a dataset");
        add_common(sub, common, false);
        sub->add_option("--input", input_path, "Vote CSV, one row per vote and one column per voter")->required();
        sub->add_option("--rule", rule, "supreme-court, senate, un, or a rule file of 'code = strategy' lines");
        sub->add_flag("--fill-abstain", fill_abstain, "Map empty cells to 2 instead of failing")->default_str("false");
        sub->add_flag("--no-header", no_header, "The first row holds votes, not voter names")->default_str("false");
        commands.push_back({sub, [&](std::ostream& o, ArtifactHeader& h) {
                                VoteMappingRule r;
                                if (rule == "supreme-court" || rule == "senate" || rule == "un") {
                                    r = builtin_rule(rule);
                                } else {
                                    std::ifstream rf(rule);
                                    if (!rf) throw InvalidInput("cannot open rule file '" + rule + "'");
                                    r = read_rule(rf, rule);
                                }
                                std::ifstream in(input_path);
                                if (!in) throw InvalidInput("cannot open input file '" + input_path + "'");
                                const Dataset data = ingest_votes(in, r, IngestOptions{!no_header, fill_abstain});
                                write_header(o, h);
                                write_dataset(o, data);
                            }});
    }

    // Config entries go right after the subcommand so later flags win.
    std::vector<std::string> args = user_args;
    try {
        if (auto path = find_config(args)) {
            if (args.empty() || args.front().empty() || args.front().front() == '-') {
                throw InvalidInput("--config must follow a subcommand");
            }
            const auto extra = config_arguments(*path);
            args.insert(args.begin() + 1, extra.begin(), extra.end());
        }
    } catch (const Error& e) {
        report_error(err, static_cast<int>(e.code()), e.kind(), e.what());
        return static_cast<int>(e.code());
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, static_cast<int>(ExitCode::usage), "usage", e.what());
        return static_cast<int>(ExitCode::usage);
    }

    for (const Command& cmd : commands) {
        if (!cmd.app->parsed()) continue;
        try {
#ifdef _OPENMP
            if (common.threads > 0) omp_set_num_threads(common.threads);
#endif
            ArtifactHeader header;
            header.command = cmd.app->get_name() + (args.size() > 1 ? " " + join_args({args.begin() + 1, args.end()}) : "");
            header.config = resolved_options(cmd.app);
            header.seed = common.seed;
            emit(common, [&](std::ostream& o) { cmd.run(o, header); }, out);
            return 0;
        } catch (const Error& e) {
            report_error(err, static_cast<int>(e.code()), e.kind(), e.what());
            return static_cast<int>(e.code());
        } catch (const std::bad_alloc&) {
            report_error(err, static_cast<int>(ExitCode::capacity), "capacity", "out of memory");
            return static_cast<int>(ExitCode::capacity);
        } catch (const std::exception& e) {
            report_error(err, 1, "internal", e.what());
            return 1;
        }
    }
    report_error(err, static_cast<int>(ExitCode::usage), "usage", "no subcommand given");
    return static_cast<int>(ExitCode::usage);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
    return run_cli(args, out, err);
}

}  // namespace polylearn
