#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polylearn/error.hpp"
#include "polylearn/learner.hpp"

namespace polylearn {

void validate(const LearnerConfig& c) {
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) {
        throw InvalidParameter("lambda must be a finite non-negative number, got " + std::to_string(c.lambda));
    }
    if (!(c.nu_estimate >= 0.0) || !std::isfinite(c.nu_estimate)) {
        throw InvalidParameter("nu estimate must be finite and non-negative");
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) {
        throw InvalidParameter("delta must lie in (0, 1), got " + std::to_string(c.delta));
    }
    if (c.max_iterations < 1) throw InvalidParameter("max_iterations must be at least 1");
    if (!(c.tolerance > 0.0)) throw InvalidParameter("tolerance must be positive");
    if (!(c.edge_threshold >= 0.0)) throw InvalidParameter("edge threshold must be non-negative");
    if (!(c.initial_step > 0.0) || !std::isfinite(c.initial_step)) {
        throw InvalidParameter("initial step must be finite and positive");
    }
}

namespace {

double penalty(const FeatureLayout& layout, const Eigen::VectorXd& theta, bool penalize_intercept) {
    double s = 0.0;
    for (int g = penalize_intercept ? 0 : 1; g < layout.num_groups(); ++g) {
        s += theta.segment(static_cast<Eigen::Index>(layout.group_offset(g)),
                           static_cast<Eigen::Index>(layout.group_size(g)))
                 .norm();
    }
    return s;
}

double inf2_norm(const FeatureLayout& layout, const Eigen::VectorXd& v) {
    double m = 0.0;
    for (int g = 0; g < layout.num_groups(); ++g) {
        m = std::max(m, v.segment(static_cast<Eigen::Index>(layout.group_offset(g)),
                                  static_cast<Eigen::Index>(layout.group_size(g)))
                            .norm());
    }
    return m;
}

bool past(const std::optional<std::chrono::steady_clock::time_point>& deadline) {
    return deadline && std::chrono::steady_clock::now() >= *deadline;
}

}  // namespace

double regularized_objective(const PlayerObjective& objective, const Eigen::VectorXd& theta, const LearnerConfig& config) {
    return objective.loss(theta) + config.lambda * penalty(objective.layout(), theta, config.penalize_intercept);
}

FitResult fit_player(const PlayerObjective& objective, const LearnerConfig& config) {
    validate(config);
    const FeatureLayout& layout = objective.layout();
    const auto dim = static_cast<Eigen::Index>(layout.dimension());
    const double lambda = config.lambda;
    const bool fixed = config.step_rule == StepRule::fixed_lipschitz;
    const double lmax = 1e12;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd y = x;
    Eigen::VectorXd z(dim);
    Eigen::VectorXd g(dim);
    double L = fixed ? lipschitz_bound(layout) : 1.0 / config.initial_step;
    double t = 1.0;
    double fx = objective.loss(x);
    double Fx = fx + lambda * penalty(layout, x, config.penalize_intercept);

    FitResult result;
    int iter = 0;
    double mapping = std::numeric_limits<double>::infinity();
    for (; iter < config.max_iterations; ++iter) {
        if ((iter & 15) == 0 && past(config.deadline)) {
            result.timed_out = true;
            break;
        }
        const double fy = objective.loss_and_gradient(y, g);
        double fz = 0.0;
        for (;;) {
            z = y - g / L;
            group_prox_inplace(layout, z, lambda / L, config.penalize_intercept);
            fz = objective.loss(z);
            const Eigen::VectorXd diff = z - y;
            const double model = fy + g.dot(diff) + 0.5 * L * diff.squaredNorm();
            // relative slack absorbs rounding once the step is tiny
            if (fixed || fz <= model + 1e-12 * std::max(1.0, std::abs(fy)) || L >= lmax) break;
            L *= 2.0;
        }
        mapping = L * (z - y).norm();
        const double Fz = fz + lambda * penalty(layout, z, config.penalize_intercept);

        // rounding noise near the optimum must not block steps
        const bool descent = Fz <= Fx + 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(Fx));
        if (!descent && t > 1.0) {
            // function-value restart: drop momentum and retry from x
            y = x;
            t = 1.0;
            ++result.restarts;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (descent) {
            y = z + ((t - 1.0) / t_next) * (z - x);
            x = z;
            fx = fz;
            Fx = Fz;
        } else {
            y = x;
        }
        t = t_next;
        if (mapping <= config.tolerance) {
            result.converged = true;
            ++iter;
            break;
        }
    }

    if (!x.allFinite()) throw NumericError("solver produced a non-finite parameter vector");
    result.iterations = iter;
    result.mapping_norm = mapping;
    result.objective = Fx;
    Eigen::VectorXd grad;
    objective.loss_and_gradient(x, grad);
    result.gradient_norm = inf2_norm(layout, grad);
    result.theta = GroupedParameterVector(layout, std::move(x));
    return result;
}

FitResult fit_player(const WeightedProfiles& data, int player, const LearnerConfig& config) {
    data.space().validate_player(player);
    return fit_player(PlayerObjective(data, player), config);
}

FitResult fit_player(const Dataset& data, int player, const LearnerConfig& config) {
    return fit_player(WeightedProfiles::from_dataset(data), player, config);
}

double edge_cutoff(const GroupedParameterVector& theta, const LearnerConfig& config) {
    if (!config.edge_threshold_relative) return config.edge_threshold;
    if (std::isinf(config.edge_threshold)) return config.edge_threshold;
    return config.edge_threshold * theta.norm_inf2();
}

namespace {

LearnedModel assemble(const WeightedProfiles& data, std::vector<FitResult> fits, const LearnerConfig& config) {
    LearnedModel model;
    model.lambda = config.lambda;
    GameBuilder builder(data.space().counts());
    for (const FitResult& fit : fits) {
        const double cutoff = edge_cutoff(fit.theta, config);
        const FeatureLayout& layout = fit.theta.layout();
        unpack_parameters(fit.theta, builder, [&](int g) { return fit.theta.group_norm(g) > cutoff; });
        for (int g = 1; g < layout.num_groups(); ++g) {
            if (fit.theta.group_norm(g) > cutoff) model.edges.emplace_back(layout.owner(), layout.player_of_group(g));
        }
    }
    model.game = builder.build();
    model.fits = std::move(fits);
    return model;
}

}  // namespace

LearnedModel fit_game(const WeightedProfiles& data, const LearnerConfig& config) {
    validate(config);
    const int p = data.space().num_players();
    std::vector<FitResult> fits(static_cast<std::size_t>(p));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < p; ++i) {
        try {
            fits[static_cast<std::size_t>(i)] = fit_player(PlayerObjective(data, i), config);
        } catch (...) {
#pragma omp critical(polylearn_fit_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return assemble(data, std::move(fits), config);
}

LearnedModel fit_game(const Dataset& data, const LearnerConfig& config) {
    return fit_game(WeightedProfiles::from_dataset(data), config);
}

LearnedModel serial::fit_game(const WeightedProfiles& data, const LearnerConfig& config) {
    validate(config);
    const int p = data.space().num_players();
    std::vector<FitResult> fits;
    for (int i = 0; i < p; ++i) fits.push_back(fit_player(PlayerObjective(data, i), config));
    return assemble(data, std::move(fits), config);
}

// --- schedules ---------------------------------------------------------------------

namespace {

void check_pd(int p, int d) {
    if (p < 2) throw InvalidParameter("need at least 2 players, got " + std::to_string(p));
    if (d < 0 || d > p - 1) throw InvalidParameter("degree must lie in [0, p-1], got " + std::to_string(d));
}

}  // namespace

double lambda_schedule(std::uint64_t n, int p, int d, const LearnerConfig& config) {
    validate(config);
    check_pd(p, d);
    if (n < 1) throw InvalidParameter("sample size must be at least 1");
    const double log_term = std::log(2.0 * p * (d + 1) / config.delta);
    return 2.0 * (config.nu_estimate + std::sqrt(2.0 / static_cast<double>(n) * log_term));
}

std::uint64_t sample_schedule(int p, int d, int m, double c_min, const LearnerConfig& config) {
    validate(config);
    check_pd(p, d);
    if (m < 1) throw InvalidParameter("strategy count must be at least 1");
    if (!(c_min > 0.0)) throw ScheduleInfeasible("C_min must be positive, got " + std::to_string(c_min));
    const double md = static_cast<double>(m);
    const double dd = static_cast<double>(d + 1);
    const double margin = c_min / (36.0 * md * md * dd * dd);
    if (config.nu_estimate >= margin) {
        throw ScheduleInfeasible("nu = " + std::to_string(config.nu_estimate) + " is not below C_min / (36 m^2 (d+1)^2) = " +
                                 std::to_string(margin));
    }
    const double big_n = (margin - config.nu_estimate) * (margin - config.nu_estimate);
    const double first = 2.0 / big_n * std::log(2.0 * p * dd / config.delta);
    const double second = 8.0 * dd / c_min * std::log(md * (1.0 + d * md) / config.delta);
    const double need = std::max(first, second);
    if (!std::isfinite(need) || need >= 1.8e19) throw ScheduleInfeasible("required sample size overflows");
    return static_cast<std::uint64_t>(std::floor(std::max(need, 0.0))) + 1;
}

double theory_epsilon(int degree, double lambda, double c_min) {
    if (degree < 0) throw InvalidParameter("degree must be non-negative");
    if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be non-negative");
    if (!(c_min > 0.0)) throw ScheduleInfeasible("C_min must be positive, got " + std::to_string(c_min));
    return 48.0 * (degree + 1) * lambda / c_min;
}

}  // namespace polylearn
