#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "polylearn/features.hpp"
#include "polylearn/game.hpp"
#include "polylearn/observation.hpp"

namespace polylearn {

// --- training data -------------------------------------------------------------

/// Distinct profiles with nonnegative weights. Built from a Dataset (counts),
/// a multinomial count vector, or an exact pmf table (population quantities).
class WeightedProfiles {
public:
    WeightedProfiles() = default;

    static WeightedProfiles from_dataset(const Dataset& data);
    static WeightedProfiles from_counts(const ProfileSpace& space, std::span<const std::uint64_t> counts);
    static WeightedProfiles from_pmf(const ProfileSpace& space, std::span<const double> pmf);

    const ProfileSpace& space() const noexcept { return space_; }
    std::size_t size() const noexcept { return weights_.size(); }
    ProfileView profile(std::size_t k) const {
        const auto p = static_cast<std::size_t>(space_.num_players());
        return ProfileView(flat_).subspan(k * p, p);
    }
    double weight(std::size_t k) const { return weights_[k]; }
    double total_weight() const noexcept { return total_; }

private:
    ProfileSpace space_;
    std::vector<Strategy> flat_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

// --- per-sample reference formulas ------------------------------------------------

/// sigma^i(a, x_{-i}; theta), max-subtracted.
double softmax_sigma(const GroupedParameterVector& theta, ProfileView x, Strategy a);
std::vector<double> softmax_all(const GroupedParameterVector& theta, ProfileView x);

/// l^i(x; theta) = -theta^T f^i(x_i, x_{-i}) + log sum_a exp(theta^T f^i(a, x_{-i})).
double sample_loss(const GroupedParameterVector& theta, ProfileView x);

/// Gradient of sample_loss: -f^i(x_i, .) + sum_a sigma_a f^i(a, .).
GroupedParameterVector sample_gradient(const GroupedParameterVector& theta, ProfileView x);

/// L^i(D; theta), averaged sample by sample. Throws InvalidInput on an empty dataset.
double empirical_loss(const GroupedParameterVector& theta, const Dataset& data);
GroupedParameterVector gradient(const GroupedParameterVector& theta, const Dataset& data);

struct HessianOptions {
    std::size_t dimension_cap = 4096;
};

/// Per-sample Hessian blocks summed densely:
/// sum_a sigma_a f_a f_a^T - (sum_a sigma_a f_a)(sum_a sigma_a f_a)^T.
Eigen::MatrixXd hessian(const GroupedParameterVector& theta, const Dataset& data, const HessianOptions& options = {});

// --- compressed objective ---------------------------------------------------------

/// Player i's loss aggregated over distinct opponent contexts x_{-i}. Each
/// context keeps the weight of every own action, so a pass costs
/// O(contexts * m_i * p) however many samples were drawn.
class PlayerObjective {
public:
    PlayerObjective(const WeightedProfiles& data, int player);

    const FeatureLayout& layout() const noexcept { return layout_; }
    std::size_t num_contexts() const noexcept { return totals_.size(); }
    double total_weight() const noexcept { return total_weight_; }

    double loss(const Eigen::VectorXd& theta) const;
    /// Returns the loss and writes the gradient into grad (resized as needed).
    double loss_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta, const HessianOptions& options = {}) const;

private:
    template <class Visit>
    void for_each_context(const Eigen::VectorXd& theta, std::vector<double>& scores, Visit&& visit) const;

    FeatureLayout layout_;
    int mi_ = 0;
    int pairs_ = 0;
    std::vector<std::size_t> group_stride_;   // m_j for each pairwise group
    std::vector<std::size_t> bases_;          // contexts x pairs: offset_g + x_j
    std::vector<double> action_weights_;      // contexts x m_i
    std::vector<double> totals_;              // contexts
    double total_weight_ = 0.0;
};

// --- proximal operator -------------------------------------------------------------

/// Block soft-thresholding: each group g becomes max(0, 1 - t / ||v_g||) v_g.
/// Group 0 is left untouched when penalize_intercept is false.
GroupedParameterVector group_prox(const GroupedParameterVector& v, double t, bool penalize_intercept = true);
void group_prox_inplace(const FeatureLayout& layout, Eigen::VectorXd& v, double t, bool penalize_intercept);

// --- solver -----------------------------------------------------------------------

enum class StepRule { fixed_lipschitz, backtracking };

struct LearnerConfig {
    double lambda = 0.1;
    /// Assumed nu for the theory schedules (unobservable; 0 by default).
    double nu_estimate = 0.0;
    double delta = 0.01;
    int max_iterations = 20000;
    /// Stop once the proximal-gradient mapping norm drops to this value.
    double tolerance = 1e-7;
    /// Edge cutoff on group norms; see edge_threshold_relative.
    double edge_threshold = 1e-6;
    /// When true the cutoff is edge_threshold * (largest group norm of theta^i).
    bool edge_threshold_relative = true;
    StepRule step_rule = StepRule::backtracking;
    double initial_step = 1.0;
    bool penalize_intercept = true;
    /// Wall-clock deadline; a fit that passes it stops with timed_out set.
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

void validate(const LearnerConfig& config);

struct FitResult {
    GroupedParameterVector theta;
    double objective = 0.0;
    int iterations = 0;
    /// ||grad L^i(theta_hat)||_{inf,2} of the smooth part.
    double gradient_norm = 0.0;
    double mapping_norm = 0.0;
    int restarts = 0;
    bool converged = false;
    bool timed_out = false;
};

/// Accelerated proximal gradient with backtracking and function-value
/// restart on min L^i(theta) + lambda ||theta||_{1,2}, starting from zero.
FitResult fit_player(const PlayerObjective& objective, const LearnerConfig& config);
FitResult fit_player(const WeightedProfiles& data, int player, const LearnerConfig& config);
FitResult fit_player(const Dataset& data, int player, const LearnerConfig& config);

/// Regularized objective L^i(theta) + lambda ||theta||_{1,2} (intercept per config).
double regularized_objective(const PlayerObjective& objective, const Eigen::VectorXd& theta, const LearnerConfig& config);

struct LearnedModel {
    std::vector<FitResult> fits;
    std::vector<std::pair<int, int>> edges;
    PolymatrixGame game;
    double lambda = 0.0;
};

/// Fits every player (OpenMP across players) and assembles the learned game.
LearnedModel fit_game(const WeightedProfiles& data, const LearnerConfig& config);
LearnedModel fit_game(const Dataset& data, const LearnerConfig& config);

namespace serial {
LearnedModel fit_game(const WeightedProfiles& data, const LearnerConfig& config);
}

/// Group-norm cutoff used for player i's groups under config.
double edge_cutoff(const GroupedParameterVector& theta, const LearnerConfig& config);

// --- schedules --------------------------------------------------------------------

/// lambda = 2 (nu + sqrt((2/n) log(2 p (d+1) / delta))).
double lambda_schedule(std::uint64_t n, int p, int d, const LearnerConfig& config);

/// max{ (2/N) log(2p(d+1)/delta), (8(d+1)/C_min) log(m(1+dm)/delta) },
/// N = (C_min / (36 m^2 (d+1)^2) - nu)^2. Rounded up.
std::uint64_t sample_schedule(int p, int d, int m, double c_min, const LearnerConfig& config);

/// 48 (d_i + 1) lambda / C_min.
double theory_epsilon(int degree, double lambda, double c_min);

// --- diagnostics -------------------------------------------------------------------

/// Indices of group 0 and of every group in `groups`, ascending.
std::vector<std::size_t> support_indices(const FeatureLayout& layout, std::span<const int> groups);

/// Support groups of theta: the intercept plus every nonzero pairwise group.
std::vector<int> support_groups(const GroupedParameterVector& theta);

enum class HessianSubspace {
    /// The Hessian as is.
    full,
    /// Orthogonal complement of the directions that leave every softmax
    /// unchanged: a constant on the whole intercept, a constant down one
    /// opponent-action column of a block, or a per-action constant moved
    /// from the intercept into a block.
    identifiable,
};

/// lambda_min of the Hessian at theta weighted by data (counts or a pmf),
/// optionally restricted to theta's support.
double diagnostics_min_eigen(const GroupedParameterVector& theta, const WeightedProfiles& data, bool support_only,
                             HessianSubspace subspace = HessianSubspace::full, const HessianOptions& options = {});

double diagnostics_max_eigen(const GroupedParameterVector& theta, const WeightedProfiles& data, bool support_only,
                             const HessianOptions& options = {});

/// Analytic Lipschitz bound of the smooth loss gradient: the number of groups p.
double lipschitz_bound(const FeatureLayout& layout);

}  // namespace polylearn
