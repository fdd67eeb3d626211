#include "polylearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polylearn/error.hpp"
#include "polylearn/linalg.hpp"

namespace polylearn {

// --- WeightedProfiles ----------------------------------------------------------

WeightedProfiles WeightedProfiles::from_dataset(const Dataset& data) {
    if (data.empty()) throw InvalidInput("dataset is empty");
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto ra = data.row(a);
        auto rb = data.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });

    WeightedProfiles out;
    out.space_ = data.space();
    for (std::size_t k = 0; k < n; ++k) {
        auto row = data.row(order[k]);
        if (k > 0 && std::ranges::equal(row, data.row(order[k - 1]))) {
            out.weights_.back() += 1.0;
        } else {
            out.flat_.insert(out.flat_.end(), row.begin(), row.end());
            out.weights_.push_back(1.0);
        }
    }
    out.total_ = static_cast<double>(n);
    return out;
}

WeightedProfiles WeightedProfiles::from_counts(const ProfileSpace& space, std::span<const std::uint64_t> counts) {
    if (space.overflows() || counts.size() != space.size_saturated()) {
        throw InvalidInput("count vector does not match the profile space " + space.describe_size());
    }
    WeightedProfiles out;
    out.space_ = space;
    Profile x(static_cast<std::size_t>(space.num_players()));
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        space.decode(k, x);
        out.flat_.insert(out.flat_.end(), x.begin(), x.end());
        out.weights_.push_back(static_cast<double>(counts[k]));
        out.total_ += static_cast<double>(counts[k]);
    }
    if (out.weights_.empty()) throw InvalidInput("count vector is all zero");
    return out;
}

WeightedProfiles WeightedProfiles::from_pmf(const ProfileSpace& space, std::span<const double> pmf) {
    if (space.overflows() || pmf.size() != space.size_saturated()) {
        throw InvalidDistribution("pmf table does not match the profile space " + space.describe_size());
    }
    WeightedProfiles out;
    out.space_ = space;
    Profile x(static_cast<std::size_t>(space.num_players()));
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        if (!(pmf[k] >= 0.0)) throw InvalidDistribution("pmf has a negative entry");
        if (pmf[k] == 0.0) continue;
        space.decode(k, x);
        out.flat_.insert(out.flat_.end(), x.begin(), x.end());
        out.weights_.push_back(pmf[k]);
        out.total_ += pmf[k];
    }
    if (out.weights_.empty()) throw InvalidDistribution("pmf is all zero");
    return out;
}

// --- per-sample reference -----------------------------------------------------------

namespace {

void check_theta(const GroupedParameterVector& theta, const ProfileSpace& space) {
    if (theta.layout().strategy_counts() != space.counts()) {
        throw InvalidInput("parameter layout does not match the data's strategy counts");
    }
}

/// log sum exp of the scores plus the scores themselves.
double scores_lse(const GroupedParameterVector& theta, ProfileView x, std::vector<double>& z) {
    const int mi = theta.layout().owner_strategies();
    z.resize(static_cast<std::size_t>(mi));
    for (int a = 0; a < mi; ++a) z[static_cast<std::size_t>(a)] = theta.score(a, x);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    return mx + std::log(s);
}

}  // namespace

std::vector<double> softmax_all(const GroupedParameterVector& theta, ProfileView x) {
    ProfileSpace(theta.layout().strategy_counts()).validate(x);
    std::vector<double> z;
    scores_lse(theta, x, z);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) sum += (v = std::exp(v - top));
    for (double& v : z) v /= sum;
    return z;
}

double softmax_sigma(const GroupedParameterVector& theta, ProfileView x, Strategy a) {
    ProfileSpace(theta.layout().strategy_counts()).validate_strategy(theta.owner(), a);
    return softmax_all(theta, x)[static_cast<std::size_t>(a)];
}

double sample_loss(const GroupedParameterVector& theta, ProfileView x) {
    ProfileSpace(theta.layout().strategy_counts()).validate(x);
    std::vector<double> z;
    const double lse = scores_lse(theta, x, z);
    // lse >= every score, so clamp rounding below zero.
    return std::max(0.0, lse - z[static_cast<std::size_t>(x[static_cast<std::size_t>(theta.owner())])]);
}

GroupedParameterVector sample_gradient(const GroupedParameterVector& theta, ProfileView x) {
    const auto& counts = theta.layout().strategy_counts();
    const int i = theta.owner();
    const std::vector<double> sigma = softmax_all(theta, x);
    Eigen::VectorXd g = -featurize(counts, i, x[static_cast<std::size_t>(i)], x).flat();
    for (int a = 0; a < theta.layout().owner_strategies(); ++a) {
        g += sigma[static_cast<std::size_t>(a)] * featurize(counts, i, a, x).flat();
    }
    return GroupedParameterVector(theta.layout(), std::move(g));
}

double empirical_loss(const GroupedParameterVector& theta, const Dataset& data) {
    if (data.empty()) throw InvalidInput("dataset is empty");
    check_theta(theta, data.space());
    double s = 0.0;
    for (std::size_t l = 0; l < data.size(); ++l) s += sample_loss(theta, data.row(l));
    return s / static_cast<double>(data.size());
}

GroupedParameterVector gradient(const GroupedParameterVector& theta, const Dataset& data) {
    if (data.empty()) throw InvalidInput("dataset is empty");
    check_theta(theta, data.space());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta.dimension()));
    for (std::size_t l = 0; l < data.size(); ++l) g += sample_gradient(theta, data.row(l)).values();
    g /= static_cast<double>(data.size());
    return GroupedParameterVector(theta.layout(), std::move(g));
}

Eigen::MatrixXd hessian(const GroupedParameterVector& theta, const Dataset& data, const HessianOptions& options) {
    if (data.empty()) throw InvalidInput("dataset is empty");
    check_theta(theta, data.space());
    const std::size_t dim = theta.dimension();
    if (dim > options.dimension_cap) {
        throw CapacityError("Hessian dimension " + std::to_string(dim) + " exceeds the cap " +
                                std::to_string(options.dimension_cap),
                            std::to_string(dim));
    }
    const auto& counts = theta.layout().strategy_counts();
    const int i = theta.owner();
    const int mi = theta.layout().owner_strategies();
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t l = 0; l < data.size(); ++l) {
        auto x = data.row(l);
        const std::vector<double> sigma = softmax_all(theta, x);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (int a = 0; a < mi; ++a) {
            const Eigen::VectorXd f = featurize(counts, i, a, x).flat();
            h += sigma[static_cast<std::size_t>(a)] * f * f.transpose();
            mean += sigma[static_cast<std::size_t>(a)] * f;
        }
        h -= mean * mean.transpose();
    }
    return h / static_cast<double>(data.size());
}

// --- PlayerObjective ------------------------------------------------------------------

PlayerObjective::PlayerObjective(const WeightedProfiles& data, int player)
    : layout_(data.space().counts(), player) {
    if (data.size() == 0) throw InvalidInput("dataset is empty");
    mi_ = layout_.owner_strategies();
    pairs_ = layout_.num_groups() - 1;
    for (int g = 1; g <= pairs_; ++g) {
        group_stride_.push_back(static_cast<std::size_t>(layout_.strategy_counts()[static_cast<std::size_t>(layout_.player_of_group(g))]));
    }

    // Group profiles by opponent context (x with x_i masked).
    const auto i = static_cast<std::size_t>(player);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    auto context_less = [&](std::size_t a, std::size_t b) {
        auto xa = data.profile(a);
        auto xb = data.profile(b);
        for (std::size_t k = 0; k < xa.size(); ++k) {
            if (k == i) continue;
            if (xa[k] != xb[k]) return xa[k] < xb[k];
        }
        return false;
    };
    std::stable_sort(order.begin(), order.end(), context_less);

    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto x = data.profile(order[k]);
        const bool fresh = k == 0 || context_less(order[k - 1], order[k]);
        if (fresh) {
            std::size_t g = 1;
            for (int j = 0; j < layout_.num_players(); ++j) {
                if (j == player) continue;
                bases_.push_back(layout_.group_offset(static_cast<int>(g)) + static_cast<std::size_t>(x[static_cast<std::size_t>(j)]));
                ++g;
            }
            action_weights_.insert(action_weights_.end(), static_cast<std::size_t>(mi_), 0.0);
            totals_.push_back(0.0);
        }
        const double w = data.weight(order[k]);
        action_weights_[action_weights_.size() - static_cast<std::size_t>(mi_) + static_cast<std::size_t>(x[i])] += w;
        totals_.back() += w;
        total_weight_ += w;
    }
}

template <class Visit>
void PlayerObjective::for_each_context(const Eigen::VectorXd& theta, std::vector<double>& scores, Visit&& visit) const {
    const auto m = static_cast<std::size_t>(mi_);
    const auto pairs = static_cast<std::size_t>(pairs_);
    scores.resize(m);
    for (std::size_t c = 0; c < totals_.size(); ++c) {
        const std::size_t* base = bases_.data() + c * pairs;
        for (std::size_t a = 0; a < m; ++a) {
            double z = theta[static_cast<Eigen::Index>(a)];
            for (std::size_t g = 0; g < pairs; ++g) z += theta[static_cast<Eigen::Index>(base[g] + a * group_stride_[g])];
            scores[a] = z;
        }
        double mx = scores[0];
        for (std::size_t a = 1; a < m; ++a) mx = std::max(mx, scores[a]);
        double s = 0.0;
        for (std::size_t a = 0; a < m; ++a) s += std::exp(scores[a] - mx);
        visit(c, base, action_weights_.data() + c * m, totals_[c], mx + std::log(s));
    }
}

double PlayerObjective::loss(const Eigen::VectorXd& theta) const {
    std::vector<double> z;
    double total = 0.0;
    for_each_context(theta, z, [&](std::size_t, const std::size_t*, const double* cw, double ctotal, double lse) {
        double s = ctotal * lse;
        for (std::size_t a = 0; a < z.size(); ++a) s -= cw[a] * z[a];
        total += s;
    });
    return total / total_weight_;
}

double PlayerObjective::loss_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    grad.setZero(static_cast<Eigen::Index>(layout_.dimension()));
    const auto pairs = static_cast<std::size_t>(pairs_);
    std::vector<double> z;
    double total = 0.0;
    for_each_context(theta, z, [&](std::size_t, const std::size_t* base, const double* cw, double ctotal, double lse) {
        double s = ctotal * lse;
        for (std::size_t a = 0; a < z.size(); ++a) {
            s -= cw[a] * z[a];
            const double r = ctotal * std::exp(z[a] - lse) - cw[a];
            grad[static_cast<Eigen::Index>(a)] += r;
            for (std::size_t g = 0; g < pairs; ++g) grad[static_cast<Eigen::Index>(base[g] + a * group_stride_[g])] += r;
        }
        total += s;
    });
    grad /= total_weight_;
    return total / total_weight_;
}

Eigen::MatrixXd PlayerObjective::hessian(const Eigen::VectorXd& theta, const HessianOptions& options) const {
    const std::size_t dim = layout_.dimension();
    if (dim > options.dimension_cap) {
        throw CapacityError("Hessian dimension " + std::to_string(dim) + " exceeds the cap " +
                                std::to_string(options.dimension_cap),
                            std::to_string(dim));
    }
    const auto d = static_cast<Eigen::Index>(dim);
    const auto pairs = static_cast<std::size_t>(pairs_);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    std::vector<double> z;
    std::vector<Eigen::Index> idx;
    std::vector<double> val;
    for_each_context(theta, z, [&](std::size_t, const std::size_t* base, const double*, double ctotal, double lse) {
        // mean feature mu = sum_a sigma_a f_a, one entry per (a, group)
        idx.clear();
        val.clear();
        for (std::size_t a = 0; a < z.size(); ++a) {
            const double w = std::exp(z[a] - lse);
            idx.push_back(static_cast<Eigen::Index>(a));
            val.push_back(w);
            for (std::size_t g = 0; g < pairs; ++g) {
                idx.push_back(static_cast<Eigen::Index>(base[g] + a * group_stride_[g]));
                val.push_back(w);
            }
        }
        const std::size_t per = pairs + 1;
        // sum_a sigma_a f_a f_a^T: f_a's ones are idx[a*per .. a*per+per)
        for (std::size_t a = 0; a < z.size(); ++a) {
            const double w = ctotal * val[a * per];
            for (std::size_t r = 0; r < per; ++r)
                for (std::size_t c = 0; c < per; ++c) h(idx[a * per + r], idx[a * per + c]) += w;
        }
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) h(idx[r], idx[c]) -= ctotal * val[r] * val[c];
    });
    return h / total_weight_;
}

// --- prox ------------------------------------------------------------------------------

void group_prox_inplace(const FeatureLayout& layout, Eigen::VectorXd& v, double t, bool penalize_intercept) {
    if (!(t >= 0.0)) throw InvalidParameter("prox threshold must be non-negative, got " + std::to_string(t));
    for (int g = penalize_intercept ? 0 : 1; g < layout.num_groups(); ++g) {
        auto block = v.segment(static_cast<Eigen::Index>(layout.group_offset(g)),
                               static_cast<Eigen::Index>(layout.group_size(g)));
        const double norm = block.norm();
        if (norm <= t) {
            block.setZero();
        } else {
            block *= 1.0 - t / norm;
        }
    }
}

GroupedParameterVector group_prox(const GroupedParameterVector& v, double t, bool penalize_intercept) {
    Eigen::VectorXd out = v.values();
    group_prox_inplace(v.layout(), out, t, penalize_intercept);
    return GroupedParameterVector(v.layout(), std::move(out));
}

// --- diagnostics ---------------------------------------------------------------------

std::vector<std::size_t> support_indices(const FeatureLayout& layout, std::span<const int> groups) {
    std::vector<int> gs(groups.begin(), groups.end());
    gs.push_back(0);
    std::sort(gs.begin(), gs.end());
    gs.erase(std::unique(gs.begin(), gs.end()), gs.end());
    std::vector<std::size_t> out;
    for (int g : gs) {
        if (g < 0 || g >= layout.num_groups()) throw InvalidInput("group index out of range");
        for (std::size_t k = 0; k < layout.group_size(g); ++k) out.push_back(layout.group_offset(g) + k);
    }
    return out;
}

std::vector<int> support_groups(const GroupedParameterVector& theta) {
    std::vector<int> gs = theta.nonzero_groups();
    if (gs.empty() || gs.front() != 0) gs.insert(gs.begin(), 0);
    return gs;
}

namespace {

/// Directions v with v^T f^i(a, x_{-i}) independent of a: the all-ones vector
/// on group 0, and for each pairwise group and opponent action b the
/// indicator of the entries (., b).
Eigen::MatrixXd gauge_directions(const FeatureLayout& layout, std::span<const int> groups,
                                 std::span<const std::size_t> indices) {
    std::vector<Eigen::VectorXd> cols;
    const auto k = static_cast<Eigen::Index>(indices.size());
    auto position = [&](std::size_t full_index) {
        auto it = std::lower_bound(indices.begin(), indices.end(), full_index);
        return static_cast<Eigen::Index>(it - indices.begin());
    };
    const int mi = layout.owner_strategies();
    for (int g : groups) {
        if (g == 0) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
            for (int a = 0; a < mi; ++a) v(position(layout.intercept_index(a))) = 1.0;
            cols.push_back(v.normalized());
            continue;
        }
        const int j = layout.player_of_group(g);
        const int mj = layout.strategy_counts()[static_cast<std::size_t>(j)];
        for (int b = 0; b < mj; ++b) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
            for (int a = 0; a < mi; ++a) v(position(layout.pair_index(j, a, b))) = 1.0;
            cols.push_back(v.normalized());
        }
        // moving a per-action constant between the intercept and this block
        for (int a = 0; a < mi; ++a) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
            v(position(layout.intercept_index(a))) = -1.0;
            for (int b = 0; b < mj; ++b) v(position(layout.pair_index(j, a, b))) = 1.0;
            cols.push_back(v.normalized());
        }
    }
    Eigen::MatrixXd out(k, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cols[c];
    return out;
}

Eigen::MatrixXd diagnostic_hessian(const GroupedParameterVector& theta, const WeightedProfiles& data, bool support_only,
                                   std::vector<int>& groups, std::vector<std::size_t>& indices,
                                   const HessianOptions& options) {
    if (theta.layout().strategy_counts() != data.space().counts()) {
        throw InvalidInput("parameter layout does not match the data's strategy counts");
    }
    PlayerObjective objective(data, theta.owner());
    Eigen::MatrixXd h = objective.hessian(theta.values(), options);
    if (support_only) {
        groups = support_groups(theta);
    } else {
        groups.resize(static_cast<std::size_t>(theta.layout().num_groups()));
        std::iota(groups.begin(), groups.end(), 0);
    }
    indices = support_indices(theta.layout(), groups);
    return support_only ? linalg::principal_submatrix(h, indices) : h;
}

}  // namespace

double diagnostics_min_eigen(const GroupedParameterVector& theta, const WeightedProfiles& data, bool support_only,
                             HessianSubspace subspace, const HessianOptions& options) {
    std::vector<int> groups;
    std::vector<std::size_t> indices;
    Eigen::MatrixXd h = diagnostic_hessian(theta, data, support_only, groups, indices, options);
    if (subspace == HessianSubspace::full) return linalg::min_eigenvalue(h);
    const Eigen::MatrixXd q = linalg::orthogonal_complement(gauge_directions(theta.layout(), groups, indices));
    if (q.cols() == 0) throw NumericError("identifiable subspace is empty");
    const Eigen::MatrixXd reduced = q.transpose() * h * q;
    return linalg::min_eigenvalue(0.5 * (reduced + reduced.transpose()));
}

double diagnostics_max_eigen(const GroupedParameterVector& theta, const WeightedProfiles& data, bool support_only,
                             const HessianOptions& options) {
    std::vector<int> groups;
    std::vector<std::size_t> indices;
    return linalg::max_eigenvalue(diagnostic_hessian(theta, data, support_only, groups, indices, options));
}

double lipschitz_bound(const FeatureLayout& layout) { return static_cast<double>(layout.num_groups()); }

}  // namespace polylearn
