#include "guidance_lab/mixture.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace guidance_lab {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kHullTol = 1e-10;
constexpr int kHullMaxIter = 10'000;
constexpr double kSurfaceDistanceFloor = 1e-7;

void require_alpha_bar(double alpha_bar, bool allow_one) {
    const bool upper_ok = allow_one ? alpha_bar <= 1.0 : alpha_bar < 1.0;
    if (!(alpha_bar > 0.0) || !upper_ok) {
        throw std::invalid_argument("alpha_bar must lie in (0," + std::string(allow_one ? "1]" : "1)") +
                                    ", got " + std::to_string(alpha_bar));
    }
}

void require_component(const GaussianMixture& gmm, std::size_t c) {
    if (c >= gmm.size()) {
        throw std::out_of_range("component index " + std::to_string(c) + " out of range [0," +
                                std::to_string(gmm.size()) + ")");
    }
}

double log_normal_unit(const Vector& x, const Vector& mean) {
    const double d = static_cast<double>(x.size());
    return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * (x - mean).squaredNorm();
}

// log pi_c + log N(x; sqrt(abar) mu_c, I) for every component.
std::vector<double> component_log_terms(const GaussianMixture& gmm, const Vector& x, double alpha_bar) {
    const double s = std::sqrt(alpha_bar);
    std::vector<double> terms(gmm.size());
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        terms[c] = std::log(gmm.weights()[c]) + log_normal_unit(x, s * gmm.means()[c]);
    }
    return terms;
}

double log_sum_exp(const std::vector<double>& terms) {
    const double m = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return m + std::log(acc);
}

}  // namespace

GaussianMixture::GaussianMixture(std::size_t dim, std::vector<Vector> means, std::vector<double> weights)
    : dim_(dim), means_(std::move(means)), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("mixture dim must be positive");
    if (means_.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (means_.size() != weights_.size()) {
        throw std::invalid_argument("mixture has " + std::to_string(means_.size()) + " means but " +
                                    std::to_string(weights_.size()) + " weights");
    }
    for (std::size_t c = 0; c < means_.size(); ++c) {
        require_dim(means_[c], dim_, ("mean " + std::to_string(c)).c_str());
        if (!means_[c].allFinite()) throw std::invalid_argument("mean " + std::to_string(c) + " is not finite");
        if (!(weights_[c] > 0.0)) {
            throw std::invalid_argument("weight " + std::to_string(c) + " must be positive");
        }
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > kWeightSumTol) {
        throw std::invalid_argument("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    }
}

GaussianMixture GaussianMixture::uniform(std::vector<Vector> means) {
    if (means.empty()) throw std::invalid_argument("mixture needs at least one component");
    const auto dim = static_cast<std::size_t>(means.front().size());
    std::vector<double> weights(means.size(), 1.0 / static_cast<double>(means.size()));
    return GaussianMixture(dim, std::move(means), std::move(weights));
}

const Vector& GaussianMixture::mean(std::size_t c) const {
    require_component(*this, c);
    return means_[c];
}

double log_density_t(const GaussianMixture& gmm, const Vector& x, double alpha_bar, Condition condition) {
    require_dim(x, gmm.dim(), "x");
    require_alpha_bar(alpha_bar, true);
    if (condition) {
        require_component(gmm, *condition);
        return log_normal_unit(x, std::sqrt(alpha_bar) * gmm.means()[*condition]);
    }
    return log_sum_exp(component_log_terms(gmm, x, alpha_bar));
}

Vector score_conditional(const GaussianMixture& gmm, const Vector& x, double alpha_bar, std::size_t c) {
    require_dim(x, gmm.dim(), "x");
    require_alpha_bar(alpha_bar, true);
    require_component(gmm, c);
    return std::sqrt(alpha_bar) * gmm.means()[c] - x;
}

std::vector<double> posterior_weights(const GaussianMixture& gmm, const Vector& x, double alpha_bar) {
    require_dim(x, gmm.dim(), "x");
    require_alpha_bar(alpha_bar, true);
    auto terms = component_log_terms(gmm, x, alpha_bar);
    const double m = *std::max_element(terms.begin(), terms.end());
    double total = 0.0;
    for (double& t : terms) {
        t = std::exp(t - m);
        total += t;
    }
    for (double& t : terms) t /= total;
    return terms;
}

namespace {

Vector weighted_mean(const GaussianMixture& gmm, const std::vector<double>& post) {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(gmm.dim()));
    for (std::size_t c = 0; c < gmm.size(); ++c) acc += post[c] * gmm.means()[c];
    return acc;
}

}  // namespace

Vector score_unconditional(const GaussianMixture& gmm, const Vector& x, double alpha_bar) {
    const auto post = posterior_weights(gmm, x, alpha_bar);
    return std::sqrt(alpha_bar) * weighted_mean(gmm, post) - x;
}

Vector posterior_mean_x0(const GaussianMixture& gmm, const Vector& x, double alpha_bar, Condition condition) {
    require_dim(x, gmm.dim(), "x");
    require_alpha_bar(alpha_bar, false);
    const double beta_bar = 1.0 - alpha_bar;
    const double s = std::sqrt(alpha_bar);
    if (condition) {
        require_component(gmm, *condition);
        return beta_bar * gmm.means()[*condition] + s * x;
    }
    return beta_bar * weighted_mean(gmm, posterior_weights(gmm, x, alpha_bar)) + s * x;
}

Vector finite_diff_score(const GaussianMixture& gmm, const Vector& x, double alpha_bar, Condition condition,
                         double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
    require_dim(x, gmm.dim(), "x");
    Vector grad(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = log_density_t(gmm, probe, alpha_bar, condition);
        probe[i] = x[i] - h;
        const double down = log_density_t(gmm, probe, alpha_bar, condition);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

Vector project_to_simplex(const Vector& v) {
    const Eigen::Index n = v.size();
    if (n == 0) throw std::invalid_argument("cannot project an empty vector onto the simplex");
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += sorted[static_cast<std::size_t>(k)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).max(0.0).matrix();
}

namespace {

// Wolfe's minimum-norm-point algorithm on the points shifted by -target.
// Returns barycentric weights of the nearest hull point; finite and exact up
// to rounding.
Vector min_norm_point(const Eigen::MatrixXd& points, const Vector& target) {
    const Eigen::Index k = points.cols();
    const Eigen::MatrixXd p = points.colwise() - target;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) scale = std::max(scale, p.col(i).squaredNorm());
    const double eps = 1e-14 * std::max(scale, 1.0);

    Eigen::Index start = 0;
    p.colwise().squaredNorm().minCoeff(&start);
    std::vector<Eigen::Index> corral{start};
    std::vector<double> weights{1.0};
    Vector x = p.col(start);

    auto weights_vector = [&] {
        Vector lambda = Vector::Zero(k);
        for (std::size_t i = 0; i < corral.size(); ++i) lambda[corral[i]] = weights[i];
        return lambda;
    };

    for (int major = 0; major < kHullMaxIter; ++major) {
        if (x.squaredNorm() <= eps) break;
        Eigen::Index j = 0;
        (p.transpose() * x).minCoeff(&j);
        if (x.squaredNorm() - p.col(j).dot(x) <= eps) break;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;
        corral.push_back(j);
        weights.push_back(0.0);

        for (int minor = 0; minor < kHullMaxIter; ++minor) {
            // Affine minimiser over the corral.
            const auto s = static_cast<Eigen::Index>(corral.size());
            Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(s + 1, s + 1);
            Vector rhs = Vector::Zero(s + 1);
            for (Eigen::Index a = 0; a < s; ++a) {
                for (Eigen::Index b = 0; b < s; ++b) sys(a, b) = p.col(corral[a]).dot(p.col(corral[b]));
                sys(a, s) = 1.0;
                sys(s, a) = 1.0;
            }
            rhs[s] = 1.0;
            const Vector alpha = sys.completeOrthogonalDecomposition().solve(rhs).head(s);
            if (alpha.minCoeff() > 1e-15) {
                for (Eigen::Index a = 0; a < s; ++a) weights[static_cast<std::size_t>(a)] = alpha[a];
                break;
            }
            // Step towards the affine minimiser until a weight hits zero.
            double theta = 1.0;
            for (Eigen::Index a = 0; a < s; ++a) {
                const double w = weights[static_cast<std::size_t>(a)];
                if (alpha[a] <= 1e-15 && w - alpha[a] > 0.0) theta = std::min(theta, w / (w - alpha[a]));
            }
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_w;
            for (Eigen::Index a = 0; a < s; ++a) {
                const double w = theta * alpha[a] + (1.0 - theta) * weights[static_cast<std::size_t>(a)];
                if (w > 1e-15) {
                    kept.push_back(corral[static_cast<std::size_t>(a)]);
                    kept_w.push_back(w);
                }
            }
            const double total = std::accumulate(kept_w.begin(), kept_w.end(), 0.0);
            for (double& w : kept_w) w /= total;
            corral = std::move(kept);
            weights = std::move(kept_w);
            if (corral.size() == 1) break;
        }
        x = p * weights_vector();
    }
    return weights_vector();
}

struct HullProjection {
    Vector point;
    double distance = 0.0;
};

// Minimise ||M lambda - target||^2 over the simplex. Accelerated projected
// gradient, then an exact solve on the detected support.
HullProjection project_onto_hull(const Eigen::MatrixXd& points, const Vector& target) {
    const Eigen::Index k = points.cols();
    const Eigen::MatrixXd gram = points.transpose() * points;
    const Vector linear = points.transpose() * target;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lipschitz;

    Vector lambda = Vector::Constant(k, 1.0 / static_cast<double>(k));
    Vector momentum = lambda;
    double t = 1.0;
    auto objective = [&](const Vector& l) { return 0.5 * (points * l - target).squaredNorm(); };
    double last = objective(lambda);

    for (int iter = 0; iter < kHullMaxIter; ++iter) {
        const Vector grad = gram * momentum - linear;
        Vector next = project_to_simplex(momentum - step * grad);
        const double value = objective(next);
        if (value > last) {
            // Restart the momentum when the objective goes up.
            momentum = lambda;
            t = 1.0;
            next = project_to_simplex(lambda - step * (gram * lambda - linear));
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double change = (next - lambda).lpNorm<Eigen::Infinity>();
        momentum = next + ((t - 1.0) / t_next) * (next - lambda);
        lambda = std::move(next);
        t = t_next;
        last = objective(lambda);
        if (change < kHullTol && iter > 0) break;
    }

    // Projected gradient stalls on ill-conditioned point sets, so finish
    // with the exact minimum-norm-point solve.
    const Vector exact = min_norm_point(points, target);
    // Objective values agree to rounding near the optimum, so compare with
    // a slack: the active-set weights pin the point along the face far more
    // precisely than the objective can.
    if (objective(exact) <= last + 1e-12 * std::max(1.0, target.squaredNorm())) lambda = exact;

    HullProjection out;
    out.point = points * lambda;
    out.distance = (out.point - target).norm();
    return out;
}

}  // namespace

SurfaceQuery surface_certificate(const GaussianMixture& gmm, std::size_t component_index) {
    if (gmm.size() < 2) throw std::invalid_argument("surface classification needs at least two components");
    require_component(gmm, component_index);

    const Vector& target = gmm.means()[component_index];
    SurfaceQuery query;

    bool all_coincide = true;
    for (const auto& m : gmm.means()) {
        if ((m - gmm.means().front()).norm() > kSurfaceDistanceFloor) all_coincide = false;
    }
    if (all_coincide) {
        query.status = "not a surface class: all component means coincide";
        return query;
    }

    Eigen::MatrixXd others(static_cast<Eigen::Index>(gmm.dim()), static_cast<Eigen::Index>(gmm.size() - 1));
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        if (c != component_index) others.col(col++) = gmm.means()[c];
    }
    const auto hull = project_onto_hull(others, target);
    query.hull_distance = hull.distance;
    if (hull.distance < kSurfaceDistanceFloor) {
        query.status = "not a surface class: mean lies in the convex hull of the other means";
        return query;
    }

    SurfaceCertificate cert;
    cert.component_index = component_index;
    cert.normal = (target - hull.point) / hull.distance;
    cert.offset = -cert.normal.dot(target);
    cert.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        if (c == component_index) continue;
        cert.min_margin = std::min(cert.min_margin, -(cert.normal.dot(gmm.means()[c]) + cert.offset));
    }
    if (!(cert.min_margin > 0.0)) {
        query.status = "not a surface class: separating margin is not positive";
        return query;
    }
    query.certificate = std::move(cert);
    query.status = "surface class";
    return query;
}

bool certificate_holds(const GaussianMixture& gmm, const SurfaceCertificate& cert) {
    if (cert.component_index >= gmm.size()) return false;
    if (static_cast<std::size_t>(cert.normal.size()) != gmm.dim()) return false;
    if (std::abs(cert.normal.norm() - 1.0) > 1e-12) return false;
    if (std::abs(cert.normal.dot(gmm.means()[cert.component_index]) + cert.offset) > 1e-9) return false;
    if (!(cert.min_margin > 0.0)) return false;
    for (std::size_t c = 0; c < gmm.size(); ++c) {
        if (c == cert.component_index) continue;
        if (cert.normal.dot(gmm.means()[c]) + cert.offset > -cert.min_margin + 1e-12) return false;
    }
    return true;
}

}  // namespace guidance_lab
