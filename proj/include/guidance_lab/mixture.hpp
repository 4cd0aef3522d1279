#pragma once

// Closed-form densities, scores and posterior quantities for Gaussian
// mixtures with identity component covariance:
//
//   p0(x) = sum_c pi_c N(x; mu_c, I)
//
// Under the variance-preserving forward process the noised marginals stay
// unit-covariance, p_t(x|c) = N(x; sqrt(abar) mu_c, I), which is what every
// routine below evaluates.

#include "guidance_lab/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace guidance_lab {

class GaussianMixture {
public:
    // Throws std::invalid_argument when weights do not sum to 1 (1e-12),
    // any weight is non-positive, or a mean has the wrong length.
    GaussianMixture(std::size_t dim, std::vector<Vector> means, std::vector<double> weights);

    // Equal weights.
    static GaussianMixture uniform(std::vector<Vector> means);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return means_.size(); }
    const std::vector<Vector>& means() const { return means_; }
    const std::vector<double>& weights() const { return weights_; }
    const Vector& mean(std::size_t c) const;

    bool operator==(const GaussianMixture&) const = default;

private:
    std::size_t dim_;
    std::vector<Vector> means_;
    std::vector<double> weights_;
};

using Condition = std::optional<std::size_t>;

double log_density_t(const GaussianMixture& gmm, const Vector& x, double alpha_bar,
                     Condition condition = std::nullopt);

// sqrt(abar) mu_c - x
Vector score_conditional(const GaussianMixture& gmm, const Vector& x, double alpha_bar,
                         std::size_t c);

// Softmax of log pi_c + log N(x; sqrt(abar) mu_c, I).
std::vector<double> posterior_weights(const GaussianMixture& gmm, const Vector& x,
                                      double alpha_bar);

// -x + sqrt(abar) sum_c pi*_c(x) mu_c
Vector score_unconditional(const GaussianMixture& gmm, const Vector& x, double alpha_bar);

inline Vector score(const GaussianMixture& gmm, const Vector& x, double alpha_bar,
                    Condition condition) {
    return condition ? score_conditional(gmm, x, alpha_bar, *condition)
                     : score_unconditional(gmm, x, alpha_bar);
}

// E[x0 | x_t = x] (optionally given the component). Requires abar in (0,1).
// Satisfies (sqrt(abar) * result - x) / (1 - abar) == score.
Vector posterior_mean_x0(const GaussianMixture& gmm, const Vector& x, double alpha_bar,
                         Condition condition = std::nullopt);

// Central differences of log_density_t, coordinate-wise.
Vector finite_diff_score(const GaussianMixture& gmm, const Vector& x, double alpha_bar,
                         Condition condition, double h);

/// Separating hyperplane w^T x + b = 0 through a surface-class mean with all
/// other means strictly on the negative side.
struct SurfaceCertificate {
    std::size_t component_index = 0;
    Vector normal;
    double offset = 0.0;
    double min_margin = 0.0;
};

struct SurfaceQuery {
    std::optional<SurfaceCertificate> certificate;
    double hull_distance = 0.0;
    std::string status;

    bool is_surface() const { return certificate.has_value(); }
};

// A class is a surface class iff its mean lies outside the convex hull of the
// other means. The normal points from the hull projection to the mean.
// Requires C >= 2.
SurfaceQuery surface_certificate(const GaussianMixture& gmm, std::size_t component_index);

// Checks the certificate's invariants against the mixture by direct dot products.
bool certificate_holds(const GaussianMixture& gmm, const SurfaceCertificate& cert);

// Euclidean projection onto the probability simplex.
Vector project_to_simplex(const Vector& v);

}  // namespace guidance_lab
