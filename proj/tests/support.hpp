#pragma once

#include "guidance_lab/mixture.hpp"

#include <random>

namespace testing_support {

using guidance_lab::GaussianMixture;
using guidance_lab::Vector;

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
    return v;
}

// Random mixture with |mu| <= max_norm and Dirichlet-ish weights.
inline GaussianMixture random_mixture(std::mt19937_64& rng, std::size_t dim, std::size_t components,
                                      double max_norm = 5.0) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::uniform_real_distribution<double> r(0.0, max_norm);
    std::vector<Vector> means;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t c = 0; c < components; ++c) {
        Vector m = random_vector(rng, dim);
        m *= r(rng) / std::max(m.norm(), 1e-12);
        means.push_back(m);
        weights.push_back(u(rng));
        total += weights.back();
    }
    for (auto& w : weights) w /= total;
    // Renormalise the last weight so the sum is 1 to rounding.
    double head = 0.0;
    for (std::size_t c = 0; c + 1 < components; ++c) head += weights[c];
    weights.back() = 1.0 - head;
    return GaussianMixture(dim, std::move(means), std::move(weights));
}

inline GaussianMixture square_mixture() {
    return GaussianMixture::uniform({vec({1, 1}), vec({1, -1}), vec({-1, 1}), vec({-1, -1})});
}

}  // namespace testing_support
