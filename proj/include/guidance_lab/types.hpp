#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace guidance_lab {

using Vector = Eigen::VectorXd;

// Norms below this are treated as zero by every direction-based computation.
inline constexpr double kNormFloor = 1e-12;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_dim(const Vector& v, std::size_t dim, const char* what) {
    if (static_cast<std::size_t>(v.size()) != dim) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(dim) +
                             ", got " + std::to_string(v.size()));
    }
}

}  // namespace guidance_lab
