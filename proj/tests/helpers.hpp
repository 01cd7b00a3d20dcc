#pragma once

#include "dg3pd/lattice.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

namespace testing {

inline dg3pd::RealImage random_image(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    dg3pd::RealImage x(rows, cols);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = dist(gen);
    return x;
}

inline double rel_diff(const dg3pd::RealImage& a, const dg3pd::RealImage& b)
{
    const double scale = std::max(dg3pd::norm_l2(b), 1e-300);
    return dg3pd::norm_l2(a - b) / scale;
}

inline Eigen::VectorXd to_vec(const dg3pd::RealImage& x)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = x[i];
    return v;
}

inline dg3pd::RealImage from_vec(const Eigen::VectorXd& v, std::size_t rows, std::size_t cols)
{
    dg3pd::RealImage x(rows, cols);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = v[static_cast<Eigen::Index>(i)];
    return x;
}

// Dense matrix of c * (x[r, c+1] - x[r, c]) + s * (x[r+1, c] - x[r, c]),
// periodic, written from the stencil.
inline Eigen::MatrixXd directional_matrix(std::size_t rows, std::size_t cols, double c, double s)
{
    const auto n = static_cast<Eigen::Index>(rows * cols);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < cols; ++k) {
            const auto i = static_cast<Eigen::Index>(r * cols + k);
            const auto right = static_cast<Eigen::Index>(r * cols + (k + 1) % cols);
            const auto down = static_cast<Eigen::Index>(((r + 1) % rows) * cols + k);
            D(i, right) += c;
            D(i, down) += s;
            D(i, i) -= c + s;
        }
    }
    return D;
}

inline double direction_cos(std::size_t l, std::size_t count)
{
    return std::cos(M_PI * static_cast<double>(l) / static_cast<double>(count));
}

inline double direction_sin(std::size_t l, std::size_t count)
{
    return std::sin(M_PI * static_cast<double>(l) / static_cast<double>(count));
}

// Minimizer of a convex scalar function by a dense grid over [lo, hi]
// followed by successive local refinements.
inline double grid_argmin(const std::function<double(double)>& obj, double lo, double hi)
{
    double best = lo;
    for (int round = 0; round < 6; ++round) {
        const int steps = 2000;
        const double h = (hi - lo) / steps;
        double best_val = obj(lo);
        best = lo;
        for (int i = 1; i <= steps; ++i) {
            const double y = lo + h * i;
            const double val = obj(y);
            if (val < best_val) {
                best_val = val;
                best = y;
            }
        }
        lo = best - 2 * h;
        hi = best + 2 * h;
    }
    return best;
}

}  // namespace testing
