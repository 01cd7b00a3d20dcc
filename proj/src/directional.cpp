#include "dg3pd/directional.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dg3pd {

DirectionBank::DirectionBank(std::size_t count)
{
    if (count == 0)
        throw std::invalid_argument("direction count must be positive");
    cos_.resize(count);
    sin_.resize(count);
    for (std::size_t l = 0; l < count; ++l) {
        // exact axis directions
        if (l == 0) {
            cos_[l] = 1.0;
            sin_[l] = 0.0;
            continue;
        }
        if (2 * l == count) {
            cos_[l] = 0.0;
            sin_[l] = 1.0;
            continue;
        }
        const double a = std::numbers::pi * static_cast<double>(l) / static_cast<double>(count);
        cos_[l] = std::cos(a);
        sin_[l] = std::sin(a);
    }
}

double DirectionBank::angle(std::size_t l) const
{
    if (l >= count())
        throw std::out_of_range("direction index out of range");
    return std::numbers::pi * static_cast<double>(l) / static_cast<double>(count());
}

ComplexSpectrum DirectionBank::symbol(std::size_t l, std::size_t rows, std::size_t cols) const
{
    if (l >= count())
        throw std::out_of_range("direction index out of range");
    ComplexSpectrum out(rows, cols);
    for (std::size_t p = 0; p < rows; ++p) {
        const Complex z1m1 = std::polar(1.0, angular_frequency(p, rows)) - 1.0;
        for (std::size_t q = 0; q < cols; ++q) {
            const Complex z2m1 = std::polar(1.0, angular_frequency(q, cols)) - 1.0;
            out(p, q) = cos_[l] * z2m1 + sin_[l] * z1m1;
        }
    }
    return out;
}

RealImage directional_derivative(const RealImage& u, std::size_t l, const DirectionBank& bank)
{
    if (l >= bank.count())
        throw std::out_of_range("direction index out of range");
    const double c = bank.cos(l), s = bank.sin(l);
    const std::size_t m = u.rows(), n = u.cols();
    RealImage out(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t rn = (r + 1) % m;
        for (std::size_t k = 0; k < n; ++k) {
            const double here = u(r, k);
            out(r, k) = c * (u(r, (k + 1) % n) - here) + s * (u(rn, k) - here);
        }
    }
    return out;
}

double directional_tv(const RealImage& u, const DirectionBank& bank)
{
    double total = 0.0;
    for (std::size_t l = 0; l < bank.count(); ++l)
        total += norm_l1(directional_derivative(u, l, bank));
    return total;
}

RealImage g_synthesis(std::span<const RealImage> g, const DirectionBank& bank)
{
    if (g.size() != bank.count())
        throw std::invalid_argument("g_synthesis: need one potential per direction");
    RealImage out(g[0].rows(), g[0].cols());
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (!g[s].same_shape(g[0]))
            throw std::invalid_argument("g_synthesis: dimension mismatch");
        out += directional_derivative(g[s], s, bank);
    }
    return out;
}

double shrink(double x, double tau)
{
    const double mag = std::abs(x) - tau;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
}

RealImage shrink(const RealImage& x, double tau)
{
    if (!(tau >= 0.0))
        throw std::invalid_argument("shrink threshold must be nonnegative");
    RealImage out = x;
    for (double& v : out.samples())
        v = shrink(v, tau);
    return out;
}

}  // namespace dg3pd
