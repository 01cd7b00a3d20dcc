#pragma once

#include "dg3pd/lattice.hpp"

#include <span>
#include <vector>

namespace dg3pd {

/// The angles pi*l/count, l = 0..count-1, with cached cosines and sines.
class DirectionBank {
public:
    explicit DirectionBank(std::size_t count);

    std::size_t count() const { return cos_.size(); }
    double angle(std::size_t l) const;
    double cos(std::size_t l) const { return cos_.at(l); }
    double sin(std::size_t l) const { return sin_.at(l); }

    /// Spectrum multiplier of the l-th directional forward derivative:
    /// cos(pi l/L) (z2 - 1) + sin(pi l/L) (z1 - 1).
    ComplexSpectrum symbol(std::size_t l, std::size_t rows, std::size_t cols) const;

private:
    std::vector<double> cos_;
    std::vector<double> sin_;
};

/// cos(pi l/L) d+x u + sin(pi l/L) d+y u.
RealImage directional_derivative(const RealImage& u, std::size_t l, const DirectionBank& bank);

/// Anisotropic directional total variation: sum over l of || d+_l u ||_1.
double directional_tv(const RealImage& u, const DirectionBank& bank);

/// Texture synthesis map sum_s d+_s g_s.
RealImage g_synthesis(std::span<const RealImage> g, const DirectionBank& bank);

/// Scalar soft-threshold sign(x) max(|x| - tau, 0).
double shrink(double x, double tau);
/// Elementwise soft-threshold. Throws on negative tau.
RealImage shrink(const RealImage& x, double tau);

}  // namespace dg3pd
