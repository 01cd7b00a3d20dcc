#pragma once

#include "dg3pd/lattice.hpp"

#include <string>
#include <vector>

namespace dg3pd {

enum class TransformKind { Starlet, Wedge };

std::string to_string(TransformKind kind);
TransformKind parse_transform_kind(const std::string& name);

struct TransformSpec {
    TransformKind kind = TransformKind::Starlet;
    std::size_t scales = 4;
    std::size_t orientations = 8;  // wedge only

    bool operator==(const TransformSpec&) const = default;
};

struct BandCoefficients {
    std::vector<RealImage> bands;
    TransformSpec spec;

    /// Total number of coefficients |K| = bands * m * n.
    std::size_t coefficient_count() const;
};

struct ProjectionOptions {
    // Accelerated dual iterations. Zero keeps only the componentwise formula
    // C*{delta Cq / max(delta, |Cq|)}, which may overshoot delta.
    std::size_t max_iterations = 30;
    // Stop once sup|C eps| <= delta * (1 + tolerance); the remaining
    // overshoot is removed by rescaling.
    double tolerance = 1e-2;
};

/// Undecimated multiscale frame on a fixed m x n periodic grid.
///
/// Starlet: a-trous B3-spline pyramid; J detail bands then the coarse band,
/// synthesis is plain summation. Not a tight frame.
///
/// Wedge: J radial scales x O orientations of smooth frequency windows plus
/// one low-pass window. Squared windows sum to one at every frequency and
/// each window is Hermitian-symmetric, so the bands are real and the frame
/// is Parseval (C*C = Id, ||Cx|| = ||x||).
class BandTransform {
public:
    BandTransform(TransformSpec spec, std::size_t rows, std::size_t cols);

    const TransformSpec& spec() const { return spec_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t band_count() const;
    std::size_t coefficient_count() const { return band_count() * rows_ * cols_; }
    bool is_parseval() const { return spec_.kind == TransformKind::Wedge; }

    BandCoefficients analyze(const RealImage& x) const;
    RealImage synthesize(const BandCoefficients& c) const;

    /// C*{Shrink(C q, delta)}.
    RealImage cst(const RealImage& q, double delta) const;

    /// Projection of q onto {e : ||C e||_inf <= delta}, solved as
    ///   e = q - C* y,  y = argmin 1/2 ||q - C* y||^2 + delta ||y||_1
    /// by FISTA. The first iterate is the componentwise clip formula. The
    /// result is rescaled toward zero if it still exceeds delta, so it is
    /// always feasible. Parseval frames only.
    RealImage project_linf(const RealImage& q, double delta, const ProjectionOptions& opts = {}) const;

    /// max over bands and pixels of |C q|.
    double sup_coeff(const RealImage& q) const;

    /// Frequency window of wedge band b (empty for starlet).
    const std::vector<double>& window(std::size_t b) const { return windows_.at(b); }

private:
    void build_wedge_windows();

    TransformSpec spec_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::vector<double>> windows_;
};

BandCoefficients analyze(const RealImage& x, const TransformSpec& spec);
RealImage synthesize(const BandCoefficients& c);
RealImage cst(const RealImage& q, double delta, const TransformSpec& spec);
RealImage project_linf(const RealImage& q, double delta, const TransformSpec& spec);
double sup_coeff(const RealImage& q, const TransformSpec& spec);

/// Max |coefficient| over a band list.
double sup_abs(const BandCoefficients& c);

}  // namespace dg3pd
