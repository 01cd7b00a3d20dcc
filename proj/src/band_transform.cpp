#include "dg3pd/band_transform.hpp"

#include "dg3pd/directional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dg3pd {

namespace {

constexpr double kB3[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// Meyer auxiliary polynomial: 0 below 0, 1 above 1, nu(x) + nu(1 - x) = 1.
double meyer_nu(double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    return x * x * x * x * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

// Smooth low-pass profile: 1 on [0, 1/2], 0 on [1, inf).
double lowpass_profile(double x)
{
    if (x <= 0.5)
        return 1.0;
    if (x >= 1.0)
        return 0.0;
    return std::cos(0.5 * std::numbers::pi * meyer_nu(2.0 * x - 1.0));
}

// Angular window centred on wedge o of `count`, t measured in wedge widths and
// periodic with period `count`. Neighbouring windows are cos/sin pairs across
// each boundary, so the squares sum to one.
double angular_window(double t, std::size_t o, std::size_t count)
{
    if (count == 1)
        return 1.0;
    constexpr double half_width = 0.25;
    const double period = static_cast<double>(count);
    double d = t - static_cast<double>(o);
    d -= period * std::floor(d / period + 0.5);
    const double ad = std::abs(d);
    const double inner = 0.5 - half_width;
    if (ad <= inner)
        return 1.0;
    if (ad >= 0.5 + half_width)
        return 0.0;
    return std::cos(0.5 * std::numbers::pi * meyer_nu((ad - inner) / (2.0 * half_width)));
}

// One separable a-trous B3 smoothing pass with hole size `step`, periodic.
RealImage atrous_smooth(const RealImage& x, std::size_t step)
{
    const std::size_t m = x.rows(), n = x.cols();
    RealImage tmp(m, n), out(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                const auto off = static_cast<std::ptrdiff_t>(t) * static_cast<std::ptrdiff_t>(step);
                const auto nn = static_cast<std::ptrdiff_t>(n);
                const auto cc = ((static_cast<std::ptrdiff_t>(c) + off) % nn + nn) % nn;
                acc += kB3[t + 2] * x(r, static_cast<std::size_t>(cc));
            }
            tmp(r, c) = acc;
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                const auto off = static_cast<std::ptrdiff_t>(t) * static_cast<std::ptrdiff_t>(step);
                const auto mm = static_cast<std::ptrdiff_t>(m);
                const auto rr = ((static_cast<std::ptrdiff_t>(r) + off) % mm + mm) % mm;
                acc += kB3[t + 2] * tmp(static_cast<std::size_t>(rr), c);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

}  // namespace

std::string to_string(TransformKind kind)
{
    return kind == TransformKind::Starlet ? "starlet" : "wedge";
}

TransformKind parse_transform_kind(const std::string& name)
{
    if (name == "starlet")
        return TransformKind::Starlet;
    if (name == "wedge" || name == "directional-wedge")
        return TransformKind::Wedge;
    throw std::invalid_argument("unknown transform '" + name + "' (expected starlet|wedge)");
}

std::size_t BandCoefficients::coefficient_count() const
{
    return bands.empty() ? 0 : bands.size() * bands.front().size();
}

BandTransform::BandTransform(TransformSpec spec, std::size_t rows, std::size_t cols)
    : spec_(spec), rows_(rows), cols_(cols)
{
    if (spec_.scales == 0)
        throw std::invalid_argument("transform needs at least one scale");
    if (spec_.kind == TransformKind::Wedge && spec_.orientations == 0)
        throw std::invalid_argument("wedge transform needs at least one orientation");
    if (spec_.scales >= 8 * sizeof(std::size_t) - 1)
        throw std::invalid_argument("scale count too large");
    const std::size_t min_dim = std::size_t{1} << spec_.scales;
    if (rows < min_dim || cols < min_dim)
        throw std::invalid_argument("image too small for " + std::to_string(spec_.scales) +
                                    " scales (need both dimensions >= " + std::to_string(min_dim) + ")");
    if (spec_.kind == TransformKind::Wedge)
        build_wedge_windows();
}

std::size_t BandTransform::band_count() const
{
    if (spec_.kind == TransformKind::Starlet)
        return spec_.scales + 1;
    return spec_.scales * spec_.orientations + 1;
}

void BandTransform::build_wedge_windows()
{
    const std::size_t m = rows_, n = cols_, npix = m * n;
    const std::size_t J = spec_.scales, O = spec_.orientations;
    std::vector<std::vector<double>> sq(band_count(), std::vector<double>(npix, 0.0));

    for (std::size_t p = 0; p < m; ++p) {
        const double w1 = angular_frequency(p, m);
        for (std::size_t q = 0; q < n; ++q) {
            const double w2 = angular_frequency(q, n);
            const std::size_t i = p * n + q;
            const double rho = std::max(std::abs(w1), std::abs(w2)) / std::numbers::pi;

            double theta = std::atan2(w1, w2);
            if (theta < 0.0)
                theta += std::numbers::pi;
            if (theta >= std::numbers::pi)
                theta -= std::numbers::pi;
            const double t = theta * static_cast<double>(O) / std::numbers::pi;

            double prev_low = 1.0;
            for (std::size_t j = 1; j <= J; ++j) {
                const double low = lowpass_profile(std::ldexp(rho, static_cast<int>(j)));
                const double radial2 = std::max(0.0, prev_low * prev_low - low * low);
                for (std::size_t o = 0; o < O; ++o) {
                    const double a = angular_window(t, o, O);
                    sq[(j - 1) * O + o][i] = radial2 * a * a;
                }
                prev_low = low;
            }
            sq[J * O][i] = prev_low * prev_low;
        }
    }

    // Symmetrize W(w) with W(-w) so every band of a real image stays real;
    // averaging squared windows keeps the partition of unity.
    windows_.assign(band_count(), std::vector<double>(npix, 0.0));
    for (std::size_t b = 0; b < sq.size(); ++b) {
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = 0; q < n; ++q) {
                const std::size_t i = p * n + q;
                const std::size_t mirror = ((m - p) % m) * n + (n - q) % n;
                windows_[b][i] = std::sqrt(0.5 * (sq[b][i] + sq[b][mirror]));
            }
        }
    }
}

BandCoefficients BandTransform::analyze(const RealImage& x) const
{
    if (x.rows() != rows_ || x.cols() != cols_)
        throw std::invalid_argument("analyze: image dimensions do not match the transform");
    BandCoefficients out;
    out.spec = spec_;
    out.bands.reserve(band_count());

    if (spec_.kind == TransformKind::Starlet) {
        RealImage current = x;
        for (std::size_t j = 0; j < spec_.scales; ++j) {
            RealImage smoother = atrous_smooth(current, std::size_t{1} << j);
            out.bands.push_back(current - smoother);
            current = std::move(smoother);
        }
        out.bands.push_back(std::move(current));
        return out;
    }

    const ComplexSpectrum X = dft2(x);
    for (const auto& win : windows_) {
        ComplexSpectrum band = X;
        for (std::size_t i = 0; i < band.size(); ++i)
            band[i] *= win[i];
        out.bands.push_back(idft2_real(band));
    }
    return out;
}

RealImage BandTransform::synthesize(const BandCoefficients& c) const
{
    if (c.spec != spec_ || c.bands.size() != band_count())
        throw std::invalid_argument("synthesize: band list inconsistent with transform spec");
    for (const auto& b : c.bands)
        if (b.rows() != rows_ || b.cols() != cols_)
            throw std::invalid_argument("synthesize: band dimensions do not match the transform");

    if (spec_.kind == TransformKind::Starlet) {
        RealImage sum(rows_, cols_);
        for (const auto& b : c.bands)
            sum += b;
        return sum;
    }

    ComplexSpectrum acc(rows_, cols_);
    for (std::size_t b = 0; b < c.bands.size(); ++b) {
        const ComplexSpectrum B = dft2(c.bands[b]);
        const auto& win = windows_[b];
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += win[i] * B[i];
    }
    return idft2_real(acc);
}

RealImage BandTransform::cst(const RealImage& q, double delta) const
{
    if (!(delta >= 0.0))
        throw std::invalid_argument("cst: threshold must be nonnegative");
    BandCoefficients c = analyze(q);
    for (auto& b : c.bands)
        b = shrink(b, delta);
    return synthesize(c);
}

RealImage BandTransform::project_linf(const RealImage& q, double delta, const ProjectionOptions& opts) const
{
    if (!is_parseval())
        throw std::invalid_argument("project_linf requires a Parseval frame (use the wedge transform)");
    if (!(delta >= 0.0))
        throw std::invalid_argument("project_linf: radius must be nonnegative");
    if (delta == 0.0)
        return RealImage(q.rows(), q.cols());

    BandCoefficients coeffs = analyze(q);
    if (sup_abs(coeffs) <= delta)
        return q;

    // Dual variable y lives in coefficient space; with a Parseval frame the
    // gradient step size 1 is admissible. y_1 = Shrink(C q, delta) gives
    // e = C*{clip(C q)}.
    BandCoefficients y = std::move(coeffs);
    for (auto& b : y.bands)
        b = shrink(b, delta);
    RealImage eps = q - synthesize(y);
    if (opts.max_iterations == 0)
        return eps;

    const double bound = delta * (1.0 + opts.tolerance);
    BandCoefficients z = y;
    double t = 1.0;
    double sup = sup_coeff(eps);
    for (std::size_t k = 0; k < opts.max_iterations && sup > bound; ++k) {
        const BandCoefficients grad = analyze(q - synthesize(z));
        BandCoefficients next = z;
        for (std::size_t b = 0; b < next.bands.size(); ++b) {
            next.bands[b] += grad.bands[b];
            next.bands[b] = shrink(next.bands[b], delta);
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t b = 0; b < z.bands.size(); ++b) {
            z.bands[b] = next.bands[b];
            z.bands[b].add_scaled(next.bands[b] - y.bands[b], momentum);
        }
        y = std::move(next);
        t = t_next;
        eps = q - synthesize(y);
        sup = sup_coeff(eps);
    }
    if (sup > delta)
        eps *= delta / sup;
    return eps;
}

double BandTransform::sup_coeff(const RealImage& q) const
{
    return sup_abs(analyze(q));
}

double sup_abs(const BandCoefficients& c)
{
    double s = 0.0;
    for (const auto& b : c.bands)
        s = std::max(s, norm_linf(b));
    return s;
}

BandCoefficients analyze(const RealImage& x, const TransformSpec& spec)
{
    return BandTransform(spec, x.rows(), x.cols()).analyze(x);
}

RealImage synthesize(const BandCoefficients& c)
{
    if (c.bands.empty())
        throw std::invalid_argument("synthesize: empty band list");
    return BandTransform(c.spec, c.bands.front().rows(), c.bands.front().cols()).synthesize(c);
}

RealImage cst(const RealImage& q, double delta, const TransformSpec& spec)
{
    return BandTransform(spec, q.rows(), q.cols()).cst(q, delta);
}

RealImage project_linf(const RealImage& q, double delta, const TransformSpec& spec)
{
    return BandTransform(spec, q.rows(), q.cols()).project_linf(q, delta);
}

double sup_coeff(const RealImage& q, const TransformSpec& spec)
{
    return BandTransform(spec, q.rows(), q.cols()).sup_coeff(q);
}

}  // namespace dg3pd
