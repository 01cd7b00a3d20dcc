#pragma once

#include "dg3pd/lattice.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dg3pd {

struct DecompositionState;

/// Offset added to signed components (v, eps, f - u - v - eps) for display.
inline constexpr double kDisplayOffset = 150.0;

struct LoadedImage {
    RealImage pixels;
    int bit_depth = 8;
    bool was_color = false;
};

struct SaveOptions {
    bool offset_view = false;  // write 150 + x
    int bit_depth = 8;         // 8 or 16
};

/// Reads 8/16-bit PGM (P5, P2), PPM (P6) or PNG. Color inputs are reduced to
/// BT.601 luma. Throws std::runtime_error on unreadable or unsupported files.
LoadedImage load_gray(const std::filesystem::path& path);

/// Writes PGM or PNG by extension. Samples are offset (optional), clamped to
/// [0, 2^depth - 1] and rounded half-to-even.
void save_gray(const std::filesystem::path& path, const RealImage& image, const SaveOptions& opts = {});

/// The integer sample value save_gray writes for x.
std::uint16_t quantize_sample(double x, const SaveOptions& opts = {});

/// 1 where v > 0, else 0.
RealImage binarize_texture(const RealImage& v);

/// u + v.
RealImage denoised(const DecompositionState& state);

/// eta * sigma * sqrt(2 ln coeff_count).
double noise_delta(double sigma, std::size_t coeff_count, double eta);

/// 10 log10(peak^2 / MSE(x, ref)).
double psnr(const RealImage& x, const RealImage& ref, double peak = 255.0);

// ---- synthetic phantoms ----

struct Region {
    enum class Kind { Rect, Disk };
    Kind kind = Kind::Rect;
    // Rect: [top, bottom) x [left, right). Disk: centre (top, left), radius.
    double top = 0, left = 0, bottom = 0, right = 0, radius = 0;

    bool contains(double r, double c) const;
};

struct ShapeSpec {
    Region region;
    double value = 0.0;
};

struct TextureSpec {
    double frequency = 0.0;  // radians per pixel, in (0, pi)
    double angle = 0.0;      // direction of the wave vector, radians
    double amplitude = 0.0;
    Region support;
};

struct PhantomSpec {
    std::size_t rows = 64;
    std::size_t cols = 64;
    double background = 0.0;
    std::vector<ShapeSpec> shapes;
    std::optional<TextureSpec> texture;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

struct Phantom {
    RealImage cartoon;
    RealImage texture;
    RealImage texture_support;  // 0/1
    RealImage noise;
    RealImage f;                // cartoon + texture + noise
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Deterministic for a fixed spec; noise is Box-Muller over mt19937_64.
Phantom make_phantom(const PhantomSpec& spec);

/// i.i.d. N(0, sigma^2) samples, Box-Muller over mt19937_64(seed).
RealImage gaussian_noise(std::size_t rows, std::size_t cols, double sigma, std::uint64_t seed);

/// Parses the key = value phantom description:
///   rows = 64
///   cols = 64
///   background = 60
///   shape = rect TOP LEFT BOTTOM RIGHT VALUE
///   shape = disk CY CX RADIUS VALUE
///   texture = FREQUENCY ANGLE AMPLITUDE
///   texture_support = rect TOP LEFT BOTTOM RIGHT | disk CY CX RADIUS
///   sigma = 20
///   seed = 7
PhantomSpec parse_phantom_spec(const std::string& text);
PhantomSpec load_phantom_spec(const std::filesystem::path& path);

/// Square cartoon on a flat background plus an oriented sinusoid patch.
PhantomSpec default_phantom_spec(std::size_t size = 64, double sigma = 0.0, std::uint64_t seed = 1);

}  // namespace dg3pd
