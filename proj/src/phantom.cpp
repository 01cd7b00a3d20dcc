#include "dg3pd/imaging.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dg3pd {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& tok, const std::string& key)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != tok.size() || !std::isfinite(v))
        throw std::invalid_argument("phantom spec: bad number '" + tok + "' for " + key);
    return v;
}

std::vector<double> numbers(std::istringstream& in, const std::string& key)
{
    std::vector<double> out;
    std::string tok;
    while (in >> tok)
        out.push_back(to_number(tok, key));
    return out;
}

// "rect T L B R [extra...]" or "disk CY CX RADIUS [extra...]"; returns the
// trailing numbers after the region.
Region parse_region(std::istringstream& in, const std::string& key, std::vector<double>& rest)
{
    std::string kind;
    in >> kind;
    std::vector<double> v = numbers(in, key);
    Region reg;
    std::size_t used = 0;
    if (kind == "rect") {
        if (v.size() < 4)
            throw std::invalid_argument("phantom spec: rect needs TOP LEFT BOTTOM RIGHT");
        reg.kind = Region::Kind::Rect;
        reg.top = v[0];
        reg.left = v[1];
        reg.bottom = v[2];
        reg.right = v[3];
        used = 4;
    } else if (kind == "disk") {
        if (v.size() < 3)
            throw std::invalid_argument("phantom spec: disk needs CY CX RADIUS");
        reg.kind = Region::Kind::Disk;
        reg.top = v[0];
        reg.left = v[1];
        reg.radius = v[2];
        used = 3;
    } else {
        throw std::invalid_argument("phantom spec: unknown region kind '" + kind + "' for " + key);
    }
    rest.assign(v.begin() + static_cast<std::ptrdiff_t>(used), v.end());
    return reg;
}

std::size_t to_count(double v, const std::string& key)
{
    if (v < 0 || v != std::floor(v))
        throw std::invalid_argument("phantom spec: " + key + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

}  // namespace

bool Region::contains(double r, double c) const
{
    if (kind == Kind::Rect)
        return r >= top && r < bottom && c >= left && c < right;
    const double dr = r - top, dc = c - left;
    return dr * dr + dc * dc <= radius * radius;
}

RealImage gaussian_noise(std::size_t rows, std::size_t cols, double sigma, std::uint64_t seed)
{
    RealImage out(rows, cols);
    if (sigma == 0.0)
        return out;
    std::mt19937_64 gen(seed);
    // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    const auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = sigma * std::sqrt(-2.0 * std::log(u1));
        const double phase = 2.0 * std::numbers::pi * u2;
        out[i] = radius * std::cos(phase);
        if (i + 1 < out.size())
            out[i + 1] = radius * std::sin(phase);
    }
    return out;
}

Phantom make_phantom(const PhantomSpec& spec)
{
    if (!(spec.sigma >= 0.0))
        throw std::invalid_argument("phantom sigma must be nonnegative");
    if (spec.texture) {
        const auto& t = *spec.texture;
        if (!(t.frequency > 0.0 && t.frequency < std::numbers::pi))
            throw std::invalid_argument("texture frequency must lie in (0, pi)");
        if (!(t.amplitude > 0.0))
            throw std::invalid_argument("texture amplitude must be positive");
    }

    Phantom ph;
    ph.sigma = spec.sigma;
    ph.seed = spec.seed;
    ph.cartoon = RealImage(spec.rows, spec.cols, spec.background);
    ph.texture = RealImage(spec.rows, spec.cols);
    ph.texture_support = RealImage(spec.rows, spec.cols);

    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const double y = static_cast<double>(r), x = static_cast<double>(c);
            for (const auto& shape : spec.shapes)
                if (shape.region.contains(y, x))
                    ph.cartoon(r, c) = shape.value;
            if (spec.texture && spec.texture->support.contains(y, x)) {
                const auto& t = *spec.texture;
                const double phase = t.frequency * (x * std::cos(t.angle) + y * std::sin(t.angle));
                ph.texture(r, c) = t.amplitude * std::cos(phase);
                ph.texture_support(r, c) = 1.0;
            }
        }
    }
    ph.noise = gaussian_noise(spec.rows, spec.cols, spec.sigma, spec.seed);
    ph.f = ph.cartoon + ph.texture + ph.noise;
    return ph;
}

PhantomSpec parse_phantom_spec(const std::string& text)
{
    PhantomSpec spec;
    spec.shapes.clear();
    std::optional<Region> support;
    std::optional<std::vector<double>> wave;

    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("phantom spec: expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        std::istringstream value(trim(line.substr(eq + 1)));

        if (key == "shape") {
            std::vector<double> rest;
            ShapeSpec shape;
            shape.region = parse_region(value, key, rest);
            if (rest.size() != 1)
                throw std::invalid_argument("phantom spec: shape needs exactly one VALUE after the region");
            shape.value = rest[0];
            spec.shapes.push_back(shape);
        } else if (key == "texture_support") {
            std::vector<double> rest;
            support = parse_region(value, key, rest);
            if (!rest.empty())
                throw std::invalid_argument("phantom spec: trailing numbers after texture_support");
        } else if (key == "texture") {
            wave = numbers(value, key);
            if (wave->size() != 3)
                throw std::invalid_argument("phantom spec: texture needs FREQUENCY ANGLE AMPLITUDE");
        } else {
            const std::vector<double> v = numbers(value, key);
            if (v.size() != 1)
                throw std::invalid_argument("phantom spec: " + key + " takes one value");
            if (key == "rows")
                spec.rows = to_count(v[0], key);
            else if (key == "cols")
                spec.cols = to_count(v[0], key);
            else if (key == "background")
                spec.background = v[0];
            else if (key == "sigma")
                spec.sigma = v[0];
            else if (key == "seed")
                spec.seed = to_count(v[0], key);
            else
                throw std::invalid_argument("phantom spec: unknown key '" + key + "'");
        }
    }

    if (wave) {
        TextureSpec t;
        t.frequency = (*wave)[0];
        t.angle = (*wave)[1];
        t.amplitude = (*wave)[2];
        if (support) {
            t.support = *support;
        } else {
            t.support.kind = Region::Kind::Rect;
            t.support.bottom = static_cast<double>(spec.rows);
            t.support.right = static_cast<double>(spec.cols);
        }
        spec.texture = t;
    } else if (support) {
        throw std::invalid_argument("phantom spec: texture_support given without texture");
    }
    if (spec.rows < 2 || spec.cols < 2)
        throw std::invalid_argument("phantom spec: rows and cols must be at least 2");
    return spec;
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open phantom spec " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_phantom_spec(buf.str());
}

PhantomSpec default_phantom_spec(std::size_t size, double sigma, std::uint64_t seed)
{
    const double n = static_cast<double>(size);
    PhantomSpec spec;
    spec.rows = size;
    spec.cols = size;
    spec.background = 60.0;
    spec.shapes.push_back({Region{Region::Kind::Rect, n * 0.125, n * 0.125, n * 0.5, n * 0.5, 0.0}, 180.0});

    TextureSpec t;
    t.frequency = 1.2;
    t.angle = std::numbers::pi / 6.0;
    t.amplitude = 30.0;
    t.support = Region{Region::Kind::Rect, n * 0.5625, n * 0.5625, n * 0.9375, n * 0.9375, 0.0};
    spec.texture = t;

    spec.sigma = sigma;
    spec.seed = seed;
    return spec;
}

}  // namespace dg3pd
