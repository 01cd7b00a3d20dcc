#include "dg3pd/imaging.hpp"

#include "dg3pd/solver.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace dg3pd {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// ---------------------------------------------------------------- Netpbm

class PnmReader {
public:
    explicit PnmReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

    unsigned long header_value()
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw std::runtime_error("malformed PNM header");
        unsigned long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]))
            v = v * 10 + (bytes_[pos_++] - '0');
        return v;
    }

    void end_of_header()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw std::runtime_error("malformed PNM header");
        ++pos_;
    }

    unsigned sample(bool wide)
    {
        if (wide) {
            need(2);
            unsigned v = (unsigned(bytes_[pos_]) << 8) | bytes_[pos_ + 1];
            pos_ += 2;
            return v;
        }
        need(1);
        return bytes_[pos_++];
    }

    std::size_t pos_ = 2;

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size())
            throw std::runtime_error("truncated PNM data");
    }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    std::vector<unsigned char> bytes_;
};

int depth_for_maxval(unsigned long maxval)
{
    if (maxval == 0 || maxval > 65535)
        throw std::runtime_error("unsupported PNM maxval");
    return maxval > 255 ? 16 : 8;
}

LoadedImage load_pnm(std::vector<unsigned char> bytes)
{
    const char kind = static_cast<char>(bytes[1]);
    PnmReader rd(std::move(bytes));
    const auto width = rd.header_value();
    const auto height = rd.header_value();
    const auto maxval = rd.header_value();
    LoadedImage out;
    out.bit_depth = depth_for_maxval(maxval);
    out.pixels = RealImage(height, width);
    const bool wide = maxval > 255;

    if (kind == '2') {
        for (std::size_t i = 0; i < out.pixels.size(); ++i)
            out.pixels[i] = static_cast<double>(rd.header_value());
        return out;
    }
    rd.end_of_header();
    if (kind == '5') {
        for (std::size_t i = 0; i < out.pixels.size(); ++i)
            out.pixels[i] = rd.sample(wide);
    } else {
        out.was_color = true;
        for (std::size_t i = 0; i < out.pixels.size(); ++i) {
            const double r = rd.sample(wide), g = rd.sample(wide), b = rd.sample(wide);
            out.pixels[i] = kLumaR * r + kLumaG * g + kLumaB * b;
        }
    }
    return out;
}

void save_pgm(const std::filesystem::path& path, const RealImage& img, const SaveOptions& opts)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    const unsigned maxval = opts.bit_depth == 16 ? 65535u : 255u;
    os << "P5\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint16_t v = quantize_sample(img[i], opts);
        if (opts.bit_depth == 16) {
            os.put(static_cast<char>(v >> 8));
            os.put(static_cast<char>(v & 0xff));
        } else {
            os.put(static_cast<char>(v));
        }
    }
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------- PNG

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

LoadedImage load_png(const std::filesystem::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw std::runtime_error("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }

    LoadedImage out;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r)
        rows[r] = buffer.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (width < 2 || height < 2)
        throw std::runtime_error("image must be at least 2x2: " + path.string());
    out.bit_depth = depth == 16 ? 16 : 8;
    out.was_color = channels >= 3;
    out.pixels = RealImage(height, width);
    const std::size_t bytes_per_sample = depth == 16 ? 2 : 1;
    for (png_uint_32 r = 0; r < height; ++r) {
        const png_byte* row = rows[r];
        for (png_uint_32 c = 0; c < width; ++c) {
            std::array<double, 3> s{};
            for (int ch = 0; ch < std::min(channels, 3); ++ch) {
                const png_byte* p = row + (static_cast<std::size_t>(c) * channels + ch) * bytes_per_sample;
                s[ch] = depth == 16 ? (p[0] << 8 | p[1]) : p[0];
            }
            out.pixels(r, c) = channels >= 3 ? kLumaR * s[0] + kLumaG * s[1] + kLumaB * s[2] : s[0];
        }
    }
    return out;
}

void save_png(const std::filesystem::path& path, const RealImage& img, const SaveOptions& opts)
{
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw std::runtime_error("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }

    const bool wide = opts.bit_depth == 16;
    const std::size_t rowbytes = img.cols() * (wide ? 2 : 1);
    std::vector<png_byte> buffer(rowbytes * img.rows());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint16_t v = quantize_sample(img[i], opts);
        if (wide) {
            buffer[2 * i] = static_cast<png_byte>(v >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(v & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(v);
        }
    }
    std::vector<png_bytep> rows(img.rows());
    for (std::size_t r = 0; r < img.rows(); ++r)
        rows[r] = buffer.data() + r * rowbytes;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()),
                 wide ? 16 : 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

LoadedImage load_gray(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0)
        return load_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5' || bytes[1] == '6'))
        return load_pnm(std::move(bytes));
    throw std::runtime_error("unsupported image format: " + path.string());
}

std::uint16_t quantize_sample(double x, const SaveOptions& opts)
{
    if (opts.bit_depth != 8 && opts.bit_depth != 16)
        throw std::invalid_argument("bit depth must be 8 or 16");
    const double maxval = opts.bit_depth == 16 ? 65535.0 : 255.0;
    double v = opts.offset_view ? x + kDisplayOffset : x;
    if (std::isnan(v))
        v = 0.0;
    v = std::clamp(v, 0.0, maxval);
    return static_cast<std::uint16_t>(std::nearbyint(v));  // default rounding mode: half to even
}

void save_gray(const std::filesystem::path& path, const RealImage& image, const SaveOptions& opts)
{
    const std::string ext = lower_extension(path);
    if (ext == ".png")
        save_png(path, image, opts);
    else if (ext == ".pgm")
        save_pgm(path, image, opts);
    else
        throw std::runtime_error("unsupported output format '" + ext + "' (expected .png or .pgm)");
}

RealImage binarize_texture(const RealImage& v)
{
    RealImage mask(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.size(); ++i)
        mask[i] = v[i] > 0.0 ? 1.0 : 0.0;
    return mask;
}

RealImage denoised(const DecompositionState& state)
{
    return state.u + state.v;
}

double noise_delta(double sigma, std::size_t coeff_count, double eta)
{
    if (!(sigma > 0.0) || !(eta > 0.0) || coeff_count == 0)
        throw std::invalid_argument("noise_delta needs positive sigma, eta and coefficient count");
    return eta * sigma * std::sqrt(2.0 * std::log(static_cast<double>(coeff_count)));
}

double psnr(const RealImage& x, const RealImage& ref, double peak)
{
    const RealImage diff = x - ref;
    const double mse = dot(diff, diff) / static_cast<double>(diff.size());
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace dg3pd
