#include "dg3pd/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace dg3pd {

namespace {

void require_grid(std::size_t rows, std::size_t cols)
{
    if (rows < 2 || cols < 2)
        throw std::invalid_argument("image must be at least 2x2");
}

void require_same(bool same, const char* what)
{
    if (!same)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)))
    {
        if (!ptr)
            throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* ptr;
};

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution of a finished plan on
// caller-owned buffers is. Plans are made with FFTW_ESTIMATE so the chosen
// algorithm, and therefore every output bit, is reproducible across runs.
class PlanCache {
public:
    fftw_plan get(std::size_t rows, std::size_t cols, int sign)
    {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = plans_.find(key);
        if (it != plans_.end())
            return it->second.get();
        FftwBuffer in(rows * cols), out(rows * cols);
        fftw_plan p = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), in.ptr, out.ptr,
                                       sign, FFTW_ESTIMATE);
        if (!p)
            throw std::runtime_error("FFTW planning failed");
        plans_.emplace(key, PlanHandle(p));
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, int>, PlanHandle> plans_;
};

PlanCache& plan_cache()
{
    static PlanCache cache;
    return cache;
}

template <class Load>
ComplexSpectrum transform(std::size_t rows, std::size_t cols, int sign, Load load)
{
    const std::size_t n = rows * cols;
    FftwBuffer in(n), out(n);
    load(in.ptr);
    fftw_execute_dft(plan_cache().get(rows, cols, sign), in.ptr, out.ptr);
    ComplexSpectrum result(rows, cols);
    for (std::size_t i = 0; i < n; ++i)
        result[i] = Complex(out.ptr[i][0], out.ptr[i][1]);
    return result;
}

}  // namespace

RealImage::RealImage(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
    require_grid(rows, cols);
}

RealImage::RealImage(std::size_t rows, std::size_t cols, std::vector<double> samples)
    : rows_(rows), cols_(cols), data_(std::move(samples))
{
    require_grid(rows, cols);
    if (data_.size() != rows * cols)
        throw std::invalid_argument("sample count does not match image dimensions");
}

bool RealImage::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

RealImage& RealImage::operator+=(const RealImage& o)
{
    require_same(same_shape(o), "RealImage +=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += o.data_[i];
    return *this;
}

RealImage& RealImage::operator-=(const RealImage& o)
{
    require_same(same_shape(o), "RealImage -=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= o.data_[i];
    return *this;
}

RealImage& RealImage::operator*=(double s)
{
    for (double& v : data_)
        v *= s;
    return *this;
}

RealImage& RealImage::add_scaled(const RealImage& o, double s)
{
    require_same(same_shape(o), "RealImage add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += s * o.data_[i];
    return *this;
}

ComplexSpectrum::ComplexSpectrum(std::size_t rows, std::size_t cols, Complex fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
    require_grid(rows, cols);
}

ComplexSpectrum& ComplexSpectrum::operator+=(const ComplexSpectrum& o)
{
    require_same(same_shape(o), "ComplexSpectrum +=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += o.data_[i];
    return *this;
}

ComplexSpectrum& ComplexSpectrum::operator-=(const ComplexSpectrum& o)
{
    require_same(same_shape(o), "ComplexSpectrum -=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= o.data_[i];
    return *this;
}

ComplexSpectrum& ComplexSpectrum::operator*=(const ComplexSpectrum& o)
{
    require_same(same_shape(o), "ComplexSpectrum *=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] *= o.data_[i];
    return *this;
}

ComplexSpectrum& ComplexSpectrum::operator*=(Complex s)
{
    for (Complex& v : data_)
        v *= s;
    return *this;
}

double angular_frequency(std::size_t p, std::size_t len)
{
    const double w = 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(len);
    return 2 * p >= len ? w - 2.0 * std::numbers::pi : w;
}

ComplexSpectrum dft2(const RealImage& x)
{
    return transform(x.rows(), x.cols(), FFTW_FORWARD, [&](fftw_complex* buf) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            buf[i][0] = x[i];
            buf[i][1] = 0.0;
        }
    });
}

ComplexSpectrum dft2(const ComplexSpectrum& x)
{
    return transform(x.rows(), x.cols(), FFTW_FORWARD, [&](fftw_complex* buf) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            buf[i][0] = x[i].real();
            buf[i][1] = x[i].imag();
        }
    });
}

ComplexSpectrum idft2(const ComplexSpectrum& X)
{
    ComplexSpectrum out = transform(X.rows(), X.cols(), FFTW_BACKWARD, [&](fftw_complex* buf) {
        for (std::size_t i = 0; i < X.size(); ++i) {
            buf[i][0] = X[i].real();
            buf[i][1] = X[i].imag();
        }
    });
    out *= Complex(1.0 / static_cast<double>(X.size()));
    return out;
}

RealImage idft2_real(const ComplexSpectrum& X)
{
    ComplexSpectrum c = idft2(X);
    RealImage out(X.rows(), X.cols());
    for (std::size_t i = 0; i < c.size(); ++i)
        out[i] = c[i].real();
    return out;
}

RealImage forward_diff(const RealImage& x, Axis axis)
{
    const std::size_t m = x.rows(), n = x.cols();
    RealImage out(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double next = axis == Axis::X ? x(r, (c + 1) % n) : x((r + 1) % m, c);
            out(r, c) = next - x(r, c);
        }
    }
    return out;
}

RealImage backward_diff(const RealImage& x, Axis axis)
{
    const std::size_t m = x.rows(), n = x.cols();
    RealImage out(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double prev = axis == Axis::X ? x(r, (c + n - 1) % n) : x((r + m - 1) % m, c);
            out(r, c) = x(r, c) - prev;
        }
    }
    return out;
}

ComplexSpectrum diff_symbol(std::size_t rows, std::size_t cols, Axis axis, DiffDirection dir)
{
    ComplexSpectrum out(rows, cols);
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t q = 0; q < cols; ++q) {
            const double w = axis == Axis::X ? angular_frequency(q, cols) : angular_frequency(p, rows);
            const Complex z = std::polar(1.0, w);
            out(p, q) = dir == DiffDirection::Forward ? z - 1.0 : -(std::conj(z) - 1.0);
        }
    }
    return out;
}

double dot(const RealImage& a, const RealImage& b)
{
    require_same(a.same_shape(b), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm_l1(const RealImage& x)
{
    double s = 0.0;
    for (double v : x.samples())
        s += std::abs(v);
    return s;
}

double norm_l2(const RealImage& x)
{
    return std::sqrt(dot(x, x));
}

double norm_linf(const RealImage& x)
{
    double s = 0.0;
    for (double v : x.samples())
        s = std::max(s, std::abs(v));
    return s;
}

RealImage circular_shift(const RealImage& x, std::ptrdiff_t dr, std::ptrdiff_t dc)
{
    const auto m = static_cast<std::ptrdiff_t>(x.rows());
    const auto n = static_cast<std::ptrdiff_t>(x.cols());
    RealImage out(x.rows(), x.cols());
    for (std::ptrdiff_t r = 0; r < m; ++r) {
        for (std::ptrdiff_t c = 0; c < n; ++c) {
            const auto rr = ((r + dr) % m + m) % m;
            const auto cc = ((c + dc) % n + n) % n;
            out(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) =
                x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
    }
    return out;
}

}  // namespace dg3pd
