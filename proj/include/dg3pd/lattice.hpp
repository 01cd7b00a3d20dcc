#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dg3pd {

using Complex = std::complex<double>;

/// m x n grid of real samples, row-major, k1 = row, k2 = column.
class RealImage {
public:
    RealImage() = default;
    RealImage(std::size_t rows, std::size_t cols, double fill = 0.0);
    RealImage(std::size_t rows, std::size_t cols, std::vector<double> samples);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> samples() { return data_; }
    std::span<const double> samples() const { return data_; }

    bool same_shape(const RealImage& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    RealImage& operator+=(const RealImage& o);
    RealImage& operator-=(const RealImage& o);
    RealImage& operator*=(double s);
    /// this += s * o
    RealImage& add_scaled(const RealImage& o, double s);

    friend RealImage operator+(RealImage a, const RealImage& b) { return a += b; }
    friend RealImage operator-(RealImage a, const RealImage& b) { return a -= b; }
    friend RealImage operator*(double s, RealImage a) { return a *= s; }
    friend RealImage operator*(RealImage a, double s) { return a *= s; }
    bool operator==(const RealImage&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// m x n grid of complex DFT coefficients. Entry (p, q) is the frequency
/// (w1, w2) = (2 pi p / m, 2 pi q / n), aliased into [-pi, pi).
class ComplexSpectrum {
public:
    ComplexSpectrum() = default;
    ComplexSpectrum(std::size_t rows, std::size_t cols, Complex fill = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    Complex& operator()(std::size_t p, std::size_t q) { return data_[p * cols_ + q]; }
    const Complex& operator()(std::size_t p, std::size_t q) const { return data_[p * cols_ + q]; }
    Complex& operator[](std::size_t i) { return data_[i]; }
    const Complex& operator[](std::size_t i) const { return data_[i]; }

    std::span<Complex> coefficients() { return data_; }
    std::span<const Complex> coefficients() const { return data_; }

    bool same_shape(const ComplexSpectrum& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    ComplexSpectrum& operator+=(const ComplexSpectrum& o);
    ComplexSpectrum& operator-=(const ComplexSpectrum& o);
    ComplexSpectrum& operator*=(const ComplexSpectrum& o);  // pointwise
    ComplexSpectrum& operator*=(Complex s);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

enum class Axis { X, Y };  // X runs along columns (k2), Y along rows (k1)
enum class DiffDirection { Forward, Backward };

/// Angular frequency of index p on an axis of length len, in [-pi, pi).
double angular_frequency(std::size_t p, std::size_t len);

/// Unnormalized forward DFT: X(w) = sum_k x[k] exp(-j <k, w>).
ComplexSpectrum dft2(const RealImage& x);
ComplexSpectrum dft2(const ComplexSpectrum& x);
/// Inverse DFT with the 1/(mn) factor.
ComplexSpectrum idft2(const ComplexSpectrum& X);
/// Re[idft2(X)].
RealImage idft2_real(const ComplexSpectrum& X);

/// Periodic forward difference. X: x[k1, k2+1] - x[k1, k2], Y: x[k1+1, k2] - x[k1, k2].
RealImage forward_diff(const RealImage& x, Axis axis);
/// Periodic backward difference. X: x[k1, k2] - x[k1, k2-1].
RealImage backward_diff(const RealImage& x, Axis axis);

/// Per-frequency multiplier of a difference operator:
/// forward (z - 1), backward -(z^-1 - 1), with z = exp(j w) on the axis.
ComplexSpectrum diff_symbol(std::size_t rows, std::size_t cols, Axis axis, DiffDirection dir);

double dot(const RealImage& a, const RealImage& b);
double norm_l1(const RealImage& x);
double norm_l2(const RealImage& x);
double norm_linf(const RealImage& x);

/// Cyclic shift: out[(r + dr) mod m, (c + dc) mod n] = x[r, c].
RealImage circular_shift(const RealImage& x, std::ptrdiff_t dr, std::ptrdiff_t dc);

}  // namespace dg3pd
