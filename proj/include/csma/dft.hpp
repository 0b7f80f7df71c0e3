#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "csma/error.hpp"

namespace csma {

/**
 * Unitary DFT of fixed size. Power-of-two sizes use an iterative radix-2 FFT;
 * other sizes fall back to direct summation.
 *
 *   forward: X[k] = N^-1/2 sum_n x[n] e^{-j 2 pi k n / N}
 *   inverse: x[n] = N^-1/2 sum_k X[k] e^{+j 2 pi k n / N}
 */
class UnitaryDft {
public:
    explicit UnitaryDft(std::size_t size) : size_(size), norm_(1.0 / std::sqrt(static_cast<double>(size)))
    {
        if (size == 0)
            throw Error(ErrorCode::geometry, "DFT size must be positive");
        twiddle_.resize(size);
        for (std::size_t k = 0; k < size; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
            twiddle_[k] = {std::cos(a), std::sin(a)};
        }
        radix2_ = std::has_single_bit(size);
        if (radix2_) {
            const int log2n = std::countr_zero(size);
            bitrev_.resize(size);
            for (std::size_t i = 0; i < size; ++i) {
                std::size_t r = 0;
                for (int b = 0; b < log2n; ++b)
                    r |= ((i >> b) & 1u) << (log2n - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    std::size_t size() const noexcept { return size_; }

    void forward(std::span<std::complex<double>> data) const { transform(data, false); }
    void inverse(std::span<std::complex<double>> data) const { transform(data, true); }

private:
    void transform(std::span<std::complex<double>> data, bool inverse) const
    {
        if (data.size() != size_)
            throw Error(ErrorCode::geometry, "DFT input length mismatch");
        if (radix2_)
            fft(data, inverse);
        else
            direct(data, inverse);
        for (auto& v : data)
            v *= norm_;
    }

    std::complex<double> tw(std::size_t k, bool inverse) const
    {
        return inverse ? std::conj(twiddle_[k]) : twiddle_[k];
    }

    void fft(std::span<std::complex<double>> a, bool inverse) const
    {
        for (std::size_t i = 0; i < size_; ++i)
            if (i < bitrev_[i])
                std::swap(a[i], a[bitrev_[i]]);
        for (std::size_t len = 2; len <= size_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = size_ / len;
            for (std::size_t start = 0; start < size_; start += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const auto w = tw(j * step, inverse);
                    const auto u = a[start + j];
                    const auto v = a[start + j + half] * w;
                    a[start + j] = u + v;
                    a[start + j + half] = u - v;
                }
            }
        }
    }

    void direct(std::span<std::complex<double>> a, bool inverse) const
    {
        std::vector<std::complex<double>> out(size_);
        for (std::size_t k = 0; k < size_; ++k) {
            std::complex<double> acc{};
            for (std::size_t n = 0; n < size_; ++n)
                acc += a[n] * tw((k * n) % size_, inverse);
            out[k] = acc;
        }
        std::copy(out.begin(), out.end(), a.begin());
    }

    std::size_t size_;
    double norm_;
    bool radix2_ = false;
    std::vector<std::complex<double>> twiddle_;
    std::vector<std::size_t> bitrev_;
};

} // namespace csma
