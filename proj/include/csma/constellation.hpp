#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "csma/error.hpp"

namespace csma {

using cplx = std::complex<double>;
using Label = std::uint32_t;

inline constexpr std::uint32_t gray_encode(std::uint32_t n) { return n ^ (n >> 1); }

inline constexpr std::uint32_t gray_decode(std::uint32_t g)
{
    std::uint32_t n = g;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1)
        n ^= n >> shift;
    return n;
}

/// True for 4, 16, 64, ... (square QAM orders).
inline constexpr bool is_power_of_four(std::uint64_t m)
{
    return m >= 4 && std::has_single_bit(m) && (std::countr_zero(m) % 2 == 0);
}

/**
 * Square M-QAM alphabet with unit average energy.
 *
 * Point index i = column * side + row, where column walks the I axis and row
 * the Q axis, both in ascending coordinate order. The label of a point is the
 * Gray code of its column in the high D/2 bits and the Gray code of its row in
 * the low D/2 bits.
 */
class Constellation {
public:
    static constexpr std::uint32_t min_order = 4;
    static constexpr std::uint32_t max_order = 4096;

    explicit Constellation(std::uint32_t order)
    {
        if (!is_power_of_four(order) || order > max_order)
            throw Error(ErrorCode::invalid_order,
                        "QAM order must be a power of 4 in [4, 4096], got " + std::to_string(order));
        order_ = order;
        bits_ = static_cast<unsigned>(std::countr_zero(order));
        half_bits_ = bits_ / 2;
        side_ = 1u << half_bits_;
        // Mean energy of the odd-integer grid is 2(M-1)/3.
        scale_ = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);

        points_.resize(order);
        label_of_point_.resize(order);
        point_of_label_.resize(order);
        for (std::uint32_t col = 0; col < side_; ++col) {
            for (std::uint32_t row = 0; row < side_; ++row) {
                const std::uint32_t idx = col * side_ + row;
                points_[idx] = {level(col), level(row)};
                const Label label = (gray_encode(col) << half_bits_) | gray_encode(row);
                label_of_point_[idx] = label;
                point_of_label_[label] = idx;
            }
        }
    }

    std::uint32_t order() const noexcept { return order_; }
    unsigned bits_per_symbol() const noexcept { return bits_; }
    std::uint32_t side() const noexcept { return side_; }
    /// Half the spacing between neighbouring levels on one axis.
    double scale() const noexcept { return scale_; }

    const std::vector<cplx>& points() const noexcept { return points_; }
    cplx point(std::uint32_t index) const { return points_.at(index); }

    Label label_of_point(std::uint32_t index) const { return label_of_point_.at(index); }
    std::uint32_t point_of_label(Label label) const { return point_of_label_.at(label); }
    cplx point_for_label(Label label) const { return points_[point_of_label(label)]; }

    /// Coordinate of grid level k (0 <= k < side) on either axis.
    double level(std::uint32_t k) const noexcept
    {
        return (2.0 * k - (side_ - 1.0)) * scale_;
    }

    double mean_energy() const
    {
        double sum = 0.0;
        for (const auto& p : points_)
            sum += std::norm(p);
        return sum / order_;
    }

    /**
     * Minimum-distance detection. The grid is separable, so the nearest point is
     * the pair of per-axis nearest levels; ties resolve to the lower level on each
     * axis, which is the lowest point index among the equidistant set.
     */
    std::uint32_t nearest_point(cplx received) const noexcept
    {
        return nearest_level(received.real()) * side_ + nearest_level(received.imag());
    }

    Label detect_label(cplx received) const noexcept
    {
        return label_of_point_[nearest_point(received)];
    }

private:
    std::uint32_t nearest_level(double x) const noexcept
    {
        // Candidate from rounding, then settle against true distances to the
        // neighbours so near-ties follow the lowest-index rule.
        double guess = std::floor((x / scale_ + (side_ - 1.0)) / 2.0 + 0.5);
        if (!(guess >= 0.0))
            guess = 0.0;
        if (guess > side_ - 1.0)
            guess = side_ - 1.0;
        const auto k = static_cast<std::uint32_t>(guess);
        const std::uint32_t lo = k == 0 ? 0 : k - 1;
        const std::uint32_t hi = k + 1 >= side_ ? side_ - 1 : k + 1;
        std::uint32_t best = lo;
        double best_d = std::abs(x - level(lo));
        for (std::uint32_t j = lo + 1; j <= hi; ++j) {
            const double d = std::abs(x - level(j));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        return best;
    }

    std::uint32_t order_ = 0;
    unsigned bits_ = 0;
    unsigned half_bits_ = 0;
    std::uint32_t side_ = 0;
    double scale_ = 0.0;
    std::vector<cplx> points_;
    std::vector<Label> label_of_point_;
    std::vector<std::uint32_t> point_of_label_;
};

inline Constellation build_qam(std::uint32_t order) { return Constellation(order); }

inline std::uint32_t nearest_point(const Constellation& c, cplx received)
{
    return c.nearest_point(received);
}

/// Zero-padded binary rendering of the low `width` bits, MSB first.
inline std::string to_binary(std::uint32_t value, unsigned width)
{
    std::string s(width, '0');
    for (unsigned i = 0; i < width; ++i)
        if ((value >> (width - 1 - i)) & 1u)
            s[i] = '1';
    return s;
}

} // namespace csma
