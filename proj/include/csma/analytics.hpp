#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "csma/channel.hpp"
#include "csma/constellation.hpp"
#include "csma/error.hpp"

namespace csma {

/// Gaussian tail probability, Q(x) = erfc(x / sqrt 2) / 2.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Symbol error rate of square M-QAM with minimum-distance detection at linear SNR `snr`.
inline double ser_mqam(std::uint64_t order, double snr)
{
    if (!is_power_of_four(order))
        throw Error(ErrorCode::invalid_order, "square QAM order required, got " + std::to_string(order));
    if (!(snr >= 0.0))
        throw Error(ErrorCode::spec, "SNR must be non-negative");
    const double m = static_cast<double>(order);
    const double root = std::sqrt(m);
    const double per_axis = 2.0 * (root - 1.0) / root * q_function(std::sqrt(3.0 * snr / (m - 1.0)));
    const double ps = 1.0 - (1.0 - per_axis) * (1.0 - per_axis);
    return std::clamp(ps, 0.0, 1.0);
}

/// Dedicated modulator carrying B data bits: 2^B-QAM.
inline double ser_data_width(unsigned data_bits, double snr)
{
    if (data_bits < 2 || data_bits % 2 != 0 || data_bits > 24)
        throw Error(ErrorCode::invalid_order, "data width must be even for square QAM, got " +
                                                  std::to_string(data_bits));
    return ser_mqam(std::uint64_t{1} << data_bits, snr);
}

/// Shared modulator carrying B data bits plus A address bits: 2^(B+A)-QAM.
inline double ser_shared(unsigned data_bits, unsigned address_bits, double snr)
{
    if (data_bits < 1 || address_bits < 1)
        throw Error(ErrorCode::invalid_order, "shared SER needs B >= 1 and A >= 1");
    const unsigned total = data_bits + address_bits;
    if (total % 2 != 0 || total > 24)
        throw Error(ErrorCode::invalid_order, "B + A must be even for square QAM, got " + std::to_string(total));
    return ser_mqam(std::uint64_t{1} << total, snr);
}

/// Gray-labelled BER approximation: one bit error per symbol error.
inline double ber_gray_approx(std::uint64_t order, double snr)
{
    const double ps = ser_mqam(order, snr);
    return ps / static_cast<double>(std::countr_zero(order));
}

enum class Formula { eq3, eq4, eq5, ber_approx };

inline const char* to_string(Formula f)
{
    switch (f) {
    case Formula::eq3: return "eq3";
    case Formula::eq4: return "eq4";
    case Formula::eq5: return "eq5";
    case Formula::ber_approx: return "ber-approx";
    }
    return "?";
}

struct TheoryCurve {
    Formula formula = Formula::eq3;
    std::vector<double> snr_db;
    std::vector<double> values;
};

struct TheoryParams {
    /// Used by eq3 and ber-approx.
    std::uint64_t order = 16;
    /// Used by eq4/eq5.
    unsigned data_bits = 4;
    /// Used by eq5.
    unsigned address_bits = 2;
    SnrMode mode = SnrMode::per_symbol;
};

inline unsigned data_bits_for(Formula f, const TheoryParams& p)
{
    switch (f) {
    case Formula::eq4:
    case Formula::eq5: return p.data_bits;
    default: return static_cast<unsigned>(std::countr_zero(p.order));
    }
}

inline double evaluate(Formula f, const TheoryParams& p, double snr)
{
    switch (f) {
    case Formula::eq3: return ser_mqam(p.order, snr);
    case Formula::eq4: return ser_data_width(p.data_bits, snr);
    case Formula::eq5: return ser_shared(p.data_bits, p.address_bits, snr);
    case Formula::ber_approx: return ber_gray_approx(p.order, snr);
    }
    return 0.0;
}

/// Evaluates a formula on a dB axis; per-data-bit axes scale by the data bits the formula carries.
inline TheoryCurve theory_curve(Formula f, const TheoryParams& p, const std::vector<double>& snr_db)
{
    TheoryCurve curve{f, snr_db, {}};
    curve.values.reserve(snr_db.size());
    for (double db : snr_db) {
        const double snr = resolve_symbol_snr({p.mode, db, data_bits_for(f, p)});
        curve.values.push_back(evaluate(f, p, snr));
    }
    return curve;
}

} // namespace csma
