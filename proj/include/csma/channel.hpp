#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "csma/error.hpp"
#include "csma/ofdm.hpp"
#include "csma/rng.hpp"

namespace csma {

enum class SnrMode { per_symbol, per_data_bit };

inline const char* to_string(SnrMode m) { return m == SnrMode::per_symbol ? "symbol" : "databit"; }

struct SnrSpec {
    SnrMode mode = SnrMode::per_symbol;
    /// +inf means noiseless.
    double value_db = 0.0;
    /// Data bits per symbol; only consulted in per-data-bit mode.
    std::optional<unsigned> data_bits;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Linear SNR per constellation symbol; per-data-bit SNR counts only data bits.
inline double resolve_symbol_snr(const SnrSpec& spec)
{
    if (std::isnan(spec.value_db) || spec.value_db == -std::numeric_limits<double>::infinity())
        throw Error(ErrorCode::spec, "SNR must be a finite dB value or +inf");
    const double lin = db_to_linear(spec.value_db);
    if (spec.mode == SnrMode::per_symbol)
        return lin;
    if (!spec.data_bits || *spec.data_bits < 1)
        throw Error(ErrorCode::spec, "per-data-bit SNR needs the number of data bits per symbol");
    return lin * *spec.data_bits;
}

/**
 * Adds complex Gaussian noise of total variance reference_power / snr to every
 * time-domain sample (half per quadrature). The DFT is unitary, so this is the
 * same per-bin variance in the constellation domain. snr = +inf adds nothing.
 */
inline void add_awgn_inplace(std::span<cplx> samples, double snr, double reference_power, RngStream& rng)
{
    if (!(snr > 0.0))
        throw Error(ErrorCode::spec, "SNR must be positive");
    if (!(reference_power > 0.0))
        throw Error(ErrorCode::spec, "reference power must be positive");
    if (std::isinf(snr))
        return;
    const double sigma = std::sqrt(reference_power / (2.0 * snr));
    for (auto& s : samples) {
        const double re = rng.gaussian();
        const double im = rng.gaussian();
        s += cplx{sigma * re, sigma * im};
    }
}

inline TimeDomainSignal add_awgn(TimeDomainSignal signal, double snr, double reference_power, RngStream& rng)
{
    add_awgn_inplace(signal.samples, snr, reference_power, rng);
    return signal;
}

} // namespace csma
