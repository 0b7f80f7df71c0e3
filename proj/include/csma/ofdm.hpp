#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <vector>

#include "csma/constellation.hpp"
#include "csma/dft.hpp"
#include "csma/framing.hpp"

namespace csma {

struct TimeDomainSignal {
    std::vector<cplx> samples;
    std::uint32_t samples_per_symbol = 0;
    std::uint32_t symbol_count = 0;
};

/// Occupied-bin values of a demodulated slot, row-major by (symbol, subcarrier).
struct BinGrid {
    std::uint32_t symbols = 0;
    std::uint32_t subcarriers = 0;
    std::vector<cplx> bins;
};

/// Detected point indices of a slot, row-major by (symbol, subcarrier).
struct PointGrid {
    std::uint32_t symbols = 0;
    std::uint32_t subcarriers = 0;
    std::vector<std::uint32_t> points;
};

/**
 * CP-OFDM modem for one resource block. The resource block occupies bins
 * [offset, offset + subcarriers); all other bins, DC included, are zero.
 * Both transforms are unitary, so per-bin SNR equals per-sample SNR.
 */
class OfdmModem {
public:
    explicit OfdmModem(const RbGeometry& geometry) : geometry_(geometry), dft_((geometry.validate(), geometry.fft_size))
    {
    }

    const RbGeometry& geometry() const noexcept { return geometry_; }

    TimeDomainSignal modulate(const LabelGrid& grid, const Constellation& c) const
    {
        if (grid.subcarriers != geometry_.subcarriers ||
            grid.labels.size() != std::size_t{grid.symbols} * grid.subcarriers)
            throw Error(ErrorCode::geometry, "label grid does not match resource block geometry");
        for (Label l : grid.labels)
            if (l >= c.order())
                throw Error(ErrorCode::geometry, "label " + std::to_string(l) + " invalid for order " +
                                                     std::to_string(c.order()));
        std::vector<cplx> points(grid.labels.size());
        std::transform(grid.labels.begin(), grid.labels.end(), points.begin(),
                       [&](Label l) { return c.point_for_label(l); });
        return modulate_points(points, grid.symbols);
    }

    /// `points` is row-major (symbol, subcarrier) with geometry().subcarriers columns.
    TimeDomainSignal modulate_points(const std::vector<cplx>& points, std::uint32_t symbols) const
    {
        const std::uint32_t n = geometry_.fft_size;
        const std::uint32_t cp = geometry_.cp_length;
        TimeDomainSignal sig{std::vector<cplx>(std::size_t{symbols} * (n + cp)), n + cp, symbols};
        std::vector<cplx> body(n);
        for (std::uint32_t s = 0; s < symbols; ++s) {
            std::fill(body.begin(), body.end(), cplx{});
            for (std::uint32_t sc = 0; sc < geometry_.subcarriers; ++sc)
                body[geometry_.subcarrier_offset + sc] = points[std::size_t{s} * geometry_.subcarriers + sc];
            dft_.inverse(body);
            auto out = sig.samples.begin() + static_cast<std::ptrdiff_t>(std::size_t{s} * (n + cp));
            std::copy(body.end() - cp, body.end(), out);
            std::copy(body.begin(), body.end(), out + cp);
        }
        return sig;
    }

    /// Drops the prefix and applies the forward DFT; perfect timing is assumed.
    BinGrid demodulate_bins(const TimeDomainSignal& signal) const
    {
        const std::uint32_t n = geometry_.fft_size;
        const std::uint32_t cp = geometry_.cp_length;
        if (signal.samples_per_symbol != n + cp ||
            signal.samples.size() != std::size_t{signal.symbol_count} * (n + cp))
            throw Error(ErrorCode::geometry, "signal length " + std::to_string(signal.samples.size()) +
                                                 " inconsistent with geometry");
        BinGrid out{signal.symbol_count, geometry_.subcarriers, {}};
        out.bins.reserve(std::size_t{signal.symbol_count} * geometry_.subcarriers);
        std::vector<cplx> body(n);
        for (std::uint32_t s = 0; s < signal.symbol_count; ++s) {
            auto in = signal.samples.begin() + static_cast<std::ptrdiff_t>(std::size_t{s} * (n + cp) + cp);
            std::copy(in, in + n, body.begin());
            dft_.forward(body);
            for (std::uint32_t sc = 0; sc < geometry_.subcarriers; ++sc)
                out.bins.push_back(body[geometry_.subcarrier_offset + sc]);
        }
        return out;
    }

    PointGrid demodulate(const TimeDomainSignal& signal, const Constellation& c) const
    {
        const BinGrid bins = demodulate_bins(signal);
        PointGrid out{bins.symbols, bins.subcarriers, std::vector<std::uint32_t>(bins.bins.size())};
        std::transform(bins.bins.begin(), bins.bins.end(), out.points.begin(),
                       [&](cplx v) { return c.nearest_point(v); });
        return out;
    }

private:
    RbGeometry geometry_;
    UnitaryDft dft_;
};

inline TimeDomainSignal ofdm_modulate(const LabelGrid& grid, const Constellation& c, const RbGeometry& geometry)
{
    return OfdmModem(geometry).modulate(grid, c);
}

inline PointGrid ofdm_demodulate(const TimeDomainSignal& signal, const Constellation& c, const RbGeometry& geometry)
{
    return OfdmModem(geometry).demodulate(signal, c);
}

} // namespace csma
