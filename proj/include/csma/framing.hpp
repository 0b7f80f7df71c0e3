#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csma/allocation.hpp"
#include "csma/error.hpp"

namespace csma {

/// One resource block: `subcarriers` adjacent FFT bins over one slot.
struct RbGeometry {
    std::uint32_t subcarriers = 12;
    std::uint32_t symbols_per_slot = 14;
    std::uint32_t fft_size = 256;
    /// First occupied FFT bin.
    std::uint32_t subcarrier_offset = 16;
    std::uint32_t cp_length = 32;

    std::uint32_t samples_per_symbol() const noexcept { return fft_size + cp_length; }
    std::uint32_t cells_per_slot() const noexcept { return subcarriers * symbols_per_slot; }

    void validate() const
    {
        if (subcarriers == 0 || symbols_per_slot == 0)
            throw Error(ErrorCode::geometry, "resource block must have subcarriers and symbols");
        if (fft_size < 4)
            throw Error(ErrorCode::geometry, "fft_size too small");
        // DC bin stays empty and the block sits below Nyquist.
        if (subcarrier_offset < 1 || std::uint64_t{subcarrier_offset} + subcarriers > fft_size / 2)
            throw Error(ErrorCode::geometry, "resource block bins [" + std::to_string(subcarrier_offset) + ", " +
                                                 std::to_string(subcarrier_offset + subcarriers) +
                                                 ") do not fit in (0, fft_size/2]");
        if (cp_length >= fft_size)
            throw Error(ErrorCode::geometry, "cyclic prefix must be shorter than the FFT");
    }
};

struct SlotSchedule {
    /// assignments[k] owns OFDM symbol k of the slot.
    std::vector<UserId> assignments;

    std::size_t count(UserId id) const
    {
        return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), id));
    }

    void validate(const AllocationPlan& plan, const RbGeometry& geometry) const
    {
        if (assignments.size() != geometry.symbols_per_slot)
            throw Error(ErrorCode::invalid_schedule, "schedule length " + std::to_string(assignments.size()) +
                                                         " != symbols per slot " +
                                                         std::to_string(geometry.symbols_per_slot));
        for (UserId id : assignments)
            if (!plan.index_of(id))
                throw Error(ErrorCode::invalid_schedule, "schedule references unknown user " + std::to_string(id));
    }
};

inline SlotSchedule round_robin_schedule(const std::vector<UserId>& users, std::uint32_t symbols_per_slot)
{
    if (users.empty())
        throw Error(ErrorCode::invalid_schedule, "round-robin schedule needs at least one user");
    SlotSchedule s;
    s.assignments.reserve(symbols_per_slot);
    for (std::uint32_t k = 0; k < symbols_per_slot; ++k)
        s.assignments.push_back(users[k % users.size()]);
    return s;
}

/**
 * Proportional schedule. Symbol counts come from largest-remainder rounding of
 * symbols * w_i / sum(w) (ties to the lower user index); the symbols are then
 * laid out by smooth weighted round-robin over those counts so each user's
 * symbols are spread through the slot.
 */
inline SlotSchedule weighted_schedule(const std::vector<UserId>& users, const std::vector<std::uint32_t>& weights,
                                      std::uint32_t symbols_per_slot)
{
    if (users.empty())
        throw Error(ErrorCode::invalid_schedule, "weighted schedule needs at least one user");
    if (weights.size() != users.size())
        throw Error(ErrorCode::invalid_schedule, "weights and users differ in length");
    const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
    if (total == 0)
        throw Error(ErrorCode::invalid_schedule, "total weight is zero");

    const std::size_t n = users.size();
    std::vector<std::int64_t> counts(n);
    std::vector<std::uint64_t> remainder(n);
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t scaled = std::uint64_t{symbols_per_slot} * weights[i];
        counts[i] = static_cast<std::int64_t>(scaled / total);
        remainder[i] = scaled % total;
        assigned += static_cast<std::uint64_t>(counts[i]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < symbols_per_slot; ++k, ++assigned)
        ++counts[order[k]];

    SlotSchedule s;
    s.assignments.reserve(symbols_per_slot);
    std::vector<std::int64_t> current(n, 0);
    const auto sum = static_cast<std::int64_t>(symbols_per_slot);
    for (std::uint32_t k = 0; k < symbols_per_slot; ++k) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[i] == 0)
                continue;
            current[i] += counts[i];
            if (pick == n || current[i] > current[pick])
                pick = i;
        }
        current[pick] -= sum;
        s.assignments.push_back(users[pick]);
    }
    return s;
}

/// Labels of one slot, row-major by (symbol, subcarrier), with the owning user of each symbol.
struct LabelGrid {
    std::uint32_t symbols = 0;
    std::uint32_t subcarriers = 0;
    std::vector<Label> labels;
    std::vector<UserId> symbol_owner;

    Label at(std::uint32_t symbol, std::uint32_t subcarrier) const
    {
        return labels[std::size_t{symbol} * subcarriers + subcarrier];
    }
};

/**
 * Fills a slot. Symbol k is owned by schedule.assignments[k]; its subcarriers
 * take that user's next data words in subcarrier order. `streams` is indexed
 * like plan.users().
 */
inline LabelGrid frame_user_data(const AllocationPlan& plan, const SlotSchedule& schedule,
                                 const RbGeometry& geometry, std::span<const std::vector<DataWord>> streams)
{
    schedule.validate(plan, geometry);
    if (streams.size() != plan.user_count())
        throw Error(ErrorCode::insufficient_data, "expected one data stream per user");

    std::vector<std::size_t> cursor(plan.user_count(), 0);
    LabelGrid grid{geometry.symbols_per_slot, geometry.subcarriers, {}, schedule.assignments};
    grid.labels.reserve(geometry.cells_per_slot());
    for (UserId id : schedule.assignments) {
        const std::size_t ui = *plan.index_of(id);
        const auto& stream = streams[ui];
        if (cursor[ui] + geometry.subcarriers > stream.size())
            throw Error(ErrorCode::insufficient_data, "data stream of user " + std::to_string(id) + " ran out");
        for (std::uint32_t sc = 0; sc < geometry.subcarriers; ++sc)
            grid.labels.push_back(plan.map_symbol(id, stream[cursor[ui]++]));
    }
    return grid;
}

} // namespace csma
