#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "csma/allocation.hpp"
#include "csma/analytics.hpp"
#include "csma/channel.hpp"
#include "csma/constellation.hpp"
#include "csma/framing.hpp"
#include "csma/ofdm.hpp"
#include "csma/rng.hpp"

namespace csma {

struct PlanSpec {
    enum class Kind { address_bit, lookup_file, qos };
    Kind kind = Kind::address_bit;
    std::vector<unsigned> address_positions;
    std::string lookup_file;
    std::vector<unsigned> qos_bits;
};

struct ScheduleSpec {
    enum class Kind { round_robin, weighted };
    Kind kind = Kind::round_robin;
    std::vector<std::uint32_t> weights;
};

struct SweepSpec {
    SnrMode mode = SnrMode::per_symbol;
    double start_db = 0.0;
    double stop_db = 18.0;
    double step_db = 2.0;
    /// Explicit points (may include +inf) override start/stop/step.
    std::vector<double> points;

    std::vector<double> values() const
    {
        if (!points.empty())
            return points;
        std::vector<double> v;
        const auto n = static_cast<std::size_t>(std::floor((stop_db - start_db) / step_db + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i)
            v.push_back(start_db + static_cast<double>(i) * step_db);
        return v;
    }
};

struct StopRule {
    std::uint64_t min_symbols = 200'000;
    std::uint64_t min_errors = 200;
    std::uint64_t max_symbols = 10'000'000;
};

struct ExperimentConfig {
    std::string name = "default";
    std::uint32_t order = 64;
    PlanSpec plan;
    RbGeometry geometry;
    ScheduleSpec schedule;
    SweepSpec sweep;
    StopRule stop;
    std::uint64_t seed = 1;
    /// Number of parallel modulator groups; recorded only, each group is an independent run.
    std::uint32_t modulator_groups = 1;
    /// 0 picks hardware concurrency. Results do not depend on it.
    unsigned workers = 1;
    /// Overrides the plan's data width when resolving per-data-bit SNR.
    std::optional<unsigned> snr_data_bits;
    /// Slots per scheduling batch; the stop rule is evaluated between batches.
    std::uint32_t batch_slots = 64;

    void validate() const
    {
        const auto fail = [](const std::string& m) { throw Error(ErrorCode::config, m); };
        if (!is_power_of_four(order) || order > Constellation::max_order)
            fail("order must be a power of 4 in [4, 4096]");
        if (sweep.points.empty() && !(sweep.step_db > 0.0))
            fail("snr step must be positive");
        if (sweep.points.empty() && !(sweep.start_db <= sweep.stop_db))
            fail("snr start must not exceed stop");
        for (double p : sweep.points)
            if (std::isnan(p) || p == -std::numeric_limits<double>::infinity())
                fail("snr points must be finite or +inf");
        if (stop.min_symbols < 10'000)
            fail("min_symbols must be at least 10000");
        if (stop.max_symbols < stop.min_symbols)
            fail("max_symbols must be at least min_symbols");
        if (modulator_groups < 1)
            fail("modulator_groups must be at least 1");
        if (batch_slots < 1)
            fail("batch_slots must be at least 1");
        geometry.validate();
    }
};

struct BerRow {
    double snr_db = 0.0;
    SnrMode snr_mode = SnrMode::per_symbol;
    /// -1 for the aggregate row.
    UserId user_id = -1;
    std::uint64_t symbols_sent = 0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t data_bits_sent = 0;
    std::uint64_t data_bit_errors = 0;
    std::uint64_t user_confusions = 0;
    double theory_ser = 0.0;
    double theory_ber = 0.0;

    double ser() const { return symbols_sent ? static_cast<double>(symbol_errors) / symbols_sent : 0.0; }
    double ber() const { return data_bits_sent ? static_cast<double>(data_bit_errors) / data_bits_sent : 0.0; }
};

struct BerReport {
    std::string name;
    std::uint32_t order = 0;
    std::vector<UserId> users;
    /// Per SNR point: one row per user in plan order, then the aggregate row.
    std::vector<BerRow> rows;

    const BerRow& aggregate(std::size_t point) const { return rows[point * (users.size() + 1) + users.size()]; }
    const BerRow& user_row(std::size_t point, std::size_t user_index) const
    {
        return rows[point * (users.size() + 1) + user_index];
    }
    std::size_t point_count() const { return rows.size() / (users.size() + 1); }
};

inline AllocationPlan build_plan(std::uint32_t order, const PlanSpec& spec)
{
    switch (spec.kind) {
    case PlanSpec::Kind::address_bit:
        return build_address_bit_plan(AddressBitLayout(order, spec.address_positions));
    case PlanSpec::Kind::qos: return build_qos_plan(order, spec.qos_bits);
    case PlanSpec::Kind::lookup_file: {
        auto plan = load_lookup_plan(spec.lookup_file);
        if (plan.order() != order)
            throw Error(ErrorCode::mismatch, "lookup table order " + std::to_string(plan.order()) +
                                                 " does not match configured order " + std::to_string(order));
        return plan;
    }
    }
    throw Error(ErrorCode::config, "unknown plan kind");
}

inline std::vector<UserId> user_ids(const AllocationPlan& plan)
{
    std::vector<UserId> ids;
    for (const auto& u : plan.users())
        ids.push_back(u.user_id);
    return ids;
}

inline SlotSchedule build_schedule(const AllocationPlan& plan, const ScheduleSpec& spec, std::uint32_t symbols)
{
    if (spec.kind == ScheduleSpec::Kind::weighted)
        return weighted_schedule(user_ids(plan), spec.weights, symbols);
    return round_robin_schedule(user_ids(plan), symbols);
}

namespace detail {

struct UserCounters {
    std::uint64_t symbols = 0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t confusions = 0;

    UserCounters& operator+=(const UserCounters& o)
    {
        symbols += o.symbols;
        symbol_errors += o.symbol_errors;
        bits += o.bits;
        bit_errors += o.bit_errors;
        confusions += o.confusions;
        return *this;
    }
};

/// Everything a slot shard needs; shared read-only between workers.
struct Chain {
    const AllocationPlan& plan;
    const Constellation& constellation;
    const OfdmModem& modem;
    const SlotSchedule& schedule;
    std::vector<std::size_t> slot_user_index;
    std::vector<std::size_t> symbols_per_user;
};

/**
 * One slot through the whole link. Error accounting: a symbol error is any
 * decoded label differing from the sent one. A decode landing on another
 * user's (or an unallocated) label is a user confusion and costs all B data
 * bits; otherwise the cost is the Hamming distance between data words.
 */
inline void simulate_slot(const Chain& chain, double snr, RngStream& rng, std::vector<UserCounters>& acc)
{
    const auto& g = chain.modem.geometry();
    const auto& plan = chain.plan;
    std::vector<std::vector<DataWord>> streams(plan.user_count());
    for (std::size_t ui = 0; ui < plan.user_count(); ++ui) {
        const std::uint32_t words = 1u << plan.users()[ui].data_bits;
        streams[ui].resize(chain.symbols_per_user[ui] * g.subcarriers);
        for (auto& w : streams[ui])
            w = rng.uniform_below(words);
    }
    const LabelGrid grid = frame_user_data(plan, chain.schedule, g, streams);
    const std::vector<Label>& sent = grid.labels;

    TimeDomainSignal sig = chain.modem.modulate(grid, chain.constellation);
    add_awgn_inplace(sig.samples, snr, 1.0, rng);
    const BinGrid rx = chain.modem.demodulate_bins(sig);

    for (std::uint32_t s = 0; s < g.symbols_per_slot; ++s) {
        const std::size_t ui = chain.slot_user_index[s];
        const unsigned b = plan.users()[ui].data_bits;
        auto& c = acc[ui];
        for (std::uint32_t sc = 0; sc < g.subcarriers; ++sc) {
            const std::size_t cell = std::size_t{s} * g.subcarriers + sc;
            const Label tx = sent[cell];
            const Label got = chain.constellation.detect_label(rx.bins[cell]);
            c.symbols += 1;
            c.bits += b;
            if (got == tx)
                continue;
            c.symbol_errors += 1;
            if (plan.owner_index(got) == static_cast<std::int32_t>(ui)) {
                c.bit_errors += static_cast<unsigned>(std::popcount(plan.word_of(got) ^ plan.word_of(tx)));
            } else {
                c.confusions += 1;
                c.bit_errors += b;
            }
        }
    }
}

inline unsigned resolve_workers(unsigned requested)
{
    if (requested != 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace detail

/**
 * Monte Carlo BER/SER sweep. Slot t of SNR point i draws all of its data and
 * noise from the child stream (seed; i, t), and slots are merged by integer
 * summation in fixed batches, so the report is identical for any worker count.
 */
inline BerReport run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const AllocationPlan plan = build_plan(config.order, config.plan);
    const Constellation constellation(config.order);
    const OfdmModem modem(config.geometry);
    const SlotSchedule schedule = build_schedule(plan, config.schedule, config.geometry.symbols_per_slot);
    schedule.validate(plan, config.geometry);

    std::optional<unsigned> snr_bits = config.snr_data_bits ? config.snr_data_bits : plan.uniform_data_bits();
    if (config.sweep.mode == SnrMode::per_data_bit && !snr_bits)
        throw Error(ErrorCode::config, "per-data-bit SNR with a mixed-width plan needs snr.data_bits");

    detail::Chain chain{plan, constellation, modem, schedule, {}, {}};
    chain.symbols_per_user.assign(plan.user_count(), 0);
    for (UserId id : schedule.assignments) {
        chain.slot_user_index.push_back(*plan.index_of(id));
        ++chain.symbols_per_user[chain.slot_user_index.back()];
    }

    const unsigned workers = detail::resolve_workers(config.workers);
    const RngStream master(config.seed);
    const std::size_t n_users = plan.user_count();

    BerReport report{config.name, config.order, user_ids(plan), {}};
    const auto snr_points = config.sweep.values();
    for (std::size_t pi = 0; pi < snr_points.size(); ++pi) {
        const double db = snr_points[pi];
        const double snr = resolve_symbol_snr({config.sweep.mode, db, snr_bits});

        std::vector<detail::UserCounters> total(n_users);
        std::uint64_t next_slot = 0;
        while (true) {
            const std::uint64_t first = next_slot;
            const std::uint64_t count = config.batch_slots;
            next_slot += count;

            std::vector<std::vector<detail::UserCounters>> shard(count,
                                                                 std::vector<detail::UserCounters>(n_users));
            std::atomic<std::uint64_t> cursor{0};
            const auto work = [&] {
                for (std::uint64_t k = cursor++; k < count; k = cursor++) {
                    RngStream rng = master.child({pi, first + k});
                    detail::simulate_slot(chain, snr, rng, shard[k]);
                }
            };
            if (workers <= 1) {
                work();
            } else {
                std::vector<std::jthread> pool;
                for (unsigned w = 0; w < std::min<std::uint64_t>(workers, count); ++w)
                    pool.emplace_back(work);
            }
            for (const auto& s : shard)
                for (std::size_t u = 0; u < n_users; ++u)
                    total[u] += s[u];

            std::uint64_t symbols = 0;
            std::uint64_t errors = 0;
            for (const auto& c : total) {
                symbols += c.symbols;
                errors += c.symbol_errors;
            }
            if (symbols >= config.stop.min_symbols &&
                (errors >= config.stop.min_errors || symbols >= config.stop.max_symbols))
                break;
        }

        const double theory_ser = std::isinf(snr) ? 0.0 : ser_mqam(config.order, snr);
        const double theory_ber = std::isinf(snr) ? 0.0 : ber_gray_approx(config.order, snr);
        BerRow agg{db, config.sweep.mode, -1};
        agg.theory_ser = theory_ser;
        agg.theory_ber = theory_ber;
        for (std::size_t u = 0; u < n_users; ++u) {
            const auto& c = total[u];
            BerRow row{db, config.sweep.mode, plan.users()[u].user_id, c.symbols, c.symbol_errors, c.bits,
                       c.bit_errors, c.confusions, theory_ser, theory_ber};
            report.rows.push_back(row);
            agg.symbols_sent += c.symbols;
            agg.symbol_errors += c.symbol_errors;
            agg.data_bits_sent += c.bits;
            agg.data_bit_errors += c.bit_errors;
            agg.user_confusions += c.confusions;
        }
        report.rows.push_back(agg);
    }
    return report;
}

/**
 * Address positions that split a square constellation into compact regions,
 * taking Gray bits from the top of each axis and alternating which axis goes
 * first: for 64-QAM the order is 5, 2, 1, 4, 3, 0. With three address bits the
 * two highest user ids then share one quadrant, so a round-robin slot that
 * gives them fewer symbols still uses the constellation symmetrically.
 */
inline std::vector<unsigned> interleaved_address_positions(std::uint32_t order, unsigned address_bits)
{
    const unsigned d = log2_order(order);
    const unsigned h = d / 2;
    std::vector<unsigned> order_of_use;
    for (unsigned k = 0; k < h; ++k) {
        const unsigned i_bit = d - 1 - k;
        const unsigned q_bit = h - 1 - k;
        order_of_use.push_back(k % 2 ? q_bit : i_bit);
        order_of_use.push_back(k % 2 ? i_bit : q_bit);
    }
    if (address_bits >= d)
        throw Error(ErrorCode::invalid_width, "too many address bits for order " + std::to_string(order));
    return {order_of_use.begin(), order_of_use.begin() + address_bits};
}

/**
 * Runs the same link with 1, 2^A, ... users sharing one M-QAM modulator. A
 * single user owns every label; n > 1 users use an address-bit plan with
 * log2(n) address bits placed by interleaved_address_positions().
 */
inline std::vector<BerReport> compare_user_scaling(const ExperimentConfig& base,
                                                   const std::vector<std::uint32_t>& user_counts)
{
    std::vector<BerReport> out;
    const unsigned d = log2_order(base.order);
    for (std::uint32_t n : user_counts) {
        if (n == 0 || !std::has_single_bit(n) || static_cast<unsigned>(std::countr_zero(n)) >= d)
            throw Error(ErrorCode::config, "user count must be a power of two below the order, got " +
                                               std::to_string(n));
        ExperimentConfig cfg = base;
        cfg.name = std::to_string(n) + "-user";
        cfg.snr_data_bits.reset();
        cfg.schedule = {};
        if (n == 1) {
            cfg.plan = {PlanSpec::Kind::qos, {}, {}, {d}};
        } else {
            cfg.plan = {PlanSpec::Kind::address_bit,
                        interleaved_address_positions(base.order, static_cast<unsigned>(std::countr_zero(n))),
                        {},
                        {}};
        }
        out.push_back(run_experiment(cfg));
    }
    return out;
}

} // namespace csma
