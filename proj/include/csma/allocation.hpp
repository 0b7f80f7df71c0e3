#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csma/constellation.hpp"
#include "csma/error.hpp"

namespace csma {

using UserId = int;
using DataWord = std::uint32_t;

enum class SchemeKind { address_bit, lookup_table };

struct UserAllocation {
    UserId user_id = 0;
    unsigned data_bits = 0;
    /// codewords[k] is the label that carries data word k.
    std::vector<Label> codewords;
};

/// Result of demapping a detected label.
struct Demapped {
    UserId user_id = 0;
    DataWord data_word = 0;
    std::size_t user_index = 0;
};

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    friend bool operator==(const Rational&, const Rational&) = default;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Rational make_rational(std::int64_t num, std::int64_t den)
{
    const std::int64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

inline unsigned log2_order(std::uint32_t order)
{
    if (order < 2 || !std::has_single_bit(order))
        throw Error(ErrorCode::invalid_order, "order must be a power of two, got " + std::to_string(order));
    return static_cast<unsigned>(std::countr_zero(order));
}

/// Number of users that fit when each carries `data_bits` of the log2(M) label bits.
inline std::uint64_t capacity_enhancement(std::uint32_t order, unsigned data_bits)
{
    const unsigned d = log2_order(order);
    if (data_bits < 1 || data_bits > d)
        throw Error(ErrorCode::invalid_width,
                    "data bits must be in [1, " + std::to_string(d) + "], got " + std::to_string(data_bits));
    return std::uint64_t{1} << (d - data_bits);
}

/// Per-user throughput relative to a dedicated modulator: (D - A) / (D * 2^A).
inline Rational throughput_reduction(std::uint32_t order, unsigned address_bits)
{
    const unsigned d = log2_order(order);
    if (address_bits + 1 > d)
        throw Error(ErrorCode::invalid_width,
                    "address bits must be in [0, " + std::to_string(d - 1) + "], got " +
                        std::to_string(address_bits));
    return make_rational(static_cast<std::int64_t>(d - address_bits),
                         static_cast<std::int64_t>(d) << address_bits);
}

/**
 * Partition of constellation labels among users. Construction validates that
 * codeword sets are disjoint, each user map is injective and every codeword is
 * a valid label. Labels not owned by anyone demap to std::nullopt.
 */
class AllocationPlan {
public:
    static constexpr std::int32_t unallocated = -1;

    AllocationPlan(std::uint32_t order, SchemeKind kind, std::vector<UserAllocation> users)
        : order_(order), bits_(log2_order(order)), kind_(kind), users_(std::move(users)),
          owner_(order, unallocated), word_(order, 0)
    {
        std::set<UserId> ids;
        for (std::size_t ui = 0; ui < users_.size(); ++ui) {
            const auto& u = users_[ui];
            if (!ids.insert(u.user_id).second)
                throw Error(ErrorCode::overlap, "duplicate user id " + std::to_string(u.user_id));
            if (u.data_bits < 1 || u.data_bits > bits_)
                throw Error(ErrorCode::invalid_width, "user " + std::to_string(u.user_id) +
                                                          " has invalid data width " +
                                                          std::to_string(u.data_bits));
            if (u.codewords.size() != (std::size_t{1} << u.data_bits))
                throw Error(ErrorCode::incomplete_table,
                            "user " + std::to_string(u.user_id) + " needs " +
                                std::to_string(1u << u.data_bits) + " codewords, has " +
                                std::to_string(u.codewords.size()));
            for (std::size_t k = 0; k < u.codewords.size(); ++k) {
                const Label cw = u.codewords[k];
                if (cw >= order_)
                    throw Error(ErrorCode::lookup, "codeword " + std::to_string(cw) +
                                                       " out of range for order " + std::to_string(order_));
                if (owner_[cw] != unallocated)
                    throw Error(ErrorCode::overlap, "codeword " + to_binary(cw, bits_) +
                                                        " assigned more than once");
                owner_[cw] = static_cast<std::int32_t>(ui);
                word_[cw] = static_cast<DataWord>(k);
            }
        }
    }

    std::uint32_t order() const noexcept { return order_; }
    unsigned bits_per_symbol() const noexcept { return bits_; }
    SchemeKind kind() const noexcept { return kind_; }
    const std::vector<UserAllocation>& users() const noexcept { return users_; }
    std::size_t user_count() const noexcept { return users_.size(); }

    std::optional<std::size_t> index_of(UserId id) const
    {
        for (std::size_t i = 0; i < users_.size(); ++i)
            if (users_[i].user_id == id)
                return i;
        return std::nullopt;
    }

    const UserAllocation& user(UserId id) const
    {
        const auto idx = index_of(id);
        if (!idx)
            throw Error(ErrorCode::lookup, "unknown user " + std::to_string(id));
        return users_[*idx];
    }

    /// Common data width if every user has the same one.
    std::optional<unsigned> uniform_data_bits() const
    {
        if (users_.empty())
            return std::nullopt;
        const unsigned b = users_.front().data_bits;
        for (const auto& u : users_)
            if (u.data_bits != b)
                return std::nullopt;
        return b;
    }

    std::size_t allocated_count() const
    {
        return static_cast<std::size_t>(
            std::count_if(owner_.begin(), owner_.end(), [](auto o) { return o != unallocated; }));
    }

    Label map_symbol(UserId id, DataWord word) const
    {
        const auto& u = user(id);
        if (word >= u.codewords.size())
            throw Error(ErrorCode::lookup, "data word " + std::to_string(word) + " out of range for user " +
                                               std::to_string(id));
        return u.codewords[word];
    }

    /// Hot-path variant addressed by user index; no validation.
    Label map_by_index(std::size_t user_index, DataWord word) const noexcept
    {
        return users_[user_index].codewords[word];
    }

    std::optional<Demapped> demap_symbol(Label label) const
    {
        if (label >= order_ || owner_[label] == unallocated)
            return std::nullopt;
        const auto ui = static_cast<std::size_t>(owner_[label]);
        return Demapped{users_[ui].user_id, word_[label], ui};
    }

    /// Owner index of a label, or -1.
    std::int32_t owner_index(Label label) const noexcept { return owner_[label]; }
    DataWord word_of(Label label) const noexcept { return word_[label]; }

private:
    std::uint32_t order_;
    unsigned bits_;
    SchemeKind kind_;
    std::vector<UserAllocation> users_;
    std::vector<std::int32_t> owner_;
    std::vector<DataWord> word_;
};

/// Bit positions (0 = LSB) that carry the user address within a D-bit label.
class AddressBitLayout {
public:
    AddressBitLayout(std::uint32_t order, std::vector<unsigned> address_positions)
        : order_(order), bits_(log2_order(order))
    {
        std::sort(address_positions.begin(), address_positions.end(), std::greater<>());
        if (std::adjacent_find(address_positions.begin(), address_positions.end()) != address_positions.end())
            throw Error(ErrorCode::invalid_width, "duplicate address bit position");
        if (address_positions.empty() || address_positions.size() + 1 > bits_)
            throw Error(ErrorCode::invalid_width, "address width must be in [1, D-1]");
        for (unsigned p : address_positions)
            if (p >= bits_)
                throw Error(ErrorCode::invalid_width, "address bit position " + std::to_string(p) +
                                                          " outside label of " + std::to_string(bits_) +
                                                          " bits");
        address_ = std::move(address_positions);
        for (int p = static_cast<int>(bits_) - 1; p >= 0; --p)
            if (std::find(address_.begin(), address_.end(), static_cast<unsigned>(p)) == address_.end())
                data_.push_back(static_cast<unsigned>(p));
    }

    std::uint32_t order() const noexcept { return order_; }
    unsigned address_bits() const noexcept { return static_cast<unsigned>(address_.size()); }
    unsigned data_bits() const noexcept { return static_cast<unsigned>(data_.size()); }
    /// Descending.
    const std::vector<unsigned>& address_positions() const noexcept { return address_; }
    /// Descending; data MSB goes to the first entry.
    const std::vector<unsigned>& data_positions() const noexcept { return data_; }

    Label compose(std::uint32_t address, DataWord data) const noexcept
    {
        return scatter(address, address_) | scatter(data, data_);
    }

private:
    static Label scatter(std::uint32_t value, const std::vector<unsigned>& positions) noexcept
    {
        Label out = 0;
        const std::size_t n = positions.size();
        for (std::size_t i = 0; i < n; ++i)
            if ((value >> (n - 1 - i)) & 1u)
                out |= Label{1} << positions[i];
        return out;
    }

    std::uint32_t order_;
    unsigned bits_;
    std::vector<unsigned> address_;
    std::vector<unsigned> data_;
};

/// One user per address value; user id equals the address.
inline AllocationPlan build_address_bit_plan(const AddressBitLayout& layout)
{
    const std::uint32_t n_users = 1u << layout.address_bits();
    const std::uint32_t n_words = 1u << layout.data_bits();
    std::vector<UserAllocation> users;
    users.reserve(n_users);
    for (std::uint32_t u = 0; u < n_users; ++u) {
        UserAllocation ua{static_cast<UserId>(u), layout.data_bits(), {}};
        ua.codewords.reserve(n_words);
        for (DataWord d = 0; d < n_words; ++d)
            ua.codewords.push_back(layout.compose(u, d));
        users.push_back(std::move(ua));
    }
    return AllocationPlan(layout.order(), SchemeKind::address_bit, std::move(users));
}

struct LookupRow {
    UserId user_id = 0;
    DataWord data_word = 0;
    unsigned data_bits = 0;
    Label codeword = 0;
};

/**
 * Builds a plan verbatim from table rows. A user's data width is taken from the
 * width of its data words; every word of that width must appear exactly once.
 * Users keep the order in which they first appear.
 */
inline AllocationPlan build_lookup_plan(std::uint32_t order, const std::vector<LookupRow>& table)
{
    const unsigned d = log2_order(order);
    std::vector<UserAllocation> users;
    std::vector<std::vector<bool>> seen;
    std::set<Label> used;

    for (const auto& row : table) {
        if (row.codeword >= order)
            throw Error(ErrorCode::lookup, "codeword " + std::to_string(row.codeword) + " exceeds order " +
                                               std::to_string(order));
        if (!used.insert(row.codeword).second)
            throw Error(ErrorCode::overlap, "codeword " + to_binary(row.codeword, d) + " appears twice");
        if (row.data_bits < 1 || row.data_bits > d)
            throw Error(ErrorCode::invalid_width, "invalid data width for user " + std::to_string(row.user_id));
        auto it = std::find_if(users.begin(), users.end(),
                               [&](const auto& u) { return u.user_id == row.user_id; });
        if (it == users.end()) {
            users.push_back({row.user_id, row.data_bits, std::vector<Label>(std::size_t{1} << row.data_bits)});
            seen.emplace_back(std::size_t{1} << row.data_bits, false);
            it = users.end() - 1;
        }
        const auto ui = static_cast<std::size_t>(it - users.begin());
        if (row.data_bits != it->data_bits)
            throw Error(ErrorCode::invalid_width,
                        "inconsistent data width for user " + std::to_string(row.user_id));
        if (row.data_word >= it->codewords.size())
            throw Error(ErrorCode::lookup, "data word out of range for user " + std::to_string(row.user_id));
        if (seen[ui][row.data_word])
            throw Error(ErrorCode::overlap, "data word " + to_binary(row.data_word, row.data_bits) +
                                                " repeated for user " + std::to_string(row.user_id));
        seen[ui][row.data_word] = true;
        it->codewords[row.data_word] = row.codeword;
    }
    for (std::size_t ui = 0; ui < users.size(); ++ui) {
        for (std::size_t w = 0; w < seen[ui].size(); ++w)
            if (!seen[ui][w])
                throw Error(ErrorCode::incomplete_table,
                            "user " + std::to_string(users[ui].user_id) + " is missing data word " +
                                to_binary(static_cast<std::uint32_t>(w), users[ui].data_bits));
    }
    return AllocationPlan(order, SchemeKind::lookup_table, std::move(users));
}

/**
 * Non-uniform plan: user i gets 2^bits[i] codewords. Labels are dealt in
 * ascending order by smooth weighted round-robin (weights = set sizes, ties to
 * the lower user index), so larger users interleave with smaller ones rather
 * than taking a contiguous block. Leftover labels at the top stay unallocated.
 */
inline AllocationPlan build_qos_plan(std::uint32_t order, const std::vector<unsigned>& bits_per_user)
{
    const unsigned d = log2_order(order);
    if (bits_per_user.empty())
        throw Error(ErrorCode::invalid_width, "QoS plan needs at least one user");
    std::uint64_t total = 0;
    std::vector<std::int64_t> weight;
    for (unsigned b : bits_per_user) {
        if (b < 1 || b > d)
            throw Error(ErrorCode::invalid_width, "data width " + std::to_string(b) + " out of range");
        weight.push_back(std::int64_t{1} << b);
        total += std::uint64_t{1} << b;
    }
    if (total > order)
        throw Error(ErrorCode::overflow, "requested " + std::to_string(total) + " codewords but order is " +
                                             std::to_string(order));

    std::vector<UserAllocation> users;
    for (std::size_t i = 0; i < bits_per_user.size(); ++i)
        users.push_back({static_cast<UserId>(i), bits_per_user[i], {}});

    std::vector<std::int64_t> current(weight.size(), 0);
    const auto sum = static_cast<std::int64_t>(total);
    for (Label label = 0; label < total; ++label) {
        std::size_t pick = 0;
        for (std::size_t i = 0; i < weight.size(); ++i) {
            current[i] += weight[i];
            if (current[i] > current[pick])
                pick = i;
        }
        current[pick] -= sum;
        users[pick].codewords.push_back(label);
    }
    return AllocationPlan(order, SchemeKind::lookup_table, std::move(users));
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::optional<std::uint32_t> parse_binary(const std::string& s)
{
    if (s.empty() || s.size() > 31)
        return std::nullopt;
    std::uint32_t v = 0;
    for (char ch : s) {
        if (ch != '0' && ch != '1')
            return std::nullopt;
        v = (v << 1) | static_cast<std::uint32_t>(ch - '0');
    }
    return v;
}

} // namespace detail

/**
 * Parses `user_id,data_word_binary,codeword_binary` rows; `#` starts a comment.
 * Codeword width fixes the order unless one is given.
 */
inline std::vector<LookupRow> parse_lookup_table(std::istream& in, unsigned* codeword_width = nullptr)
{
    std::vector<LookupRow> rows;
    std::string line;
    std::size_t line_no = 0;
    unsigned width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(detail::trim(f));
        const auto fail = [&](const std::string& msg) {
            throw Error(ErrorCode::lookup, "line " + std::to_string(line_no) + ": " + msg);
        };
        if (fields.size() != 3)
            fail("expected 3 comma-separated fields");
        LookupRow row;
        try {
            std::size_t used = 0;
            row.user_id = std::stoi(fields[0], &used);
            if (used != fields[0].size())
                fail("bad user id '" + fields[0] + "'");
        } catch (const std::logic_error&) {
            fail("bad user id '" + fields[0] + "'");
        }
        const auto word = detail::parse_binary(fields[1]);
        const auto cw = detail::parse_binary(fields[2]);
        if (!word)
            fail("bad data word '" + fields[1] + "'");
        if (!cw)
            fail("bad codeword '" + fields[2] + "'");
        if (width == 0)
            width = static_cast<unsigned>(fields[2].size());
        else if (fields[2].size() != width)
            fail("codeword width differs from earlier rows");
        row.data_word = *word;
        row.data_bits = static_cast<unsigned>(fields[1].size());
        row.codeword = *cw;
        rows.push_back(row);
    }
    if (codeword_width)
        *codeword_width = width;
    return rows;
}

/// Loads a lookup-table file; the order is 2^(codeword width).
inline AllocationPlan load_lookup_plan(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "cannot open lookup table " + path);
    unsigned width = 0;
    const auto rows = parse_lookup_table(in, &width);
    if (rows.empty())
        throw Error(ErrorCode::incomplete_table, "lookup table " + path + " has no rows");
    return build_lookup_plan(1u << width, rows);
}

} // namespace csma
