#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace csma {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * Seedable, splittable random stream. A child stream is keyed by a path of
 * integers (e.g. SNR point, slot), so any shard can be regenerated without
 * touching the others.
 */
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(std::uint64_t seed) : key_(seed), engine_(splitmix64(seed)) {}

    RngStream child(std::uint64_t index) const { return RngStream(derive(key_, index), tag{}); }

    RngStream child(std::initializer_list<std::uint64_t> path) const
    {
        std::uint64_t k = key_;
        for (auto p : path)
            k = derive(k, p);
        return RngStream(k, tag{});
    }

    engine_type& engine() noexcept { return engine_; }

    double gaussian() { return normal_(engine_); }

    std::uint32_t uniform_below(std::uint32_t bound)
    {
        return std::uniform_int_distribution<std::uint32_t>(0, bound - 1)(engine_);
    }

private:
    struct tag {};
    RngStream(std::uint64_t key, tag) : key_(key), engine_(splitmix64(key)) {}

    static std::uint64_t derive(std::uint64_t parent, std::uint64_t index) noexcept
    {
        return splitmix64(parent ^ splitmix64(index + 0xD1B54A32D192ED03ULL));
    }

    std::uint64_t key_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace csma
