#ifndef PPSTAT_CORE_RNG_HPP
#define PPSTAT_CORE_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace ppstat {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
{
    return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

/// Identifies one reproducible random stream. (seed, stream) determines every draw.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Independent sub-stream, e.g. replicate k of this stream.
    [[nodiscard]] RngSpec child(std::uint64_t k) const noexcept
    {
        return {seed, hash_combine(stream, k)};
    }

    friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// Counter-seeded SplitMix64 engine. Cheap to construct, used for draws keyed
/// by a site or coefficient index.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Distribution helpers shared by both engines.
template <typename Engine>
class BasicRng {
public:
    explicit BasicRng(Engine engine) : engine_(std::move(engine)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform on (0, 1], safe for logarithms.
    double uniform_open_left() { return 1.0 - uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal()
    {
        boost::random::normal_distribution<double> dist(0.0, 1.0);
        return dist(engine_);
    }

    double exponential() { return -std::log(uniform_open_left()); }

    std::uint64_t poisson(double mean)
    {
        if (mean <= 0.0) {
            return 0;
        }
        boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
        return dist(engine_);
    }

    /// Standard complex gaussian, density exp(-|z|^2)/pi.
    std::complex<double> complex_normal()
    {
        const double re = normal();
        const double im = normal();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

    std::uint64_t below(std::uint64_t n)
    {
        // Lemire-free rejection; n is small in all callers.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % n;
    }

    Engine& engine() noexcept { return engine_; }

private:
    Engine engine_;
};

inline std::mt19937_64 make_stream_engine(const RngSpec& spec)
{
    const std::uint64_t a = splitmix64(spec.seed);
    const std::uint64_t b = hash_combine(a, spec.stream);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// Sequential stream for (seed, stream).
class Rng : public BasicRng<std::mt19937_64> {
public:
    explicit Rng(const RngSpec& spec) : BasicRng(make_stream_engine(spec)) {}
};

/// Stream keyed by (spec, a tuple of integer labels), e.g. a lattice site.
class KeyedRng : public BasicRng<SplitMix64> {
public:
    KeyedRng(const RngSpec& spec, std::uint64_t tag, std::array<std::int64_t, 3> key)
        : BasicRng(SplitMix64(mix(spec, tag, key)))
    {
    }

private:
    static std::uint64_t mix(const RngSpec& spec, std::uint64_t tag, const std::array<std::int64_t, 3>& key)
    {
        std::uint64_t h = hash_combine(splitmix64(spec.seed), spec.stream);
        h = hash_combine(h, tag);
        for (auto k : key) {
            h = hash_combine(h, static_cast<std::uint64_t>(k));
        }
        return h;
    }
};

} // namespace ppstat

#endif // PPSTAT_CORE_RNG_HPP
