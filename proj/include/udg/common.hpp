#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace udg {

using Vec = std::vector<double>;
using Rng = std::mt19937_64;

/// Raised when a caller breaks an operation's preconditions.
struct contract_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw contract_error(what);
}

/// splitmix64 finalizer; mixes a base seed with a stream tag so that
/// independent sub-experiments never share an RNG stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return derive_seed(derive_seed(seed, a), b);
}

// Box-Muller on top of the raw engine; std::normal_distribution is not
// specified bit-for-bit across standard libraries.
inline double standard_normal(Rng& rng)
{
    constexpr double two_pi = 6.283185307179586476925;
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = std::ldexp(static_cast<double>(rng() >> 11), -53);
    const double u2 = std::ldexp(static_cast<double>(rng() >> 11), -53);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline double uniform01(Rng& rng)
{
    return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

inline double squared_distance(const double* x, const double* y, std::size_t d)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        acc += diff * diff;
    }
    return acc;
}

inline double euclidean(const Vec& x, const Vec& y)
{
    require(x.size() == y.size(), "euclidean: dimension mismatch");
    return std::sqrt(squared_distance(x.data(), y.data(), x.size()));
}

/// Shortest decimal string that parses back to the identical double.
inline std::string format_double(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s)
{
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error("cannot parse number '" + std::string(s) + "'");
    return x;
}

inline long long parse_int(std::string_view s)
{
    long long x = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error("cannot parse integer '" + std::string(s) + "'");
    return x;
}

inline std::string format_vec(const Vec& v)
{
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        out += format_double(v[k]);
    }
    return out;
}

inline Vec parse_vec(std::string_view s)
{
    Vec out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = s.find(',', pos);
        out.push_back(parse_double(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace udg
