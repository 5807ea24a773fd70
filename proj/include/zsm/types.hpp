#pragma once

#include <cstdint>
#include <string_view>

namespace zsm
{

// Signal reception class. Numeric values are the classifier targets.
enum class Label : int
{
    los = 0,
    nlos = 1
};

constexpr std::string_view to_string(Label l) { return l == Label::los ? "LOS" : "NLOS"; }

using SatId = int;

// splitmix64 finalizer; derives independent RNG seeds from (seed, stream, index) tuples
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1) + 0xBF58476D1CE4E5B9ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace zsm
