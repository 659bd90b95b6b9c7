/// @file rng.hpp
/// @brief Pinned, portable randomness for seeded experiments.
///
/// mt19937_64 is fully specified by the C++ standard and the bounded draw
/// uses rejection sampling, so identical seeds give identical streams on
/// every platform. std::shuffle / uniform_int_distribution are
/// implementation-defined and must not be used here.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rubric_forge {

class SeededRng {
  public:
    /// Named in output manifests next to the seed.
    static constexpr std::string_view kAlgorithm = "mt19937_64/fisher-yates";

    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform draw in [0, n) via rejection sampling; n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    /// First k positions of a full Fisher-Yates shuffle of 0..population-1.
    /// Prefix property: for fixed seed, sample(p, k1) is a prefix of
    /// sample(p, k2) whenever k1 <= k2.
    std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k);

  private:
    std::mt19937_64 gen_;
};

}  // namespace rubric_forge
