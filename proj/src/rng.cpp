#include "rubric_forge/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace rubric_forge {

std::uint64_t SeededRng::bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("bounded(0)");
    // Reject the tail of the 2^64 range that would skew the modulus.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % n;
}

std::vector<std::size_t> SeededRng::sample_indices(std::size_t population, std::size_t k) {
    if (k > population) throw std::invalid_argument("sample larger than population");
    std::vector<std::size_t> order(population);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order);
    order.resize(k);
    return order;
}

}  // namespace rubric_forge
