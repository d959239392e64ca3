#include "stegcnn/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace stegcnn {

std::uint64_t Xoshiro256::below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    // Largest multiple of bound that fits; values above it are rejected.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

double Xoshiro256::normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

KeyedPermutation::KeyedPermutation(std::uint64_t key, std::size_t n) : rng_{key}, order_(n) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::size_t KeyedPermutation::operator[](std::size_t i) {
    if (i >= order_.size()) throw std::out_of_range("KeyedPermutation index out of range");
    while (drawn_ <= i) {
        const std::size_t remaining = order_.size() - drawn_;
        const std::size_t j = drawn_ + static_cast<std::size_t>(rng_.below(remaining));
        std::swap(order_[drawn_], order_[j]);
        ++drawn_;
    }
    return order_[i];
}

std::vector<std::size_t> KeyedPermutation::prefix(std::size_t m) {
    if (m > order_.size()) throw std::out_of_range("KeyedPermutation prefix longer than permutation");
    if (m > 0) (*this)[m - 1];
    return {order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(m)};
}

const std::vector<std::size_t>& KeyedPermutation::full() {
    if (!order_.empty()) (*this)[order_.size() - 1];
    return order_;
}

}  // namespace stegcnn
