#pragma once

// Bit-packed classical configuration of matter occupations and link spins.
//
// Layout: bits [0, n_sites) hold the hardcore-boson occupation of each site,
// bits [n_sites, n_sites + n_links) hold one bit per link. For the U(1) link
// model bit 1 means S^z = +1/2; for the Z2 theory bit 1 means sigma^x = -1.

#include <array>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace lgt {

template <std::size_t Words>
class BitConfig {
 public:
  static constexpr std::size_t kWords = Words;
  static constexpr std::size_t kMaxBits = 64 * Words;

  constexpr BitConfig() = default;

  constexpr bool test(std::size_t bit) const {
    return (words_[bit >> 6] >> (bit & 63)) & 1u;
  }
  constexpr void set(std::size_t bit, bool value = true) {
    const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
    if (value)
      words_[bit >> 6] |= mask;
    else
      words_[bit >> 6] &= ~mask;
  }
  constexpr void flip(std::size_t bit) { words_[bit >> 6] ^= std::uint64_t{1} << (bit & 63); }

  constexpr int popcount() const {
    int n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
  }

  constexpr const std::array<std::uint64_t, Words>& words() const { return words_; }
  constexpr std::array<std::uint64_t, Words>& words() { return words_; }

  // Lexicographic order of the packed bit string read as one big integer
  // (most significant word first).
  constexpr std::strong_ordering operator<=>(const BitConfig& other) const {
    for (std::size_t i = Words; i-- > 0;) {
      if (words_[i] != other.words_[i]) return words_[i] <=> other.words_[i];
    }
    return std::strong_ordering::equal;
  }
  constexpr bool operator==(const BitConfig& other) const = default;

  // Hex string of the used words, most significant first.
  std::string to_hex(std::size_t n_bits) const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::size_t n_nibbles = n_bits == 0 ? 1 : (n_bits + 3) / 4;
    std::string out(n_nibbles, '0');
    for (std::size_t k = 0; k < n_nibbles; ++k) {
      const std::size_t bit = 4 * k;
      const unsigned nib = (words_[bit >> 6] >> (bit & 63)) & 0xFu;
      out[n_nibbles - 1 - k] = kDigits[nib];
    }
    return out;
  }

  std::size_t hash() const {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (auto w : words_) {
      h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 31));
  }

 private:
  std::array<std::uint64_t, Words> words_{};
};

using BasisConfig = BitConfig<4>;

struct BasisConfigHash {
  template <std::size_t W>
  std::size_t operator()(const BitConfig<W>& c) const {
    return c.hash();
  }
};

}  // namespace lgt
