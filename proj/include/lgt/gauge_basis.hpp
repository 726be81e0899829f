#pragma once

// Gauss-law evaluation and gauge-invariant sector enumeration.
//
// The U(1) generator is evaluated in the link-bit frame b = S^z + 1/2:
//
//   G_j = n_j - (sum_out b - sum_in b) - (1 - s_j) / 2
//
// Links missing at an open edge contribute nothing, so the vacuum with every
// bit 0 (all fields pointing left/down), even sites empty and odd sites
// filled has G_j = 0 everywhere, including boundary sites. In the bulk this
// coincides with the S^z-frame divergence. On the brick wall the frame shift
// reproduces the staggered +-1/2 background charge.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgt/bitconfig.hpp"
#include "lgt/lattice.hpp"

namespace lgt {

enum class GaugeModel : std::uint32_t { u1_qlm = 0, z2 = 1 };

inline std::string to_string(GaugeModel m) { return m == GaugeModel::u1_qlm ? "u1_qlm" : "z2"; }

inline constexpr std::size_t kDefaultSectorCap = 20'000'000;

class SectorSizeError : public std::runtime_error {
 public:
  SectorSizeError(const std::string& dimension, std::size_t cap)
      : std::runtime_error("sector size cap exceeded: " + dimension + " > cap " + std::to_string(cap)),
        dimension_(dimension),
        cap_(cap) {}
  const std::string& dimension() const { return dimension_; }
  std::size_t cap() const { return cap_; }

 private:
  std::string dimension_;
  std::size_t cap_;
};

class BasisMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Static charges as target eigenvalues of G_j; every unlisted site targets 0.
struct ChargeLayout {
  std::map<int, int> static_charges;

  int target(int site) const {
    auto it = static_charges.find(site);
    return it == static_charges.end() ? 0 : it->second;
  }

  static ChargeLayout vacuum() { return {}; }

  // A string source carries G = -1, its sink G = +1.
  static ChargeLayout string_pair(int source, int sink) {
    if (source == sink) throw std::invalid_argument("string endpoints must differ");
    return ChargeLayout{{{source, -1}, {sink, +1}}};
  }

  std::optional<int> source() const {
    for (auto [s, q] : static_charges)
      if (q == -1) return s;
    return std::nullopt;
  }
  std::optional<int> sink() const {
    for (auto [s, q] : static_charges)
      if (q == +1) return s;
    return std::nullopt;
  }

  bool operator==(const ChargeLayout&) const = default;
};

inline bool matter_bit(const BasisConfig& cfg, int site) { return cfg.test(static_cast<std::size_t>(site)); }

inline bool link_bit(const Lattice& lat, const BasisConfig& cfg, int l) {
  return cfg.test(static_cast<std::size_t>(lat.link_bit(l)));
}

inline int link_divergence(const Lattice& lat, const BasisConfig& cfg, int site) {
  int div = 0;
  for (int l : lat.incident_links(site)) {
    const int b = link_bit(lat, cfg, l) ? 1 : 0;
    div += lat.link(l).from == site ? b : -b;
  }
  return div;
}

inline int gauss_eigenvalue_u1(const Lattice& lat, const BasisConfig& cfg, int site) {
  const int n = matter_bit(cfg, site) ? 1 : 0;
  const int offset = (1 - lat.mass_sign(site)) / 2;
  return n - link_divergence(lat, cfg, site) - offset;
}

inline int gauss_eigenvalue_u1(const Lattice& lat, const BasisConfig& cfg, int site, const ChargeLayout&) {
  return gauss_eigenvalue_u1(lat, cfg, site);
}

inline bool satisfies_gauss_u1(const Lattice& lat, const BasisConfig& cfg, const ChargeLayout& layout) {
  for (int s = 0; s < lat.num_sites(); ++s)
    if (gauss_eigenvalue_u1(lat, cfg, s) != layout.target(s)) return false;
  return true;
}

// Product of sigma^x over the links meeting at a vertex.
inline int z2_vertex_eigenvalue(const Lattice& lat, const BasisConfig& cfg, int site) {
  int flipped = 0;
  for (int l : lat.incident_links(site)) flipped += link_bit(lat, cfg, l) ? 1 : 0;
  return (flipped & 1) ? -1 : 1;
}

// The staggered-vacuum configuration: all link bits 0, s_j = -1 sites filled.
inline BasisConfig vacuum_config(const Lattice& lat) {
  BasisConfig cfg;
  for (int s = 0; s < lat.num_sites(); ++s)
    if (lat.mass_sign(s) < 0) cfg.set(s);
  return cfg;
}

// Ordered, duplicate-free list of configurations with exact index lookup.
// Copies share the underlying storage.
class SectorBasis {
 public:
  SectorBasis() : configs_(std::make_shared<const std::vector<BasisConfig>>()) {}
  SectorBasis(GaugeModel model, int n_sites, int n_links, std::vector<BasisConfig> configs)
      : model_(model), n_sites_(n_sites), n_links_(n_links) {
    std::sort(configs.begin(), configs.end());
    configs.erase(std::unique(configs.begin(), configs.end()), configs.end());
    configs_ = std::make_shared<const std::vector<BasisConfig>>(std::move(configs));
  }

  GaugeModel model() const { return model_; }
  int n_sites() const { return n_sites_; }
  int n_links() const { return n_links_; }
  std::size_t size() const { return configs_->size(); }
  bool empty() const { return configs_->empty(); }
  const BasisConfig& operator[](std::size_t i) const { return (*configs_)[i]; }
  const BasisConfig& at(std::size_t i) const { return configs_->at(i); }
  const std::vector<BasisConfig>& configs() const { return *configs_; }
  auto begin() const { return configs_->begin(); }
  auto end() const { return configs_->end(); }

  std::optional<std::size_t> find(const BasisConfig& cfg) const {
    auto it = std::lower_bound(configs_->begin(), configs_->end(), cfg);
    if (it == configs_->end() || !(*it == cfg)) return std::nullopt;
    return static_cast<std::size_t>(it - configs_->begin());
  }

  bool matches(const Lattice& lat) const { return n_sites_ == lat.num_sites() && n_links_ == lat.num_links(); }

 private:
  GaugeModel model_ = GaugeModel::u1_qlm;
  int n_sites_ = 0;
  int n_links_ = 0;
  std::shared_ptr<const std::vector<BasisConfig>> configs_;
};

namespace detail {

// Depth-first assignment of sites in index order. At site j the occupation
// and every link towards a higher-index neighbour are chosen; links towards
// lower-index neighbours were fixed earlier, so G_j is known and the branch is
// pruned immediately when it misses the target.
class U1Enumerator {
 public:
  U1Enumerator(const Lattice& lat, const ChargeLayout& layout, std::size_t cap)
      : lat_(lat), cap_(cap), targets_(lat.num_sites()), forward_(lat.num_sites()), backward_(lat.num_sites()) {
    for (int s = 0; s < lat.num_sites(); ++s) {
      targets_[s] = layout.target(s);
      for (int l : lat.incident_links(s)) {
        const Link& k = lat.link(l);
        const int other = k.from == s ? k.to : k.from;
        (other > s ? forward_ : backward_)[s].push_back(l);
      }
    }
  }

  std::vector<BasisConfig> run() {
    out_.clear();
    if (lat_.num_bits() > static_cast<int>(BasisConfig::kMaxBits))
      throw SectorSizeError("configuration bits " + std::to_string(lat_.num_bits()), BasisConfig::kMaxBits);
    BasisConfig cfg;
    visit(0, cfg);
    return std::move(out_);
  }

 private:
  void visit(int site, BasisConfig& cfg) {
    if (site == lat_.num_sites()) {
      if (out_.size() >= cap_) throw SectorSizeError("sector dimension > " + std::to_string(out_.size()), cap_);
      out_.push_back(cfg);
      return;
    }
    const auto& fwd = forward_[site];
    int div_back = 0;
    for (int l : backward_[site]) {
      const int b = link_bit(lat_, cfg, l) ? 1 : 0;
      div_back += lat_.link(l).from == site ? b : -b;
    }
    const int offset = (1 - lat_.mass_sign(site)) / 2;
    const unsigned n_masks = 1u << fwd.size();
    for (int n = 0; n <= 1; ++n) {
      for (unsigned mask = 0; mask < n_masks; ++mask) {
        int div = div_back;
        for (std::size_t k = 0; k < fwd.size(); ++k) {
          const int b = (mask >> k) & 1u;
          div += lat_.link(fwd[k]).from == site ? b : -b;
        }
        if (n - div - offset != targets_[site]) continue;
        cfg.set(site, n);
        for (std::size_t k = 0; k < fwd.size(); ++k) cfg.set(lat_.link_bit(fwd[k]), (mask >> k) & 1u);
        visit(site + 1, cfg);
      }
    }
    cfg.set(site, false);
    for (int l : fwd) cfg.set(lat_.link_bit(l), false);
  }

  const Lattice& lat_;
  std::size_t cap_;
  std::vector<int> targets_;
  std::vector<std::vector<int>> forward_;
  std::vector<std::vector<int>> backward_;
  std::vector<BasisConfig> out_;
};

}  // namespace detail

inline SectorBasis enumerate_sector(const Lattice& lat, const ChargeLayout& layout, GaugeModel model,
                                    std::size_t cap = kDefaultSectorCap) {
  if (model == GaugeModel::u1_qlm) {
    detail::U1Enumerator e(lat, layout, cap);
    return SectorBasis(model, lat.num_sites(), lat.num_links(), e.run());
  }
  const int nl = lat.num_links();
  if (nl >= 63 || (std::uint64_t{1} << nl) > cap)
    throw SectorSizeError("2^" + std::to_string(nl) + " link configurations", cap);
  std::vector<BasisConfig> configs;
  const std::uint64_t count = std::uint64_t{1} << nl;
  configs.reserve(count);
  for (std::uint64_t v = 0; v < count; ++v) {
    BasisConfig cfg;
    for (int l = 0; l < nl; ++l)
      if ((v >> l) & 1u) cfg.set(lat.link_bit(l));
    configs.push_back(cfg);
  }
  return SectorBasis(model, lat.num_sites(), nl, std::move(configs));
}

// Binary sector dump, little-endian:
//   char[8] "LGTSECT\0" | u32 version (1) | u32 model | u32 n_sites |
//   u32 n_links | u32 words per config | u64 count | count * words * u64
namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated sector dump");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline constexpr char kSectorMagic[8] = {'L', 'G', 'T', 'S', 'E', 'C', 'T', '\0'};
inline constexpr std::uint32_t kSectorVersion = 1;
}  // namespace detail

inline void save_sector(std::ostream& os, const SectorBasis& basis) {
  os.write(detail::kSectorMagic, 8);
  detail::put_u32(os, detail::kSectorVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(basis.model()));
  detail::put_u32(os, static_cast<std::uint32_t>(basis.n_sites()));
  detail::put_u32(os, static_cast<std::uint32_t>(basis.n_links()));
  const std::uint32_t words = static_cast<std::uint32_t>((basis.n_sites() + basis.n_links() + 63) / 64);
  detail::put_u32(os, words);
  detail::put_u64(os, basis.size());
  for (const auto& cfg : basis)
    for (std::uint32_t w = 0; w < words; ++w) detail::put_u64(os, cfg.words()[w]);
}

inline SectorBasis load_sector(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, detail::kSectorMagic)) throw std::runtime_error("not a sector dump");
  const auto version = detail::get_le(is, 4);
  if (version != detail::kSectorVersion) throw std::runtime_error("unsupported sector dump version " + std::to_string(version));
  const auto model = static_cast<GaugeModel>(detail::get_le(is, 4));
  const int n_sites = static_cast<int>(detail::get_le(is, 4));
  const int n_links = static_cast<int>(detail::get_le(is, 4));
  const auto words = detail::get_le(is, 4);
  if (words > BasisConfig::kWords) throw std::runtime_error("sector dump too wide");
  const auto count = detail::get_le(is, 8);
  std::vector<BasisConfig> configs(count);
  for (auto& cfg : configs)
    for (std::uint64_t w = 0; w < words; ++w) cfg.words()[w] = detail::get_le(is, 8);
  return SectorBasis(model, n_sites, n_links, std::move(configs));
}

}  // namespace lgt
