#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "shufflecast/error.hpp"

namespace shufflecast {

/// Linear ToR index in [0, N). Column-major: i = c * p^k + row.
using TorIndex = std::uint32_t;

inline constexpr TorIndex kNoTor = std::numeric_limits<TorIndex>::max();

/// Splitter fanout `p` and column count `k` of a p,k-Shufflecast.
struct Params {
  std::uint32_t p = 2;
  std::uint32_t k = 2;

  friend bool operator==(const Params&, const Params&) = default;
};

/// Logical (column, row digits) identity of a ToR. Digits are stored most
/// significant first, so digits[0] is r_{k-1} (the partition digit) and
/// digits[k-1] is r_0.
struct ToRId {
  std::uint32_t column = 0;
  std::vector<std::uint32_t> digits;

  friend bool operator==(const ToRId&, const ToRId&) = default;
};

namespace detail {

/// Returns p^k, or 0 if it exceeds `limit`.
inline std::uint64_t bounded_pow(std::uint64_t base, std::uint32_t exp, std::uint64_t limit) {
  std::uint64_t v = 1;
  for (std::uint32_t e = 0; e < exp; ++e) {
    if (v > limit / base) return 0;
    v *= base;
  }
  return v;
}

/// Validates (p, k) and returns p^k. N = k * p^k must not exceed `max_nodes`.
inline std::uint32_t validated_rows(Params params, std::uint64_t max_nodes) {
  require(params.p >= 2, "p must be >= 2 (got " + std::to_string(params.p) + ")");
  require(params.k >= 2, "k must be >= 2 (got " + std::to_string(params.k) + ")");
  const std::uint64_t limit = std::min<std::uint64_t>(max_nodes, std::numeric_limits<TorIndex>::max() - 1);
  const std::uint64_t rows = bounded_pow(params.p, params.k, limit);
  require(rows != 0 && rows <= limit / params.k,
          "N = k*p^k exceeds the node limit of " + std::to_string(limit) + " for p=" + std::to_string(params.p) +
              ", k=" + std::to_string(params.k));
  return static_cast<std::uint32_t>(rows);
}

__extension__ using uint128 = unsigned __int128;

/// Precomputed 32-bit divisor (Lemire, Kaser and Kurz direct remainder).
/// Exact for every 32-bit numerator; routing does a few of these per hop.
class Divisor {
 public:
  Divisor() = default;
  explicit Divisor(std::uint32_t d) : d_(d), m_(d == 1 ? 0 : ~std::uint64_t{0} / d + 1) {}

  std::uint32_t divisor() const noexcept { return d_; }

  std::uint32_t div(std::uint32_t a) const noexcept {
    if (d_ == 1) return a;
    return static_cast<std::uint32_t>((static_cast<uint128>(m_) * a) >> 64);
  }
  std::uint32_t mod(std::uint32_t a) const noexcept {
    const std::uint64_t low = m_ * a;
    return static_cast<std::uint32_t>((static_cast<uint128>(low) * d_) >> 64);
  }

 private:
  std::uint32_t d_ = 1;
  std::uint64_t m_ = 0;
};

}  // namespace detail

/// The p,k-Shufflecast graph. Immutable after construction.
///
/// ToR (c, r_{k-1}..r_0) feeds a 1:p splitter whose outputs land on
/// ((c+1) mod k, r_{k-2}..r_0 m) for m in [0, p). Neighbor lists are ordered
/// by the appended digit m.
class Topology {
 public:
  static constexpr std::uint64_t kDefaultMaxNodes = 10'000'000;

  explicit Topology(Params params, std::uint64_t max_nodes = kDefaultMaxNodes) : params_(params) {
    rows_ = detail::validated_rows(params, max_nodes);
    size_ = rows_ * params.k;
    pow_.resize(params.k + 1);
    pow_[0] = 1;
    for (std::uint32_t e = 1; e <= params.k; ++e) pow_[e] = pow_[e - 1] * params.p;
    for (const std::uint32_t v : pow_) pow_div_.emplace_back(v);
    rows_div_ = detail::Divisor(rows_);

    adjacency_.resize(static_cast<std::size_t>(size_) * params.p);
    for (TorIndex u = 0; u < size_; ++u) {
      for (std::uint32_t m = 0; m < params.p; ++m) {
        adjacency_[static_cast<std::size_t>(u) * params.p + m] = successor(u, m);
      }
    }
  }

  const Params& params() const noexcept { return params_; }
  std::uint32_t p() const noexcept { return params_.p; }
  std::uint32_t k() const noexcept { return params_.k; }
  /// Total ToR count N = k * p^k.
  std::uint32_t size() const noexcept { return size_; }
  /// ToRs per column, p^k.
  std::uint32_t rows() const noexcept { return rows_; }
  /// p^e for e in [0, k].
  std::uint32_t pow(std::uint32_t e) const noexcept { return pow_[e]; }
  /// Fast division/remainder by p^e.
  const detail::Divisor& pow_divisor(std::uint32_t e) const noexcept { return pow_div_[e]; }

  bool contains(TorIndex i) const noexcept { return i < size_; }

  std::uint32_t column(TorIndex i) const noexcept { return rows_div_.div(i); }
  std::uint32_t row(TorIndex i) const noexcept { return rows_div_.mod(i); }
  TorIndex index(std::uint32_t column, std::uint32_t row) const noexcept { return column * rows_ + row; }

  /// Digit r_j (j = 0 is least significant) of a row value.
  std::uint32_t digit(std::uint32_t row, std::uint32_t j) const noexcept { return (row / pow_[j]) % params_.p; }

  /// Most significant row digit r_{k-1}.
  std::uint32_t partition(TorIndex i) const noexcept { return row(i) / pow_[params_.k - 1]; }

  /// Row left-shifted by one digit with `m` appended as r_0.
  std::uint32_t shift_in(std::uint32_t row, std::uint32_t m) const noexcept {
    return pow_div_[params_.k - 1].mod(row) * params_.p + m;
  }

  /// The splitter output of `u` selected by appended digit `m`.
  TorIndex successor(TorIndex u, std::uint32_t m) const noexcept {
    const std::uint32_t c = column(u);
    return index((c + 1) % params_.k, shift_in(row(u), m));
  }

  std::span<const TorIndex> neighbors(TorIndex u) const noexcept {
    return {adjacency_.data() + static_cast<std::size_t>(u) * params_.p, params_.p};
  }

  ToRId decode(TorIndex i) const {
    require(contains(i), "ToR index " + std::to_string(i) + " out of range [0, " + std::to_string(size_) + ")");
    ToRId id;
    id.column = column(i);
    id.digits.resize(params_.k);
    const std::uint32_t r = row(i);
    for (std::uint32_t j = 0; j < params_.k; ++j) id.digits[params_.k - 1 - j] = digit(r, j);
    return id;
  }

  TorIndex encode(const ToRId& id) const {
    require(id.column < params_.k,
            "column " + std::to_string(id.column) + " out of range [0, " + std::to_string(params_.k) + ")");
    require(id.digits.size() == params_.k, "row must have exactly k=" + std::to_string(params_.k) + " digits");
    std::uint32_t r = 0;
    for (const std::uint32_t d : id.digits) {
      require(d < params_.p, "row digit " + std::to_string(d) + " out of range [0, " + std::to_string(params_.p) + ")");
      r = r * params_.p + d;
    }
    return index(id.column, r);
  }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.params_ == b.params_ && a.adjacency_ == b.adjacency_;
  }

 private:
  Params params_;
  std::uint32_t rows_ = 0;
  std::uint32_t size_ = 0;
  std::vector<std::uint32_t> pow_;
  std::vector<detail::Divisor> pow_div_;
  detail::Divisor rows_div_;
  std::vector<TorIndex> adjacency_;
};

inline Topology build_topology(Params params, std::uint64_t max_nodes = Topology::kDefaultMaxNodes) {
  return Topology(params, max_nodes);
}

inline ToRId decode_tor_id(TorIndex i, Params params) {
  const std::uint32_t rows = detail::validated_rows(params, Topology::kDefaultMaxNodes);
  require(i < static_cast<std::uint64_t>(rows) * params.k, "ToR index " + std::to_string(i) + " out of range");
  ToRId id;
  id.column = i / rows;
  id.digits.resize(params.k);
  std::uint32_t r = i % rows;
  for (std::uint32_t j = params.k; j-- > 0;) {
    id.digits[j] = r % params.p;
    r /= params.p;
  }
  return id;
}

inline TorIndex encode_tor_id(const ToRId& id, Params params) {
  const std::uint32_t rows = detail::validated_rows(params, Topology::kDefaultMaxNodes);
  require(id.column < params.k, "column " + std::to_string(id.column) + " out of range");
  require(id.digits.size() == params.k, "row must have exactly k=" + std::to_string(params.k) + " digits");
  std::uint32_t r = 0;
  for (const std::uint32_t d : id.digits) {
    require(d < params.p, "row digit " + std::to_string(d) + " out of range");
    r = r * params.p + d;
  }
  return id.column * rows + r;
}

/// Partition index of a ToR: its most significant row digit.
inline std::uint32_t partition_of(const ToRId& id) {
  require(!id.digits.empty(), "ToR id has no row digits");
  return id.digits.front();
}

inline std::string to_string(const ToRId& id) {
  // Digits above 9 need a separator to stay unambiguous.
  const bool dotted = std::any_of(id.digits.begin(), id.digits.end(), [](std::uint32_t d) { return d > 9; });
  std::string s = "(" + std::to_string(id.column) + ",";
  for (std::size_t j = 0; j < id.digits.size(); ++j) {
    if (dotted && j != 0) s += '.';
    s += std::to_string(id.digits[j]);
  }
  return s + ")";
}

}  // namespace shufflecast
