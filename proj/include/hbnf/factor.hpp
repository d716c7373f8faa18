#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hbnf {

/**
 * Dense nonnegative table over a sorted set of variables. `scope` holds
 * strictly increasing global variable indices, `card` the matching state
 * counts, and `data` is row-major with the FIRST scope variable varying
 * slowest. The fixed layout makes every operation deterministic.
 */
struct Factor {
  std::vector<int> scope;
  std::vector<std::size_t> card;
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
};

inline std::size_t table_size(const std::vector<std::size_t>& card) {
  std::size_t n = 1;
  for (std::size_t c : card) n *= c;
  return n;
}

inline Factor make_ones(std::vector<int> scope, std::vector<std::size_t> card) {
  Factor f;
  f.scope = std::move(scope);
  f.card = std::move(card);
  f.data.assign(table_size(f.card), 1.0);
  return f;
}

/// Strides of each scope variable within the factor's row-major layout.
inline std::vector<std::size_t> strides_of(const Factor& f) {
  std::vector<std::size_t> s(f.scope.size(), 1);
  for (std::size_t k = f.scope.size(); k-- > 1;) s[k - 1] = s[k] * f.card[k];
  return s;
}

namespace detail {

/// For each variable of `outer`, its stride inside `inner` (0 when absent).
inline std::vector<std::size_t> embedded_strides(const std::vector<int>& outer_scope,
                                                 const Factor& inner) {
  auto inner_strides = strides_of(inner);
  std::vector<std::size_t> s(outer_scope.size(), 0);
  for (std::size_t k = 0; k < outer_scope.size(); ++k) {
    auto it = std::lower_bound(inner.scope.begin(), inner.scope.end(), outer_scope[k]);
    if (it != inner.scope.end() && *it == outer_scope[k])
      s[k] = inner_strides[static_cast<std::size_t>(it - inner.scope.begin())];
  }
  return s;
}

/// Row-major odometer over `card`; steps `offsets` (one per tracked table)
/// incrementally so no per-entry index arithmetic is needed.
class Odometer {
 public:
  Odometer(const std::vector<std::size_t>& card,
           std::vector<std::vector<std::size_t>> strides)
      : card_(card), strides_(std::move(strides)), assign_(card.size(), 0),
        offsets_(strides_.size(), 0) {}

  const std::vector<std::size_t>& offsets() const { return offsets_; }

  bool advance() {
    for (std::size_t k = card_.size(); k-- > 0;) {
      if (++assign_[k] < card_[k]) {
        for (std::size_t t = 0; t < strides_.size(); ++t) offsets_[t] += strides_[t][k];
        return true;
      }
      for (std::size_t t = 0; t < strides_.size(); ++t)
        offsets_[t] -= strides_[t][k] * (card_[k] - 1);
      assign_[k] = 0;
    }
    return false;
  }

 private:
  const std::vector<std::size_t>& card_;
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<std::size_t> assign_;
  std::vector<std::size_t> offsets_;
};

}  // namespace detail

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.scope.begin(), a.scope.end(), b.scope.begin(), b.scope.end(),
                 std::back_inserter(out.scope));
  out.card.resize(out.scope.size());
  for (std::size_t k = 0; k < out.scope.size(); ++k) {
    auto ia = std::lower_bound(a.scope.begin(), a.scope.end(), out.scope[k]);
    if (ia != a.scope.end() && *ia == out.scope[k])
      out.card[k] = a.card[static_cast<std::size_t>(ia - a.scope.begin())];
    else {
      auto ib = std::lower_bound(b.scope.begin(), b.scope.end(), out.scope[k]);
      out.card[k] = b.card[static_cast<std::size_t>(ib - b.scope.begin())];
    }
  }
  out.data.resize(table_size(out.card));
  detail::Odometer odo(out.card, {detail::embedded_strides(out.scope, a),
                                  detail::embedded_strides(out.scope, b)});
  std::size_t idx = 0;
  do {
    out.data[idx++] = a.data[odo.offsets()[0]] * b.data[odo.offsets()[1]];
  } while (odo.advance());
  return out;
}

/// Multiplies `small` into `big` in place; small.scope must be a subset.
inline void multiply_into(Factor& big, const Factor& small) {
  detail::Odometer odo(big.card, {detail::embedded_strides(big.scope, small)});
  std::size_t idx = 0;
  do {
    big.data[idx++] *= small.data[odo.offsets()[0]];
  } while (odo.advance());
}

/// Sums the factor onto a sorted subset of its scope.
inline Factor project(const Factor& f, const std::vector<int>& target_scope) {
  Factor out;
  out.scope = target_scope;
  out.card.resize(out.scope.size());
  for (std::size_t k = 0; k < out.scope.size(); ++k) {
    auto it = std::lower_bound(f.scope.begin(), f.scope.end(), out.scope[k]);
    if (it == f.scope.end() || *it != out.scope[k])
      throw std::logic_error("projection target is not a subset of the factor scope");
    out.card[k] = f.card[static_cast<std::size_t>(it - f.scope.begin())];
  }
  out.data.assign(table_size(out.card), 0.0);
  detail::Odometer odo(f.card, {detail::embedded_strides(f.scope, out)});
  std::size_t idx = 0;
  do {
    out.data[odo.offsets()[0]] += f.data[idx++];
  } while (odo.advance());
  return out;
}

inline Factor marginalize_out(const Factor& f, int var) {
  std::vector<int> target;
  for (int v : f.scope)
    if (v != var) target.push_back(v);
  return project(f, target);
}

/// Elementwise ratio over identical scopes; 0/0 yields 0.
inline Factor divide(const Factor& num, const Factor& den) {
  Factor out = num;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = den.data[i] == 0.0 ? 0.0 : out.data[i] / den.data[i];
  return out;
}

/// Scales total mass to 1; returns the pre-normalization total (0 = no mass).
inline double normalize(Factor& f) {
  double total = 0;
  for (double x : f.data) total += x;
  if (total > 0)
    for (double& x : f.data) x /= total;
  return total;
}

/// Zeroes every entry where `var` is not in `state`.
inline void apply_indicator(Factor& f, int var, std::size_t state) {
  auto it = std::lower_bound(f.scope.begin(), f.scope.end(), var);
  if (it == f.scope.end() || *it != var)
    throw std::logic_error("indicator variable is not in the factor scope");
  std::size_t pos = static_cast<std::size_t>(it - f.scope.begin());
  std::size_t stride = strides_of(f)[pos];
  std::size_t block = stride * f.card[pos];
  for (std::size_t base = 0; base < f.data.size(); base += block)
    for (std::size_t s = 0; s < f.card[pos]; ++s) {
      if (s == state) continue;
      double* p = f.data.data() + base + s * stride;
      for (std::size_t k = 0; k < stride; ++k) p[k] = 0.0;
    }
}

}  // namespace hbnf
