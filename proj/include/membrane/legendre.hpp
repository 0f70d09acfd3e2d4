#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace membrane {

inline constexpr double four_pi = 4.0 * std::numbers::pi;

/// Fully normalized associated Legendre functions Pbar_lm = N_lm * P_lm with
/// N_lm = sqrt((2l+1)/(4pi) * (l-m)!/(l+m)!) and no Condon-Shortley phase, so
/// that int_{S^2} (Pbar_lm(cos theta) trig(m phi))^2 dOmega = 1 with the
/// sqrt(2) longitude factor applied by the caller for m > 0.
///
/// The l-recurrence is the standard stable three-term one:
///   Pbar_lm = a_lm x Pbar_{l-1,m} - b_lm Pbar_{l-2,m}
/// Seeds underflow harmlessly near the poles for large m; for the grids used
/// here (Gauss nodes, l_max <= ~512) every underflowed value is genuinely
/// negligible, so no extra scaling is carried.
class LegendreTables {
 public:
  LegendreTables() = default;
  explicit LegendreTables(int l_max) : l_max_(l_max) {
    if (l_max < 0) throw std::invalid_argument("LegendreTables: l_max < 0");
    a_.assign(pair_count(), 0.0);
    b_.assign(pair_count(), 0.0);
    seed_ratio_.assign(l_max + 1, 0.0);
    seed_ratio_[0] = std::sqrt(1.0 / four_pi);  // Pbar_00 itself
    for (int m = 1; m <= l_max; ++m)
      seed_ratio_[m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    for (int m = 0; m <= l_max; ++m) {
      for (int l = m + 2; l <= l_max; ++l) {
        const double ll = l, mm = m;
        a_[index(l, m)] = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
        b_[index(l, m)] = std::sqrt(((2.0 * ll + 1.0) * ((ll - 1.0) * (ll - 1.0) - mm * mm)) /
                                    ((2.0 * ll - 3.0) * (ll * ll - mm * mm)));
      }
    }
  }

  int l_max() const { return l_max_; }
  std::size_t pair_count() const {
    return static_cast<std::size_t>(l_max_ + 1) * (l_max_ + 2) / 2;
  }
  // packed (l,m) index, m-major: columns m=0..L, each holding l=m..L
  std::size_t index(int l, int m) const {
    return static_cast<std::size_t>(m) * (2 * l_max_ + 3 - m) / 2 + (l - m);
  }

  /// Evaluate Pbar_{l,m}(x) for fixed m and all l in [m, l_max] into out.
  void eval_m(int m, double x, std::span<double> out) const {
    const double s = std::sqrt((1.0 - x) * (1.0 + x));
    double pmm = seed_ratio_[0];
    for (int k = 1; k <= m; ++k) pmm *= s * seed_ratio_[k];
    eval_m_from_seed(m, x, pmm, out);
  }

  /// Same but with the seed Pbar_mm supplied (incremental across m).
  void eval_m_from_seed(int m, double x, double pmm, std::span<double> out) const {
    const int n = l_max_ - m + 1;
    out[0] = pmm;
    if (n == 1) return;
    double p1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
    out[1] = p1;
    double p0 = pmm;
    const std::size_t base = index(m + 2 > l_max_ ? l_max_ : m + 2, m);
    for (int l = m + 2; l <= l_max_; ++l) {
      const std::size_t q = base + (l - (m + 2));
      const double p2 = a_[q] * x * p1 - b_[q] * p0;
      out[l - m] = p2;
      p0 = p1;
      p1 = p2;
    }
  }

  double seed_step(int m) const { return seed_ratio_[m]; }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }

 private:
  int l_max_ = -1;
  std::vector<double> a_, b_, seed_ratio_;
};

/// Normalized zonal values Pbar_l(x) = sqrt((2l+1)/4pi) P_l(x), l = 0..l_max.
inline void zonal_legendre(int l_max, double x, std::span<double> out) {
  out[0] = std::sqrt(1.0 / four_pi);
  if (l_max == 0) return;
  out[1] = std::sqrt(3.0) * x * out[0];
  for (int l = 2; l <= l_max; ++l) {
    const double ll = l;
    const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll));
    const double b = std::sqrt(((2.0 * ll + 1.0) * (ll - 1.0) * (ll - 1.0)) /
                               ((2.0 * ll - 3.0) * ll * ll));
    out[l] = a * x * out[l - 1] - b * out[l - 2];
  }
}

/// Unnormalized P_l(x), l = 0..l_max (used for exact cap integrals).
inline void legendre_p(int l_max, double x, std::span<double> out) {
  out[0] = 1.0;
  if (l_max == 0) return;
  out[1] = x;
  for (int l = 2; l <= l_max; ++l)
    out[l] = ((2.0 * l - 1.0) * x * out[l - 1] - (l - 1.0) * out[l - 2]) / l;
}

}  // namespace membrane
