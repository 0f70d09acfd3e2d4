// Test-side reference computations, independent of the library's transform
// and energy paths: dense 1-D quadrature, a finite-difference surface
// Laplacian, and a deterministic coefficient generator.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "membrane/sphere.hpp"

namespace oracle {

/// Dense Gauss-Legendre quadrature of an axisymmetric integrand f(theta) over
/// the sphere of radius R: 2 pi R^2 int f(theta) sin(theta) dtheta.
inline double zonal_surface_integral(const std::function<double(double)>& f, double R,
                                     int n = 4096) {
  std::vector<double> x, w;
  membrane::detail::gauss_legendre(n, x, w);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += w[i] * f(std::acos(x[i]));
  return 2.0 * std::numbers::pi * R * R * acc;
}

/// Dense quadrature of g(x) over [-1, 1].
inline double line_integral(const std::function<double(double)>& g, int n = 4096) {
  std::vector<double> x, w;
  membrane::detail::gauss_legendre(n, x, w);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += w[i] * g(x[i]);
  return acc;
}

/// Dense quadrature of g over [a, b] (for piecewise-smooth integrands, call
/// once per smooth piece).
inline double interval_integral(const std::function<double(double)>& g, double a, double b,
                                int n = 2048) {
  std::vector<double> x, w;
  membrane::detail::gauss_legendre(n, x, w);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += w[i] * g(mid + half * x[i]);
  return acc * half;
}

/// Second-order finite-difference surface Laplacian on the transform grid:
/// uniform central differences in phi, non-uniform 3-point stencils in theta
/// (interior latitudes only; callers skip the first/last row).
inline membrane::GridField fd_laplacian(const membrane::GridField& f) {
  const auto& g = *f.grid;
  const int nt = g.n_theta(), np = g.n_phi();
  const double R2 = g.radius() * g.radius();
  const double dphi = 2.0 * std::numbers::pi / np;
  membrane::GridField out(f.grid);
  for (int j = 1; j + 1 < nt; ++j) {
    const double tm = g.colatitudes()[j - 1], t0 = g.colatitudes()[j],
                 tp = g.colatitudes()[j + 1];
    const double hm = t0 - tm, hp = tp - t0;
    const double st = std::sin(t0), ct = std::cos(t0);
    for (int k = 0; k < np; ++k) {
      const int km = (k + np - 1) % np, kp = (k + 1) % np;
      const double fm = f.at(j - 1, k), f0 = f.at(j, k), fp = f.at(j + 1, k);
      const double d2t = 2.0 * (fm / (hm * (hm + hp)) - f0 / (hm * hp) + fp / (hp * (hm + hp)));
      const double d1t = (-hp / (hm * (hm + hp))) * fm +
                         ((hp - hm) / (hm * hp)) * f0 +
                         (hm / (hp * (hm + hp))) * fp;
      const double d2p = (f.at(j, km) - 2.0 * f0 + f.at(j, kp)) / (dphi * dphi);
      out.at(j, k) = (d2t + (ct / st) * d1t + d2p / (st * st)) / R2;
    }
  }
  return out;
}

/// Deterministic pseudo-random stream for test fields.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  double pm1() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return 2.0 * (z >> 11) * 0x1.0p-53 - 1.0;
  }
};

/// Random band-limited field with coefficients ~ U[-1,1] scaled by 1/(1+l)^2
/// (keeps grid values O(1)), optional mean pinned afterwards by the caller.
inline membrane::SpectralField random_field(const membrane::GridPtr& grid, std::uint64_t seed,
                                            int l_hi = -1) {
  Rng rng(seed);
  membrane::SpectralField a(grid);
  const int top = l_hi < 0 ? grid->l_max() : l_hi;
  for (int l = 0; l <= top; ++l)
    for (int m = -l; m <= l; ++m) a.at(l, m) = rng.pm1() / ((1.0 + l) * (1.0 + l));
  return a;
}

}  // namespace oracle
