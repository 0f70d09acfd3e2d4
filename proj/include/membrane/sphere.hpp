#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "membrane/legendre.hpp"

namespace membrane {

namespace detail {
/// Gauss-Legendre nodes (ascending) and weights on [-1,1], Newton iteration
/// on P_n with the Tricomi initial guess; residual driven below 1e-14.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * xi * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = p1 / pp;
      xi -= dx;
      if (std::abs(p1) < 1e-14 && std::abs(dx) < 1e-15) break;
    }
    x[i] = -xi;  // ascending order
    x[n - 1 - i] = xi;
    const double wi = 2.0 / ((1.0 - xi * xi) * pp * pp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Collocation grid on the sphere of radius R: Gauss-Legendre colatitudes
/// (poles excluded) times equispaced longitudes, plus the FFT plans and
/// Legendre recurrence tables the transforms need. Immutable after
/// construction and shareable across threads.
class SphereGrid {
 public:
  static std::shared_ptr<const SphereGrid> create(double R, int l_max,
                                                  double oversample = 2.0) {
    return std::shared_ptr<const SphereGrid>(new SphereGrid(R, l_max, oversample));
  }

  ~SphereGrid() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_r2c_);
    fftw_destroy_plan(plan_c2r_);
  }

  SphereGrid(const SphereGrid&) = delete;
  SphereGrid& operator=(const SphereGrid&) = delete;

  double radius() const { return R_; }
  int l_max() const { return l_max_; }
  double oversample() const { return oversample_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  double area() const { return four_pi * R_ * R_; }
  int n_coeff() const { return (l_max_ + 1) * (l_max_ + 1); }
  std::size_t n_points() const {
    return static_cast<std::size_t>(n_theta_) * n_phi_;
  }

  const std::vector<double>& colatitudes() const { return theta_; }
  const std::vector<double>& cos_theta() const { return x_; }
  const std::vector<double>& sin_theta() const { return sin_theta_; }
  const std::vector<double>& weights() const { return w_; }
  double longitude(int k) const { return 2.0 * std::numbers::pi * k / n_phi_; }

  const LegendreTables& legendre() const { return legendre_; }

  bool same_as(const SphereGrid& o) const {
    return R_ == o.R_ && l_max_ == o.l_max_ && n_theta_ == o.n_theta_ &&
           n_phi_ == o.n_phi_;
  }

  // row-wise FFT execution on caller-provided buffers (thread-safe)
  void fft_r2c(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(plan_r2c_, in, reinterpret_cast<fftw_complex*>(out));
  }
  void fft_c2r(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(plan_c2r_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  SphereGrid(double R, int l_max, double oversample)
      : R_(R), l_max_(l_max), oversample_(oversample) {
    if (l_max < 2)
      throw std::invalid_argument("SphereGrid: l_max must be >= 2");
    if (!(R > 0.0)) throw std::invalid_argument("SphereGrid: R must be > 0");
    if (!(oversample >= 1.0))
      throw std::invalid_argument("SphereGrid: oversample must be >= 1");
    n_theta_ = static_cast<int>(std::ceil(oversample * (l_max + 1) - 1e-9));
    int np = static_cast<int>(std::ceil(oversample * (2 * l_max + 1) - 1e-9));
    if (np % 2 == 1) ++np;
    n_phi_ = np;

    detail::gauss_legendre(n_theta_, x_, w_);
    // colatitudes ascending means x = cos(theta) descending
    std::reverse(x_.begin(), x_.end());
    std::reverse(w_.begin(), w_.end());
    theta_.resize(n_theta_);
    sin_theta_.resize(n_theta_);
    for (int j = 0; j < n_theta_; ++j) {
      theta_[j] = std::acos(x_[j]);
      sin_theta_[j] = std::sqrt((1.0 - x_[j]) * (1.0 + x_[j]));
    }

    legendre_ = LegendreTables(l_max_);

    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    std::vector<double> dummy_r(n_phi_);
    std::vector<std::complex<double>> dummy_c(n_phi_ / 2 + 1);
    plan_r2c_ = fftw_plan_dft_r2c_1d(
        n_phi_, dummy_r.data(), reinterpret_cast<fftw_complex*>(dummy_c.data()),
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_c2r_ = fftw_plan_dft_c2r_1d(
        n_phi_, reinterpret_cast<fftw_complex*>(dummy_c.data()), dummy_r.data(),
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_r2c_ == nullptr || plan_c2r_ == nullptr)
      throw std::runtime_error("SphereGrid: FFTW plan creation failed");
  }

  double R_;
  int l_max_;
  double oversample_;
  int n_theta_ = 0, n_phi_ = 0;
  std::vector<double> theta_, x_, w_, sin_theta_;
  LegendreTables legendre_;
  fftw_plan plan_r2c_ = nullptr, plan_c2r_ = nullptr;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

inline GridPtr build_grid(double R, int l_max, double oversample = 2.0) {
  return SphereGrid::create(R, l_max, oversample);
}

/// Point values on the grid, row-major [j * n_phi + k].
struct GridField {
  GridPtr grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(GridPtr g) : grid(std::move(g)), values(grid->n_points(), 0.0) {}

  double& at(int j, int k) { return values[static_cast<std::size_t>(j) * grid->n_phi() + k]; }
  double at(int j, int k) const { return values[static_cast<std::size_t>(j) * grid->n_phi() + k]; }
};

/// Real spherical-harmonic coefficients, packed as coeff[l*l + l + m] for
/// l <= l_max, -l <= m <= l. m > 0 are the cos(m phi) components, m < 0 the
/// sin(|m| phi) components; the basis is orthonormal over the unit sphere.
struct SpectralField {
  GridPtr grid;
  std::vector<double> coeff;

  SpectralField() = default;
  explicit SpectralField(GridPtr g) : grid(std::move(g)), coeff(grid->n_coeff(), 0.0) {}

  int l_max() const { return grid->l_max(); }
  double& at(int l, int m) { return coeff[static_cast<std::size_t>(l) * l + l + m]; }
  double at(int l, int m) const { return coeff[static_cast<std::size_t>(l) * l + l + m]; }
};

namespace detail {
inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* who) {
  if (!a || !b || !a->same_as(*b))
    throw std::invalid_argument(std::string(who) + ": grid mismatch");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// quadrature

/// Surface integral over Gamma: Gauss-Legendre x trapezoid, scaled by R^2.
inline double integrate(const GridField& f) {
  const auto& g = *f.grid;
  double acc = 0.0;
  for (int j = 0; j < g.n_theta(); ++j) {
    double row = 0.0;
    const double* v = f.values.data() + static_cast<std::size_t>(j) * g.n_phi();
    for (int k = 0; k < g.n_phi(); ++k) row += v[k];
    acc += g.weights()[j] * row;
  }
  return acc * (2.0 * std::numbers::pi / g.n_phi()) * g.radius() * g.radius();
}

inline double max_abs(const GridField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const SpectralField& a) {
  double m = 0.0;
  for (double v : a.coeff) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// transforms
//
// Reduction order (bit-reproducible): longitude FFT per latitude row first,
// then for each order m ascending, latitudes are accumulated j = 0..n_theta-1
// in sequence for every degree l. No internal threading.

/// Forward transform: L^2 projection onto the orthonormal basis; exact for
/// band-limited input of degree <= l_max.
inline SpectralField analyze(const GridField& f) {
  const auto& g = *f.grid;
  const int L = g.l_max(), nt = g.n_theta(), np = g.n_phi();
  for (double v : f.values)
    if (!std::isfinite(v)) throw std::invalid_argument("analyze: non-finite input");

  SpectralField a(f.grid);
  const int nm = np / 2 + 1;
  std::vector<double> row(np);
  std::vector<std::complex<double>> spec(nm);
  // cos/sin longitude integrals, scaled: c[m][j], s[m][j]
  std::vector<double> cosm(static_cast<std::size_t>(L + 1) * nt);
  std::vector<double> sinm(static_cast<std::size_t>(L + 1) * nt);
  const double phi_scale = 2.0 * std::numbers::pi / np;
  for (int j = 0; j < nt; ++j) {
    std::memcpy(row.data(), f.values.data() + static_cast<std::size_t>(j) * np,
                sizeof(double) * np);
    g.fft_r2c(row.data(), spec.data());
    for (int m = 0; m <= L; ++m) {
      const double sc = (m == 0) ? phi_scale : std::numbers::sqrt2 * phi_scale;
      cosm[static_cast<std::size_t>(m) * nt + j] = sc * spec[m].real();
      sinm[static_cast<std::size_t>(m) * nt + j] = -sc * spec[m].imag();
    }
  }

  const auto& tab = g.legendre();
  // latitudes in blocks of four (zero-padded): four independent recurrence
  // chains per pass with fixed trip counts, accumulated j-ascending
  constexpr int B = 4;
  const int ntp = (nt + B - 1) / B * B;
  std::vector<double> seed(ntp, 0.0), xs(ntp, 0.0), wcs(ntp, 0.0), wss(ntp, 0.0);
  for (int j = 0; j < nt; ++j) {
    seed[j] = tab.seed_step(0);
    xs[j] = g.cos_theta()[j];
  }
  for (int m = 0; m <= L; ++m) {
    if (m > 0)
      for (int j = 0; j < nt; ++j) seed[j] *= g.sin_theta()[j] * tab.seed_step(m);
    const double* cm = cosm.data() + static_cast<std::size_t>(m) * nt;
    const double* sm = sinm.data() + static_cast<std::size_t>(m) * nt;
    for (int j = 0; j < nt; ++j) {
      wcs[j] = g.weights()[j] * cm[j];
      wss[j] = g.weights()[j] * sm[j];
    }
    const double* aa = tab.a().data();
    const double* bb = tab.b().data();
    const std::size_t base = tab.index(std::min(m + 2, L), m);
    const double c1 = std::sqrt(2.0 * m + 3.0);
    for (int j0 = 0; j0 < ntp; j0 += B) {
      double x[B], p0[B], p1[B], wc[B], ws[B];
      for (int k = 0; k < B; ++k) {
        x[k] = xs[j0 + k];
        p0[k] = seed[j0 + k];
        wc[k] = wcs[j0 + k];
        ws[k] = wss[j0 + k];
      }
      double* ac = &a.at(m, m);   // stride from (l, +-m) to (l+1, +-m) is 2l+2
      double* as = &a.at(m, -m);
      std::size_t off_c = 0, off_s = 0;
      auto accumulate = [&](int l, const double* p) {
        double sc = 0.0, ss = 0.0;
        for (int k = 0; k < B; ++k) sc += p[k] * wc[k];
        ac[off_c] += sc;
        off_c += 2 * l + 2;
        if (m > 0) {
          for (int k = 0; k < B; ++k) ss += p[k] * ws[k];
          as[off_s] += ss;
          off_s += 2 * l + 2;
        }
      };
      accumulate(m, p0);
      if (m < L) {
        for (int k = 0; k < B; ++k) p1[k] = c1 * x[k] * p0[k];
        accumulate(m + 1, p1);
        for (int l = m + 2; l <= L; ++l) {
          const std::size_t q = base + (l - (m + 2));
          const double al = aa[q], bl = bb[q];
          double p2[B];
          for (int k = 0; k < B; ++k) p2[k] = al * x[k] * p1[k] - bl * p0[k];
          accumulate(l, p2);
          for (int k = 0; k < B; ++k) {
            p0[k] = p1[k];
            p1[k] = p2[k];
          }
        }
      }
    }
  }
  return a;
}

/// Backward transform: evaluate the truncated expansion on the grid.
inline GridField synthesize(const SpectralField& a) {
  const auto& g = *a.grid;
  const int L = g.l_max(), nt = g.n_theta(), np = g.n_phi();
  GridField f(a.grid);
  const int nm = np / 2 + 1;

  // Fourier amplitudes per latitude: A[m][j] (cos), B[m][j] (sin)
  std::vector<double> A(static_cast<std::size_t>(L + 1) * nt, 0.0);
  std::vector<double> B(static_cast<std::size_t>(L + 1) * nt, 0.0);
  const auto& tab = g.legendre();
  constexpr int BL = 4;
  const int ntp = (nt + BL - 1) / BL * BL;
  std::vector<double> seed(ntp, 0.0), xs(ntp, 0.0);
  for (int j = 0; j < nt; ++j) {
    seed[j] = tab.seed_step(0);
    xs[j] = g.cos_theta()[j];
  }
  for (int m = 0; m <= L; ++m) {
    if (m > 0)
      for (int j = 0; j < nt; ++j) seed[j] *= g.sin_theta()[j] * tab.seed_step(m);
    double* Am = A.data() + static_cast<std::size_t>(m) * nt;
    double* Bm = B.data() + static_cast<std::size_t>(m) * nt;
    const double* aa = tab.a().data();
    const double* bb = tab.b().data();
    const std::size_t qbase = tab.index(std::min(m + 2, L), m);
    const double* ac = a.coeff.data() + static_cast<std::size_t>(m) * m + 2 * m;
    const double* as = a.coeff.data() + static_cast<std::size_t>(m) * m;
    const double c1 = std::sqrt(2.0 * m + 3.0);
    for (int j0 = 0; j0 < ntp; j0 += BL) {
      const int nb = std::min(BL, nt - j0);
      double x[BL], p0[BL], p1[BL], am[BL] = {0, 0, 0, 0}, bm[BL] = {0, 0, 0, 0};
      for (int k = 0; k < BL; ++k) {
        x[k] = xs[j0 + k];
        p0[k] = seed[j0 + k];
      }
      std::size_t off_c = 0, off_s = 0;
      auto apply = [&](int l, const double* p) {
        const double cc = ac[off_c];
        off_c += 2 * l + 2;
        for (int k = 0; k < BL; ++k) am[k] += cc * p[k];
        if (m > 0) {
          const double cs = as[off_s];
          off_s += 2 * l + 2;
          for (int k = 0; k < BL; ++k) bm[k] += cs * p[k];
        }
      };
      apply(m, p0);
      if (m < L) {
        for (int k = 0; k < BL; ++k) p1[k] = c1 * x[k] * p0[k];
        apply(m + 1, p1);
        for (int l = m + 2; l <= L; ++l) {
          const std::size_t q = qbase + (l - (m + 2));
          const double al = aa[q], bl = bb[q];
          double p2[BL];
          for (int k = 0; k < BL; ++k) p2[k] = al * x[k] * p1[k] - bl * p0[k];
          apply(l, p2);
          for (int k = 0; k < BL; ++k) {
            p0[k] = p1[k];
            p1[k] = p2[k];
          }
        }
      }
      const double fac = (m == 0) ? 1.0 : std::numbers::sqrt2;
      for (int k = 0; k < nb; ++k) {
        Am[j0 + k] = fac * am[k];
        Bm[j0 + k] = fac * bm[k];
      }
    }
  }

  std::vector<std::complex<double>> spec(nm);
  std::vector<double> row(np);
  for (int j = 0; j < nt; ++j) {
    std::fill(spec.begin(), spec.end(), std::complex<double>(0.0, 0.0));
    spec[0] = std::complex<double>(A[j], 0.0);
    for (int m = 1; m <= L; ++m)
      spec[m] = 0.5 * std::complex<double>(A[static_cast<std::size_t>(m) * nt + j],
                                           -B[static_cast<std::size_t>(m) * nt + j]);
    g.fft_c2r(spec.data(), row.data());
    std::memcpy(f.values.data() + static_cast<std::size_t>(j) * np, row.data(),
                sizeof(double) * np);
  }
  return f;
}

// ---------------------------------------------------------------------------
// diagonal spectral operators

/// -Delta_Gamma eigen-scaling: coefficient (l,m) -> -l(l+1)/R^2 times itself.
inline SpectralField laplace_beltrami(const SpectralField& a) {
  SpectralField out(a.grid);
  const double inv_R2 = 1.0 / (a.grid->radius() * a.grid->radius());
  for (int l = 0; l <= a.l_max(); ++l) {
    const double lam = -l * (l + 1.0) * inv_R2;
    for (int m = -l; m <= l; ++m) out.at(l, m) = lam * a.at(l, m);
  }
  return out;
}

/// int_Gamma |grad_Gamma a|^2 dGamma via Green's identity on the closed
/// surface: sum l(l+1) a_lm^2 (the R^2 surface factor cancels the 1/R^2
/// eigenvalue scale).
inline double gradient_sq_integral(const SpectralField& a) {
  double acc = 0.0;
  for (int l = 1; l <= a.l_max(); ++l) {
    double s = 0.0;
    for (int m = -l; m <= l; ++m) s += a.at(l, m) * a.at(l, m);
    acc += l * (l + 1.0) * s;
  }
  return acc;
}

/// L^2(Gamma) inner product of band-limited fields (Parseval with the R^2
/// surface factor).
inline double dot(const SpectralField& a, const SpectralField& b) {
  detail::require_same_grid(a.grid, b.grid, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.coeff.size(); ++i) acc += a.coeff[i] * b.coeff[i];
  return acc * a.grid->radius() * a.grid->radius();
}

inline double mean(const SpectralField& a) {
  return a.coeff[0] / std::sqrt(four_pi);
}

inline double mean(const GridField& f) { return integrate(f) / f.grid->area(); }

/// Set the l=0 coefficient so that mean(a) == target.
inline void set_mean(SpectralField& a, double target) {
  a.coeff[0] = target * std::sqrt(four_pi);
}

inline SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  detail::require_same_grid(a.grid, b.grid, "operator+");
  SpectralField r = a;
  for (std::size_t i = 0; i < r.coeff.size(); ++i) r.coeff[i] += b.coeff[i];
  return r;
}

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  detail::require_same_grid(a.grid, b.grid, "operator-");
  SpectralField r = a;
  for (std::size_t i = 0; i < r.coeff.size(); ++i) r.coeff[i] -= b.coeff[i];
  return r;
}

inline SpectralField operator*(double c, const SpectralField& a) {
  SpectralField r = a;
  for (double& v : r.coeff) v *= c;
  return r;
}

/// Rotate a field by `angle` about the polar axis (exact in spectral space).
inline SpectralField rotate_about_pole(const SpectralField& a, double angle) {
  SpectralField r(a.grid);
  for (int l = 0; l <= a.l_max(); ++l) {
    r.at(l, 0) = a.at(l, 0);
    for (int m = 1; m <= l; ++m) {
      const double c = std::cos(m * angle), s = std::sin(m * angle);
      // cos(m(phi - angle)) = cos c + sin s ; sin(m(phi - angle)) = sin c - cos s
      r.at(l, m) = c * a.at(l, m) - s * a.at(l, -m);
      r.at(l, -m) = s * a.at(l, m) + c * a.at(l, -m);
    }
  }
  return r;
}

}  // namespace membrane
