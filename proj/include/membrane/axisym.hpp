#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "membrane/operators.hpp"

namespace membrane {

enum class Pole { north, south };

/// One polar cap: the chi = +1 phase occupies a geodesic disk of opening
/// angle theta0 around the given pole.
struct Cap {
  Pole pole = Pole::north;
  double theta0 = 0.5;  // in (0, pi/2]

  double colatitude() const {
    return pole == Pole::north ? theta0 : std::numbers::pi - theta0;
  }
};

/// Axisymmetric sharp-interface configuration. chi = +1 inside the caps
/// (Gamma^(2)), -1 elsewhere (Gamma^(1)).
struct CapSet {
  std::vector<Cap> caps;

  void validate() const {
    if (caps.empty()) throw std::invalid_argument("CapSet: needs at least one cap");
    if (caps.size() > 2) throw std::invalid_argument("CapSet: at most one cap per pole");
    double north = 0.0, south = 0.0;
    int n_north = 0, n_south = 0;
    for (const Cap& c : caps) {
      if (!(c.theta0 > 0.0 && c.theta0 <= 0.5 * std::numbers::pi + 1e-15))
        throw std::invalid_argument("CapSet: theta0 must lie in (0, pi/2]");
      if (c.pole == Pole::north) {
        north = c.theta0;
        ++n_north;
      } else {
        south = c.theta0;
        ++n_south;
      }
    }
    if (n_north > 1 || n_south > 1)
      throw std::invalid_argument("CapSet: at most one cap per pole");
    if (caps.size() == 2 && !(north + south < std::numbers::pi))
      throw std::invalid_argument("CapSet: caps must be disjoint");
  }
};

/// alpha = (|Gamma^(2)| - |Gamma^(1)|)/|Gamma| from the cap areas
/// 2 pi R^2 (1 - cos theta0).
inline double cap_alpha(const CapSet& cs) {
  cs.validate();
  double one_minus_cos = 0.0;
  for (const Cap& c : cs.caps) one_minus_cos += 1.0 - std::cos(c.theta0);
  return one_minus_cos - 1.0;
}

/// Total interface length: sum of 2 pi R sin theta0 over caps.
inline double cap_perimeter(const CapSet& cs, double R) {
  cs.validate();
  double s = 0.0;
  for (const Cap& c : cs.caps) s += std::sin(c.theta0);
  return 2.0 * std::numbers::pi * R * s;
}

/// Geodesic curvature of one cap boundary, h . mu with mu pointing into the
/// cap: cot(theta0)/R, positive for caps smaller than a hemisphere.
inline double geodesic_curvature(const Cap& c, double R) {
  return 1.0 / (std::tan(c.theta0) * R);
}

/// Zonal field f(theta) = sum c_l Pbar_l(cos theta) in the normalized basis
/// (the m = 0 column of a SpectralField).
struct AxisymField {
  std::vector<double> c;
  double R = 1.0;

  int l_max() const { return static_cast<int>(c.size()) - 1; }
};

/// Exact zonal expansion of chi_gamma using
/// int_a^b P_l dx = (P_{l+1} - P_{l-1})/(2l+1) |_a^b.
inline AxisymField chi_legendre(const CapSet& cs, int l_max, double R = 1.0) {
  cs.validate();
  AxisymField f;
  f.R = R;
  f.c.assign(l_max + 1, 0.0);
  std::vector<double> Iplus(l_max + 1, 0.0);  // integral of P_l over the chi=+1 region
  std::vector<double> Pa(l_max + 2), Pb(l_max + 2);
  for (const Cap& c : cs.caps) {
    const double a = c.pole == Pole::north ? std::cos(c.theta0) : -1.0;
    const double b = c.pole == Pole::north ? 1.0 : -std::cos(c.theta0);
    legendre_p(l_max + 1, a, Pa);
    legendre_p(l_max + 1, b, Pb);
    Iplus[0] += b - a;
    for (int l = 1; l <= l_max; ++l)
      Iplus[l] += ((Pb[l + 1] - Pb[l - 1]) - (Pa[l + 1] - Pa[l - 1])) / (2.0 * l + 1.0);
  }
  for (int l = 0; l <= l_max; ++l) {
    const double Il = 2.0 * Iplus[l] - (l == 0 ? 2.0 : 0.0);
    f.c[l] = 2.0 * std::numbers::pi * std::sqrt((2.0 * l + 1.0) / four_pi) * Il;
  }
  return f;
}

/// Embed a zonal expansion as the m = 0 column of a SpectralField.
inline SpectralField embed_zonal(const AxisymField& f, const GridPtr& grid) {
  if (f.l_max() < grid->l_max())
    throw std::invalid_argument("embed_zonal: zonal expansion shorter than grid truncation");
  SpectralField a(grid);
  for (int l = 0; l <= grid->l_max(); ++l) a.at(l, 0) = f.c[l];
  return a;
}

/// Extract the m = 0 column.
inline AxisymField zonal_part(const SpectralField& a) {
  AxisymField f;
  f.R = a.grid->radius();
  f.c.resize(a.l_max() + 1);
  for (int l = 0; l <= a.l_max(); ++l) f.c[l] = a.at(l, 0);
  return f;
}

inline double zonal_eval(const AxisymField& f, double theta) {
  std::vector<double> P(f.c.size());
  zonal_legendre(f.l_max(), std::cos(theta), P);
  double s = 0.0;
  for (std::size_t l = 0; l < f.c.size(); ++l) s += f.c[l] * P[l];
  return s;
}

/// d/dtheta of the zonal series, via
/// (1-x^2) dPbar_l/dx = l (sqrt((2l+1)/(2l-1)) Pbar_{l-1} - x Pbar_l).
inline double zonal_eval_dtheta(const AxisymField& f, double theta) {
  const double x = std::cos(theta);
  const double s2 = (1.0 - x) * (1.0 + x);
  if (s2 < 1e-28) throw std::invalid_argument("zonal_eval_dtheta: too close to a pole");
  std::vector<double> P(f.c.size());
  zonal_legendre(f.l_max(), x, P);
  double acc = 0.0;
  for (int l = 1; l <= f.l_max(); ++l) {
    const double ratio = std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0));
    const double dPdx = l * (ratio * P[l - 1] - x * P[l]) / s2;
    acc += f.c[l] * dPdx;
  }
  return -std::sin(theta) * acc;
}

/// Apply the Green solve G to a zonal expansion (l <= 1 dropped).
inline AxisymField zonal_green_of_projection(const AxisymField& f, const ModelParams& p) {
  AxisymField u;
  u.R = p.R;
  u.c.assign(f.c.size(), 0.0);
  for (int l = 2; l <= f.l_max(); ++l)
    u.c[l] = p.kappa * p.Lambda * f.c[l] /
             (p.sigma + p.kappa * l * (l + 1.0) / (p.R * p.R));
  return u;
}

inline AxisymField zonal_laplacian(const AxisymField& f) {
  AxisymField r = f;
  for (int l = 0; l <= f.l_max(); ++l) r.c[l] *= -l * (l + 1.0) / (f.R * f.R);
  return r;
}

// ---------------------------------------------------------------------------
// reduced sharp energy via the Legendre series

struct SharpSeriesResult {
  double value = 0.0;
  double tail = 0.0;  // heuristic truncation-remainder estimate
};

/// Etilde_SI(capset) from the zonal series: the nonlocal coupling summed over
/// l >= 2 plus the line energy b_hat |gamma|. The chi^2 integral is |Gamma|
/// exactly. c_l decays like l^{-3/2} for jump data, so the remainder is
/// dominated by the truncated sum of c_l^2; the tail estimate extrapolates
/// the local mean of c_l^2 as C l^{-3}.
inline SharpSeriesResult sharp_energy_series(const CapSet& cs, const ModelParams& p,
                                             int l_max) {
  const AxisymField chi = chi_legendre(cs, l_max, p.R);
  const double R2 = p.R * p.R;
  double coupling = 0.0, psq = 0.0;
  for (int l = 2; l <= l_max; ++l) {
    const double G = p.kappa * p.Lambda / (p.sigma + p.kappa * l * (l + 1.0) / R2);
    coupling += G * chi.c[l] * chi.c[l];
    psq += chi.c[l] * chi.c[l];
  }
  SharpSeriesResult r;
  r.value = 0.5 * p.kappa * p.Lambda * (p.sigma / p.kappa + 2.0 / R2) * R2 * coupling +
            0.5 * p.kappa * p.Lambda * p.Lambda * (four_pi * R2 - R2 * psq) +
            p.b_hat() * cap_perimeter(cs, p.R);
  const int window = std::min(20, l_max - 1);
  double s_last = 0.0;
  for (int l = l_max - window + 1; l <= l_max; ++l) s_last += chi.c[l] * chi.c[l];
  r.tail = 0.5 * p.kappa * p.Lambda * p.Lambda * R2 * s_last * (double(l_max) / (2.0 * window));
  return r;
}

// ---------------------------------------------------------------------------
// sharp-interface two-cap gradient flow
//
// Conventions: V_i is the normal velocity of circle i, positive when the cap
// grows, so d theta_i/dt = V_i / R; the geodesic curvature is cot(theta0)/R.
// With these, the conserved flow is beta_hat V = -(g - <g>_gamma) for the
// force g = b_hat H + (4 kappa Lambda/R^2) u + kappa Lambda (lap u^(1) +
// lap u^(2)); <.>_gamma is the length-weighted mean over both circles. This
// sign combination is the one that decreases Etilde_SI (checked against
// finite differences of the series energy and by the Lyapunov tests).

enum class TraceMethod {
  richardson_series,  // one-sided series evaluation at offsets, extrapolated
  analytic            // lap u^(i) = (sigma/kappa) u - Lambda p^(i), exact
};

struct TwoCapRow {
  double t = 0.0;
  double theta1 = 0.0, theta2 = 0.0;  // cap opening angles (north, south)
  double v1 = 0.0, v2 = 0.0;
  double energy = 0.0;
  double alpha = 0.0;
};

enum class TwoCapStatus { reached_t_end, cap_vanished, caps_collided, dt_underflow };

struct TwoCapTrajectory {
  std::vector<TwoCapRow> rows;
  TwoCapStatus status = TwoCapStatus::reached_t_end;
};

namespace detail {

/// Quadratic extrapolation to offset zero from samples at d, 2d, 4d.
inline double richardson3(double f1, double f2, double f3) {
  return (8.0 * f1 - 6.0 * f2 + f3) / 3.0;
}

inline CapSet capset_from_angles(std::span<const Pole> poles, std::span<const double> th) {
  CapSet cs;
  for (std::size_t i = 0; i < th.size(); ++i) cs.caps.push_back(Cap{poles[i], th[i]});
  return cs;
}

/// Normal velocities (positive = cap grows) of every cap boundary circle.
inline std::vector<double> cap_velocities(std::span<const Pole> poles,
                                          std::span<const double> th, const ModelParams& p,
                                          int l_series, TraceMethod method) {
  const std::size_t n = th.size();
  const CapSet cs = capset_from_angles(poles, th);
  const AxisymField chi = chi_legendre(cs, l_series, p.R);
  const AxisymField u = zonal_green_of_projection(chi, p);
  const AxisymField lap_u = zonal_laplacian(u);

  const double R2 = p.R * p.R;
  const double alpha = chi.c[0] / std::sqrt(four_pi);
  const double m1 = chi.c[1] * std::sqrt(four_pi / 3.0) * R2;  // int chi nu3 dGamma
  std::vector<double> len(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tc = poles[i] == Pole::north ? th[i] : std::numbers::pi - th[i];
    len[i] = 2.0 * std::numbers::pi * p.R * std::sin(th[i]);
    const double H = 1.0 / (std::tan(th[i]) * p.R);
    const double uv = zonal_eval(u, tc);
    double lap_sum;
    if (method == TraceMethod::analytic) {
      const double mbar = alpha + 3.0 / (four_pi * R2) * m1 * std::cos(tc);
      lap_sum = 2.0 * (p.sigma / p.kappa) * uv + 2.0 * p.Lambda * mbar;
    } else {
      const double d0 = 2.0 * std::numbers::pi / (l_series + 1.0);
      lap_sum = 0.0;
      for (double sgn : {-1.0, 1.0}) {
        const double f1 = zonal_eval(lap_u, tc + sgn * d0);
        const double f2 = zonal_eval(lap_u, tc + sgn * 2.0 * d0);
        const double f3 = zonal_eval(lap_u, tc + sgn * 4.0 * d0);
        lap_sum += richardson3(f1, f2, f3);
      }
    }
    g[i] = p.b_hat() * H + 4.0 * p.kappa * p.Lambda / R2 * uv + p.kappa * p.Lambda * lap_sum;
  }
  double lg = 0.0, lsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lg += len[i] * g[i];
    lsum += len[i];
  }
  const double gbar = lg / lsum;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = -(g[i] - gbar) / p.beta_hat();
  return v;
}

}  // namespace detail

/// Integrate the sharp cap flow with classical RK4 at fixed dt; a step that
/// raises the series energy is redone at half the step size. A degenerate
/// single-cap set is stationary (every circle quantity equals its mean).
inline TwoCapTrajectory two_cap_flow(const CapSet& cs0, const ModelParams& p, double dt,
                                     double t_end, int l_series = 512,
                                     TraceMethod method = TraceMethod::richardson_series,
                                     double energy_tol = 1e-12) {
  cs0.validate();
  const std::size_t n = cs0.caps.size();
  std::vector<Pole> poles(n);
  std::vector<double> th(n);
  for (std::size_t i = 0; i < n; ++i) {
    poles[i] = cs0.caps[i].pole;
    th[i] = cs0.caps[i].theta0;
  }

  constexpr double theta_min = 1e-3;
  TwoCapTrajectory traj;
  auto energy_of = [&](std::span<const double> a) {
    return sharp_energy_series(detail::capset_from_angles(poles, a), p, l_series).value;
  };
  auto alpha_of = [&](std::span<const double> a) {
    double s = -1.0;
    for (double t0 : a) s += 1.0 - std::cos(t0);
    return s;
  };
  auto vel = [&](std::span<const double> a) {
    return detail::cap_velocities(poles, a, p, l_series, method);
  };

  constexpr double stage_floor = 1e-4;
  auto clamped = [&](std::span<const double> base, std::span<const double> k, double fac,
                     std::vector<double>& out) {
    for (std::size_t i = 0; i < base.size(); ++i)
      out[i] = std::clamp(base[i] + fac * k[i] / p.R, stage_floor,
                          std::numbers::pi / 2.0);
  };

  double t = 0.0, h = dt;
  auto push_row = [&]() {
    const auto v = vel(th);
    TwoCapRow row;
    row.t = t;
    row.theta1 = th[0];
    row.theta2 = n > 1 ? th[1] : 0.0;
    row.v1 = v[0];
    row.v2 = n > 1 ? v[1] : 0.0;
    row.energy = energy_of(th);
    row.alpha = alpha_of(th);
    traj.rows.push_back(row);
  };
  push_row();

  double e_prev = traj.rows.back().energy;
  std::vector<double> stage(n), next(n);
  while (t < t_end - 1e-12 * std::max(1.0, t_end)) {
    h = std::min(h, t_end - t);
    const auto k1 = vel(th);
    clamped(th, k1, 0.5 * h, stage);
    const auto k2 = vel(stage);
    clamped(th, k2, 0.5 * h, stage);
    const auto k3 = vel(stage);
    clamped(th, k3, h, stage);
    const auto k4 = vel(stage);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = th[i] + h / (6.0 * p.R) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    bool vanished = false, collided = false;
    double north = 0.0, south = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (next[i] < theta_min) vanished = true;
      (poles[i] == Pole::north ? north : south) = next[i];
    }
    if (n == 2 && north + south > std::numbers::pi - theta_min) collided = true;
    if (vanished || collided) {
      traj.status = vanished ? TwoCapStatus::cap_vanished : TwoCapStatus::caps_collided;
      return traj;
    }
    const double e_next = energy_of(next);
    if (e_next > e_prev + energy_tol + 1e-14 * std::abs(e_prev)) {
      h *= 0.5;
      if (h < 1e-12 * dt) {
        traj.status = TwoCapStatus::dt_underflow;
        return traj;
      }
      continue;
    }
    th = next;
    t += h;
    e_prev = e_next;
    h = std::min(2.0 * h, dt);  // recover toward the nominal step after a clean accept
    push_row();
  }
  traj.status = TwoCapStatus::reached_t_end;
  return traj;
}

// ---------------------------------------------------------------------------
// jump extraction at the interface of a near-equilibrium axisymmetric state

struct JumpReport {
  double jump_lap = 0.0;   // [Delta_Gamma u]^(2)_(1), expected -> -2 Lambda
  double jump_grad = 0.0;  // [grad_Gamma u . mu]^(2)_(1), expected -> 0
  double jump_u = 0.0;     // [u]^(2)_(1), expected -> 0
  double theta_star = 0.0;
};

namespace detail {

/// Least-squares polynomial coefficients (increasing powers) by normal
/// equations with partial pivoting; fine for the small centered fits here.
inline std::vector<double> polyfit(std::span<const double> d, std::span<const double> f,
                                   int deg) {
  const int n = deg + 1;
  std::vector<double> M(n * n, 0.0), rhs(n, 0.0);
  std::vector<double> powers(2 * n - 1);
  for (std::size_t k = 0; k < d.size(); ++k) {
    powers[0] = 1.0;
    for (int i = 1; i < 2 * n - 1; ++i) powers[i] = powers[i - 1] * d[k];
    for (int i = 0; i < n; ++i) {
      rhs[i] += powers[i] * f[k];
      for (int j = 0; j < n; ++j) M[i * n + j] += powers[i + j];
    }
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(M[r * n + col]) > std::abs(M[piv * n + col])) piv = r;
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(M[col * n + j], M[piv * n + j]);
      std::swap(rhs[col], rhs[piv]);
    }
    const double diag = M[col * n + col];
    if (std::abs(diag) < 1e-300) throw std::runtime_error("polyfit: singular system");
    for (int r = col + 1; r < n; ++r) {
      const double fac = M[r * n + col] / diag;
      for (int j = col; j < n; ++j) M[r * n + j] -= fac * M[col * n + j];
      rhs[r] -= fac * rhs[col];
    }
  }
  std::vector<double> c(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = rhs[i];
    for (int j = i + 1; j < n; ++j) s -= M[i * n + j] * c[j];
    c[i] = s / M[i * n + i];
  }
  return c;
}

inline double extrapolate_to_zero(const AxisymField& f, double theta_star,
                                  std::span<const double> offsets) {
  std::vector<double> vals(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i)
    vals[i] = zonal_eval(f, theta_star + offsets[i]);
  return polyfit(offsets, vals, 4)[0];
}

}  // namespace detail

/// Locate the zero of the zonal phi profile and extrapolate one-sided traces
/// of u, grad u . mu and Delta u from meridional samples at geodesic distance
/// >= 5 eps from it. Side (2) is the phi > 0 phase; mu points into it.
inline JumpReport jump_extract_zonal(const AxisymField& phi_z, const AxisymField& u_z,
                                     const ModelParams& p) {
  const int L = phi_z.l_max();
  const int n_scan = 8 * L + 9;
  const double margin = 1e-3;
  double prev_theta = margin;
  double prev_val = zonal_eval(phi_z, prev_theta);
  double lo = 0.0, hi = 0.0;
  bool found = false;
  for (int i = 1; i < n_scan; ++i) {
    const double th = margin + (std::numbers::pi - 2.0 * margin) * i / (n_scan - 1.0);
    const double v = zonal_eval(phi_z, th);
    if (prev_val == 0.0 || prev_val * v < 0.0) {
      lo = prev_theta;
      hi = th;
      found = true;
      break;
    }
    prev_theta = th;
    prev_val = v;
  }
  if (!found) throw std::runtime_error("jump_extract: interface not found (phi does not change sign)");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = zonal_eval(phi_z, mid);
    if (zonal_eval(phi_z, lo) * v <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  const double theta_star = 0.5 * (lo + hi);

  // which side carries phi > 0 (the chi = +1 phase, side (2))
  const double probe = std::min(0.1, 5.0 * p.epsilon / p.R);
  const bool plus_is_north = zonal_eval(phi_z, theta_star - probe) > 0.0;

  // sample distances in [5 eps, up to 12 eps], shrunk to fit between the
  // interface and the poles; a quartic fit needs some spread past 5 eps
  const int n_fit = 8;
  const double inner = 5.0 * p.epsilon / p.R;
  const double room = 0.95 * std::min(theta_star - margin, std::numbers::pi - margin - theta_star);
  const double outer = std::min(12.0 * p.epsilon / p.R, room);
  if (outer < inner * 1.3)
    throw std::runtime_error("jump_extract: fit window leaves the sphere");
  std::vector<double> d_north(n_fit), d_south(n_fit);
  for (int i = 0; i < n_fit; ++i) {
    const double dist = inner + (outer - inner) * i / (n_fit - 1.0);
    d_north[i] = -dist;
    d_south[i] = dist;
  }

  const AxisymField lap_u = zonal_laplacian(u_z);
  AxisymField du;  // d/dtheta as sampled values, fitted like the others
  const auto trace = [&](const AxisymField& f, std::span<const double> offs) {
    return detail::extrapolate_to_zero(f, theta_star, offs);
  };
  const auto trace_dtheta = [&](std::span<const double> offs) {
    std::vector<double> vals(offs.size());
    for (std::size_t i = 0; i < offs.size(); ++i)
      vals[i] = zonal_eval_dtheta(u_z, theta_star + offs[i]);
    return detail::polyfit(offs, vals, 4)[0];
  };

  const double u_n = trace(u_z, d_north), u_s = trace(u_z, d_south);
  const double lap_n = trace(lap_u, d_north), lap_s = trace(lap_u, d_south);
  const double dun = trace_dtheta(d_north), dus = trace_dtheta(d_south);

  JumpReport r;
  r.theta_star = theta_star;
  // mu points into the phi > 0 side; grad u . mu = -+ (1/R) du/dtheta
  const double mu_sign = plus_is_north ? -1.0 : 1.0;
  const double gu_n = mu_sign * dun / p.R;
  const double gu_s = mu_sign * dus / p.R;
  if (plus_is_north) {
    r.jump_u = u_n - u_s;
    r.jump_lap = lap_n - lap_s;
    r.jump_grad = gu_n - gu_s;
  } else {
    r.jump_u = u_s - u_n;
    r.jump_lap = lap_s - lap_n;
    r.jump_grad = gu_s - gu_n;
  }
  return r;
}

/// Colatitudes of all sign changes of a zonal profile, ascending.
inline std::vector<double> find_zonal_zeros(const AxisymField& f) {
  const int n_scan = 8 * f.l_max() + 9;
  const double margin = 1e-3;
  std::vector<double> zeros;
  double prev_theta = margin;
  double prev_val = zonal_eval(f, prev_theta);
  for (int i = 1; i < n_scan; ++i) {
    const double th = margin + (std::numbers::pi - 2.0 * margin) * i / (n_scan - 1.0);
    const double v = zonal_eval(f, th);
    if (prev_val == 0.0 || prev_val * v < 0.0) {
      double lo = prev_theta, hi = th;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (zonal_eval(f, lo) * zonal_eval(f, mid) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    prev_theta = th;
    prev_val = v;
  }
  return zeros;
}

/// Colatitude of the (first) sign change of a zonal profile.
inline double find_zonal_zero(const AxisymField& f) {
  const int n_scan = 8 * f.l_max() + 9;
  const double margin = 1e-3;
  double prev_theta = margin;
  double prev_val = zonal_eval(f, prev_theta);
  for (int i = 1; i < n_scan; ++i) {
    const double th = margin + (std::numbers::pi - 2.0 * margin) * i / (n_scan - 1.0);
    const double v = zonal_eval(f, th);
    if (prev_val == 0.0 || prev_val * v < 0.0) {
      double lo = prev_theta, hi = th;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (zonal_eval(f, lo) * zonal_eval(f, mid) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_theta = th;
    prev_val = v;
  }
  throw std::runtime_error("find_zonal_zero: profile does not change sign");
}

struct TanhFit {
  double eps_hat = 0.0;   // fitted interface width parameter
  double r0 = 0.0;        // fitted offset of the zero crossing (arclength)
  double theta_star = 0.0;
  double rms = 0.0;       // fit residual
};

/// Least-squares fit of the meridional profile to tanh((r - r0)/(sqrt(2)
/// eps_hat)), r the signed arclength from the detected zero crossing, over a
/// window of a few widths. Gauss-Newton on (r0, w = sqrt(2) eps_hat).
inline TanhFit fit_tanh_profile(const AxisymField& phi_z, double R) {
  const double theta_star = find_zonal_zero(phi_z);
  const double slope = zonal_eval_dtheta(phi_z, theta_star) / R;  // d phi / dr
  if (std::abs(slope) < 1e-12)
    throw std::runtime_error("fit_tanh_profile: flat profile at the crossing");
  const double sgn = slope > 0.0 ? 1.0 : -1.0;
  double w = 1.0 / std::abs(slope);
  double r0 = 0.0;

  const int n = 41;
  const double half_window = 5.0 * w;
  std::vector<double> r(n), y(n);
  for (int i = 0; i < n; ++i) {
    r[i] = -half_window + 2.0 * half_window * i / (n - 1.0);
    const double th = theta_star + sgn * r[i] / R;  // r increases toward phi > 0
    if (th <= 1e-3 || th >= std::numbers::pi - 1e-3)
      throw std::runtime_error("fit_tanh_profile: window leaves the sphere");
    y[i] = zonal_eval(phi_z, th);
  }
  for (int it = 0; it < 50; ++it) {
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double z = (r[i] - r0) / w;
      const double t = std::tanh(z);
      const double sech2 = 1.0 - t * t;
      const double resid = y[i] - t;
      const double d_r0 = sech2 / w;     // d resid / d r0
      const double d_w = sech2 * z / w;  // d resid / d w
      a11 += d_r0 * d_r0;
      a12 += d_r0 * d_w;
      a22 += d_w * d_w;
      b1 += d_r0 * resid;
      b2 += d_w * resid;
      ss += resid * resid;
    }
    const double det = a11 * a22 - a12 * a12;
    if (std::abs(det) < 1e-300) break;
    const double dr0 = (a22 * b1 - a12 * b2) / det;
    const double dw = (a11 * b2 - a12 * b1) / det;
    r0 -= dr0;
    w -= dw;
    if (w <= 0.0) w = std::abs(w) + 1e-12;
    if (std::abs(dr0) < 1e-14 && std::abs(dw) < 1e-14) break;
  }
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::tanh((r[i] - r0) / w);
    ss += (y[i] - t) * (y[i] - t);
  }
  TanhFit fit;
  fit.eps_hat = w / std::numbers::sqrt2;
  fit.r0 = r0;
  fit.theta_star = theta_star;
  fit.rms = std::sqrt(ss / n);
  return fit;
}

inline const char* to_string(TwoCapStatus s) {
  switch (s) {
    case TwoCapStatus::reached_t_end: return "reached_t_end";
    case TwoCapStatus::cap_vanished: return "cap_vanished";
    case TwoCapStatus::caps_collided: return "caps_collided";
    case TwoCapStatus::dt_underflow: return "dt_underflow";
  }
  return "unknown";
}

}  // namespace membrane
