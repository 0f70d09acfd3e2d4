#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "membrane/axisym.hpp"
#include "membrane/energy.hpp"

namespace membrane {

struct FlowParams {
  double dt = 1e-4;
  double t_end = 1.0;
  double dt_min = 1e-11;
  double dt_max = 1e-2;
  double energy_tol = 0.0;  // permitted per-step energy increase
  double stop_tol = 1e-7;   // on ||rhs||_inf
  long max_steps = 0;       // 0 = unbounded
  int snapshot_every = 0;

  void validate() const {
    if (!(dt_min > 0.0 && dt_min <= dt && dt <= dt_max))
      throw std::invalid_argument("FlowParams: need 0 < dt_min <= dt <= dt_max");
    if (energy_tol < 0.0) throw std::invalid_argument("FlowParams: energy_tol < 0");
  }
};

/// One trajectory point: phi, the slaved height u = G(P phi), the current
/// multiplier, clock and step counter, plus cached energies.
struct FlowState {
  SpectralField phi;
  SpectralField u;
  double lambda = 0.0;
  double t = 0.0;
  double dt = 0.0;
  long step_count = 0;
  double energy_J = 0.0;
  double energy_K = 0.0;

  double energy() const { return energy_J + energy_K; }
};

struct DiagnosticsRow {
  double t, e_reduced, j_eps, k, mass, lambda, max_abs_phi, el_r1, el_r2, rhs_norm, dt;
};

struct FlowDiagnostics {
  std::vector<DiagnosticsRow> rows;
};

enum class FlowStatus { converged, reached_t_end, reached_max_steps, diverged, dt_underflow };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::converged: return "converged";
    case FlowStatus::reached_t_end: return "reached_t_end";
    case FlowStatus::reached_max_steps: return "reached_max_steps";
    case FlowStatus::diverged: return "diverged";
    case FlowStatus::dt_underflow: return "dt_underflow";
  }
  return "unknown";
}

struct FlowResult {
  FlowState state;
  FlowDiagnostics diagnostics;
  FlowStatus status = FlowStatus::reached_t_end;
};

namespace detail {

/// Pieces shared by the right-hand side and the IMEX step: the slaved height,
/// the explicit spectral source N = -(b/eps) W'(phi) - kappa Lambda
/// (Delta + 2/R^2) u, the multiplier, and grid diagnostics.
struct RhsParts {
  SpectralField u;
  SpectralField n_explicit;
  double lambda = 0.0;
  double max_abs_phi = 0.0;
};

inline RhsParts eval_parts(const SpectralField& phi, const ModelParams& p) {
  RhsParts parts;
  parts.u = green_of_projection(phi, p);
  GridField wp = synthesize(phi);
  parts.max_abs_phi = max_abs(wp);
  for (double& v : wp.values) v = double_well_prime(v);
  const SpectralField wp_hat = analyze(wp);
  const SpectralField lap2u = shifted_laplacian(parts.u);
  SpectralField n(phi.grid);
  const double be = p.b / p.epsilon;
  for (std::size_t i = 0; i < n.coeff.size(); ++i)
    n.coeff[i] = -be * wp_hat.coeff[i] - p.kappa * p.Lambda * lap2u.coeff[i];
  // l = 0 balance: lambda = kappa Lambda^2 mean(phi) - mean(N)
  parts.lambda = p.kappa * p.Lambda * p.Lambda * mean(phi) - n.coeff[0] / std::sqrt(four_pi);
  parts.n_explicit = std::move(n);
  return parts;
}

inline SpectralField rhs_from_parts(const SpectralField& phi, const RhsParts& parts,
                                    const ModelParams& p) {
  SpectralField rhs(phi.grid);
  const double inv_be = 1.0 / (p.beta * p.epsilon);
  const double inv_R2 = 1.0 / (p.R * p.R);
  const double kl2 = p.kappa * p.Lambda * p.Lambda;
  for (int l = 0; l <= phi.l_max(); ++l) {
    const double diff = -p.b * p.epsilon * l * (l + 1.0) * inv_R2;
    for (int m = -l; m <= l; ++m) {
      const std::size_t i = static_cast<std::size_t>(l) * l + l + m;
      rhs.coeff[i] = ((diff - kl2) * phi.coeff[i] + parts.n_explicit.coeff[i]) * inv_be;
    }
  }
  rhs.coeff[0] = 0.0;  // lambda kills the mean of the bracket by definition
  return rhs;
}

}  // namespace detail

struct RhsResult {
  SpectralField rhs;
  double lambda = 0.0;
  SpectralField u;
};

/// Right-hand side of the reduced conserved flow,
///   beta eps phi_t = b eps Delta phi - (b/eps) W'(phi)
///                    - kappa Lambda (Delta + 2/R^2) u - kappa Lambda^2 phi + lambda,
/// divided by beta eps, with u = G(P phi) and lambda fixing the mean: the
/// l = 0 coefficient of the bracket is zeroed exactly.
inline RhsResult flow_rhs(const SpectralField& phi, const ModelParams& p) {
  if (std::abs(mean(phi) - p.alpha) > 1e-10 * std::max(1.0, std::abs(p.alpha)))
    throw std::invalid_argument("flow_rhs: mean(phi) != alpha");
  detail::RhsParts parts = detail::eval_parts(phi, p);
  SpectralField rhs = detail::rhs_from_parts(phi, parts, p);
  return RhsResult{std::move(rhs), parts.lambda, std::move(parts.u)};
}

/// Euler-Lagrange residuals of the stationary system:
/// r1 for the phi equation (= beta eps ||rhs||_inf by the multiplier algebra),
/// r2 for the fourth-order height equation.
inline std::pair<double, double> el_residuals(const FlowState& state, const ModelParams& p) {
  const RhsResult rr = flow_rhs(state.phi, p);
  const double r1 = p.beta * p.epsilon * max_abs(synthesize(rr.rhs));
  SpectralField t(state.phi.grid);
  const SpectralField lap_u = laplace_beltrami(state.u);
  for (std::size_t i = 0; i < t.coeff.size(); ++i)
    t.coeff[i] = p.kappa * lap_u.coeff[i] - p.sigma * state.u.coeff[i] +
                 p.kappa * p.Lambda * state.phi.coeff[i];
  t.coeff[0] -= p.kappa * p.Lambda * p.alpha * std::sqrt(four_pi);
  const double r2 = max_abs(synthesize(shifted_laplacian(t)));
  return {r1, r2};
}

/// Assemble a state around phi (computes u, lambda and the cached energies).
inline FlowState make_state(SpectralField phi, const ModelParams& p, double dt, double t = 0.0) {
  detail::RhsParts parts = detail::eval_parts(phi, p);
  FlowState s;
  s.phi = std::move(phi);
  s.u = std::move(parts.u);
  s.lambda = parts.lambda;
  s.t = t;
  s.dt = dt;
  s.energy_J = energy_J(s.phi, p);
  s.energy_K = energy_K(s.phi, p);
  return s;
}

namespace detail {

inline std::pair<FlowState, RhsParts> step_imex_impl(const FlowState& state,
                                                     const RhsParts& parts,
                                                     const ModelParams& p,
                                                     const FlowParams& fp) {
  const double inv_R2 = 1.0 / (p.R * p.R);
  const double kl2 = p.kappa * p.Lambda * p.Lambda;
  const double be = p.beta * p.epsilon;

  double dt = std::min(state.dt > 0.0 ? state.dt : fp.dt, fp.dt_max);
  bool rejected = false;
  while (true) {
    SpectralField phi_new(state.phi.grid);
    const double mass_rate = be / dt;
    for (int l = 0; l <= state.phi.l_max(); ++l) {
      const double denom = mass_rate + p.b * p.epsilon * l * (l + 1.0) * inv_R2 + kl2;
      for (int m = -l; m <= l; ++m) {
        const std::size_t i = static_cast<std::size_t>(l) * l + l + m;
        phi_new.coeff[i] = (mass_rate * state.phi.coeff[i] + parts.n_explicit.coeff[i]) / denom;
      }
    }
    phi_new.coeff[0] = p.alpha * std::sqrt(four_pi);  // pinned mode, exact mass

    const double ej = energy_J(phi_new, p);
    const double ek = energy_K(phi_new, p);
    if (ej + ek > state.energy() + fp.energy_tol) {
      dt *= 0.5;
      rejected = true;
      if (dt < fp.dt_min)
        throw std::runtime_error("step_imex: dt underflow under energy rejection");
      continue;
    }

    RhsParts new_parts = eval_parts(phi_new, p);
    FlowState next;
    next.phi = std::move(phi_new);
    next.u = new_parts.u;
    next.lambda = new_parts.lambda;
    next.t = state.t + dt;
    next.step_count = state.step_count + 1;
    next.dt = rejected ? dt : std::min(dt * 1.2, fp.dt_max);
    next.energy_J = ej;
    next.energy_K = ek;
    return {std::move(next), std::move(new_parts)};
  }
}

}  // namespace detail

/// One semi-implicit Euler step: b eps Delta phi and -kappa Lambda^2 phi are
/// implicit (diagonal in spectral space), W' and the u coupling explicit with
/// u = G(P phi^n). The l = 0 coefficient of the update is pinned to alpha,
/// making mass conservation exact; lambda is the a-posteriori multiplier.
/// Steps that raise Etilde_DI beyond energy_tol are retried at half the step
/// size; dt < dt_min is a hard failure.
inline FlowState step_imex(const FlowState& state, const ModelParams& p,
                           const FlowParams& fp) {
  const detail::RhsParts parts = detail::eval_parts(state.phi, p);
  return detail::step_imex_impl(state, parts, p, fp).first;
}

/// Integrate to t_end, a step cap, or stationarity (||rhs||_inf < stop_tol).
/// Diagnostics are recorded every step; snapshot_fn (if any) is called on the
/// initial state and then every snapshot_every accepted steps.
inline FlowResult run_flow(SpectralField phi0, const ModelParams& p, const FlowParams& fp,
                           const std::function<void(const FlowState&)>& snapshot_fn = {}) {
  p.validate();
  fp.validate();
  if (std::abs(mean(phi0) - p.alpha) > 1e-6)
    throw std::invalid_argument("run_flow: mean(phi0) further than 1e-6 from alpha");
  set_mean(phi0, p.alpha);

  FlowResult out;
  FlowState state = make_state(std::move(phi0), p, fp.dt);
  detail::RhsParts parts = detail::eval_parts(state.phi, p);

  auto record = [&](const FlowState& s, const detail::RhsParts& pr) {
    const SpectralField rhs = detail::rhs_from_parts(s.phi, pr, p);
    const double rhs_norm = max_abs(synthesize(rhs));
    const double r1 = p.beta * p.epsilon * rhs_norm;
    SpectralField t(s.phi.grid);
    const SpectralField lap_u = laplace_beltrami(s.u);
    for (std::size_t i = 0; i < t.coeff.size(); ++i)
      t.coeff[i] = p.kappa * lap_u.coeff[i] - p.sigma * s.u.coeff[i] +
                   p.kappa * p.Lambda * s.phi.coeff[i];
    t.coeff[0] -= p.kappa * p.Lambda * p.alpha * std::sqrt(four_pi);
    const double r2 = max_abs(synthesize(shifted_laplacian(t)));
    out.diagnostics.rows.push_back(DiagnosticsRow{s.t, s.energy(), s.energy_J, s.energy_K,
                                                  mean(s.phi), s.lambda, pr.max_abs_phi, r1, r2,
                                                  rhs_norm, s.dt});
    return rhs_norm;
  };

  double rhs_norm = record(state, parts);
  if (snapshot_fn) snapshot_fn(state);
  while (true) {
    if (out.diagnostics.rows.back().max_abs_phi > 10.0) {
      out.status = FlowStatus::diverged;
      break;
    }
    if (rhs_norm < fp.stop_tol) {
      out.status = FlowStatus::converged;
      break;
    }
    if (state.t >= fp.t_end - 1e-15) {
      out.status = FlowStatus::reached_t_end;
      break;
    }
    if (fp.max_steps > 0 && state.step_count >= fp.max_steps) {
      out.status = FlowStatus::reached_max_steps;
      break;
    }
    try {
      auto [next, next_parts] = detail::step_imex_impl(state, parts, p, fp);
      state = std::move(next);
      parts = std::move(next_parts);
    } catch (const std::runtime_error&) {
      out.status = FlowStatus::dt_underflow;
      break;
    }
    rhs_norm = record(state, parts);
    if (snapshot_fn && fp.snapshot_every > 0 && state.step_count % fp.snapshot_every == 0)
      snapshot_fn(state);
  }
  out.state = std::move(state);
  return out;
}

/// Jump-condition extraction from the zonal parts of a flow state.
inline JumpReport jump_extract(const FlowState& state, const ModelParams& p) {
  return jump_extract_zonal(zonal_part(state.phi), zonal_part(state.u), p);
}

// ---------------------------------------------------------------------------
// initial data

inline SpectralField initial_constant(const GridPtr& grid, double alpha) {
  SpectralField a(grid);
  set_mean(a, alpha);
  return a;
}

/// tanh(d_gamma / (sqrt(2) eps)) with d_gamma the signed geodesic distance to
/// the cap boundary, positive inside the cap; the mean is re-projected onto
/// alpha afterwards.
inline SpectralField initial_tanh_cap(const GridPtr& grid, double theta0, Pole pole,
                                      const ModelParams& p) {
  GridField f(grid);
  const double w = std::numbers::sqrt2 * p.epsilon;
  for (int j = 0; j < grid->n_theta(); ++j) {
    const double th = grid->colatitudes()[j];
    const double d = pole == Pole::north ? p.R * (theta0 - th)
                                         : p.R * (th - (std::numbers::pi - theta0));
    const double v = std::tanh(d / w);
    for (int k = 0; k < grid->n_phi(); ++k) f.at(j, k) = v;
  }
  SpectralField a = analyze(f);
  set_mean(a, p.alpha);
  return a;
}

/// Signed geodesic distance to the nearest cap boundary, positive inside a
/// cap, as a tanh profile; no mean re-projection (caller decides the target).
inline SpectralField tanh_capset_profile(const GridPtr& grid, const CapSet& cs,
                                         double epsilon) {
  cs.validate();
  GridField f(grid);
  const double w = std::numbers::sqrt2 * epsilon;
  const double R = grid->radius();
  for (int j = 0; j < grid->n_theta(); ++j) {
    const double th = grid->colatitudes()[j];
    double d = -std::numeric_limits<double>::infinity();
    for (const Cap& c : cs.caps) {
      const double di = c.pole == Pole::north ? R * (c.theta0 - th)
                                              : R * (th - (std::numbers::pi - c.theta0));
      d = std::max(d, di);
    }
    const double v = std::tanh(d / w);
    for (int k = 0; k < grid->n_phi(); ++k) f.at(j, k) = v;
  }
  return analyze(f);
}

/// Band of +1 phase between colatitudes theta1 < theta2 (unprojected mean).
inline SpectralField tanh_band_profile(const GridPtr& grid, double theta1, double theta2,
                                       double epsilon) {
  if (!(theta1 < theta2))
    throw std::invalid_argument("tanh_band_profile: need theta1 < theta2");
  GridField f(grid);
  const double w = std::numbers::sqrt2 * epsilon;
  const double R = grid->radius();
  for (int j = 0; j < grid->n_theta(); ++j) {
    const double th = grid->colatitudes()[j];
    const double d = R * std::min(th - theta1, theta2 - th);
    const double v = std::tanh(d / w);
    for (int k = 0; k < grid->n_phi(); ++k) f.at(j, k) = v;
  }
  return analyze(f);
}

inline SpectralField initial_tanh_band(const GridPtr& grid, double theta1, double theta2,
                                       const ModelParams& p) {
  SpectralField a = tanh_band_profile(grid, theta1, theta2, p.epsilon);
  set_mean(a, p.alpha);
  return a;
}

namespace detail {
/// splitmix64: tiny deterministic generator, identical across platforms.
struct SplitMix64 {
  std::uint64_t s;
  explicit SplitMix64(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform_pm1() {  // in [-1, 1)
    return 2.0 * (next() >> 11) * 0x1.0p-53 - 1.0;
  }
};
}  // namespace detail

/// Add a random perturbation with coefficients ~ U[-amplitude, amplitude] on
/// 1 <= l <= max_degree, then re-project the mean onto alpha.
inline void add_perturbation(SpectralField& phi, double amplitude, std::uint64_t seed,
                             int max_degree, double alpha) {
  detail::SplitMix64 rng(seed);
  const int lcap = std::min(max_degree, phi.l_max());
  for (int l = 1; l <= lcap; ++l)
    for (int m = -l; m <= l; ++m) phi.at(l, m) += amplitude * rng.uniform_pm1();
  set_mean(phi, alpha);
}

}  // namespace membrane
