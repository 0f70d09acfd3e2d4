#include <catch2/catch_amalgamated.hpp>

#include "membrane/flow.hpp"
#include "oracles.hpp"

using namespace membrane;

namespace {
ModelParams band_params() {
  ModelParams p;
  p.epsilon = 0.1;
  return p;
}
}  // namespace

TEST_CASE("flow_rhs of a constant state") {
  ModelParams p = band_params();
  p.alpha = 0.25;
  auto g = build_grid(p.R, 16, 2.0);
  const SpectralField phi = initial_constant(g, p.alpha);
  const RhsResult rr = flow_rhs(phi, p);
  CHECK(max_abs(rr.rhs) < 1e-12);  // round-off through the W' grid evaluation
  const double lambda_expect =
      p.b / p.epsilon * double_well_prime(p.alpha) + p.kappa * p.Lambda * p.Lambda * p.alpha;
  CHECK(std::abs(rr.lambda - lambda_expect) < 1e-12 * std::max(1.0, std::abs(lambda_expect)));
  CHECK(max_abs(rr.u) == 0.0);

  SpectralField off = phi;
  set_mean(off, p.alpha + 1e-3);
  CHECK_THROWS_AS(flow_rhs(off, p), std::invalid_argument);
}

TEST_CASE("rhs integrates to zero and is even for antipodally even states") {
  ModelParams p = band_params();
  auto g = build_grid(p.R, 24, 2.0);
  SpectralField phi(g);
  // even harmonics only -> phi(-x) = phi(x)
  oracle::Rng rng(8);
  for (int l = 0; l <= g->l_max(); l += 2)
    for (int m = -l; m <= l; ++m) phi.at(l, m) = 0.3 * rng.pm1() / ((1.0 + l) * (1.0 + l));
  set_mean(phi, p.alpha);
  const RhsResult rr = flow_rhs(phi, p);
  CHECK(std::abs(mean(rr.rhs)) == 0.0);
  double odd = 0.0;
  for (int l = 1; l <= g->l_max(); l += 2)
    for (int m = -l; m <= l; ++m) odd = std::max(odd, std::abs(rr.rhs.at(l, m)));
  CHECK(odd < 1e-13 * max_abs(rr.rhs));
}

TEST_CASE("step_imex: fixed point, exact mass, first-order consistency") {
  ModelParams p = band_params();
  p.alpha = -0.2;
  auto g = build_grid(p.R, 24, 2.0);
  FlowParams fp;
  fp.dt = 1e-4;
  fp.dt_max = 1e-2;

  // constant state is a fixed point for any dt
  FlowState s0 = make_state(initial_constant(g, p.alpha), p, 1e-2);
  const FlowState s1 = step_imex(s0, p, fp);
  double diff = 0.0;
  for (std::size_t i = 0; i < s1.phi.coeff.size(); ++i)
    diff = std::max(diff, std::abs(s1.phi.coeff[i] - s0.phi.coeff[i]));
  CHECK(diff < 1e-14);

  // random admissible states: pinned mean to 1e-14
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    SpectralField phi = oracle::random_field(g, seed, 12);
    set_mean(phi, p.alpha);
    FlowState s = make_state(phi, p, fp.dt);
    const FlowState s2 = step_imex(s, p, fp);
    CHECK(std::abs(mean(s2.phi) - p.alpha) < 1e-14);
  }

  // (phi^{n+1} - phi^n)/dt converges to flow_rhs at first order
  SpectralField phi = oracle::random_field(g, 77, 8);
  set_mean(phi, p.alpha);
  const RhsResult rr = flow_rhs(phi, p);
  std::vector<double> errs;
  for (double dt : {1e-4, 5e-5, 2.5e-5}) {
    FlowState s = make_state(phi, p, dt);
    FlowParams f2 = fp;
    f2.dt = dt;
    f2.dt_min = dt * 1e-6;
    const FlowState s2 = step_imex(s, p, f2);
    double err = 0.0;
    for (std::size_t i = 0; i < phi.coeff.size(); ++i)
      err = std::max(err,
                     std::abs((s2.phi.coeff[i] - phi.coeff[i]) / dt - rr.rhs.coeff[i]));
    errs.push_back(err);
  }
  const double r1 = errs[0] / errs[1];
  const double r2 = errs[1] / errs[2];
  CHECK(r1 > 1.7);
  CHECK(r1 < 2.3);
  CHECK(r2 > 1.7);
  CHECK(r2 < 2.3);
}

TEST_CASE("el_residuals: slaved height makes r2 vanish") {
  ModelParams p = band_params();
  p.sigma = 0.2;
  p.alpha = 0.1;
  auto g = build_grid(p.R, 32, 2.0);
  SpectralField phi = oracle::random_field(g, 21, 16);
  set_mean(phi, p.alpha);
  FlowState s = make_state(phi, p, 1e-4);
  const auto [r1, r2] = el_residuals(s, p);
  CHECK(r2 < 1e-9);
  CHECK(r1 > 0.0);

  FlowState c = make_state(initial_constant(g, p.alpha), p, 1e-4);
  const auto [cr1, cr2] = el_residuals(c, p);
  CHECK(cr1 < 1e-12);
  CHECK(cr2 < 1e-14);
}

TEST_CASE("run_flow: constant data converges immediately") {
  ModelParams p = band_params();
  p.alpha = 0.3;
  auto g = build_grid(p.R, 16, 2.0);
  FlowParams fp;
  fp.t_end = 1.0;
  const FlowResult r = run_flow(initial_constant(g, p.alpha), p, fp);
  CHECK(r.status == FlowStatus::converged);
  CHECK(r.diagnostics.rows.size() == 1);
  CHECK(r.state.step_count == 0);
}

TEST_CASE("run_flow rejects far-off means and aborts on divergence") {
  ModelParams p = band_params();
  auto g = build_grid(p.R, 16, 2.0);
  FlowParams fp;
  SpectralField bad = initial_constant(g, p.alpha + 0.1);
  CHECK_THROWS_AS(run_flow(bad, p, fp), std::invalid_argument);

  SpectralField wild(g);
  wild.at(3, 1) = 40.0;  // |phi| > 10 somewhere
  set_mean(wild, p.alpha);
  const FlowResult r = run_flow(wild, p, fp);
  CHECK(r.status == FlowStatus::diverged);
}

TEST_CASE("Lyapunov, mass and rotational equivariance along a short run") {
  ModelParams p = band_params();
  p.epsilon = 0.15;
  auto g = build_grid(p.R, 32, 2.0);
  SpectralField phi0 = initial_tanh_band(g, 1.1, 2.0, p);
  add_perturbation(phi0, 0.02, 99, 8, p.alpha);

  FlowParams fp;
  fp.dt = 1e-4;
  fp.dt_max = 2e-3;
  fp.t_end = 0.05;
  fp.stop_tol = 1e-12;
  const FlowResult r = run_flow(phi0, p, fp);
  REQUIRE(r.diagnostics.rows.size() > 10);
  for (std::size_t i = 1; i < r.diagnostics.rows.size(); ++i) {
    CHECK(r.diagnostics.rows[i].e_reduced <= r.diagnostics.rows[i - 1].e_reduced + 1e-12);
    CHECK(std::abs(r.diagnostics.rows[i].mass - p.alpha) < 1e-13);
  }

  // u constraints hold along the run
  for (int i = 0; i < 4; ++i) CHECK(r.state.u.coeff[i] == 0.0);

  // one accepted step commutes with a grid rotation
  const int shift = 5;
  const double angle = 2.0 * std::numbers::pi * shift / g->n_phi();
  FlowParams f1;
  f1.dt = 1e-4;
  f1.dt_max = 1e-4;
  FlowState a = make_state(phi0, p, f1.dt);
  FlowState b = make_state(rotate_about_pole(phi0, angle), p, f1.dt);
  const SpectralField step_then_rot = rotate_about_pole(step_imex(a, p, f1).phi, angle);
  const SpectralField rot_then_step = step_imex(b, p, f1).phi;
  double err = 0.0;
  for (std::size_t i = 0; i < step_then_rot.coeff.size(); ++i)
    err = std::max(err, std::abs(step_then_rot.coeff[i] - rot_then_step.coeff[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("perturbed band relaxes to a stationary state with small residuals") {
  ModelParams p = band_params();  // eps = 0.1
  auto g = build_grid(p.R, 48, 2.0);
  const double half = 0.45;
  SpectralField phi0 = initial_tanh_band(g, 0.5 * std::numbers::pi - half,
                                         0.5 * std::numbers::pi + half, p);
  add_perturbation(phi0, 0.01, 5, 8, p.alpha);

  FlowParams fp;
  fp.dt = 1e-4;
  fp.dt_max = 5e-3;
  fp.t_end = 50.0;
  fp.stop_tol = 1e-5;
  fp.max_steps = 30000;
  const FlowResult r = run_flow(phi0, p, fp);
  REQUIRE(r.status == FlowStatus::converged);
  const auto [r1, r2] = el_residuals(r.state, p);
  CHECK(r1 < 1e-6 + p.beta * p.epsilon * fp.stop_tol);
  CHECK(r2 < 1e-9);

  // the converged interface profile carries the expected tanh width
  const TanhFit fit = fit_tanh_profile(zonal_part(r.state.phi), p.R);
  CHECK(fit.eps_hat / p.epsilon > 0.9);
  CHECK(fit.eps_hat / p.epsilon < 1.1);
}

TEST_CASE("initial data helpers: means and perturbation bookkeeping") {
  ModelParams p = band_params();
  p.alpha = -0.5;
  auto g = build_grid(p.R, 24, 2.0);
  const SpectralField cap = initial_tanh_cap(g, 1.0, Pole::north, p);
  CHECK(std::abs(mean(cap) - p.alpha) < 1e-14);
  const SpectralField south = initial_tanh_cap(g, 1.0, Pole::south, p);
  CHECK(std::abs(mean(south) - p.alpha) < 1e-14);

  CHECK_THROWS_AS(initial_tanh_band(g, 2.0, 1.0, p), std::invalid_argument);

  SpectralField a = initial_constant(g, p.alpha);
  SpectralField b = a;
  add_perturbation(a, 0.05, 42, 6, p.alpha);
  add_perturbation(b, 0.05, 42, 6, p.alpha);
  for (std::size_t i = 0; i < a.coeff.size(); ++i) CHECK(a.coeff[i] == b.coeff[i]);
  CHECK(std::abs(mean(a) - p.alpha) < 1e-14);
  for (int l = 7; l <= g->l_max(); ++l)
    for (int m = -l; m <= l; ++m) CHECK(a.at(l, m) == 0.0);
}
