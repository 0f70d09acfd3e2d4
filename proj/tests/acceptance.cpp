// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries its tolerance and a wall-clock budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "membrane/io.hpp"
#include "membrane/selftest.hpp"
#include "membrane/studies.hpp"

using namespace membrane;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
  std::string label;
  double budget_seconds;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;

  Criterion(std::string l, double budget) : label(std::move(l)), budget_seconds(budget) {}

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }

  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_seconds) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("[%s] %s (%.1f s / %.0f s)%s%s\n", ok ? "PASS" : "FAIL", label.c_str(), secs,
                budget_seconds, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

SpectralField random_band_limited(const GridPtr& grid, std::uint64_t seed, double alpha) {
  detail::SplitMix64 rng(seed);
  SpectralField a(grid);
  for (int l = 0; l <= grid->l_max(); ++l)
    for (int m = -l; m <= l; ++m) a.at(l, m) = rng.uniform_pm1() / ((1.0 + l) * (1.0 + l));
  set_mean(a, alpha);
  return a;
}

void criterion_1_operator_identities() {
  Criterion c("criterion 1: operator identity suite (100 fields, L=32)", 30.0);
  ModelParams p;
  p.sigma = 0.2;
  p.kappa = 1.3;
  p.Lambda = 0.9;
  p.epsilon = 0.07;
  p.alpha = 0.1;
  auto grid = build_grid(p.R, 32, 2.0);
  double worst_reform = 0.0, worst_el4 = 0.0, worst_chain1 = 0.0, worst_chain2 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    SpectralField phi = random_band_limited(grid, 1000 + trial, p.alpha);
    worst_reform = std::max(worst_reform, reformulation_residual(phi, p));

    const SpectralField u = green_of_projection(phi, p);
    SpectralField t(grid);
    const SpectralField lu = laplace_beltrami(u);
    for (std::size_t i = 0; i < t.coeff.size(); ++i)
      t.coeff[i] = p.kappa * lu.coeff[i] - p.sigma * u.coeff[i] + p.kappa * p.Lambda * phi.coeff[i];
    t.coeff[0] -= p.kappa * p.Lambda * p.alpha * std::sqrt(four_pi);
    worst_el4 = std::max(worst_el4, max_abs(synthesize(shifted_laplacian(t))));

    const double full = energy_diffuse(u, phi, p).total;
    const double reduced = energy_reduced(phi, p);
    const double jk = energy_J(phi, p) + energy_K(phi, p);
    worst_chain1 = std::max(worst_chain1, std::abs(full - reduced) / std::abs(reduced));
    worst_chain2 = std::max(worst_chain2, std::abs(jk - reduced) / std::abs(reduced));
  }
  c.require(worst_reform < 1e-10, "reformulation residual " + std::to_string(worst_reform));
  c.require(worst_el4 < 1e-9, "fourth-order EL residual " + std::to_string(worst_el4));
  c.require(worst_chain1 < 1e-9, "identity E_DI=Etilde " + std::to_string(worst_chain1));
  c.require(worst_chain2 < 1e-9, "identity Etilde=J+K " + std::to_string(worst_chain2));
  c.finish();
}

void criterion_2_reduction_optimality() {
  Criterion c("criterion 2: reduction optimality (100 admissible heights)", 30.0);
  ModelParams p;
  p.sigma = 0.15;
  p.epsilon = 0.08;
  p.alpha = -0.05;
  auto grid = build_grid(p.R, 32, 2.0);
  double worst_gap = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    SpectralField phi = random_band_limited(grid, 2000 + trial, p.alpha);
    const double reduced = energy_reduced(phi, p);
    const SpectralField u_star = green_of_projection(phi, p);
    SpectralField du = project_S(random_band_limited(grid, 9000 + trial, 0.0));
    const SpectralField u = u_star + 0.2 * du;  // zero mean, zero nu_i moments
    const double full = energy_diffuse(u, phi, p).total;
    worst_gap = std::max(worst_gap, reduced - full);
  }
  c.require(worst_gap <= 1e-10, "E_DI(u,phi) dipped below Etilde by " + std::to_string(worst_gap));
  c.finish();
}

void criterion_3_gamma_limit() {
  Criterion c("criterion 3: Gamma-limit convergence (eps sweep to 0.025R)", 300.0);
  Config base = Config::from_string(
      "grid.l_max = 256\n"
      "study.eps_list = 0.1, 0.05, 0.025\n");

  {
    Config c0 = base;
    c0.set("model.Lambda", "0");
    const GammaStudy s = run_gamma_study(make_run_config(c0));
    const double target = s.rows[0].j0_target;
    bool decreasing = true;
    for (std::size_t i = 1; i < s.rows.size(); ++i)
      decreasing = decreasing && s.rows[i].err_j < s.rows[i - 1].err_j;
    c.require(decreasing, "|J - b_hat 2 pi R| not decreasing");
    for (std::size_t i = 1; i < s.rows.size(); ++i)
      c.require(s.rows[i].rate_j >= 0.8,
                "observed order " + std::to_string(s.rows[i].rate_j) + " < 0.8");
    c.require(s.rows.back().err_j / target < 0.03,
              "final relative error " + std::to_string(s.rows.back().err_j / target));
  }
  {
    Config c1 = base;
    c1.set("model.Lambda", "1");
    const GammaStudy s = run_gamma_study(make_run_config(c1));
    bool decreasing = true;
    for (std::size_t i = 1; i < s.rows.size(); ++i)
      decreasing = decreasing && s.rows[i].err_e < s.rows[i - 1].err_e;
    c.require(decreasing, "|Etilde_DI - Etilde_SI| not decreasing");
  }
  c.finish();
}

FlowResult g_criterion4_result;  // reused by criterion 5
ModelParams g_criterion4_params;

void criterion_4_flow_invariants() {
  Criterion c("criterion 4: gradient-flow invariants (1e4 steps, L=128)", 600.0);
  ModelParams p;
  p.epsilon = 0.05;
  auto grid = build_grid(p.R, 128, 2.0);
  const double half = 0.55;
  SpectralField phi0 = tanh_band_profile(grid, 0.5 * std::numbers::pi - half,
                                         0.5 * std::numbers::pi + half, p.epsilon);
  p.alpha = mean(phi0);
  add_perturbation(phi0, 0.01, 12345, 32, p.alpha);

  FlowParams fp;
  fp.dt = 1e-4;
  fp.dt_max = 6e-4;
  fp.dt_min = 1e-12;
  fp.t_end = 1e9;
  fp.energy_tol = 0.0;
  fp.stop_tol = 1e-9;  // unreachable on purpose: run the full 1e4 steps
  fp.max_steps = 10000;
  FlowResult r = run_flow(phi0, p, fp);

  double mass_drift = 0.0;
  bool monotone = true;
  for (std::size_t i = 0; i < r.diagnostics.rows.size(); ++i) {
    mass_drift = std::max(mass_drift, std::abs(r.diagnostics.rows[i].mass - p.alpha));
    if (i > 0 && r.diagnostics.rows[i].e_reduced > r.diagnostics.rows[i - 1].e_reduced)
      monotone = false;
  }
  c.require(r.diagnostics.rows.size() >= 10000, "run stopped early");
  c.require(mass_drift < 1e-12, "mass drift " + std::to_string(mass_drift));
  c.require(monotone, "energy not monotone under energy_tol = 0");
  const auto [r1, r2] = el_residuals(r.state, p);
  c.require(r1 < 1e-6, "EL residual r1 " + std::to_string(r1));
  c.require(r2 < 1e-6, "EL residual r2 " + std::to_string(r2));
  g_criterion4_result = std::move(r);
  g_criterion4_params = p;
  c.finish();
}

void criterion_5_interface_profile() {
  Criterion c("criterion 5: interface profile recovers the tanh width", 60.0);
  if (g_criterion4_result.diagnostics.rows.empty()) {
    c.require(false, "criterion 4 state unavailable");
    c.finish();
    return;
  }
  const TanhFit fit =
      fit_tanh_profile(zonal_part(g_criterion4_result.state.phi), g_criterion4_params.R);
  const double ratio = fit.eps_hat / g_criterion4_params.epsilon;
  c.require(ratio >= 0.9 && ratio <= 1.1, "eps_hat/eps = " + std::to_string(ratio));
  c.finish();
}

void criterion_6_jump_conditions() {
  Criterion c("criterion 6: jump conditions across the eps sweep", 600.0);
  Config cfg = Config::from_string(
      "model.epsilon = 0.1\n"
      "caps.north = 1.0\n"
      "study.eps_list = 0.1, 0.05, 0.025\n"
      "flow.dt = 2e-3\n"
      "flow.dt_max = 3e-3\n"
      "flow.t_end = 2.0\n"
      "flow.stop_tol = 3e-4\n"
      "flow.max_steps = 20000\n"
      "axisym.mode = jump\n");
  const auto rows = run_jump_study(make_run_config(cfg));
  const double lambda = 1.0;
  for (const auto& r : rows)
    std::printf("    eps=%-7.4g L=%-4d ratio=%.4f [u]=%.2e [du]=%.2e\n", r.eps, r.l_max,
                r.ratio, r.jump_u, r.jump_grad);
  c.require(rows.size() == 3, "sweep incomplete");
  const auto& fine = rows.back();
  c.require(std::abs(fine.ratio - 1.0) < 0.1,
            "[lap u]/(-2 Lambda) off by " + std::to_string(std::abs(fine.ratio - 1.0)));
  (void)lambda;
  // continuity jumps vanish at the finest eps (scaled by the trace sizes)
  c.require(std::abs(fine.jump_u) < 5e-3, "[u] = " + std::to_string(fine.jump_u));
  c.require(std::abs(fine.jump_grad) < 5e-2, "[grad u . mu] = " + std::to_string(fine.jump_grad));
  c.finish();
}

void criterion_7_sharp_oracle() {
  Criterion c("criterion 7: sharp-oracle agreement (series + tracking)", 900.0);
  {  // grid vs series at matched truncation
    ModelParams p;
    p.sigma = 0.2;
    auto grid = build_grid(p.R, 128, 2.0);
    for (double theta0 : {0.7, 1.0, 0.5 * std::numbers::pi}) {
      CapSet cs{{Cap{Pole::north, theta0}}};
      const double grid_val = energy_sharp_reduced(cs, p, grid);
      const double series_val = sharp_energy_series(cs, p, 128).value;
      c.require(std::abs(grid_val - series_val) < 1e-6 * std::abs(series_val),
                "grid vs series at theta0=" + std::to_string(theta0));
    }
  }
  {  // two-cap ODE against the full phase field at eps = 0.05 R
    Config cfg = Config::from_string(
        "model.epsilon = 0.05\n"
        "model.sigma = 0.3\n"
        "grid.l_max = 128\n"
        "caps.north = 0.95\n"
        "caps.south = 0.75\n"
        "axisym.mode = compare\n"
        "axisym.dt = 2e-3\n"
        "axisym.t_end = 0.5\n"
        "axisym.l_series = 384\n"
        "flow.dt = 2e-4\n"
        "flow.dt_max = 6e-4\n"
        "flow.stop_tol = 1e-12\n");
    const RunConfig rc = make_run_config(cfg);
    const AxisymCompare res = run_axisym_compare(rc);
    c.require(res.compare.size() == 5, "tracking rows missing");
    const double tol = 2.0 * rc.model.epsilon / rc.model.R;
    for (const auto& row : res.compare) {
      const double d1 = std::abs(row.ode_theta1 - row.pf_theta1);
      const double d2 = std::abs(row.ode_theta2 - row.pf_theta2);
      std::printf("    t=%-6.3f |ode-pf| = (%.4f, %.4f) tol %.3f\n", row.t, d1, d2, tol);
      c.require(d1 < tol && d2 < tol, "interface mismatch at t=" + std::to_string(row.t));
    }
  }
  c.finish();
}

void criterion_8_determinism() {
  Criterion c("criterion 8: determinism and persistence", 60.0);
  Config cfg = Config::from_string(
      "model.epsilon = 0.15\n"
      "grid.l_max = 24\n"
      "flow.dt = 2e-4\n"
      "flow.dt_max = 1e-3\n"
      "flow.t_end = 0.01\n"
      "flow.stop_tol = 1e-12\n"
      "initial.type = perturbed\n"
      "initial.base = tanh_band\n"
      "initial.theta1 = 1.1\n"
      "initial.theta2 = 2.0\n"
      "initial.amplitude = 0.02\n"
      "initial.seed = 77\n");
  RunConfig rc = make_run_config(cfg);
  const fs::path d1 = fs::temp_directory_path() / "membrane_acc_det1";
  const fs::path d2 = fs::temp_directory_path() / "membrane_acc_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  rc.outputs.dir = d1;
  run_relax(rc);
  rc.outputs.dir = d2;
  run_relax(rc);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  };
  c.require(slurp(d1 / "diagnostics.csv") == slurp(d2 / "diagnostics.csv"),
            "diagnostics not byte-identical");
  c.require(slurp(d1 / "final.ckpt") == slurp(d2 / "final.ckpt"),
            "checkpoints not byte-identical");

  // save -> load -> one step == one step -> save
  ModelParams p;
  p.epsilon = 0.15;
  auto grid = build_grid(p.R, 24, 2.0);
  FlowParams fp;
  fp.dt = 2e-4;
  fp.dt_max = 1e-3;
  SpectralField phi0 = initial_tanh_band(grid, 1.1, 2.0, p);
  FlowState a = make_state(phi0, p, fp.dt);
  save_checkpoint(d1 / "cp0.ckpt", a, p);
  save_checkpoint(d1 / "cp1.ckpt", step_imex(a, p, fp), p);
  const LoadedCheckpoint lb = load_checkpoint(d1 / "cp0.ckpt");
  save_checkpoint(d1 / "cp1b.ckpt", step_imex(lb.state, lb.params, fp), lb.params);
  c.require(slurp(d1 / "cp1.ckpt") == slurp(d1 / "cp1b.ckpt"),
            "step after reload differs byte-for-byte");
  c.finish();
}

}  // namespace

int main() {
  std::printf("membrane acceptance suite\n");
  criterion_1_operator_identities();
  criterion_2_reduction_optimality();
  criterion_3_gamma_limit();
  criterion_4_flow_invariants();
  criterion_5_interface_profile();
  criterion_6_jump_conditions();
  criterion_7_sharp_oracle();
  criterion_8_determinism();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
