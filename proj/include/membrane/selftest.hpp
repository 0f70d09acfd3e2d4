#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "membrane/io.hpp"
#include "membrane/sharp_energy.hpp"
#include "membrane/studies.hpp"

namespace membrane {

struct SelftestEntry {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

namespace detail {
inline SpectralField selftest_field(const GridPtr& grid, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SpectralField a(grid);
  for (int l = 0; l <= grid->l_max(); ++l)
    for (int m = -l; m <= l; ++m) a.at(l, m) = rng.uniform_pm1() / ((1.0 + l) * (1.0 + l));
  return a;
}
}  // namespace detail

/// The invariant battery behind `membrane selftest`: transform round trips,
/// operator identities, energy identities and conservation, each with a
/// numeric margin. Prints one row per check.
inline std::vector<SelftestEntry> run_selftest_battery() {
  std::vector<SelftestEntry> entries;
  auto check = [&](const std::string& name, double value, double threshold) {
    entries.push_back(SelftestEntry{name, value, threshold, value < threshold});
  };

  ModelParams p;
  p.sigma = 0.3;
  p.kappa = 1.2;
  p.Lambda = 0.9;
  p.epsilon = 0.08;
  p.alpha = 0.1;
  auto grid = build_grid(p.R, 48, 2.0);

  {  // transforms
    SpectralField a = detail::selftest_field(grid, 11);
    SpectralField b = analyze(synthesize(a));
    double err = 0.0;
    for (std::size_t i = 0; i < a.coeff.size(); ++i)
      err = std::max(err, std::abs(a.coeff[i] - b.coeff[i]));
    check("transform round-trip (L=48)", err, 1e-12);

    GridField one(grid);
    for (double& v : one.values) v = 1.0;
    check("quadrature of 1 vs 4 pi R^2", std::abs(integrate(one) - grid->area()), 1e-12);

    GridField f = synthesize(a);
    GridField f2(grid);
    for (std::size_t i = 0; i < f.values.size(); ++i) f2.values[i] = f.values[i] * f.values[i];
    double parseval = 0.0;
    for (double v : a.coeff) parseval += v * v;
    check("Parseval identity", std::abs(integrate(f2) - parseval), 1e-12);

    SpectralField m1(grid);
    m1.at(1, 0) = 1.0;
    check("Laplacian eigenvalue l=1", std::abs(laplace_beltrami(m1).at(1, 0) + 2.0), 1e-14);
  }
  {  // operators
    SpectralField a = detail::selftest_field(grid, 22);
    const SpectralField pa = project_S(a);
    double idem = 0.0;
    const SpectralField ppa = project_S(pa);
    for (std::size_t i = 0; i < pa.coeff.size(); ++i)
      idem = std::max(idem, std::abs(ppa.coeff[i] - pa.coeff[i]));
    check("projection idempotence", idem, 1e-15);

    SpectralField b = detail::selftest_field(grid, 23);
    check("projection self-adjointness",
          std::abs(dot(a, project_S(b)) - dot(project_S(a), b)), 1e-12);

    const SpectralField eta = project_S(a);
    const SpectralField u = green_G(eta, p);
    SpectralField resid(grid);
    const SpectralField lu = laplace_beltrami(u);
    for (std::size_t i = 0; i < resid.coeff.size(); ++i)
      resid.coeff[i] = p.sigma * u.coeff[i] - p.kappa * lu.coeff[i] -
                       p.kappa * p.Lambda * eta.coeff[i];
    check("Green defining equation", max_abs(synthesize(resid)), 1e-10);

    check("reformulation identity", reformulation_residual(a, p), 1e-10);
  }
  {  // energetics
    SpectralField phi = detail::selftest_field(grid, 33);
    set_mean(phi, p.alpha);
    const double reduced = energy_reduced(phi, p);
    const double full = energy_diffuse(green_of_projection(phi, p), phi, p).total;
    check("E_DI(G P phi, phi) = Etilde_DI", std::abs(full - reduced) / std::abs(reduced), 1e-9);
    check("K form equivalence",
          std::abs(energy_K(phi, p) - energy_K_reformulated(phi, p)) /
              std::max(1.0, std::abs(energy_K(phi, p))),
          1e-10);

    double worst = 0.0;
    for (std::uint64_t s : {44u, 45u, 46u}) {
      SpectralField du = project_S(detail::selftest_field(grid, s));
      const double e = energy_diffuse(green_of_projection(phi, p) + 0.05 * du, phi, p).total;
      worst = std::max(worst, reduced - e);
    }
    check("reduction optimality margin", worst, 1e-10);

    CapSet cs{{Cap{Pole::north, 1.0}}};
    const double grid_val = energy_sharp_reduced(cs, p, grid);
    const double series_val = sharp_energy_series(cs, p, grid->l_max()).value;
    check("sharp energy grid vs series", std::abs(grid_val - series_val) / std::abs(series_val),
          1e-6);
  }
  {  // conservation over a short flow
    ModelParams q = p;
    q.epsilon = 0.15;
    SpectralField phi0 = initial_tanh_band(grid, 1.2, 1.9, q);
    add_perturbation(phi0, 0.01, 7, 8, q.alpha);
    FlowParams fp;
    fp.dt = 1e-4;
    fp.dt_max = 1e-3;
    fp.t_end = 0.02;
    fp.stop_tol = 1e-13;
    const FlowResult res = run_flow(phi0, q, fp);
    double mass_drift = 0.0, energy_up = 0.0;
    for (std::size_t i = 0; i < res.diagnostics.rows.size(); ++i) {
      mass_drift = std::max(mass_drift, std::abs(res.diagnostics.rows[i].mass - q.alpha));
      if (i > 0)
        energy_up = std::max(
            energy_up, res.diagnostics.rows[i].e_reduced - res.diagnostics.rows[i - 1].e_reduced);
    }
    check("mass conservation along flow", mass_drift, 1e-13);
    check("energy monotone along flow", energy_up, 1e-12);
    double ul = 0.0;
    for (int i = 0; i < 4; ++i) ul = std::max(ul, std::abs(res.state.u.coeff[i]));
    check("height constraints (l<=1 of u)", ul, 1e-15);
  }
  {  // persistence
    SpectralField phi = detail::selftest_field(grid, 55);
    set_mean(phi, p.alpha);
    FlowState s = make_state(phi, p, 1e-4);
    Checkpoint c;
    c.params = p;
    c.l_max = grid->l_max();
    c.oversample = grid->oversample();
    c.t = s.t;
    c.lambda = s.lambda;
    c.dt = s.dt;
    c.step_count = 0;
    c.phi_coeff = s.phi.coeff;
    const auto buf = encode_checkpoint(c);
    const Checkpoint c2 = decode_checkpoint(buf);
    double err = 0.0;
    for (std::size_t i = 0; i < c.phi_coeff.size(); ++i)
      err = std::max(err, std::abs(c.phi_coeff[i] - c2.phi_coeff[i]));
    check("checkpoint encode/decode", err, 1e-300);
  }
  return entries;
}

inline bool print_selftest(const std::vector<SelftestEntry>& entries) {
  bool all = true;
  for (const auto& e : entries) {
    std::printf("[%s] %-38s value=%10.3e  threshold=%8.1e\n", e.pass ? " ok " : "FAIL",
                e.name.c_str(), e.value, e.threshold);
    all = all && e.pass;
  }
  std::printf("%s\n", all ? "selftest: all checks passed" : "selftest: FAILURES present");
  return all;
}

}  // namespace membrane
