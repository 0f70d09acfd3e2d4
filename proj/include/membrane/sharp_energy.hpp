#pragma once

#include "membrane/axisym.hpp"
#include "membrane/energy.hpp"

namespace membrane {

/// Band-limited spectral representation of chi_gamma (exact zonal expansion
/// truncated at the grid degree).
inline SpectralField chi_spectral(const CapSet& cs, const GridPtr& grid) {
  return embed_zonal(chi_legendre(cs, grid->l_max(), grid->radius()), grid);
}

/// Pointwise +-1 samples of chi_gamma; a grid point exactly on gamma takes
/// +1. Quadrature against this carries the O(1/n_theta) error of the jump;
/// the energy paths below pair the exact expansion against band-limited
/// fields instead, and tests use this sampler to measure that error floor.
inline GridField sample_chi(const CapSet& cs, const GridPtr& grid) {
  cs.validate();
  GridField f(grid);
  for (int j = 0; j < grid->n_theta(); ++j) {
    const double th = grid->colatitudes()[j];
    double v = -1.0;
    for (const Cap& c : cs.caps) {
      if (c.pole == Pole::north && th <= c.theta0) v = 1.0;
      if (c.pole == Pole::south && th >= std::numbers::pi - c.theta0) v = 1.0;
    }
    for (int k = 0; k < grid->n_phi(); ++k) f.at(j, k) = v;
  }
  return f;
}

/// E_SI(u, gamma) = int e_m(chi, u, Delta u) + b_hat |gamma|. The elastic
/// integral is expanded so that chi enters only through chi^2 = 1 (exact) and
/// the L^2 pairing of its exact expansion with band-limited fields, which
/// avoids the jump-quadrature error entirely.
inline EnergyReport energy_sharp(const SpectralField& u, const CapSet& cs,
                                 const ModelParams& p) {
  const GridPtr& grid = u.grid;
  const SpectralField A = shifted_laplacian(u);
  const AxisymField chi = chi_legendre(cs, grid->l_max(), p.R);
  const double R2 = p.R * p.R;
  double chi_dot_A = 0.0;
  for (int l = 0; l <= grid->l_max(); ++l) chi_dot_A += chi.c[l] * A.at(l, 0);
  chi_dot_A *= R2;

  EnergyReport r;
  r.bending = 0.5 * p.kappa * dot(A, A) + p.kappa * p.Lambda * chi_dot_A +
              0.5 * p.kappa * p.Lambda * p.Lambda * four_pi * R2 -
              (p.kappa / R2 + 0.5 * p.sigma) * dot(u, A);
  r.line = p.b_hat() * cap_perimeter(cs, p.R);
  r.finalize();
  return r;
}

/// Etilde_SI on the 2-D grid, reformulated shape: the projected indicator is
/// synthesized and the two quadratic integrals are done by grid quadrature
/// (band-limited products, hence quadrature-exact); chi^2 integrates to
/// |Gamma| exactly.
inline double energy_sharp_reduced(const CapSet& cs, const ModelParams& p,
                                   const GridPtr& grid) {
  const SpectralField pchi = project_S(chi_spectral(cs, grid));
  const SpectralField gp = green_G(pchi, p);
  const GridField pg = synthesize(pchi);
  const GridField gpg = synthesize(gp);
  GridField prod(grid), psq(grid);
  for (std::size_t i = 0; i < prod.values.size(); ++i) {
    prod.values[i] = pg.values[i] * gpg.values[i];
    psq.values[i] = pg.values[i] * pg.values[i];
  }
  const double R2 = p.R * p.R;
  return 0.5 * p.kappa * p.Lambda * (p.sigma / p.kappa + 2.0 / R2) * integrate(prod) +
         0.5 * p.kappa * p.Lambda * p.Lambda * (four_pi * R2 - integrate(psq)) +
         p.b_hat() * cap_perimeter(cs, p.R);
}

/// Gamma-limit value J_0 + K for a sharp configuration: b_hat |gamma| plus
/// K(chi) in the unreformulated shape, again by grid quadrature.
inline double gamma_limit_value(const CapSet& cs, const ModelParams& p,
                                const GridPtr& grid) {
  const SpectralField pchi = project_S(chi_spectral(cs, grid));
  const SpectralField gp = green_G(pchi, p);
  const GridField pg = synthesize(pchi);
  const GridField lg = synthesize(shifted_laplacian(gp));
  GridField prod(grid);
  for (std::size_t i = 0; i < prod.values.size(); ++i)
    prod.values[i] = pg.values[i] * lg.values[i];
  const double R2 = p.R * p.R;
  return 0.5 * p.kappa * p.Lambda * integrate(prod) +
         0.5 * p.kappa * p.Lambda * p.Lambda * four_pi * R2 +
         p.b_hat() * cap_perimeter(cs, p.R);
}

}  // namespace membrane
