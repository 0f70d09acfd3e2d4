#pragma once

#include <optional>

#include "membrane/operators.hpp"

namespace membrane {

/// Itemized energy values. `total` is the sum of the parts that are present.
struct EnergyReport {
  double total = 0.0;
  std::optional<double> bending;     // integral of e_m
  std::optional<double> dirichlet;   // b eps/2 |grad phi|^2
  std::optional<double> potential;   // b/eps W(phi)
  std::optional<double> coupling_K;  // K(phi)
  std::optional<double> line;        // b_hat |gamma| (sharp configurations)

  void finalize() {
    total = bending.value_or(0.0) + dirichlet.value_or(0.0) + potential.value_or(0.0) +
            coupling_K.value_or(0.0) + line.value_or(0.0);
  }
};

// ---------------------------------------------------------------------------
// membrane elastic energy
//
// The elastic density used throughout is
//   e_m(u, phi) = kappa/2 ((Delta + 2/R^2) u + Lambda phi)^2
//                 - (kappa/R^2 + sigma/2) u (Delta + 2/R^2) u,
// the form consistent with the first variation, the Euler-Lagrange equations
// and the reduced energy (the three agree only for this correction
// coefficient). Products are formed on the oversampled grid, derivatives
// spectrally.

inline double energy_em(const SpectralField& u, const GridField& phi, const ModelParams& p) {
  detail::require_same_grid(u.grid, phi.grid, "energy_em");
  const SpectralField A = shifted_laplacian(u);
  const GridField Ag = synthesize(A);
  const GridField ug = synthesize(u);
  GridField integrand(u.grid);
  const double cu = p.kappa / (p.R * p.R) + 0.5 * p.sigma;
  for (std::size_t i = 0; i < integrand.values.size(); ++i) {
    const double q = Ag.values[i] + p.Lambda * phi.values[i];
    integrand.values[i] = 0.5 * p.kappa * q * q - cu * ug.values[i] * Ag.values[i];
  }
  return integrate(integrand);
}

inline double energy_em(const SpectralField& u, const SpectralField& phi, const ModelParams& p) {
  return energy_em(u, synthesize(phi), p);
}

/// b/eps int W(phi) with W evaluated pointwise on the grid.
inline double potential_energy(const SpectralField& phi, const ModelParams& p) {
  GridField w = synthesize(phi);
  for (double& v : w.values) v = double_well(v);
  return p.b / p.epsilon * integrate(w);
}

inline double dirichlet_energy(const SpectralField& phi, const ModelParams& p) {
  return 0.5 * p.b * p.epsilon * gradient_sq_integral(phi);
}

/// E_DI(u, phi) = int e_m + int b (eps/2 |grad phi|^2 + W(phi)/eps).
inline EnergyReport energy_diffuse(const SpectralField& u, const SpectralField& phi,
                                   const ModelParams& p) {
  EnergyReport r;
  r.bending = energy_em(u, phi, p);
  r.dirichlet = dirichlet_energy(phi, p);
  r.potential = potential_energy(phi, p);
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// reduced energy and its decomposition

/// J_eps(phi): the local Modica-Mortola part.
inline double energy_J(const SpectralField& phi, const ModelParams& p) {
  return dirichlet_energy(phi, p) + potential_energy(phi, p);
}

/// K(phi) = int kappaLambda/2 P(phi) (Delta + 2/R^2) G(P(phi)) + kappaLambda^2 phi^2 / 2.
inline double energy_K(const SpectralField& phi, const ModelParams& p) {
  const SpectralField pphi = project_S(phi);
  const SpectralField gp = green_G(pphi, p);
  return 0.5 * p.kappa * p.Lambda * dot(pphi, shifted_laplacian(gp)) +
         0.5 * p.kappa * p.Lambda * p.Lambda * dot(phi, phi);
}

/// K in the reformulated shape
/// int kappaLambda/2 (sigma/kappa + 2/R^2) P(phi) G(P(phi))
///     + kappaLambda^2/2 (phi^2 - P(phi)^2);
/// must agree with energy_K to round-off.
inline double energy_K_reformulated(const SpectralField& phi, const ModelParams& p) {
  const SpectralField pphi = project_S(phi);
  const SpectralField gp = green_G(pphi, p);
  const double c = p.sigma / p.kappa + 2.0 / (p.R * p.R);
  return 0.5 * p.kappa * p.Lambda * c * dot(pphi, gp) +
         0.5 * p.kappa * p.Lambda * p.Lambda * (dot(phi, phi) - dot(pphi, pphi));
}

/// Reduced energy Etilde_DI(phi) = E_DI(G(P(phi)), phi) = J_eps(phi) + K(phi).
inline double energy_reduced(const SpectralField& phi, const ModelParams& p) {
  return energy_J(phi, p) + energy_K(phi, p);
}

/// Etilde_DI itemized (dirichlet + potential + coupling_K).
inline EnergyReport energy_reduced_report(const SpectralField& phi, const ModelParams& p) {
  EnergyReport r;
  r.dirichlet = dirichlet_energy(phi, p);
  r.potential = potential_energy(phi, p);
  r.coupling_K = energy_K(phi, p);
  r.finalize();
  return r;
}

}  // namespace membrane
