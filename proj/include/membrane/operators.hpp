#pragma once

#include <cmath>
#include <stdexcept>

#include "membrane/sphere.hpp"

namespace membrane {

/// c_W = int_{-1}^{1} sqrt(2 W(s)) ds = 2 sqrt(2)/3 for W(s) = (s^2-1)^2/4.
inline constexpr double c_W = 0.9428090415820633658677924828064654;

/// Physical constants of the model. alpha is the prescribed mean composition.
struct ModelParams {
  double kappa = 1.0;    // bending rigidity, > 0
  double sigma = 0.0;    // surface tension, >= 0
  double Lambda = 1.0;   // curvature-composition coupling, > 0
  double b = 1.0;        // line-energy scale, > 0
  double epsilon = 0.1;  // interface width, > 0
  double beta = 1.0;     // kinetic coefficient, > 0
  double alpha = 0.0;    // mean composition, |alpha| < 1
  double R = 1.0;        // sphere radius, > 0

  double b_hat() const { return c_W * b; }
  double beta_hat() const { return c_W * beta; }

  void validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("ModelParams: kappa must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("ModelParams: sigma must be >= 0");
    // Lambda = 0 switches the curvature coupling off entirely (pure line
    // tension); every operator stays well defined, so it is admitted.
    if (!(Lambda >= 0.0)) throw std::invalid_argument("ModelParams: Lambda must be >= 0");
    if (!(b > 0.0)) throw std::invalid_argument("ModelParams: b must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("ModelParams: epsilon must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("ModelParams: beta must be > 0");
    if (!(std::abs(alpha) < 1.0)) throw std::invalid_argument("ModelParams: |alpha| must be < 1");
    if (!(R > 0.0)) throw std::invalid_argument("ModelParams: R must be > 0");
  }
};

inline double double_well(double s) {
  const double q = s * s - 1.0;
  return 0.25 * q * q;
}

inline double double_well_prime(double s) { return s * (s * s - 1.0); }

/// Orthogonal projection onto S = span{1, nu_1, nu_2, nu_3}^perp: the l <= 1
/// harmonics span exactly that complement, so P is spectral truncation.
inline SpectralField project_S(const SpectralField& a) {
  SpectralField r = a;
  for (int i = 0; i < 4; ++i) r.coeff[i] = 0.0;
  return r;
}

/// Green operator of (sigma - kappa Delta_Gamma) G(eta) = kappa Lambda eta on
/// S: diagonal solve over l >= 2. Rejects input with significant l <= 1
/// content (the caller must project first).
inline SpectralField green_G(const SpectralField& eta, const ModelParams& p) {
  double low = 0.0;
  for (int i = 0; i < 4; ++i) low = std::max(low, std::abs(eta.coeff[i]));
  if (low > 1e-12 * std::max(max_abs(eta), 1e-300))
    throw std::invalid_argument("green_G: input has l <= 1 content; project onto S first");
  SpectralField r(eta.grid);
  const double inv_R2 = 1.0 / (p.R * p.R);
  for (int l = 2; l <= eta.l_max(); ++l) {
    const double scale = p.kappa * p.Lambda / (p.sigma + p.kappa * l * (l + 1.0) * inv_R2);
    for (int m = -l; m <= l; ++m) r.at(l, m) = scale * eta.at(l, m);
  }
  return r;
}

/// u = G(P(phi)), the membrane height in mechanical equilibrium.
inline SpectralField green_of_projection(const SpectralField& phi, const ModelParams& p) {
  return green_G(project_S(phi), p);
}

/// Apply (Delta_Gamma + 2/R^2).
inline SpectralField shifted_laplacian(const SpectralField& a) {
  SpectralField r(a.grid);
  const double inv_R2 = 1.0 / (a.grid->radius() * a.grid->radius());
  for (int l = 0; l <= a.l_max(); ++l) {
    const double lam = (2.0 - l * (l + 1.0)) * inv_R2;
    for (int m = -l; m <= l; ++m) r.at(l, m) = lam * a.at(l, m);
  }
  return r;
}

/// Max-norm residual of the operator identity
///   (Delta + 2/R^2) G(P phi) = (sigma/kappa + 2/R^2) G(P phi) - Lambda P phi,
/// evaluated on the grid. Should vanish to round-off; kept as a regression
/// check of the diagonal algebra.
inline double reformulation_residual(const SpectralField& phi, const ModelParams& p) {
  const SpectralField pphi = project_S(phi);
  const SpectralField gp = green_G(pphi, p);
  const SpectralField lhs = shifted_laplacian(gp);
  SpectralField rhs(phi.grid);
  const double c = p.sigma / p.kappa + 2.0 / (p.R * p.R);
  for (std::size_t i = 0; i < rhs.coeff.size(); ++i)
    rhs.coeff[i] = c * gp.coeff[i] - p.Lambda * pphi.coeff[i];
  return max_abs(synthesize(lhs - rhs));
}

}  // namespace membrane
