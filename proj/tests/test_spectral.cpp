#include <catch2/catch_amalgamated.hpp>

#include "membrane/sphere.hpp"
#include "oracles.hpp"

using namespace membrane;

TEST_CASE("grid sizing follows the truncation") {
  auto g = build_grid(1.0, 4, 1.0);
  CHECK(g->n_theta() == 5);
  CHECK(g->n_phi() == 10);

  auto g2 = build_grid(2.5, 16, 2.0);
  CHECK(g2->n_theta() == 34);
  CHECK(g2->n_phi() == 66);
  CHECK(g2->n_theta() >= g2->l_max() + 1);
  CHECK(g2->n_phi() >= 2 * g2->l_max() + 1);

  CHECK_THROWS_AS(build_grid(1.0, 1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1.0, 8, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(-1.0, 8, 2.0), std::invalid_argument);
}

TEST_CASE("Gauss-Legendre nodes: closed form for n=2, positivity, ordering") {
  std::vector<double> x, w;
  detail::gauss_legendre(2, x, w);
  CHECK(std::abs(std::abs(x[0]) - 1.0 / std::sqrt(3.0)) < 1e-15);
  CHECK(std::abs(std::abs(x[1]) - 1.0 / std::sqrt(3.0)) < 1e-15);
  CHECK(std::abs(w[0] - 1.0) < 1e-14);

  auto g = build_grid(1.0, 32, 2.0);
  for (double wj : g->weights()) CHECK(wj > 0.0);
  for (int j = 1; j < g->n_theta(); ++j)
    CHECK(g->colatitudes()[j] > g->colatitudes()[j - 1]);
  // P_n residual at the nodes
  for (int j = 0; j < g->n_theta(); ++j) {
    std::vector<double> P(g->n_theta() + 1);
    legendre_p(g->n_theta(), g->cos_theta()[j], P);
    CHECK(std::abs(P[g->n_theta()]) < 1e-13);
  }
}

TEST_CASE("integrate: area, odd symmetry, nu3^2") {
  for (double R : {1.0, 2.5}) {
    auto g = build_grid(R, 24, 2.0);
    GridField one(g);
    for (double& v : one.values) v = 1.0;
    CHECK(std::abs(integrate(one) - g->area()) < 1e-13 * g->area());

    GridField nu3(g);
    for (int j = 0; j < g->n_theta(); ++j)
      for (int k = 0; k < g->n_phi(); ++k) nu3.at(j, k) = g->cos_theta()[j];
    CHECK(std::abs(integrate(nu3)) < 1e-13 * g->area());

    GridField nu3sq(g);
    for (int j = 0; j < g->n_theta(); ++j)
      for (int k = 0; k < g->n_phi(); ++k) nu3sq.at(j, k) = g->cos_theta()[j] * g->cos_theta()[j];
    const double expect = g->area() / 3.0;
    CHECK(std::abs(integrate(nu3sq) - expect) < 1e-12 * expect);
    // dense quadrature oracle agrees
    const double dense = oracle::zonal_surface_integral(
        [](double th) { return std::cos(th) * std::cos(th); }, R);
    CHECK(std::abs(dense - expect) < 1e-12 * expect);
  }
}

TEST_CASE("round trip is exact for band-limited fields") {
  for (int L : {8, 32, 128}) {
    auto g = build_grid(1.3, L, 2.0);
    SpectralField a = oracle::random_field(g, 1234 + L);
    SpectralField b = analyze(synthesize(a));
    double err = 0.0, scale = max_abs(a);
    for (std::size_t i = 0; i < a.coeff.size(); ++i)
      err = std::max(err, std::abs(a.coeff[i] - b.coeff[i]));
    CHECK(err < 1e-12 * scale);
  }
}

TEST_CASE("round trip survives the design ceiling l_max = 512") {
  auto g = build_grid(1.0, 512, 2.0);
  SpectralField a = oracle::random_field(g, 77);
  SpectralField b = analyze(synthesize(a));
  double err = 0.0;
  for (std::size_t i = 0; i < a.coeff.size(); ++i)
    err = std::max(err, std::abs(a.coeff[i] - b.coeff[i]));
  CHECK(err < 1e-11 * max_abs(a));
}

TEST_CASE("analyze of simple fields") {
  auto g = build_grid(2.0, 16, 2.0);

  GridField c(g);
  for (double& v : c.values) v = 3.7;
  SpectralField ac = analyze(c);
  CHECK(std::abs(ac.coeff[0] - 3.7 * std::sqrt(four_pi)) < 1e-13);
  for (std::size_t i = 1; i < ac.coeff.size(); ++i) CHECK(std::abs(ac.coeff[i]) < 1e-13);
  CHECK(std::abs(mean(ac) - 3.7) < 1e-14);

  // nu3 = cos(theta) is the l=1 zonal harmonic times sqrt(4pi/3)
  GridField nu3(g);
  for (int j = 0; j < g->n_theta(); ++j)
    for (int k = 0; k < g->n_phi(); ++k) nu3.at(j, k) = g->cos_theta()[j];
  SpectralField an = analyze(nu3);
  const double expect = std::sqrt(four_pi / 3.0);
  CHECK(std::abs(an.at(1, 0) - expect) < 1e-13);
  double rest = 0.0;
  for (int l = 0; l <= g->l_max(); ++l)
    for (int m = -l; m <= l; ++m)
      if (!(l == 1 && m == 0)) rest = std::max(rest, std::abs(an.at(l, m)));
  CHECK(rest < 1e-13);
  // quadrature oracle for the same projection
  const double proj = oracle::zonal_surface_integral(
      [](double th) {
        return std::cos(th) * std::sqrt(3.0 / four_pi) * std::cos(th);
      }, 1.0) /* R=1 surface integral */;
  CHECK(std::abs(proj - expect) < 1e-12);

  GridField bad(g);
  bad.values[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(analyze(bad), std::invalid_argument);
}

TEST_CASE("Parseval ties quadrature to coefficients") {
  auto g = build_grid(1.7, 48, 2.0);
  SpectralField a = oracle::random_field(g, 99);
  GridField f = synthesize(a);
  GridField f2(g);
  for (std::size_t i = 0; i < f.values.size(); ++i) f2.values[i] = f.values[i] * f.values[i];
  double coef_sum = 0.0;
  for (double v : a.coeff) coef_sum += v * v;
  coef_sum *= g->radius() * g->radius();
  CHECK(std::abs(integrate(f2) - coef_sum) < 1e-12 * coef_sum);
}

TEST_CASE("laplace_beltrami eigenvalues") {
  for (double R : {1.0, 3.0}) {
    auto g = build_grid(R, 12, 2.0);
    SpectralField c(g);
    set_mean(c, 2.0);
    CHECK(max_abs(laplace_beltrami(c)) == 0.0);

    SpectralField m1(g);
    m1.at(1, 1) = 1.0;
    SpectralField lm1 = laplace_beltrami(m1);
    CHECK(std::abs(lm1.at(1, 1) + 2.0 / (R * R)) < 1e-15);

    SpectralField m2(g);
    m2.at(2, -2) = 0.5;
    SpectralField lm2 = laplace_beltrami(m2);
    CHECK(std::abs(lm2.at(2, -2) - (-6.0 / (R * R)) * 0.5) < 1e-15);
  }
}

TEST_CASE("gradient_sq_integral: eigen identity, scaling, FD cross-check") {
  auto g = build_grid(1.0, 32, 2.0);
  SpectralField c(g);
  set_mean(c, 5.0);
  CHECK(gradient_sq_integral(c) == 0.0);

  SpectralField m1(g);
  m1.at(1, 0) = 1.0;
  CHECK(std::abs(gradient_sq_integral(m1) - 2.0) < 1e-14);

  SpectralField a = oracle::random_field(g, 4242);
  const double base = gradient_sq_integral(a);
  CHECK(std::abs(gradient_sq_integral(3.0 * a) - 9.0 * base) < 1e-12 * base);

  // grid-based finite differences: int |grad a|^2 = -int a lap a
  GridField ag = synthesize(a);
  GridField lap_fd = oracle::fd_laplacian(ag);
  GridField prod(g);
  for (int j = 1; j + 1 < g->n_theta(); ++j)
    for (int k = 0; k < g->n_phi(); ++k) prod.at(j, k) = -ag.at(j, k) * lap_fd.at(j, k);
  // first/last rows excluded by the FD stencil; their quadrature weight is tiny
  const double fd_val = integrate(prod);
  CHECK(std::abs(fd_val - base) < 5e-2 * base);
}

TEST_CASE("spectral Laplacian matches FD Laplacian at second order") {
  // smooth, effectively band-limited field
  auto field = [](double th, double ph) {
    return std::exp(std::cos(th)) + 0.5 * std::sin(th) * std::sin(th) * std::cos(2.0 * ph);
  };
  // compared away from the pole caps, where the FD stencil itself is regular
  std::vector<double> errs;
  std::vector<int> Ls = {32, 64, 128};
  for (int L : Ls) {
    auto g = build_grid(1.0, L, 2.0);
    GridField f(g);
    for (int j = 0; j < g->n_theta(); ++j)
      for (int k = 0; k < g->n_phi(); ++k) f.at(j, k) = field(g->colatitudes()[j], g->longitude(k));
    GridField lap_sp = synthesize(laplace_beltrami(analyze(f)));
    GridField lap_fd = oracle::fd_laplacian(f);
    double err = 0.0;
    for (int j = 1; j + 1 < g->n_theta(); ++j) {
      if (g->sin_theta()[j] < 0.3) continue;
      for (int k = 0; k < g->n_phi(); ++k)
        err = std::max(err, std::abs(lap_sp.at(j, k) - lap_fd.at(j, k)));
    }
    errs.push_back(err);
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  CHECK(order1 >= 1.9);
  CHECK(order2 >= 1.9);
}

TEST_CASE("quadrature reproduces zonal orthonormality") {
  auto g = build_grid(1.0, 16, 2.0);
  for (int l = 0; l <= g->l_max(); ++l) {
    for (int lp = l; lp <= g->l_max(); ++lp) {
      SpectralField a(g), b(g);
      a.at(l, 0) = 1.0;
      b.at(lp, 0) = 1.0;
      GridField fa = synthesize(a), fb = synthesize(b);
      GridField prod(g);
      for (std::size_t i = 0; i < prod.values.size(); ++i)
        prod.values[i] = fa.values[i] * fb.values[i];
      const double got = integrate(prod);
      const double expect = (l == lp) ? g->radius() * g->radius() : 0.0;
      CHECK(std::abs(got - expect) < 1e-12);
    }
  }
}

TEST_CASE("rotation about the pole matches a column shift") {
  auto g = build_grid(1.0, 20, 2.0);
  SpectralField a = oracle::random_field(g, 31);
  const int shift = 7;
  const double angle = 2.0 * std::numbers::pi * shift / g->n_phi();
  GridField rotated = synthesize(rotate_about_pole(a, angle));
  GridField plain = synthesize(a);
  double err = 0.0;
  for (int j = 0; j < g->n_theta(); ++j)
    for (int k = 0; k < g->n_phi(); ++k)
      err = std::max(err, std::abs(rotated.at(j, (k + shift) % g->n_phi()) - plain.at(j, k)));
  CHECK(err < 1e-12);
}
