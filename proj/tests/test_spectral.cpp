#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "branchpde/particles.hpp"
#include "branchpde/rng.hpp"
#include "branchpde/sampling.hpp"
#include "branchpde/spectral_field.hpp"

using namespace branchpde;

namespace {

constexpr double kPi = 3.14159265358979323846;

double rho0(const double* x) {
  const double s = std::sin(x[0]);
  const double c = std::cos(x[1]);
  return s * s * c * c / (kPi * kPi);
}

// analytic coefficients of rho0 = (1/4pi^2)(1 - cos 2x)(1 + cos 2y) in the
// orthonormal basis; every other mode vanishes
double rho0_coeff(int k1, int k2) {
  if (k1 == 0 && k2 == 0) return 1.0 / (2.0 * kPi);
  if (k1 == 2 && k2 == 0) return -1.0 / (2.0 * std::sqrt(2.0) * kPi);
  if (k1 == 0 && k2 == 2) return 1.0 / (2.0 * std::sqrt(2.0) * kPi);
  if (k1 == 2 && k2 == 2) return -1.0 / (4.0 * kPi);
  return 0.0;
}

}  // namespace

TEST_CASE("basis_eval anchor values") {
  TorusDomain domain(2);
  const double x[2] = {0.0, 1.3};
  CHECK(basis_eval(domain, std::vector<int>{0, 0}, x) ==
        doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
  CHECK(basis_eval(domain, std::vector<int>{1, 0}, x) ==
        doctest::Approx(1.0 / (std::sqrt(2.0) * kPi)).epsilon(1e-14));
  CHECK(basis_eval(domain, std::vector<int>{-1, 0}, x) == doctest::Approx(0.0));
}

TEST_CASE("axis tables match direct evaluation up to recurrence drift") {
  TorusDomain domain(2);
  const int trunc = 32;
  std::vector<double> tab(2 * trunc + 1), dtab(2 * trunc + 1);
  for (double x : {0.13, 2.71, 5.9, 6.28}) {
    basis_axis_tables(domain, trunc, x, tab.data(), dtab.data());
    for (int k = -trunc; k <= trunc; ++k) {
      double direct, ddirect;
      if (k == 0) {
        direct = 1.0 / std::sqrt(2.0 * kPi);
        ddirect = 0.0;
      } else if (k > 0) {
        direct = std::cos(k * x) / std::sqrt(kPi);
        ddirect = -k * std::sin(k * x) / std::sqrt(kPi);
      } else {
        direct = std::sin(-k * x) / std::sqrt(kPi);
        ddirect = -k * std::cos(-k * x) / std::sqrt(kPi);
      }
      CHECK(tab[trunc + k] == doctest::Approx(direct).epsilon(1e-12));
      CHECK(dtab[trunc + k] == doctest::Approx(ddirect).epsilon(1e-11));
    }
  }
}

TEST_CASE("orthonormality: projecting a basis function returns its indicator") {
  TorusDomain domain(2);
  const int trunc = 3;
  for (auto [k1, k2] : {std::pair{1, -1}, {0, 0}, {3, 2}, {-2, -3}}) {
    const std::vector<int> mode{k1, k2};
    auto field = project_function(
        domain, [&](const double* x) { return basis_eval(domain, mode, x); }, trunc,
        4 * trunc + 2);
    for (std::size_t m = 0; m < field.mode_count(); ++m) {
      const auto idx = field.unflatten(m);
      const double expect = (idx.k[0] == k1 && idx.k[1] == k2) ? 1.0 : 0.0;
      CHECK(field.coeffs()[m] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("project_function anchors") {
  TorusDomain domain(2);
  SUBCASE("constant density keeps only the constant mode") {
    auto field = project_function(
        domain, [](const double*) { return 1.0 / (4.0 * kPi * kPi); }, 2, 32);
    for (std::size_t m = 0; m < field.mode_count(); ++m) {
      const auto idx = field.unflatten(m);
      const double expect = (idx.k[0] == 0 && idx.k[1] == 0) ? 1.0 / (2.0 * kPi) : 0.0;
      CHECK(field.coeffs()[m] == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(field.mass() == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("sin^2 cos^2 target matches the analytic coefficients") {
    auto field = project_function(domain, rho0, 2, 64);
    for (std::size_t m = 0; m < field.mode_count(); ++m) {
      const auto idx = field.unflatten(m);
      CHECK(field.coeffs()[m] ==
            doctest::Approx(rho0_coeff(idx.k[0], idx.k[1])).epsilon(1e-12));
    }
  }
  SUBCASE("low quadrature emits a warning") {
    std::vector<std::string> warnings;
    project_function(domain, rho0, 4, 8, &warnings);
    CHECK(warnings.size() == 1);
  }
}

TEST_CASE("evaluate anchors") {
  TorusDomain domain(2);
  SUBCASE("pure constant mode") {
    SpectralField field(domain, 1);
    field.coeff(std::vector<int>{0, 0}) = 1.0 / (2.0 * kPi);
    const double x[2] = {1.0, 4.0};
    CHECK(field.evaluate(x) == doctest::Approx(1.0 / (4.0 * kPi * kPi)).epsilon(1e-14));
  }
  SUBCASE("single cosine mode") {
    SpectralField field(domain, 1);
    field.coeff(std::vector<int>{1, 0}) = 1.0;
    for (double t : {0.0, 0.7, 3.1}) {
      const double x[2] = {t, 2.0};
      CHECK(field.evaluate(x) ==
            doctest::Approx(std::cos(t) / (std::sqrt(2.0) * kPi)).epsilon(1e-13));
    }
  }
  SUBCASE("band-limited reconstruction is pointwise exact") {
    auto field = project_function(domain, rho0, 4, 64);
    const double x[2] = {kPi / 2.0, 0.0};
    CHECK(field.evaluate(x) == doctest::Approx(1.0 / (kPi * kPi)).epsilon(1e-12));
  }
}

TEST_CASE("gradient anchors and finite-difference consistency") {
  TorusDomain domain(2);
  SUBCASE("constant field has zero gradient") {
    SpectralField field(domain, 2);
    field.coeff(std::vector<int>{0, 0}) = 0.37;
    const double x[2] = {1.0, 2.0};
    double g[2];
    field.gradient(x, g);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
  }
  SUBCASE("single cosine mode") {
    SpectralField field(domain, 1);
    field.coeff(std::vector<int>{1, 0}) = 1.0;
    const double x[2] = {0.9, 5.0};
    double g[2];
    field.gradient(x, g);
    CHECK(g[0] == doctest::Approx(-std::sin(0.9) / (std::sqrt(2.0) * kPi)).epsilon(1e-13));
    CHECK(g[1] == doctest::Approx(0.0));
  }
  SUBCASE("analytic gradient vs central differences") {
    auto field = project_function(domain, rho0, 4, 64);
    const double h = 1e-5;
    RngStream stream(5, StreamTag::kTransport, 0, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
      double x[2] = {stream.uniform(0.0, 2.0 * kPi), stream.uniform(0.0, 2.0 * kPi)};
      double g[2];
      field.gradient(x, g);
      for (int j = 0; j < 2; ++j) {
        double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
        xp[j] += h;
        xm[j] -= h;
        const double fd = (field.evaluate(xp) - field.evaluate(xm)) / (2.0 * h);
        const double scale = std::max(1e-3, std::abs(fd));
        CHECK(std::abs(g[j] - fd) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("project_particles anchors") {
  TorusDomain domain(2);
  SUBCASE("single particle at the origin") {
    ParticleSet set(domain, 1);
    const double x[2] = {0.0, 0.0};
    set.append(x, 0);
    auto field = project_particles(set, 1, 1);
    CHECK(field.coeff(std::vector<int>{0, 0}) == doctest::Approx(1.0 / (2.0 * kPi)));
    CHECK(field.coeff(std::vector<int>{1, 0}) ==
          doctest::Approx(1.0 / (std::sqrt(2.0) * kPi)));
    CHECK(field.coeff(std::vector<int>{0, 1}) ==
          doctest::Approx(1.0 / (std::sqrt(2.0) * kPi)));
    CHECK(field.coeff(std::vector<int>{-1, 0}) == doctest::Approx(0.0));
  }
  SUBCASE("empty set projects to the zero field") {
    ParticleSet set(domain, 10);
    auto field = project_particles(set, 10, 3);
    for (double c : field.coeffs()) CHECK(c == 0.0);
    CHECK_THROWS_AS(project_particles(set, 0, 3), std::invalid_argument);
  }
  SUBCASE("uniform particles: nonconstant modes vanish within 5 sigma") {
    const std::int64_t n = 100000;
    auto set = sample_rejection(
        domain, [](const double*) { return 1.0; }, 1.1, n, 77);
    auto field = project_particles(set, n, 2);
    // Var[psi_m(X)] = 1/(4pi^2) for uniform X by orthonormality
    const double sigma = std::sqrt(1.0 / (4.0 * kPi * kPi) / n);
    for (std::size_t m = 0; m < field.mode_count(); ++m) {
      const auto idx = field.unflatten(m);
      if (idx.k[0] == 0 && idx.k[1] == 0) {
        CHECK(field.coeffs()[m] == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
      } else {
        CHECK(std::abs(field.coeffs()[m]) < 5.0 * sigma);
      }
    }
  }
  SUBCASE("unbiasedness on sin^2 cos^2 samples at 5 standard errors") {
    const std::int64_t n = 200000;
    const double sup = 1.0 / (kPi * kPi) * 1.0001;
    auto set = sample_rejection(domain, rho0, sup, n, 2024);
    auto field = project_particles(set, n, 2);
    // standard error of a_m from quadrature of psi^2 rho0
    for (auto [k1, k2] : {std::pair{0, 0}, {2, 0}, {0, 2}, {2, 2}, {1, 0}, {-2, 1}}) {
      const std::vector<int> mode{k1, k2};
      double second = 0.0;
      const int q = 128;
      const auto pts = domain.uniform_grid(q);
      for (std::size_t p = 0; p < pts.size() / 2; ++p) {
        const double* x = pts.data() + 2 * p;
        const double psi = basis_eval(domain, mode, x);
        second += psi * psi * rho0(x);
      }
      second *= std::pow(2.0 * kPi / q, 2);
      const double expect = rho0_coeff(k1, k2);
      // mode (0,0) has exactly zero variance (psi_0 is constant)
      const double se = std::sqrt(std::max(0.0, second - expect * expect) / n);
      CHECK(std::abs(field.coeff(mode) - expect) < 5.0 * se + 1e-12);
    }
  }
}

TEST_CASE("mass identity: mass equals |S|/N for any population size") {
  TorusDomain domain(2);
  RngStream stream(9, StreamTag::kTransport, 0, 1, 0);
  for (std::int64_t count : {0, 1, 7, 1000, 12345}) {
    ParticleSet set(domain, 1000);
    for (std::int64_t i = 0; i < count; ++i) {
      const double x[2] = {stream.uniform(0.0, 2.0 * kPi), stream.uniform(0.0, 2.0 * kPi)};
      set.append(x, i);
    }
    auto field = project_particles(set, 1000, 5);
    CHECK(field.mass() ==
          doctest::Approx(static_cast<double>(count) / 1000.0).epsilon(1e-13));
  }
}

TEST_CASE("parseval: s = 0 norm equals the quadrature L2 norm of the field") {
  TorusDomain domain(2);
  auto field = project_function(domain, rho0, 3, 64);
  double sum_sq = 0.0;
  for (double c : field.coeffs()) sum_sq += c * c;
  CHECK(field.sobolev_norm_sq(0.0) == doctest::Approx(sum_sq).epsilon(1e-14));
  const int q = 64;
  const auto pts = domain.uniform_grid(q);
  double l2 = 0.0;
  for (std::size_t p = 0; p < pts.size() / 2; ++p) {
    const double v = field.evaluate(pts.data() + 2 * p);
    l2 += v * v;
  }
  l2 *= std::pow(2.0 * kPi / q, 2);
  CHECK(l2 == doctest::Approx(sum_sq).epsilon(1e-12));
}

TEST_CASE("sobolev norm anchors") {
  TorusDomain domain(2);
  SUBCASE("zero field") {
    SpectralField field(domain, 3);
    CHECK(field.sobolev_norm_sq(3.0) == 0.0);
    CHECK(field.sobolev_norm_sq(-2.0) == 0.0);
  }
  SUBCASE("single mode (1,0), s = 3 gives 2^-3") {
    SpectralField field(domain, 1);
    field.coeff(std::vector<int>{1, 0}) = 1.0;
    CHECK(field.sobolev_norm_sq(3.0) == doctest::Approx(0.125).epsilon(1e-14));
  }
  SUBCASE("projected sin^2 cos^2 at K=2, s=3: closed-form weighted sum") {
    auto field = project_function(domain, rho0, 2, 64);
    double expect = 0.0;
    for (auto [k1, k2] : {std::pair{0, 0}, {2, 0}, {0, 2}, {2, 2}}) {
      const double a = rho0_coeff(k1, k2);
      expect += std::pow(1.0 + k1 * k1 + k2 * k2, -3.0) * a * a;
    }
    CHECK(field.sobolev_norm_sq(3.0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("re-projection of a field's own samples returns the coefficients") {
  TorusDomain domain(2);
  auto field = project_function(domain, rho0, 3, 64);
  auto again = project_function(
      domain, [&](const double* x) { return field.evaluate(x); }, 3, 4 * 3 + 2);
  for (std::size_t m = 0; m < field.mode_count(); ++m)
    CHECK(again.coeffs()[m] == doctest::Approx(field.coeffs()[m]).epsilon(1e-12));
}

TEST_CASE("coefficient snapshot file round trip") {
  TorusDomain domain(2);
  auto field = project_function(domain, rho0, 2, 64);
  const auto path = std::filesystem::temp_directory_path() / "branchpde_coef_test.coef";
  write_coef_file(path.string(), field);
  auto loaded = read_coef_file(path.string());
  REQUIRE(loaded.truncation() == field.truncation());
  REQUIRE(loaded.domain().dim() == 2);
  for (std::size_t m = 0; m < field.mode_count(); ++m)
    CHECK(loaded.coeffs()[m] == field.coeffs()[m]);  // 17 digits round-trip exactly
  std::filesystem::remove(path);
}

TEST_CASE("flat index layout is the documented row-major order") {
  TorusDomain domain(2);
  SpectralField field(domain, 2);
  const std::size_t width = 5;
  CHECK(field.flat_index(std::vector<int>{-2, -2}) == 0);
  CHECK(field.flat_index(std::vector<int>{-2, -1}) == 1);
  CHECK(field.flat_index(std::vector<int>{-1, -2}) == width);
  CHECK(field.flat_index(std::vector<int>{0, 0}) == width * 2 + 2);
  CHECK(field.flat_index(std::vector<int>{2, 2}) == width * width - 1);
  const auto idx = field.unflatten(width * 2 + 2);
  CHECK(idx.k[0] == 0);
  CHECK(idx.k[1] == 0);
  CHECK_THROWS_AS(field.flat_index(std::vector<int>{3, 0}), std::invalid_argument);
}

TEST_CASE("three-dimensional fields evaluate and project consistently") {
  TorusDomain domain(3);
  auto f = [](const double* x) {
    return 1.0 + 0.5 * std::cos(x[0]) * std::sin(x[1]) + 0.25 * std::cos(2.0 * x[2]);
  };
  auto field = project_function(domain, f, 2, 12);
  RngStream stream(3, StreamTag::kTransport, 0, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    double x[3] = {stream.uniform(0.0, 2.0 * kPi), stream.uniform(0.0, 2.0 * kPi),
                   stream.uniform(0.0, 2.0 * kPi)};
    CHECK(field.evaluate(x) == doctest::Approx(f(x)).epsilon(1e-11));
    double g[3];
    field.gradient(x, g);
    const double expect_g0 = -0.5 * std::sin(x[0]) * std::sin(x[1]);
    CHECK(g[0] == doctest::Approx(expect_g0).epsilon(1e-9));
  }
}
