#include "branchpde/models.hpp"

#include <cmath>

#include "branchpde/errors.hpp"

namespace branchpde {

DensityFn periodic_gaussian(const TorusDomain& domain, std::vector<double> center, double amp,
                            double beta) {
  const int d = domain.dim();
  if (static_cast<int>(center.size()) != d)
    throw std::invalid_argument("periodic_gaussian: center size != dim");
  const double L = domain.length();
  // enumerate image offsets {-L, 0, L}^d once
  std::vector<std::vector<double>> offsets;
  std::vector<int> idx(d, 0);
  const std::size_t images = [&] {
    std::size_t t = 1;
    for (int j = 0; j < d; ++j) t *= 3;
    return t;
  }();
  for (std::size_t m = 0; m < images; ++m) {
    std::vector<double> off(d);
    for (int j = 0; j < d; ++j) off[j] = (idx[j] - 1) * L;
    offsets.push_back(std::move(off));
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[j] < 3) break;
      idx[j] = 0;
    }
  }
  return [d, amp, beta, center = std::move(center), offsets = std::move(offsets)](const double* x) {
    double total = 0.0;
    for (const auto& off : offsets) {
      double r2 = 0.0;
      for (int j = 0; j < d; ++j) {
        const double dx = x[j] - center[j] + off[j];
        r2 += dx * dx;
      }
      if (beta * r2 < 745.0) total += amp * std::exp(-beta * r2);
    }
    return total;
  };
}

DensityFn periodic_gaussian_sum(const TorusDomain& domain,
                                std::vector<std::vector<double>> centers, double amp,
                                double beta) {
  std::vector<DensityFn> bumps;
  bumps.reserve(centers.size());
  for (auto& c : centers) bumps.push_back(periodic_gaussian(domain, std::move(c), amp, beta));
  return [bumps = std::move(bumps)](const double* x) {
    double total = 0.0;
    for (const auto& b : bumps) total += b(x);
    return total;
  };
}

namespace {

const double kPi = std::numbers::pi_v<double>;

DensityFn sin2cos2() {
  return [](const double* x) {
    const double s = std::sin(x[0]);
    const double c = std::cos(x[1]);
    return s * s * c * c;
  };
}

}  // namespace

ScalarModel make_allen_cahn() {
  ScalarModel m;
  m.name = "allen-cahn";
  m.diffusion = 0.01;
  m.reaction = [](double u) { return 1.0 - u * u; };
  m.initial = sin2cos2();
  m.z_mass = kPi * kPi;
  return m;
}

KsModel make_ks_linear() {
  KsModel m;
  m.name = "ks-linear";
  m.chi = [](double u) { return u; };
  m.f_v = [](double u, double v) { return u - v; };
  m.initial_u = sin2cos2();
  m.initial_v = [](const double* x) { return std::cos(x[0]) + std::cos(x[1]) + 2.0; };
  m.z_u = kPi * kPi;
  m.z_v = 8.0 * kPi * kPi;
  return m;
}

KsModel make_ks_blowup() {
  KsModel m;
  m.name = "ks-blowup";
  const TorusDomain domain(2);
  m.chi = [](double u) { return u; };
  m.f_v = [](double u, double v) { return u - v; };
  m.initial_u = periodic_gaussian(domain, {0.0, 0.0}, 840.0, 84.0);
  m.initial_v = periodic_gaussian(domain, {0.0, 0.0}, 420.0, 42.0);
  m.z_u = 840.0 * kPi / 84.0;  // = 10 pi: periodization preserves the integral
  m.z_v = 420.0 * kPi / 42.0;
  m.initial_sup_u = 840.0;
  m.initial_sup_v = 420.0;
  return m;
}

KsModel make_ks_logistic() {
  KsModel m;
  m.name = "ks-logistic";
  const TorusDomain domain(2);
  m.chi = [](double u) { return 4.0 * u / (1.0 + u * u); };
  m.f_u = [](double u, double) { return u * (1.0 - u); };
  m.f_v = [](double u, double v) { return u - v; };
  m.initial_u = periodic_gaussian_sum(
      domain, {{0.5 * kPi, 0.5 * kPi}, {kPi, kPi}, {1.5 * kPi, 1.5 * kPi}}, 1.0, 1.0);
  m.initial_v = periodic_gaussian_sum(domain,
                                      {{0.4 * kPi, 0.4 * kPi},
                                       {0.8 * kPi, 0.8 * kPi},
                                       {1.2 * kPi, 1.2 * kPi},
                                       {1.6 * kPi, 1.6 * kPi}},
                                      1.0, 1.0);
  m.z_u = 3.0 * kPi;
  m.z_v = 4.0 * kPi;
  m.initial_sup_u = 1.1;  // peaks near 1 plus small bump overlap
  m.initial_sup_v = 1.2;
  return m;
}

bool preset_is_two_field(const std::string& name) {
  return name == "ks-linear" || name == "ks-blowup" || name == "ks-logistic";
}

std::vector<std::string> preset_names() {
  return {"allen-cahn", "ks-linear", "ks-blowup", "ks-logistic"};
}

PresetDefaults preset_defaults(const std::string& name) {
  if (name == "allen-cahn") return {2e-3, 0.8, 10, 100000, 128};
  if (name == "ks-linear") return {1e-3, 0.5, 10, 40000, 100};
  if (name == "ks-blowup") return {1e-5, 1.5e-4, 10, 40000, 200};
  if (name == "ks-logistic") return {1e-3, 0.5, 10, 40000, 100};
  throw ConfigError("unknown preset: " + name);
}

ScalarModel make_scalar_preset(const std::string& name) {
  if (name == "allen-cahn") return make_allen_cahn();
  if (preset_is_two_field(name))
    throw ConfigError("preset '" + name + "' is a two-field model; use run-ks");
  throw ConfigError("unknown preset: " + name);
}

KsModel make_ks_preset(const std::string& name) {
  if (name == "ks-linear") return make_ks_linear();
  if (name == "ks-blowup") return make_ks_blowup();
  if (name == "ks-logistic") return make_ks_logistic();
  if (name == "allen-cahn")
    throw ConfigError("preset 'allen-cahn' is a scalar model; use run-scalar");
  throw ConfigError("unknown preset: " + name);
}

}  // namespace branchpde
