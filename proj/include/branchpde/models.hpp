#pragma once

#include <functional>
#include <string>
#include <vector>

#include "branchpde/sampling.hpp"
#include "branchpde/torus.hpp"

namespace branchpde {

/// Scalar advection-diffusion-reaction model
///   du/dt = div(a(u) u) + D lap(u) + r(u) u
/// with rescaled coefficients a~(rho) = a(Z rho), r~(rho) = r(Z rho). A null
/// advection or reaction means identically zero.
struct ScalarModel {
  std::string name;
  int dim = 2;
  double length = kTwoPi;
  std::function<void(double u, double* velocity)> advection;  // a(u), writes dim components
  std::function<double(double u)> reaction;                   // r(u)
  double diffusion = 1.0;                                     // D > 0
  DensityFn initial;                                          // u0 >= 0
  double z_mass = -1.0;  // analytic total initial mass; <= 0 -> quadrature
  // finite sup bound of u0, when known: switches the initial sampler to exact
  // rejection (needle-width targets defeat a fixed-scale random walk)
  double initial_sup = -1.0;

  TorusDomain domain() const { return TorusDomain(dim, length); }
};

/// Two-field Keller-Segel model
///   du/dt - div(grad u - chi(u) grad v) = f_u(u, v)
///   dv/dt - lap(v)                      = f_v(u, v)
/// Null chi / f_u / f_v mean identically zero.
struct KsModel {
  std::string name;
  int dim = 2;
  double length = kTwoPi;
  std::function<double(double u)> chi;
  std::function<double(double u, double v)> f_u;
  std::function<double(double u, double v)> f_v;
  DensityFn initial_u;
  DensityFn initial_v;
  double z_u = -1.0;
  double z_v = -1.0;
  double diffusion_u = 1.0;
  double diffusion_v = 1.0;
  double initial_sup_u = -1.0;  // see ScalarModel::initial_sup
  double initial_sup_v = -1.0;

  TorusDomain domain() const { return TorusDomain(dim, length); }
};

/// Periodized Gaussian bump amp * exp(-beta |x - c|^2) summed over the 3^d
/// nearest periodic images: smooth on the torus to machine precision for
/// beta >= 1, and its torus integral equals the free-space integral
/// amp (pi / beta)^(d/2) exactly.
DensityFn periodic_gaussian(const TorusDomain& domain, std::vector<double> center, double amp,
                            double beta);

/// Sum of periodized Gaussian bumps sharing one amplitude and width.
DensityFn periodic_gaussian_sum(const TorusDomain& domain,
                                std::vector<std::vector<double>> centers, double amp, double beta);

/// Per-preset solver defaults (desk scale); every value is echoed into the
/// run record so runs stay reproducible.
struct PresetDefaults {
  double tau = 1e-3;
  double t_end = 0.5;
  int modes = 10;
  std::int64_t n = 40000;
  std::size_t grid = 100;
};

bool preset_is_two_field(const std::string& name);
std::vector<std::string> preset_names();
PresetDefaults preset_defaults(const std::string& name);

/// Case 1: u_t = D lap u + u - u^3 with D = 0.01, u0 = sin^2 x1 cos^2 x2,
/// cast as r(u) u with r(u) = 1 - u^2; Z = pi^2.
ScalarModel make_allen_cahn();

/// Case 2: chi(u) = u, f_u = 0, f_v = u - v; u0 = sin^2 x1 cos^2 x2,
/// v0 = cos x1 + cos x2 + 2; Z_u = pi^2, Z_v = 8 pi^2.
KsModel make_ks_linear();

/// Case 3: Case 2 dynamics with u0 = 840 exp(-84 |x|^2),
/// v0 = 420 exp(-42 |x|^2) centered at the periodic corner; Z_u = Z_v = 10 pi.
KsModel make_ks_blowup();

/// Case 4: chi(u) = 4u / (1 + u^2), f_u = u (1 - u), f_v = u - v; three- and
/// four-bump Gaussian initial data; Z_u = 3 pi, Z_v = 4 pi.
KsModel make_ks_logistic();

ScalarModel make_scalar_preset(const std::string& name);
KsModel make_ks_preset(const std::string& name);

}  // namespace branchpde
