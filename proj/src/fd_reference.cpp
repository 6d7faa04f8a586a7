#include "branchpde/fd_reference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "branchpde/errors.hpp"
#include "branchpde/parallel.hpp"

namespace branchpde {

namespace {

struct GridShape {
  int dim;
  std::size_t n;
  std::size_t total;
  std::vector<std::size_t> stride;  // stride[j], axis 0 slowest

  explicit GridShape(const GridField& g) : dim(g.domain.dim()), n(g.n) {
    stride.assign(dim, 1);
    for (int j = dim - 2; j >= 0; --j) stride[j] = stride[j + 1] * n;
    total = stride[0] * n;
  }

  void coords(std::size_t p, std::size_t* c) const {
    for (int j = 0; j < dim; ++j) {
      c[j] = p / stride[j];
      p %= stride[j];
    }
  }

  std::size_t up(std::size_t p, std::size_t cj, int j) const {
    return cj + 1 < n ? p + stride[j] : p - (n - 1) * stride[j];
  }

  std::size_t down(std::size_t p, std::size_t cj, int j) const {
    return cj > 0 ? p - stride[j] : p + (n - 1) * stride[j];
  }
};

constexpr int kMaxGridDim = 8;

}  // namespace

double GridField::mass() const {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc * cell_volume();
}

bool GridField::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

GridField sample_grid_field(const TorusDomain& domain, std::size_t n, const DensityFn& f) {
  GridField g(domain, n);
  const auto pts = domain.uniform_grid(n);
  const int d = domain.dim();
  par::for_blocks(g.values.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) g.values[p] = f(pts.data() + p * d);
  });
  return g;
}

void fd_laplacian(const GridField& g, std::vector<double>& out) {
  const GridShape shape(g);
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  out.resize(shape.total);
  par::for_blocks(shape.total, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::size_t c[kMaxGridDim];
    for (std::size_t p = begin; p < end; ++p) {
      shape.coords(p, c);
      double acc = 0.0;
      for (int j = 0; j < shape.dim; ++j)
        acc += g.values[shape.up(p, c[j], j)] + g.values[shape.down(p, c[j], j)] -
               2.0 * g.values[p];
      out[p] = acc * inv_h2;
    }
  });
}

double fd_stability_bound_ac(const GridField& u, double diffusion) {
  const double h = u.spacing();
  return h * h / (2.0 * u.domain.dim() * diffusion);
}

GridField fd_step_ac(const GridField& u, double diffusion, double tau, bool with_reaction) {
  if (!(diffusion > 0.0)) throw std::invalid_argument("fd_step_ac: diffusion must be > 0");
  const double bound = fd_stability_bound_ac(u, diffusion);
  if (!(tau > 0.0) || tau > bound * (1.0 + 1e-12))
    throw std::invalid_argument("fd_step_ac: tau violates stability; admissible tau <= " +
                                std::to_string(bound));
  std::vector<double> lap;
  fd_laplacian(u, lap);
  GridField out(u.domain, u.n);
  par::for_blocks(out.values.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const double val = u.values[p];
      double rhs = diffusion * lap[p];
      if (with_reaction) rhs += val - val * val * val;
      out.values[p] = val + tau * rhs;
    }
  });
  return out;
}

double fd_stability_bound_ks(const GridField& u, const GridField& v, const KsModel& model) {
  const GridShape shape(u);
  const double h = u.spacing();
  const double diff_bound =
      h * h / (2.0 * shape.dim * std::max(model.diffusion_u, model.diffusion_v));
  if (!model.chi) return diff_bound;

  double vel_max = 0.0;
  std::size_t c[kMaxGridDim];
  double u_scale = 0.0;
  for (double val : u.values) u_scale = std::max(u_scale, std::abs(val));
  const double u_floor = std::max(1e-300, 1e-12 * u_scale);
  for (std::size_t p = 0; p < shape.total; ++p) {
    shape.coords(p, c);
    for (int j = 0; j < shape.dim; ++j) {
      const std::size_t q = shape.up(p, c[j], j);
      const double chi_face = 0.5 * (model.chi(u.values[p]) + model.chi(u.values[q]));
      const double dv = (v.values[q] - v.values[p]) / h;
      // wave speed of the flux chi(u) dv: |chi/u| stays bounded even across
      // the negative undershoots coarse meshes develop near blow-up
      const double u_face = std::max(std::abs(0.5 * (u.values[p] + u.values[q])), u_floor);
      vel_max = std::max(vel_max, std::abs(chi_face * dv) / u_face);
    }
  }
  if (vel_max <= 0.0) return diff_bound;
  return std::min(diff_bound, h / vel_max);
}

std::pair<GridField, GridField> fd_step_ks(const GridField& u, const GridField& v,
                                           const KsModel& model, double tau) {
  if (u.n != v.n || !(u.domain == v.domain))
    throw std::invalid_argument("fd_step_ks: u and v grids differ");
  const double bound = fd_stability_bound_ks(u, v, model);
  if (!(tau > 0.0) || tau > bound * (1.0 + 1e-12))
    throw std::invalid_argument("fd_step_ks: tau violates stability; admissible tau <= " +
                                std::to_string(bound));

  const GridShape shape(u);
  const double h = u.spacing();
  std::vector<double> lap_u, lap_v;
  fd_laplacian(u, lap_u);
  fd_laplacian(v, lap_v);

  GridField out_u(u.domain, u.n);
  GridField out_v(v.domain, v.n);
  par::for_blocks(shape.total, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::size_t c[kMaxGridDim];
    for (std::size_t p = begin; p < end; ++p) {
      shape.coords(p, c);
      double chemo_div = 0.0;
      if (model.chi) {
        for (int j = 0; j < shape.dim; ++j) {
          const std::size_t qu = shape.up(p, c[j], j);
          const std::size_t qd = shape.down(p, c[j], j);
          const double flux_up =
              0.5 * (model.chi(u.values[p]) + model.chi(u.values[qu])) *
              (v.values[qu] - v.values[p]) / h;
          const double flux_down =
              0.5 * (model.chi(u.values[qd]) + model.chi(u.values[p])) *
              (v.values[p] - v.values[qd]) / h;
          chemo_div += (flux_up - flux_down) / h;
        }
      }
      const double uu = u.values[p];
      const double vv = v.values[p];
      double rhs_u = model.diffusion_u * lap_u[p] - chemo_div;
      if (model.f_u) rhs_u += model.f_u(uu, vv);
      double rhs_v = model.diffusion_v * lap_v[p];
      if (model.f_v) rhs_v += model.f_v(uu, vv);
      out_u.values[p] = uu + tau * rhs_u;
      out_v.values[p] = vv + tau * rhs_v;
    }
  });
  return {std::move(out_u), std::move(out_v)};
}

GridField subsample(const GridField& fine, std::size_t stride) {
  if (stride == 0 || fine.n % stride != 0)
    throw std::invalid_argument("subsample: stride must divide n");
  const GridShape shape(fine);
  GridField coarse(fine.domain, fine.n / stride);
  const GridShape cs(coarse);
  std::size_t c[kMaxGridDim];
  for (std::size_t p = 0; p < cs.total; ++p) {
    cs.coords(p, c);
    std::size_t q = 0;
    for (int j = 0; j < cs.dim; ++j) q += c[j] * stride * shape.stride[j];
    coarse.values[p] = fine.values[q];
  }
  return coarse;
}

SpectralField project_grid(const GridField& grid, int truncation) {
  const GridShape shape(grid);
  const double h = grid.spacing();
  const double origin = grid.domain.origin();
  const auto& values = grid.values;
  auto lookup = [&shape, h, origin, &values](const double* x) {
    std::size_t p = 0;
    for (int j = 0; j < shape.dim; ++j) {
      auto i = static_cast<std::size_t>(std::llround((x[j] - origin) / h)) % shape.n;
      p += i * shape.stride[j];
    }
    return values[p];
  };
  return project_function(grid.domain, lookup, truncation, grid.n, nullptr);
}

namespace {

std::vector<double> event_times(const FdConfig& cfg) {
  std::set<double> events;
  if (cfg.snapshot_times.empty()) {
    if (cfg.t_end <= 0.0)
      events.insert(0.0);
    else
      for (int i = 0; i < 5; ++i) events.insert(cfg.t_end * i / 4.0);
  } else {
    for (double s : cfg.snapshot_times) {
      if (s < 0.0 || s > cfg.t_end + 1e-12 * std::max(1.0, cfg.t_end))
        throw ConfigError("fd snapshot time outside [0, t-end]");
      events.insert(std::min(s, cfg.t_end));
    }
  }
  return {events.begin(), events.end()};
}

template <typename StepFn, typename BoundFn, typename MassFn, typename SnapFn>
FdRunResult fd_drive(const FdConfig& cfg, StepFn&& do_step, BoundFn&& bound, MassFn&& masses,
                     SnapFn&& snapshot) {
  FdRunResult result;
  const auto events = event_times(cfg);
  double t = 0.0;
  std::int64_t step = 0;
  std::size_t next_event = 0;

  auto emit_if_event = [&] {
    if (next_event < events.size() &&
        std::abs(t - events[next_event]) <= 1e-12 * std::max(1.0, cfg.t_end)) {
      snapshot(step, t);
      ++next_event;
    }
  };

  auto [m_u, m_v] = masses();
  result.series.push_back({t, 0, 0, m_u, m_v, 0, 0});
  emit_if_event();

  try {
    while (t < cfg.t_end - 1e-15 * std::max(1.0, cfg.t_end)) {
      if (step >= cfg.max_steps) throw BlowupError("fd run exceeded max step budget");
      double tau = cfg.safety * bound();
      if (cfg.tau > 0.0) tau = std::min(tau, cfg.tau);
      if (next_event < events.size()) tau = std::min(tau, events[next_event] - t);
      tau = std::min(tau, cfg.t_end - t);
      if (!(tau > 0.0)) throw BlowupError("fd step size collapsed to zero");
      do_step(tau);
      t += tau;
      ++step;
      result.step_sizes.push_back(tau);
      std::tie(m_u, m_v) = masses();
      if (!std::isfinite(m_u) || !std::isfinite(m_v))
        throw BlowupError("fd state became non-finite at t = " + std::to_string(t));
      result.series.push_back({t, 0, 0, m_u, m_v, 0, 0});
      emit_if_event();
    }
  } catch (const BlowupError& e) {
    result.status = {false, step, e.what()};
  }
  return result;
}

}  // namespace

FdRunResult run_fd_scalar(const ScalarModel& model, const FdConfig& cfg) {
  const TorusDomain domain = model.domain();
  GridField u = sample_grid_field(domain, cfg.grid, model.initial);
  std::vector<FdSnapshot> snaps;
  auto result = fd_drive(
      cfg,
      [&](double tau) {
        std::vector<double> lap;
        fd_laplacian(u, lap);
        GridField next(u.domain, u.n);
        par::for_blocks(u.values.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
          for (std::size_t p = begin; p < end; ++p) {
            const double val = u.values[p];
            double rhs = model.diffusion * lap[p];
            if (model.reaction) rhs += model.reaction(val) * val;
            next.values[p] = val + tau * rhs;
          }
        });
        u = std::move(next);
        if (!u.all_finite()) throw BlowupError("fd scalar state non-finite");
      },
      [&] { return fd_stability_bound_ac(u, model.diffusion); },
      [&] { return std::pair<double, double>(u.mass(), 0.0); },
      [&](std::int64_t step, double t) { snaps.push_back({step, t, u, std::nullopt}); });
  result.snapshots = std::move(snaps);
  result.final_u = std::move(u);
  return result;
}

FdRunResult run_fd_ks(const KsModel& model, const FdConfig& cfg) {
  const TorusDomain domain = model.domain();
  GridField u = sample_grid_field(domain, cfg.grid, model.initial_u);
  GridField v = sample_grid_field(domain, cfg.grid, model.initial_v);
  std::vector<FdSnapshot> snaps;
  auto result = fd_drive(
      cfg,
      [&](double tau) {
        auto [nu, nv] = fd_step_ks(u, v, model, tau);
        u = std::move(nu);
        v = std::move(nv);
        if (!u.all_finite() || !v.all_finite()) throw BlowupError("fd ks state non-finite");
      },
      [&] { return fd_stability_bound_ks(u, v, model); },
      [&] { return std::pair<double, double>(u.mass(), v.mass()); },
      [&](std::int64_t step, double t) { snaps.push_back({step, t, u, v}); });
  result.snapshots = std::move(snaps);
  result.final_u = std::move(u);
  result.final_v = std::move(v);
  return result;
}

}  // namespace branchpde
