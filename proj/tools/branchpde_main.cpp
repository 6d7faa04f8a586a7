#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "branchpde/errors.hpp"
#include "branchpde/harness.hpp"
#include "branchpde/run_record.hpp"

namespace {

using branchpde::RunInvocation;

void add_run_options(CLI::App* cmd, RunInvocation& inv) {
  cmd->add_option("--config", inv.config_path, "JSON config file");
  cmd->add_option("--preset", inv.preset, "model preset (allen-cahn, ks-linear, ks-blowup, ks-logistic)");
  cmd->add_option("--seed", inv.seed, "RNG seed");
  cmd->add_option("--tau", inv.tau, "time step");
  cmd->add_option("--t-end", inv.t_end, "time horizon");
  cmd->add_option("--n", inv.n, "particle count (both populations for run-ks)");
  cmd->add_option("--n-u", inv.n_u, "u-population particle count");
  cmd->add_option("--n-v", inv.n_v, "v-population particle count");
  cmd->add_option("--modes", inv.modes, "spectral truncation K");
  cmd->add_option("--grid", inv.grid, "evaluation grid per axis (FD mesh for run-fd)");
  cmd->add_option("--workers", inv.workers, "worker threads (0 = hardware)");
  cmd->add_option("--out", inv.out_dir, "run directory (default runs/<timestamp>-seed<seed>)");
  cmd->add_flag_callback("--recenter-plots",
                         [&inv] { inv.recenter_plots = true; },
                         "relabel grid CSV coordinates shifted by half a period");
  cmd->add_flag_callback("--dump-particles",
                         [&inv] { inv.dump_particles = true; },
                         "write final particle positions as id,x1,..,xd CSV");
}

int dispatch(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const branchpde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const branchpde::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 3;
  } catch (const branchpde::BlowupError& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 4;
  } catch (const branchpde::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 5;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branchpde - stochastic branching particle solver for "
               "advection-diffusion-reaction PDEs on the torus"};
  app.set_version_flag("--version", branchpde::artifact_version());
  app.require_subcommand(1);

  RunInvocation run_scalar_inv{.command = "run-scalar"};
  RunInvocation run_ks_inv{.command = "run-ks"};
  RunInvocation run_fd_inv{.command = "run-fd"};
  add_run_options(app.add_subcommand("run-scalar", "scalar branching particle run"),
                  run_scalar_inv);
  add_run_options(app.add_subcommand("run-ks", "two-field Keller-Segel particle run"),
                  run_ks_inv);
  add_run_options(app.add_subcommand("run-fd", "finite-difference reference run"), run_fd_inv);

  std::string conv_config, conv_out;
  auto* conv = app.add_subcommand("convergence", "particle-count convergence study");
  conv->add_option("--config", conv_config, "JSON study config")->required();
  conv->add_option("--out", conv_out, "output directory (default runs/convergence)");

  std::string cmp_a, cmp_b, cmp_out;
  std::optional<double> cmp_hs;
  auto* cmp = app.add_subcommand("compare", "snapshot metrics between two run directories");
  cmp->add_option("runA", cmp_a, "first run directory")->required();
  cmp->add_option("runB", cmp_b, "second (reference) run directory")->required();
  cmp->add_option("--hminus-s", cmp_hs, "also report the H^-s coefficient distance at this s");
  cmp->add_option("--out", cmp_out, "metrics CSV path (default ./metrics.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  for (RunInvocation* inv : {&run_scalar_inv, &run_ks_inv, &run_fd_inv}) {
    if (app.get_subcommand(inv->command)->parsed()) {
      return dispatch([&] {
        const auto dir = branchpde::execute_run(*inv);
        std::cout << dir.string() << '\n';
      });
    }
  }
  if (conv->parsed()) {
    return dispatch([&] {
      const auto report = branchpde::execute_convergence(conv_config, conv_out);
      std::cout << report.csv_path.string() << "\nslope " << report.fit.slope << '\n';
    });
  }
  if (cmp->parsed()) {
    return dispatch([&] {
      const auto rows = branchpde::execute_compare(cmp_a, cmp_b, cmp_hs, cmp_out);
      for (const auto& row : rows)
        std::cout << row.metric << " t=" << row.t << " value=" << row.value << '\n';
    });
  }
  return 2;
}
