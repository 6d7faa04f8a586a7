"""Python-facing smoke tests: bindings, artifact layout, CLI determinism."""

import math
import os
import shutil
import subprocess
import sys
import tempfile

import branchpde as bp

PI = math.pi
FAILURES = []


def check(name, ok, detail=""):
    status = "ok" if ok else "FAIL"
    print(f"[{status}] {name}" + (f"  ({detail})" if detail and not ok else ""))
    if not ok:
        FAILURES.append(name)


def slurp(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_geometry():
    domain = bp.TorusDomain(2)
    w = domain.wrap([2 * PI + 0.5, -0.5])
    check("wrap into [0, 2pi)", abs(w[0] - 0.5) < 1e-13 and abs(w[1] - (2 * PI - 0.5)) < 1e-13)
    grid = domain.uniform_grid(4)
    check("uniform grid size", len(grid) == 2 * 16)


def test_fields_and_sampling():
    domain = bp.TorusDomain(2)
    z = bp.compute_z(domain, lambda x: math.sin(x[0]) ** 2 * math.cos(x[1]) ** 2)
    check("compute_z sin^2 cos^2 = pi^2", abs(z - PI**2) < 1e-10, f"z={z}")

    rho0 = lambda x: math.sin(x[0]) ** 2 * math.cos(x[1]) ** 2 / PI**2
    particles = bp.sample_initial(domain, rho0, 4000, seed=11)
    field = bp.project_particles(particles, 4000, 6)
    check("projection mass identity", abs(field.mass() - 1.0) < 1e-12)

    flat = bp.project_function(domain, lambda x: 1.0 / (4 * PI**2), 3, 32)
    check("constant field evaluates flat", abs(flat.evaluate([1.0, 2.0]) - 1 / (4 * PI**2)) < 1e-12)
    check("parseval on the constant field",
          abs(flat.sobolev_norm_sq(0.0) - flat.coeff([0, 0]) ** 2) < 1e-16)
    grad = flat.gradient([1.0, 2.0])  # quadrature dust only
    check("flat field gradient vanishes", abs(grad[0]) < 1e-14 and abs(grad[1]) < 1e-14)


def test_ks_run():
    out = bp.run_ks("ks-linear", n=1500, tau=1e-3, t_end=5e-3, modes=5, seed=3, grid=16)
    check("ks run completed", out["completed"])
    counts = out["series"]["count_u"]
    check("conservative u-count", all(c == counts[0] for c in counts))
    mass_v0 = out["series"]["mass_v"][0]
    check("initial v-mass is 8 pi^2", abs(mass_v0 - 8 * PI**2) < 1e-10, f"{mass_v0}")
    check("exact_mass_case2 anchor", abs(bp.exact_mass_case2(0.0) - 8 * PI**2) < 1e-10)
    snap = out["snapshots"][-1]
    check("snapshot fields carry mass identity",
          abs(snap["u"].mass() - out["series"]["mass_u"][snap["step"]]) < 1e-10)


def test_artifacts_and_cli():
    base = tempfile.mkdtemp(prefix="branchpde_smoke_")
    try:
        d1 = bp.run_to_directory("run-ks", "ks-linear", os.path.join(base, "a"),
                                 n=1000, tau=1e-3, t_end=3e-3, modes=4, seed=5, grid=12)
        d2 = bp.run_to_directory("run-ks", "ks-linear", os.path.join(base, "b"),
                                 n=1000, tau=1e-3, t_end=3e-3, modes=4, seed=5, grid=12)
        s1, s2 = slurp(os.path.join(d1, "series.csv")), slurp(os.path.join(d2, "series.csv"))
        check("library reruns byte-identical", s1 == s2)
        field = bp.read_coef_file(os.path.join(d1, "snap_0_u.coef"))
        check("coef snapshot readable", field.truncation == 4)

        cli = os.environ.get("BRANCHPDE_CLI")
        if cli:
            for sub in ("c1", "c2"):
                result = subprocess.run(
                    [cli, "run-scalar", "--preset", "allen-cahn", "--t-end", "0",
                     "--n", "300", "--modes", "4", "--grid", "12", "--seed", "9",
                     "--out", os.path.join(base, sub)],
                    capture_output=True, text=True)
                check(f"cli run-scalar exit 0 ({sub})", result.returncode == 0,
                      result.stderr.strip())
            check("cli reruns byte-identical",
                  slurp(os.path.join(base, "c1", "series.csv"))
                  == slurp(os.path.join(base, "c2", "series.csv")))
            bad = subprocess.run([cli, "run-scalar", "--preset", "no-such"],
                                 capture_output=True, text=True)
            check("cli unknown preset exits 2", bad.returncode == 2, str(bad.returncode))
        else:
            print("[skip] BRANCHPDE_CLI not set")
    finally:
        shutil.rmtree(base, ignore_errors=True)


def test_metrics():
    check("rel_l2 doubled field", abs(bp.rel_l2([2.0, 4.0], [1.0, 2.0]) - 1.0) < 1e-14)
    slope, _, resid = bp.fit_convergence_slope(
        [(1e4, 3e-2), (4e4, 1.5e-2), (1.6e5, 7.5e-3)])
    check("slope of exact 1/sqrt(N)", abs(slope + 0.5) < 1e-12 and resid < 1e-12)


def main():
    print(f"branchpde {bp.__version__}")
    test_geometry()
    test_fields_and_sampling()
    test_ks_run()
    test_artifacts_and_cli()
    test_metrics()
    if FAILURES:
        print(f"{len(FAILURES)} smoke checks failed: {FAILURES}")
        return 1
    print("all smoke checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
