"""Smoke test for the dbar extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install target/wheels/dbar-*.whl
"""

import json
import math
import sys
import tempfile
from pathlib import Path

import dbar


def check(name, ok):
    print(f"{'ok  ' if ok else 'FAIL'} {name}")
    return ok


def main():
    results = []
    disc = dbar.SliceDomain.disc()

    # Bergman kernel of the disc, and symmetry of the Green function.
    z, w = 0.3 + 0.1j, -0.2 + 0.4j
    k = disc.bergman_kernel(z, w)
    results.append(check("disc kernel", abs(k - 1 / (math.pi * (1 - z * w.conjugate()) ** 2)) < 1e-14))
    results.append(check("green symmetry", abs(disc.green(z, w) - disc.green(w, z)) < 1e-14))

    # Exact slice calculus: dbar T f = f, Spencer identity.
    f = dbar.Density(1, [([(3, 2)], 1.0), ([(0, 1)], 0.5j)])
    t = dbar.apply("T", f)
    results.append(check("dbar T f = f", t.dzbar(0) == f))
    results.append(check("spencer identity", dbar.spencer_residual(f) == 0.0))
    p = dbar.apply("P", f)
    results.append(check("P idempotent", dbar.apply("P", p) == p))

    # Canonical solution on the bidisc, exactly and on a grid.
    u = dbar.Density.random(2, 4, seed=7)
    form = dbar.dbar(u)
    sol = dbar.canonical_solution(form)
    back = dbar.dbar(sol)
    results.append(check("product dbar exact", all(a == b for a, b in zip(back, form))))
    results.append(check("product orthogonality exact", dbar.orthogonality_residual(sol) == 0.0))
    res_dbar, res_orth = dbar.solve_numeric(form, [disc, disc], 16, 32)
    results.append(check(f"product numeric ({res_dbar:.1e}, {res_orth:.1e})", res_dbar < 1e-8 and res_orth < 1e-8))

    # Sobolev norm of a monomial: ‖z‖_{L^2} = sqrt(π/2).
    n = dbar.sobolev_norm(dbar.Density.monomial([(1, 0)]), 0, 2.0)
    results.append(check("L2 norm of z", abs(n - math.sqrt(math.pi / 2)) < 1e-14))

    # Conformal slice and error mapping.
    shape = dbar.SliceDomain.conformal([0, 1, 0.2])
    results.append(check("conformal forward", abs(shape.forward(0.5) - 0.55) < 1e-15))
    try:
        disc.green(z, z)
        results.append(check("pole rejected", False))
    except ValueError:
        results.append(check("pole rejected", True))

    # A suite end to end.
    with tempfile.TemporaryDirectory() as out:
        passed, residual, seed = dbar.run_suite("kernel-check", out)
        summary = json.loads((Path(out) / "summary.json").read_text())
        results.append(check("kernel-check suite", passed and summary["pass"] and seed == 42 and residual < 1e-4))
    results.append(check("suite list", "sharpness" in dbar.SUITES and len(dbar.SUITES) == 7))

    if not all(results):
        sys.exit(1)
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
