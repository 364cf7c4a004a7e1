#!/usr/bin/env python3
"""Smoke test for the condensate_py extension module.

Build the module first:

    cargo build --release -p condensate-py

then run this script from anywhere inside the repository:

    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path


def locate_cdylib() -> Path:
    root = Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / "release" / "libcondensate_py.so",
        root / "target" / "debug" / "libcondensate_py.so",
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit(
        "libcondensate_py.so not found; run `cargo build --release -p condensate-py` first"
    )


def import_module():
    cdylib = locate_cdylib()
    staging = Path(tempfile.mkdtemp(prefix="condensate_py_"))
    shutil.copy2(cdylib, staging / "condensate_py.so")
    sys.path.insert(0, str(staging))
    import condensate_py

    return condensate_py


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    m = import_module()

    # Closed-form one-detection visibilities at equal net rates.
    thermal = m.CondensateSpec.thermal(100.0)
    poisson = m.CondensateSpec.poisson(100.0)
    fock = m.CondensateSpec.fock(20)
    approx(m.visibility_one_detection(thermal, thermal, 1.0), 1.0 / 3.0, 1e-12)
    approx(m.visibility_one_detection(poisson, poisson, 1.0), 0.5, 1e-12)
    approx(m.visibility_one_detection(fock, fock, 1.0), 1.0 / (2.0 * (1.0 - 1.0 / 40.0)), 1e-12)
    print("ok closed-form visibilities")

    # Moments: thermal falling-factorial moment (k+1)! * mean^(k+1).
    approx(m.CondensateSpec.thermal(2.0).falling_factorial_moment(1), 8.0, 1e-9)
    approx(m.lambda_visibility(4.0, 1.0, 1.0), 0.8, 1e-12)
    print("ok moments and contrast")

    # Curve peaks at equal rates.
    ratios = [0.25, 0.5, 1.0, 2.0, 4.0]
    curve = m.visibility_curve(thermal, thermal, ratios)
    best = max(curve, key=lambda rv: rv[1])
    assert best[0] == 1.0, best
    print("ok visibility curve")

    # A short run locks onto a phase and yields a fringy histogram.
    config = m.ExperimentConfig(poisson, poisson, detections=300, runs=8, seed=11)
    run = m.run_single(config, "pi-exact")
    assert len(run.phases) == 300
    assert len(run.per_step_visibility) == 301
    assert run.per_step_visibility[0] == 0.0
    assert run.fitted_visibility > 0.8, run.fitted_visibility
    beta, peak = m.fit_fringe(run.phases, 25)
    # The run summary caps fit-noise overshoots at 1.05.
    approx(min(beta, 1.05), run.fitted_visibility, 1e-9)
    assert 0.0 <= peak < 2.0 * math.pi
    print(f"ok single run (fitted contrast {run.fitted_visibility:.3f})")

    # Small ensemble: deterministic and ordered quartiles.
    a = m.run_ensemble(config, "pi-exact")
    b = m.run_ensemble(config, "pi-exact")
    assert a.per_step_mean == b.per_step_mean
    assert all(
        lo <= hi
        for lo, hi in zip(a.per_step_lower_quartile, a.per_step_upper_quartile)
    )
    assert a.per_step_mean[-1] > 0.95
    print(f"ok ensemble (final mean visibility {a.per_step_mean[-1]:.4f})")

    # Invalid inputs surface as ValueError.
    for bad in (
        lambda: m.CondensateSpec.poisson(-1.0),
        lambda: m.run_single(config, "no-such-engine"),
        lambda: m.CondensateSpec.thermal(2.0).falling_factorial_moment(-1),
    ):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    print("ok error paths")

    # Cross-engine validation suite.
    checks = m.validation_suite(seed=7)
    for name, deviation, tolerance, passed in checks:
        status = "PASS" if passed else "FAIL"
        print(f"   {status} {name}: {deviation:.2e} <= {tolerance:.1e}")
    assert all(passed for _, _, _, passed in checks)
    print("ok validation suite")

    print("smoke test passed")


if __name__ == "__main__":
    main()
