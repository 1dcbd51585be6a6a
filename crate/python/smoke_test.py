#!/usr/bin/env python3
"""Smoke test for the machstem_py extension module.

Builds the cdylib with cargo, copies it next to this script under the
importable name, and exercises each exposed entry point.

Usage: python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "machstem-py"], cwd=ROOT, check=True
    )
    src = ROOT / "target" / "debug" / "libmachstem_py.so"
    dst = Path(__file__).resolve().parent / "machstem_py.so"
    shutil.copy2(src, dst)
    return dst


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol * (1.0 + abs(b)), f"{a} != {b} (tol {tol})"


def main() -> int:
    build_extension()
    sys.path.insert(0, str(Path(__file__).resolve().parent))
    import machstem_py as ms

    # Phase-set analysis of the default Euler configuration.
    an = ms.analyze_euler()
    approx(an.mach, 0.6 / 1.1)
    approx(an.zeta, (0.6 / 1.1) ** 2)
    assert len(an.omegas) == 3 and an.omegas == sorted(an.omegas)
    assert an.incoming == [0, 1] and an.outgoing == [2]
    approx(an.delta3 - an.delta1, 1.0, 1e-12)
    assert an.resonant_alphas == []
    assert an.small_divisor_c_min > 0
    print(f"analyze_euler: mach {an.mach:.4f}, zeta {an.zeta:.4f}, "
          f"delta1 {an.delta1:.6f}, c_min {an.small_divisor_c_min:.3e}")

    # The resonant configuration (squared Mach number exactly 1/3) reports
    # its integer hits.
    res = ms.analyze_euler(ubar=1.1 / math.sqrt(3.0))
    assert [1, -2, 0] in res.resonant_alphas
    assert math.isnan(res.small_divisor_c_min)
    print(f"resonant zeta=1/3: {len(res.resonant_alphas)} hits, "
          f"includes [1, -2, 0]")

    # Periodic fields and the nonlocal operator: F_per[u, u'] with
    # u = sin(theta) has a closed form through the k = (±1, ±1) kernel only.
    period = 2.0 * math.pi
    kmax = 8
    n = 2 * kmax + 1
    grid = [period * i / n for i in range(n)]
    u = ms.PeriodicField.from_samples(period, kmax, [math.sin(t) for t in grid])
    approx(u.eval(0.3), math.sin(0.3), 1e-12)
    du = u.derivative()
    approx(du.eval(0.3), math.cos(0.3), 1e-12)
    f = ms.f_periodic(du, du, an.delta1, an.delta3)
    assert f.period == period and f.sup_norm() > 0
    print(f"f_periodic: sup {f.sup_norm():.6f}")

    # Pulse fields and the limiting kernel.
    h = 0.02
    xs = [i * h - 10.0 for i in range(int(20.0 / h) + 1)]
    g = ms.PulseField(10.0, h, [math.exp(-x * x) for x in xs])
    approx(g.eval(0.5), math.exp(-0.25), 1e-9)
    approx(g.moment(0), math.sqrt(math.pi), 1e-9)
    fs = ms.f_symmetric(g, g, 0.5, an.delta1, an.delta3)
    assert fs.sup_norm() > 0
    print(f"f_symmetric: sup {fs.sup_norm():.6f}")

    # Forced periodic solve from rest: small forcing, bounded response,
    # zero forcing stays identically zero.
    forcing = ms.PeriodicField.from_samples(
        period, kmax, [0.05 * math.sin(t) for t in grid]
    )
    times, sups, final = ms.solve_periodic_forced(
        forcing, c=an.burgers_c,
        mu=period / (2.0 * math.pi) * an.mu_pul,
        delta1=an.delta1, delta3=an.delta3, dt=2e-3, t_final=0.5,
    )
    assert len(times) == len(sups) and times[-1] == 0.5
    assert sups[0] == 0.0 and 0 < sups[-1] < 1.0
    assert abs(final.eval(1.0)) < 1.0
    zero = ms.PeriodicField.from_samples(period, kmax, [0.0] * n)
    _, zsups, _ = ms.solve_periodic_forced(
        zero, c=an.burgers_c, mu=0.0, delta1=an.delta1, delta3=an.delta3,
        dt=1e-2, t_final=0.1,
    )
    assert all(s == 0.0 for s in zsups)
    print(f"solve_periodic_forced: final sup {sups[-1]:.6f}")

    # The operators demand exactly zero-mean operands; a nonzero mean
    # surfaces as ValueError and zero_mean_part repairs it.
    try:
        ms.f_periodic(
            ms.PeriodicField.from_samples(period, kmax, [1.0 + math.sin(t) for t in grid]),
            du, an.delta1, an.delta3,
        )
    except ValueError as e:
        print(f"expected error: {e}")
    else:
        raise AssertionError("nonzero-mean operand should raise ValueError")
    repaired = ms.PeriodicField.from_samples(
        period, kmax, [1.0 + math.sin(t) for t in grid]
    ).zero_mean_part()
    approx(ms.f_periodic(repaired, du, an.delta1, an.delta3).sup_norm(),
           ms.f_periodic(u.zero_mean_part(), du, an.delta1, an.delta3).sup_norm(), 1e-12)

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
