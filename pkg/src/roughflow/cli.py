"""Command-line scenario runner.

Usage::

    roughflow --config scenario.yaml --out results/ --command solve|verify|converge|cocycle
              [--seed N] [--level N]

Outputs (in ``--out``):

solve
    ``trajectory.csv``, ``report.json``, ``plot_trajectory.py``
verify
    ``verify.csv`` (``check,value,threshold,passed``)
converge
    ``converge.csv`` (``level,metric,y_diff,chen_defect``), ``plot_converge.py``
cocycle
    ``cocycle.csv`` (``seed,t,tau,residual,passed``); probes are also merged
    into ``report.json`` under ``"cocycle"``

Exit status is 0 on success, 1 when a check fails, 2 for an invalid
configuration and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .convolution import algebraic_defects
from .io import read_report, write_report, write_table, write_trajectory
from .rds import cocycle_residual, driver_convergence_study, non_increasing
from .rough_path import chen_defect, shift_rough_path
from .scenario import Scenario, ScenarioError, load_scenario
from .sewing import SewingError, check_shift_property, level_decay_ratio, sew, sew_with_Deps_tracking
from .solver import (
    HorizonUnderflow,
    PicardNotConverged,
    germ_y,
    remainders,
    solve_global,
)

__all__ = ["main", "run", "verify_rows", "solve_scenario"]

log = logging.getLogger("roughflow")

_PLOT_TRAJECTORY = '''"""Plot the trajectory written by `roughflow --command solve`."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trajectory.csv"
with open(path) as fh:
    rows = list(csv.reader(fh))
head, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
t = [r[0] for r in data]
for k, name in enumerate(head[1:], start=1):
    plt.plot(t, [r[k] for r in data], label=name)
plt.xlabel("t")
plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''

_PLOT_CONVERGE = '''"""Plot the level table written by `roughflow --command converge`."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "converge.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
lv = [int(r["level"]) for r in rows]
fig, ax = plt.subplots()
ax.semilogy(lv, [float(r["metric"]) for r in rows], "o-", label="rough-path distance")
ax.semilogy(lv, [float(r["y_diff"]) for r in rows], "s-", label="sup |y_n - y_max|")
ax.set_xlabel("level")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def _row(check: str, value: float, threshold: float, passed: bool | None = None) -> dict:
    ok = bool(value <= threshold) if passed is None else bool(passed)
    return {"check": check, "value": float(value), "threshold": float(threshold), "passed": ok}


def solve_scenario(sc: Scenario, seed: int | None = None, level: int | None = None,
                   final_checks: bool = True, segment_diagnostics: bool = False):
    rp = sc.rough_path(seed, level)
    sg = sc.semigroup_op()
    G = sc.coefficient_G(sg)
    F = sc.coefficient_F()
    pair, report = solve_global(sc.T, rp, sg, sc.xi_vector(), G, F, final_checks=final_checks,
                                segment_diagnostics=segment_diagnostics, **sc.solve_kwargs())
    return rp, sg, G, F, pair, report


def _chen_rows(sc: Scenario) -> list[dict]:
    worst_chen = 0.0
    worst_sym = 0.0
    rng = np.random.default_rng(12345)
    for seed in sc.seeds:
        rp = sc.rough_path(seed)
        n = rp.grid.n_nodes
        tri = np.sort(rng.integers(0, n, size=(20000, 3)), axis=1)
        worst_chen = max(worst_chen, float(chen_defect(rp, tri[:, 0], tri[:, 1], tri[:, 2]).max()))
        i, j = tri[:, 0], tri[:, 2]
        a = rp.area(i, j)
        d = rp.increment(i, j)
        sym = 0.5 * (a + np.swapaxes(a, -1, -2)) - 0.5 * d[:, :, None] * d[:, None, :]
        worst_sym = max(worst_sym, float(np.abs(sym).max()))
    return [_row("chen_defect", worst_chen, sc.tol("chen")),
            _row("geometric_symmetry", worst_sym, sc.tol("symmetry"))]


def _algebraic_rows(sc: Scenario, rp, sg) -> list[dict]:
    T = sc.T
    ss = [0.0, T / 8, T / 4, 3 * T / 8]
    taus = [T / 2, 9 * T / 16, 5 * T / 8, 11 * T / 16]
    ts = [3 * T / 4, 7 * T / 8, 15 * T / 16, T]
    rng = np.random.default_rng(7)
    W, V = sg.dim_W, sc.dim_V
    E = rng.standard_normal((W, W, V))
    K = rng.standard_normal((W, V))
    x = rng.standard_normal(W)
    worst = {"omega_S": 0.0, "a": 0.0, "b": 0.0, "c": 0.0}
    for s in ss:
        for tau in taus:
            for t in ts:
                for k, v in algebraic_defects(rp, sg, E, K, x, s, tau, t).items():
                    worst[k] = max(worst[k], v)
    return [
        _row("algebraic_omega_S", worst["omega_S"], sc.tol("omega_S")),
        _row("algebraic_a", worst["a"], sc.tol("algebraic")),
        _row("algebraic_b", worst["b"], sc.tol("algebraic")),
        _row("algebraic_c", worst["c"], sc.tol("algebraic")),
    ]


def _sewing_rows(sc: Scenario) -> list[dict]:
    level = sc.working_level
    diffs = []
    worst_hat = 0.0
    for seed in sc.seeds:
        rp, sg, G, F, pair, _ = solve_scenario(sc, seed, final_checks=False)
        s = sew(germ_y(pair, G, sc.beta), sg, 0.0, sc.T, level)
        diffs.append([r["diff_sup"] for r in s.levels][1:])
        worst_hat = max(worst_hat, s.hat_defect / max(s.defect_estimate, 1e-300))
    mean = np.mean(np.array(diffs), axis=0)
    lv = np.arange(1, level + 1)
    lo = min(4, level - 1)
    ratio = float(np.exp(np.polyfit(lv[lo - 1:], np.log(mean[lo - 1:]), 1)[0])) if level >= 3 else 0.0
    rho = sc.alpha + 2 * sc.beta
    target = 2.0 ** (-(rho - 1))
    in_window = target / 2 <= ratio <= 2 * target
    return [
        _row("sewing_level_ratio", ratio, 2 * target, in_window),
        _row("sewing_hat_defect_ratio", worst_hat, 10.0),
    ]


def _shift_rows(sc: Scenario, rp, sg, G, F, pair) -> list[dict]:
    T = sc.T
    tau = T / 4
    g = rp.grid
    k = g.index(tau)
    shifted = shift_rough_path(rp, tau)
    other, _ = solve_global(T - tau, shifted, sg, pair.y[k], G, F, **sc.solve_kwargs())
    level = max(1, sc.working_level - 2)
    try:
        res = check_shift_property(germ_y(pair, G, sc.beta), sg, tau, T / 2, T, level,
                                   shifted_germ=germ_y(other, G, sc.beta))
    except SewingError:
        res = float("nan")
    deps = sew_with_Deps_tracking(germ_y(pair, G, sc.beta), sg, 0.0, T, level, 2 * sc.beta,
                                  sc.alpha_prime).extra["deps_sup"]
    return [
        _row("shift_property", res, sc.tol("shift"), bool(res <= sc.tol("shift"))),
        _row("deps_sup_finite", deps, float("inf"), bool(np.isfinite(deps))),
    ]


def verify_rows(sc: Scenario) -> list[dict]:
    """Run the invariant suite on a scenario; one row per check."""
    rp, sg, G, F, pair, report = solve_scenario(sc)
    rows = _chen_rows(sc)
    rows += _algebraic_rows(sc, rp, sg)
    rows += _sewing_rows(sc)
    rows += _shift_rows(sc, rp, sg, G, F, pair)
    rows.append(_row("fixed_point_residual", report.fixed_point_residual, 2 * sc.tol("picard")))
    rows.append(_row("constraint_residual", report.constraint_residual, sc.tol("constraint")))
    return rows


def _merge_report(path: Path, key: str, value) -> None:
    data = read_report(path) if path.exists() else {}
    data[key] = value
    write_report(path, data)


def _cmd_solve(sc: Scenario, out: Path) -> int:
    rp, sg, G, F, pair, report = solve_scenario(sc, segment_diagnostics=True)
    write_trajectory(out / "trajectory.csv", pair.grid.times, pair.y)
    rem = remainders(pair, G, sc.beta)
    payload = {
        "scenario": sc.to_mapping(),
        "solve": report.to_dict(),
        "remainders": rem.to_dict(),
        "RY_is_zero": bool(rem.RY_norm_2beta <= 1e-12),
    }
    _merge_report(out / "report.json", "solve", payload)
    (out / "plot_trajectory.py").write_text(_PLOT_TRAJECTORY)
    return 0


def _cmd_verify(sc: Scenario, out: Path) -> int:
    rows = verify_rows(sc)
    write_table(out / "verify.csv", rows, ["check", "value", "threshold", "passed"])
    for r in rows:
        log.info("%-22s %-5s value=%.3e threshold=%.3e", r["check"], "PASS" if r["passed"] else "FAIL",
                 r["value"], r["threshold"])
    return 0 if all(r["passed"] for r in rows) else 1


def _cmd_converge(sc: Scenario, out: Path) -> int:
    levels = sc.studies.get("converge", {}).get("levels", list(range(5, sc.working_level + 1)))
    levels = [lv for lv in levels if lv <= sc.working_level]
    path = sc.driver_path(level=max(levels))
    sg = sc.semigroup_op()
    rows = driver_convergence_study(path, levels, sg, sc.xi_vector(), sc.coefficient_G(sg), sc.alpha,
                                    F=sc.coefficient_F(), **sc.solve_kwargs())
    write_table(out / "converge.csv", rows, ["level", "metric", "y_diff", "chen_defect"])
    (out / "plot_converge.py").write_text(_PLOT_CONVERGE)
    ok = (non_increasing([r["metric"] for r in rows]) and non_increasing([r["y_diff"] for r in rows])
          and max(r["chen_defect"] for r in rows) <= sc.tol("chen"))
    return 0 if ok else 1


def _cmd_cocycle(sc: Scenario, out: Path) -> int:
    cfg = sc.studies.get("cocycle", {})
    T = sc.T
    ts = cfg.get("t", [T / 8, T / 4, 3 * T / 8])
    taus = cfg.get("tau", [T / 8, T / 4, 3 * T / 8])
    sg = sc.semigroup_op()
    G = sc.coefficient_G(sg)
    F = sc.coefficient_F()
    xi = sc.xi_vector()
    rows = []
    for seed in sc.seeds:
        rp = sc.rough_path(seed)
        for t in ts:
            for tau in taus:
                probe = cocycle_residual(T, rp, sg, xi, G, t, tau, F, seed=seed, **sc.solve_kwargs())
                rows.append({"seed": seed, "t": t, "tau": tau, "residual": probe.residual,
                             "passed": probe.residual <= sc.tol("cocycle")})
    write_table(out / "cocycle.csv", rows, ["seed", "t", "tau", "residual", "passed"])
    _merge_report(out / "report.json", "cocycle", rows)
    return 0 if all(r["passed"] for r in rows) else 1


_COMMANDS = {"solve": _cmd_solve, "verify": _cmd_verify, "converge": _cmd_converge, "cocycle": _cmd_cocycle}


def run(config, command: str, out, seed: int | None = None, level: int | None = None) -> int:
    """Execute ``command`` for the scenario file ``config``; returns the exit status."""
    try:
        sc = load_scenario(config)
        if seed is not None:
            sc.seed = int(seed)
            sc.seeds = [int(seed)]
        if level is not None:
            sc.level = int(level)
            sc.validate()
    except ScenarioError as exc:
        print(f"roughflow: invalid config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"roughflow: cannot read config: {exc}", file=sys.stderr)
        return 2
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[command](sc, out)
    except (PicardNotConverged, HorizonUnderflow) as exc:
        print(f"roughflow: numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="roughflow", description="Rough parabolic evolution solver.")
    parser.add_argument("--config", required=True, help="YAML scenario file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--command", required=True, choices=sorted(_COMMANDS))
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--level", type=int, default=None, help="override the dyadic level")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if os.environ.get("ROUGHFLOW_MAX_LEVEL"):
        log.info("dyadic depth capped at %s", os.environ["ROUGHFLOW_MAX_LEVEL"])
    return run(args.config, args.command, args.out, args.seed, args.level)


if __name__ == "__main__":
    sys.exit(main())
