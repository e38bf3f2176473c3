"""Scenario runner: ``galext run <config> [--out DIR] [--quiet] [--snapshots]``.

Exit status: 0 all checks pass, 1 a check failed, 2 config error,
3 runtime error.  ``GALEXT_OUT_DIR`` overrides the output directory of the
scenario file; ``--out`` overrides both.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import frames, verify
from .config import ScenarioConfig, load_config
from .core import Constants, superposition
from .errors import ConfigError
from .snapshot import save_snapshot

log = logging.getLogger("galext")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
OUT_ENV = "GALEXT_OUT_DIR"


@dataclass
class RunReport:
    kind: str
    config: dict
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict, repr=False)

    def check(self, name, value, limit, op="<"):
        value = float(value)
        passed = value < limit if op == "<" else value > limit
        self.checks.append({"name": name, "value": value, "limit": float(limit),
                            "op": op, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def records(self, include_timings=True):
        yield {"record": "config", "kind": self.kind, "config": self.config}
        for c in self.checks:
            yield {"record": "check", **c}
        for k, v in self.metrics.items():
            yield {"record": "metric", "name": k, "value": v}
        yield {"record": "summary", "passed": self.passed,
               "n_checks": len(self.checks),
               "n_failed": sum(not c["passed"] for c in self.checks)}
        if include_timings:
            yield {"record": "timing", **self.timings}


def _constants(cfg: ScenarioConfig) -> Constants:
    return Constants(cfg.hbar, cfg.c)


def _initial(cfg: ScenarioConfig):
    return superposition(cfg.grid, cfg.masses, cfg.weights, cfg.x0, cfg.k0, cfg.sigma)


def _run_free_covariance(cfg, rep):
    initial = _initial(cfg)
    res = verify.check_galilean_covariance(initial, cfg.v, cfg.t_final, cfg.dt,
                                           _constants(cfg), cfg.tolerances["residual"])
    rep.check("residual_max", res.residual.max_residual, cfg.tolerances["residual"])
    rep.check("fidelity_deficit", 1 - res.fidelity, cfg.tolerances["fidelity"])
    for m, f in res.channel_fidelities.items():
        rep.check(f"channel_fidelity_deficit[m={m:g}]", 1 - f, cfg.tolerances["fidelity"])
    rep.check("relative_phase_error", res.relative_phase_error, cfg.tolerances["phase"])
    rep.metrics["fidelity"] = res.fidelity
    stride = max(cfg.snapshot_stride, 1)
    rows = [(float(t), float(r)) for t, r in
            zip(res.residual.times[::stride], res.residual.residuals[::stride])]
    rep.tables["residuals"] = (("t", "residual"), rows)
    rep.states = {"initial": initial, "boosted_final": res.final_state}


def _run_ep_check(cfg, rep):
    initial = _initial(cfg)
    res = verify.check_ep(initial, cfg.g, cfg.t_final, cfg.dt, cfg.sign_convention,
                          _constants(cfg), cfg.rest_energy, cfg.sgrid,
                          cfg.tolerances["fidelity"])
    tol = cfg.tolerances["fidelity"]
    rep.check("fidelity_deficit", 1 - res.fidelity, tol)
    for m, f in res.channel_fidelities.items():
        rep.check(f"channel_fidelity_deficit[m={m:g}]", 1 - f, tol)
    if "residual" in cfg.tolerances:
        rep.check("residual_max", res.residual.max_residual, cfg.tolerances["residual"])
    discriminating = cfg.g != 0 and len(cfg.masses) > 1 and cfg.sign_convention is None
    if discriminating:
        npass = sum(f > 1 - tol for f in res.candidates.values())
        rep.metrics["passing_conventions"] = npass
        rep.check("unique_convention_violation", abs(npass - 1), 0.5)
    rep.metrics["sign_convention"] = res.sign_convention.value
    rep.metrics["fidelity"] = res.fidelity
    rep.metrics["residual_max"] = res.residual.max_residual
    rep.tables["ep_candidates"] = (
        ("convention", "fidelity", "deficit"),
        [(c.value, f, 1 - f) for c, f in res.candidates.items()],
    )
    rep.states = {"initial": initial, "pulled_back_final": res.pulled_back,
                  "direct_final": res.direct}


def _run_bargmann_scan(cfg, rep):
    m1, m2 = cfg.masses
    grid = cfg.grid
    table = verify.loop_fidelity_scan(m1, m2, cfg.av_values, grid, _constants(cfg), cfg.v)
    law = verify.loop_fidelity_law(m1, m2, [av for av, _ in table], cfg.hbar)
    rows = [(av, f, float(e), abs(f - float(e))) for (av, f), e in zip(table, law)]
    rep.tables["bargmann_scan"] = (("av", "fidelity", "expected", "deviation"), rows)
    rep.check("max_law_deviation", max(r[3] for r in rows), cfg.tolerances["law"])


def _run_algebra_check(cfg, rep):
    const = _constants(cfg)
    rng = np.random.default_rng(cfg.seed)
    probes = frames.gaussian_probes(cfg.grid, cfg.sgrid, cfg.masses, cfg.probes, rng,
                                    t=float(rng.uniform(0, 1)))
    G = {n: frames.generator(n, const) for n in "IXPMC"}
    ih = 1j * const.hbar
    cases = {
        "[X,P]=i*hbar": (G["X"], G["P"], G["I"].scaled(ih)),
        "[C,P]=i*hbar*M": (G["C"], G["P"], G["M"].scaled(ih)),
        "[M,P]=0": (G["M"], G["P"], None),
        "[M,X]=0": (G["M"], G["X"], None),
    }
    tol = cfg.tolerances["commutator"]
    for name, (A, B, E) in cases.items():
        rep.check(name, frames.commutator_check(A, B, E, probes), tol)


def _run_poincare(cfg, rep):
    (m,) = cfg.masses
    p, v, a, hbar = cfg.p, cfg.v, cfg.a, cfg.hbar
    devs = []
    rows = []
    for c in cfg.c_values:
        phase = frames.poincare_loop_phase(m, p, v, a, c, hbar)
        dev = abs(phase - m * v * a / hbar)
        dx, dt = frames.poincare_loop_coords(v, a, c)
        fv, fa, fc = Fraction(v), Fraction(a), Fraction(c)
        ex_dx, ex_dt = float(fv * fa * fv / (2 * fc**2)), float(fv * fa / fc**2)
        coord_err = max(abs(dx - ex_dx) / max(abs(ex_dx), 1e-300),
                        abs(dt - ex_dt) / max(abs(ex_dt), 1e-300))
        rep.check(f"coords_rel_error[c={c:g}]", coord_err, cfg.tolerances["coords"])
        devs.append(dev)
        rows.append((c, phase, dev, dev * c**2, dx, dt))
    rep.tables["poincare"] = (("c", "phase", "deviation", "K", "dx", "dt"), rows)
    for (c1, d1), (c2, d2) in zip(zip(cfg.c_values, devs), zip(cfg.c_values[1:], devs[1:])):
        expected = (c2 / c1) ** 2
        rel = abs(d1 / d2 - expected) / expected if d2 > 0 else float("inf")
        rep.check(f"scaling_rel_error[c={c1:g}->{c2:g}]", rel, cfg.tolerances["scaling"])


RUNNERS = {
    "free_covariance": _run_free_covariance,
    "ep_check": _run_ep_check,
    "bargmann_scan": _run_bargmann_scan,
    "algebra_check": _run_algebra_check,
    "poincare_reduction": _run_poincare,
}


def run(cfg: ScenarioConfig) -> RunReport:
    rep = RunReport(cfg.kind, cfg.raw)
    start = time.perf_counter()
    RUNNERS[cfg.kind](cfg, rep)
    rep.timings["wall_seconds"] = time.perf_counter() - start
    return rep


def write_report(rep: RunReport, out_dir, snapshots=False) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.jsonl", "w", encoding="utf-8") as fh:
        for rec in rep.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    for name, (header, rows) in rep.tables.items():
        with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    if snapshots and rep.states:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for name, state in rep.states.items():
            save_snapshot(state, snap_dir / f"{name}.gxs")
    return out


def _out_dir(args, cfg) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or cfg.output_dir or "galext-out")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rep = run(cfg)
        out = write_report(rep, _out_dir(args, cfg), args.snapshots)
    except Exception as exc:  # noqa: BLE001 - any failure maps to exit 3
        print(f"runtime error in scenario {cfg.kind!r}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return EXIT_RUNTIME
    if not args.quiet:
        for c in rep.checks:
            flag = "PASS" if c["passed"] else "FAIL"
            print(f"{flag}  {c['name']}: {c['value']:.3e} {c['op']} {c['limit']:.1e}")
        print(f"{'PASS' if rep.passed else 'FAIL'}  {cfg.kind} -> {out}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="galext", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("config", help="path to the scenario INI file")
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV})")
    p.add_argument("--quiet", action="store_true", help="no per-check output")
    p.add_argument("--snapshots", action="store_true", help="write state snapshots")
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
