"""Command-line front end.

Every command writes to stdout or ``--output``; reports are JSON with
sorted keys, series and sweeps are CSV. Exit status is 0 on success, 1
when a validation check fails or a computation is refused, 2 on bad
usage. Failures print a JSON object with ``error`` and ``message``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from . import antisym, correlation, kasteleyn, oracle, periodic, spectral
from .hexlattice import LatticeParams, TorusLattice, decorate, nw_path

log = logging.getLogger("onetwo")

THREADS_ENV = "ONETWO_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    n: int = 2
    k: int = 1
    kmax: int = 14
    m: int = 0
    resolution: int = 12
    trials: int = 10
    seed: int = 0
    weights: str = ""
    output: str = ""
    format: str = ""
    threads: int = 0

    def params(self) -> LatticeParams:
        try:
            return LatticeParams(self.a, self.b, self.c)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def workers(self) -> int:
        if self.threads > 0:
            return self.threads
        env = os.environ.get(THREADS_ENV, "")
        if env:
            try:
                val = int(env)
            except ValueError as exc:
                raise UsageError(f"{THREADS_ENV} must be an integer") from exc
            if val < 1:
                raise UsageError(f"{THREADS_ENV} must be positive")
            return val
        return 1


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x)}")


def cmd_phase(cfg: RunConfig) -> tuple[str, int]:
    p = cfg.params()
    rep = spectral.classify_phase(p, cfg.m or 64)
    out = rep.to_dict()
    out["params"] = list(p.as_tuple())
    return _dump_json(out), EXIT_OK


def cmd_free_energy(cfg: RunConfig) -> tuple[str, int]:
    p = cfg.params()
    m = cfg.m or 256
    f = spectral.free_energy(p, m)
    half = spectral.free_energy(p, m // 2)
    return _dump_json({"params": list(p.as_tuple()), "m": m, "free_energy": f,
                       "change_from_half_grid": f - half}), EXIT_OK


def cmd_correlate(cfg: RunConfig) -> tuple[str, int]:
    p = cfg.params()
    if cfg.kmax < 8:
        raise UsageError("kmax must be at least 8")
    series = correlation.correlation_series(p, cfg.kmax, cfg.m or kasteleyn.DEFAULT_M)
    fmt = cfg.format or "csv"
    if fmt == "csv":
        return series.to_csv(), EXIT_OK
    if fmt == "json":
        out = json.loads(series.to_json())
        out["finite"] = _finite_route(p, cfg.n)
        return _dump_json(out), EXIT_OK
    raise UsageError(f"unknown format {fmt!r}")


def _finite_route(p: LatticeParams, n: int) -> list[dict]:
    d = decorate(TorusLattice(n), p)
    cache = correlation.TorusPfaffians(d)
    rows = []
    for k in range(1, min(n, correlation.MAX_PATH_K + 1)):
        path = nw_path(d, (0, 0, "b"), (0, k, "b"))
        rows.append({"k": k, "value": correlation.finite_correlation(d, path, cache=cache)})
    return rows


def cmd_scan(cfg: RunConfig) -> tuple[str, int]:
    p = cfg.params()
    m = cfg.m or 64
    if m < 32:
        raise UsageError("scan grid must be at least 32")
    g = kasteleyn.grid_points(m)
    vals = np.abs(kasteleyn.char_poly(p, g[:, None], g[None, :]))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["theta", "phi", "abs_p"])
    step = 2 * math.pi / m
    for j in range(m):
        for l in range(m):
            wr.writerow([repr(j * step), repr(l * step), repr(float(vals[j, l]))])
    return buf.getvalue(), EXIT_OK


def sweep_phase_diagram(resolution: int, m: int = 64, workers: int = 1) -> str:
    """CSV over the simplex grid i + j + k = resolution, weights normalized to unit 2-norm."""
    if resolution < 10:
        raise UsageError("sweep resolution must be at least 10")
    nodes = [(i, j, resolution - i - j) for i in range(resolution + 1) for j in range(resolution + 1 - i)]

    def row(node):
        norm = math.sqrt(sum(x * x for x in node))
        a, b, c = (x / norm for x in node)
        rep = spectral.classify_phase(LatticeParams(a, b, c), m)
        return [repr(a), repr(b), repr(c), rep.region, repr(rep.p11), repr(rep.torus_gap)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(row, nodes))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["a", "b", "c", "region", "p11", "gap"])
    wr.writerows(rows)
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    return sweep_phase_diagram(cfg.resolution, cfg.m or 64, cfg.workers()), EXIT_OK


def cmd_periodic(cfg: RunConfig) -> tuple[str, int]:
    if not cfg.weights:
        raise UsageError("periodic needs --weights FILE")
    try:
        with open(cfg.weights, encoding="utf-8") as fh:
            pp = periodic.PeriodicParams.from_json(fh.read())
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read weight file: {exc}") from exc
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(max(cfg.trials, 1)):
        z, w = np.exp(1j * rng.uniform(0, 2 * math.pi, 2))
        d = periodic.periodic_det(pp, z, w)
        p1, p2 = periodic.case_decomposition(pp, z, w)
        worst = max(worst, abs(d - p1 - p2) / abs(d))
    rep = periodic.real_intersection_scan(pp, cfg.m or 128)
    signs = {f"{z},{w}": periodic.periodic_det(pp, z, w).real for z, w in kasteleyn.SECTORS}
    out = {"k": pp.k, "strictly_positive": pp.strictly_positive, "decomposition_residual": worst,
           "p_at_signs": signs, "scan": rep.to_dict()}
    ok = worst <= 1e-8 and not rep.violating_cells
    return _dump_json(out), EXIT_OK if ok else EXIT_FAIL


def cmd_lattice(cfg: RunConfig) -> tuple[str, int]:
    try:
        d = decorate(TorusLattice(cfg.n), cfg.params())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return _dump_json(d.to_json()), EXIT_OK


def cmd_symbol(cfg: RunConfig) -> tuple[str, int]:
    return _dump_json(kasteleyn.symbol_to_json(cfg.params(), cfg.m or 64)), EXIT_OK


def run_validation(n: int, trials: int, seed: int, workers: int = 1) -> dict:
    """The oracle suite. Each check records its worst residual and threshold."""
    if n != 2:
        raise UsageError("validation enumerates the n = 2 torus only")
    rng = np.random.default_rng(seed)
    triples = [LatticeParams(*rng.uniform(0.2, 5, 3)) for _ in range(trials)]
    checks: dict[str, Callable[[], float]] = {}

    def det_identity() -> float:
        worst = 0.0
        for p in triples:
            z, w = np.exp(1j * rng.uniform(0, 2 * math.pi, 2))
            f = kasteleyn.char_poly(p, z, w)
            worst = max(worst, abs(kasteleyn.char_poly_det(p, z, w) - f) / abs(f))
        return worst

    def spin_rep() -> float:
        worst = 0.0
        for p in triples:
            z = oracle.enumerate_Z(n, p)
            worst = max(worst, abs(oracle.spin_rep_Z(n, p) - (4 / p.total) ** 8 * z) / abs((4 / p.total) ** 8 * z))
        return worst

    def ising() -> float:
        worst = 0.0
        for p in triples[:2] + [LatticeParams(3, 2, 2)]:
            if p.A * p.B * p.C == 0:
                continue
            worst = max(worst, *oracle.ising_check(n, p))
        return worst

    def dimer() -> float:
        return max(oracle.dimer_partition_check(n, p) for p in triples + [LatticeParams(1, 1, 1)])

    def finite_corr() -> float:
        worst = 0.0
        for p in triples:
            d = decorate(TorusLattice(n), p)
            cache = correlation.TorusPfaffians(d)
            for i in range(n):
                for j in range(n):
                    e, f = (i, j, "b"), (i, j + 1, "b")
                    val = correlation.finite_correlation(d, nw_path(d, e, f), cache=cache)
                    worst = max(worst, abs(val - oracle.enumerate_correlation(n, p, e, f)))
        return worst

    def pfaffians() -> float:
        worst = 0.0
        for _ in range(trials):
            a = antisym.random_antisym(8, rng)
            worst = max(worst, antisym.check_minor_identity(a, [0, 3, 4, 6]),
                        antisym.check_expansion_identity(a),
                        abs(antisym.pfaffian(a) ** 2 - np.linalg.det(a)) / abs(np.linalg.det(a)))
        return worst

    def pgf() -> float:
        return oracle.pgf_identity_check(100 * trials, rng)

    checks = {
        "det_identity": (det_identity, 1e-9),
        "spin_representation": (spin_rep, 1e-10),
        "coupled_ising": (ising, 1e-8),
        "dimer_partition": (dimer, 1e-8),
        "finite_correlation": (finite_corr, 1e-8),
        "pfaffian_identities": (pfaffians, 1e-9),
        "pgf_identity": (pgf, 1e-10),
    }
    report = {}
    for name, (fn, tol) in checks.items():
        res = float(fn())
        report[name] = {"residual": res, "threshold": tol, "pass": bool(res <= tol)}
    return {"n": n, "trials": trials, "seed": seed, "checks": report,
            "pass": all(v["pass"] for v in report.values())}


def cmd_validate(cfg: RunConfig) -> tuple[str, int]:
    rep = run_validation(cfg.n, cfg.trials, cfg.seed, cfg.workers())
    return _dump_json(rep), EXIT_OK if rep["pass"] else EXIT_FAIL


COMMANDS: dict[str, Callable[[RunConfig], tuple[str, int]]] = {
    "phase": cmd_phase,
    "free-energy": cmd_free_energy,
    "correlate": cmd_correlate,
    "validate": cmd_validate,
    "periodic": cmd_periodic,
    "scan": cmd_scan,
    "sweep": cmd_sweep,
    "lattice": cmd_lattice,
    "symbol": cmd_symbol,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="onetwo", description="Exact computations for the 1-2 model on the hexagonal lattice.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON file whose keys mirror the flags")
    for name in ("a", "b", "c"):
        parser.add_argument(f"--{name}", type=float, help=f"weight {name}")
    parser.add_argument("--n", type=int, help="torus size (even)")
    parser.add_argument("--k", type=int, help="separation or period")
    parser.add_argument("--kmax", type=int, help="largest separation for correlation series")
    parser.add_argument("--m", type=int, help="quadrature / scan grid size")
    parser.add_argument("--resolution", type=int, help="simplex grid resolution for sweep")
    parser.add_argument("--trials", type=int, help="random draws for validation suites")
    parser.add_argument("--seed", type=int, help="seed for random suites")
    parser.add_argument("--weights", help="JSON weight file for the periodic command")
    parser.add_argument("--output", help="write the result here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), help="output format where both exist")
    parser.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_config(argv: Sequence[str]) -> tuple[RunConfig, bool]:
    ns = build_parser().parse_args(list(argv))
    cfg = RunConfig(command=ns.command)
    known = {f.name: f.type for f in fields(RunConfig)}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        for key, val in data.items():
            key = key.replace("-", "_")
            if key not in known or key == "command":
                raise UsageError(f"unknown config key {key!r}")
            setattr(cfg, key, val)
    for name in known:
        val = getattr(ns, name, None)
        if name != "command" and val is not None:
            setattr(cfg, name, val)
    for name in ("n", "k", "kmax", "m", "resolution", "trials", "seed", "threads"):
        if not isinstance(getattr(cfg, name), int):
            raise UsageError(f"{name} must be an integer")
    for name in ("a", "b", "c"):
        setattr(cfg, name, float(getattr(cfg, name)))
    return cfg, ns.verbose


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, verbose = parse_config(argv)
        logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        start = time.perf_counter()
        text, status = COMMANDS[cfg.command](cfg)
        log.info("%s finished in %.2fs", cfg.command, time.perf_counter() - start)
    except UsageError as exc:
        sys.stdout.write(_dump_json({"error": "usage", "message": str(exc)}))
        return EXIT_USAGE
    except (ValueError, ArithmeticError, MemoryError) as exc:
        sys.stdout.write(_dump_json({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_FAIL
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
