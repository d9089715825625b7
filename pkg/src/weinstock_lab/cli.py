"""Command-line entry point: ``weinstock-lab <command> [options]``.

Exit codes: 0 success, 1 an inequality verdict failed, 2 bad input or
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import bodies as B
from . import cropping, flows, functionals as F, steklov, support2d
from .errors import BadConfig, InputError, NumericError, UnknownTarget, WeinstockLabError

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

GENERATORS = ("polygon2", "polytope3", "support2", "ngon")
TARGETS = ("cardioid", "polygon-gamma", "ellipse-excess", "imcf-descent", "weinstock", "wentzell-ball", "brock")
DEFICIT_STRICT = 1e-6


@dataclass
class ExperimentConfig:
    command: str
    body_paths: List[str] = field(default_factory=list)
    generate: Optional[str] = None
    count: int = 1
    seed: int = 0
    eps: List[float] = field(default_factory=list)
    T: float = 2.0
    dt: float = 0.01
    beta: List[float] = field(default_factory=list)
    refinements: int = 4
    k: int = 6
    gamma: List[float] = field(default_factory=list)
    ks: List[int] = field(default_factory=list)
    target: Optional[str] = None
    out: Optional[str] = None
    fmt: str = "csv"
    jobs: int = 1

    def validate(self) -> None:
        needs_input = self.command in ("functionals", "verify-main", "crop", "steklov", "wentzell")
        if needs_input and bool(self.body_paths) == bool(self.generate):
            raise BadConfig("give exactly one input source: --body or --generate")
        if self.command == "flow-imcf" and self.body_paths and self.generate:
            raise BadConfig("give at most one input source")
        if self.generate and self.generate not in GENERATORS:
            raise BadConfig(f"unknown generator {self.generate!r}")
        if self.count < 1:
            raise BadConfig("--count must be positive")
        if self.jobs < 1:
            raise BadConfig("--jobs must be positive")
        if self.fmt not in ("csv", "json"):
            raise BadConfig("--format must be csv or json")
        if self.refinements < 0 or self.k < 2:
            raise BadConfig("--refine must be >= 0 and --k >= 2")


@dataclass
class Outcome:
    text: str
    ok: bool = True
    failures: List[str] = field(default_factory=list)


# --------------------------------------------------------------------------
# inputs
# --------------------------------------------------------------------------


def _generate_one(kind: str, rng: np.random.Generator):
    if kind == "polygon2":
        return B.random_polygon(rng)
    if kind == "polytope3":
        return B.random_polytope(rng)
    if kind == "support2":
        return B.random_support_body(rng)
    return B.random_ngon(rng)


def load_inputs(cfg: ExperimentConfig):
    """``[(body_id, body)]`` in a fixed order. Each generated body owns a spawned seed."""
    if cfg.body_paths:
        return [(Path(p).stem, B.load_body(p)) for p in cfg.body_paths]
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.count)
    return [(str(i), _generate_one(cfg.generate, np.random.default_rng(s))) for i, s in enumerate(children)]


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _with_seed(text: str, seed: int) -> str:
    """Append a ``seed`` column to CSV text."""
    lines = text.splitlines()
    return "\n".join([lines[0] + ",seed"] + [f"{ln},{seed}" for ln in lines[1:]]) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, default=default, indent=2, sort_keys=True) + "\n"


def _table(cfg: ExperimentConfig, pairs: List[tuple], ok: bool, failures: List[str]) -> Outcome:
    """Two-column (quantity, value) output used by the reproduction targets."""
    pairs = pairs + [("seed", cfg.seed), ("pass", ok)]
    if cfg.fmt == "json":
        text = _json({q: v for q, v in pairs})
    else:
        text = _csv(("quantity", "value"), [(q, _fmt(v)) for q, v in pairs])
    return Outcome(text, ok, failures)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_functionals(cfg: ExperimentConfig) -> Outcome:
    items = load_inputs(cfg)
    reps = _pmap(lambda it: F.report(it[1], cfg.gamma, cfg.seed), items, cfg.jobs)
    if cfg.fmt == "json":
        return Outcome(_json([dict(body_id=i, **asdict(r)) for (i, _), r in zip(items, reps)]))
    return Outcome(_csv(("body_id",) + F.FunctionalReport.CSV_COLUMNS,
                        [[i] + r.csv_row() for (i, _), r in zip(items, reps)]))


VERIFY_COLUMNS = ("body_id", "kind", "n", "lambda", "margin", "deficit", "seed", "ok")


def cmd_verify_main(cfg: ExperimentConfig) -> Outcome:
    items = load_inputs(cfg)

    def check(item):
        body_id, body = item
        centered = B.normalize(body)
        n = centered.n
        value = F.lam(centered)
        margin = value - F.lambda_ball(n)
        deficit = F.isoperimetric_deficit(centered)
        ok = margin >= -F.VERDICT_TOL and (deficit <= DEFICIT_STRICT or margin > 0)
        return [body_id, F._KINDS[type(body)], n, value, margin, deficit, cfg.seed, ok]

    rows = _pmap(check, items, cfg.jobs)
    failures = [f"body {r[0]}: margin {r[4]!r}, deficit {r[5]!r}" for r in rows if not r[-1]]
    ok = not failures
    if cfg.fmt == "json":
        text = _json({"rows": [dict(zip(VERIFY_COLUMNS, r)) for r in rows], "failures": failures, "pass": ok})
    else:
        text = _csv(VERIFY_COLUMNS, [[_fmt(x) for x in r] for r in rows])
    return Outcome(text, ok, failures)


def _flow_seed() -> B.SupportBody2:
    return B.ellipse_support(0.25, 1.0, 128)


def cmd_flow_imcf(cfg: ExperimentConfig) -> Outcome:
    if cfg.body_paths:
        body = B.load_body(cfg.body_paths[0])
    elif cfg.generate:
        body = B.random_support_body(np.random.default_rng(cfg.seed))
    else:
        body = _flow_seed()
    if not isinstance(body, B.SupportBody2):
        raise BadConfig("flow-imcf needs a support2 body")
    state = flows.imcf_evolve(body, cfg.T, cfg.dt)
    diag = flows.flow_diagnostics(state)
    checks = {
        "perimeter_exponential": diag.perimeter_rel_error <= 1e-12,
        "rmax_bound": diag.rmax_bound_holds,
        "mvneg": diag.mvneg_holds,
        "lambda_monotone_while_negative_excess": diag.lambda_monotone_while_negative_excess,
    }
    failures = [k for k, v in checks.items() if not v]
    if cfg.fmt == "json":
        text = _json({
            "seed": cfg.seed,
            "history": [s._asdict() for s in state.history],
            "checks": checks,
            "excess_sign_change": diag.excess_sign_change,
            "dVdt_rel_error": diag.dVdt_rel_error,
        })
    else:
        text = _with_seed(state.to_csv(), cfg.seed)
    return Outcome(text, not failures, failures)


DEFAULT_EPS = (0.1, 0.05, 0.025, 0.0125, 0.00625)


def cmd_crop(cfg: ExperimentConfig) -> Outcome:
    eps = sorted(cfg.eps or DEFAULT_EPS, reverse=True)
    items = load_inputs(cfg)
    reports = _pmap(lambda it: cropping.lemma_reverse_check(it[1], eps), items, cfg.jobs)
    failures = []
    for (body_id, _), rep in zip(items, reports):
        for name in ("deltas_negative", "diameter_bound_holds", "ratio_bounded", "residual_vanishing"):
            if not getattr(rep, name):
                failures.append(f"body {body_id}: {name}")
    if cfg.fmt == "json":
        text = _json([
            {"body_id": i, "seed": cfg.seed, "rows": [dict(zip(cropping.CROP_CSV_COLUMNS, r))
                                                      for r in csv.reader(io.StringIO(rep.to_csv()))][1:]}
            for (i, _), rep in zip(items, reports)
        ])
    else:
        parts = []
        for (body_id, _), rep in zip(items, reports):
            lines = rep.to_csv().splitlines()
            if not parts:
                parts.append("body_id," + lines[0])
            parts.extend(f"{body_id},{ln}" for ln in lines[1:])
        text = _with_seed("\n".join(parts), cfg.seed)
    return Outcome(text, not failures, failures)


def _spectra(cfg: ExperimentConfig, wentzell: bool) -> Outcome:
    items = load_inputs(cfg)
    for body_id, body in items:
        if not isinstance(body, B.Polygon2):
            raise BadConfig(f"body {body_id}: the eigenvalue solver needs a polygon2 body")
    betas = (cfg.beta or [0.5]) if wentzell else [0.0]

    def solve(item):
        ops = steklov.polygon_operators(item[1], cfg.refinements)
        return [steklov.wentzell_spectrum(item[1], b, k=cfg.k, ops=ops) for b in betas]

    results = _pmap(solve, items, cfg.jobs)
    rows, failures = [], []
    for (body_id, _), per_beta in zip(items, results):
        for res in per_beta:
            rid = f"{body_id}@beta={res.beta!r}" if wentzell else body_id
            rows.append((rid, res))
            failures += [f"body {rid}: {k}" for k, v in res.verdicts.items() if not v]
    if cfg.fmt == "json":
        text = _json([
            {"body_id": rid, "seed": cfg.seed, "beta": r.beta, "h_max": r.h_max, "eigenvalues": r.eigenvalues,
             "bound": r.bound_test_function, "verdicts": r.verdicts}
            for rid, r in rows
        ])
    else:
        text = _with_seed(steklov.spectrum_csv(rows, wentzell=wentzell), cfg.seed)
    return Outcome(text, not failures, failures)


def cmd_steklov(cfg: ExperimentConfig) -> Outcome:
    return _spectra(cfg, wentzell=False)


def cmd_wentzell(cfg: ExperimentConfig) -> Outcome:
    return _spectra(cfg, wentzell=True)


# --------------------------------------------------------------------------
# reproduction targets
# --------------------------------------------------------------------------


def _repro_cardioid(cfg):
    laj = support2d.polar_laj(B.cardioid())
    expected = -4 * math.pi / 75
    err = abs(laj.gap - expected)
    pairs = [("L", laj.L), ("A", laj.A), ("J", laj.J), ("piJ-LA", laj.gap), ("expected", expected), ("abs_error", err)]
    ok = err <= 1e-6
    return pairs, ok, [] if ok else ["cardioid gap off by more than 1e-6"]


def _repro_polygon_gamma(cfg):
    gamma = cfg.gamma[0] if cfg.gamma else 0.5
    ks = cfg.ks or [64, 128, 256, 512]
    disk = F.lambda_gamma_disk(gamma)
    pairs, failures = [("gamma", gamma), ("lambda_gamma(B)", disk)], []
    for k in ks:
        value = F.lambda_gamma(support2d.regular_polygon(k)[0], gamma)
        pairs.append((f"lambda_gamma(P_{k})", value))
        if not value < disk:
            failures.append(f"k={k}: lambda_gamma not below the disk value")
    if len(ks) >= 2:
        asym = support2d.lambda_gamma_asymptotics(gamma, ks)
        pairs += [("slope", asym.slope), ("predicted_slope", asym.predicted_slope),
                  ("slope_rel_error", asym.relative_error)]
    return pairs, not failures, failures


def _repro_ellipse_excess(cfg):
    e_thin = F.excess(B.ellipse_polygon(0.3, 1 / 0.3))
    e_round = F.excess(B.ellipse_polygon(1.1, 0.9))
    failures = []
    if not e_thin < 0:
        failures.append("(0.3, 1/0.3) ellipse: excess not negative")
    if not e_round > 0:
        failures.append("(1.1, 0.9) ellipse: excess not positive")
    return [("excess ellipse 0.3x3.333", e_thin), ("excess ellipse 1.1x0.9", e_round)], not failures, failures


def _repro_imcf(cfg):
    body = _flow_seed()
    state = flows.imcf_evolve(body, 1.0, 0.01)
    diag = flows.flow_diagnostics(state)
    lam = [s.lam for s in state.history]
    e0 = state.history[0].excess
    checks = {
        "initial_excess_negative": e0 < 0,
        "lambda_nonincreasing": diag.lambda_monotone,
        "perimeter_exponential": diag.perimeter_rel_error <= 1e-12,
    }
    pairs = [("excess(0)", e0), ("lambda(0)", lam[0]), ("lambda(1)", lam[-1]),
             ("max_lambda_increment", float(np.max(diag.lam_increments))),
             ("perimeter_rel_error", diag.perimeter_rel_error),
             ("excess_sign_change", diag.excess_sign_change if diag.excess_sign_change is not None else "")]
    failures = [k for k, v in checks.items() if not v]
    return pairs, not failures, failures


def _repro_weinstock(cfg):
    count = cfg.count if cfg.count > 1 else 10
    refine = cfg.refinements
    children = np.random.SeedSequence(cfg.seed).spawn(count)
    polys = [B.random_ngon(np.random.default_rng(s)) for s in children]
    reports = _pmap(lambda p: steklov.weinstock_verdict(p, refine), polys, cfg.jobs)
    failures = [f"body {i}: {k}" for i, r in enumerate(reports) for k, v in r.verdicts.items() if not v]
    norm = [r.normalized for r in reports]
    pairs = [("bodies", count), ("refinement", refine), ("max sigma1*P/(2pi)", max(norm)),
             ("min sigma1*P/(2pi)", min(norm)), ("failures", len(failures))]
    return pairs, not failures, failures


def _repro_wentzell_ball(cfg):
    ops = steklov.polygon_operators(B.disk_polygon(256), min(cfg.refinements, 3))
    pairs, failures = [], []
    for beta in cfg.beta or [0.1, 0.5, 1.0]:
        mu = steklov.wentzell_spectrum(B.disk_polygon(256), beta, k=3, ops=ops).sigma_1
        pairs.append((f"mu B1 beta={beta!r}", mu))
        if abs(mu - (1 + beta)) > 0.01 * (1 + beta):
            failures.append(f"beta={beta}: mu off by more than 1%")
    return pairs, not failures, failures


def _repro_brock(cfg):
    count = cfg.count if cfg.count > 1 else 1000
    children = np.random.SeedSequence(cfg.seed).spawn(count)
    values = np.array([F.brock_ratio(B.normalize(B.random_polygon(np.random.default_rng(s)))) for s in children])
    bound = F.brock_ball(2)
    bad = np.flatnonzero(values < bound * (1 - F.VERDICT_TOL))
    pairs = [("bodies", count), ("bound 2/sqrt(pi)", bound), ("min W/V^(3/2)", float(values.min())),
             ("failures", len(bad))]
    return pairs, not len(bad), [f"body {i}: W/V^(3/2) = {values[i]!r}" for i in bad]


_REPRO = {
    "cardioid": _repro_cardioid,
    "polygon-gamma": _repro_polygon_gamma,
    "ellipse-excess": _repro_ellipse_excess,
    "imcf-descent": _repro_imcf,
    "weinstock": _repro_weinstock,
    "wentzell-ball": _repro_wentzell_ball,
    "brock": _repro_brock,
}


def reproduce(cfg: ExperimentConfig) -> Outcome:
    if cfg.target not in _REPRO:
        raise UnknownTarget(f"unknown target {cfg.target!r}; choose from {', '.join(TARGETS)}")
    pairs, ok, failures = _REPRO[cfg.target](cfg)
    return _table(cfg, pairs, ok, failures)


COMMANDS = {
    "functionals": cmd_functionals,
    "verify-main": cmd_verify_main,
    "flow-imcf": cmd_flow_imcf,
    "crop": cmd_crop,
    "steklov": cmd_steklov,
    "wentzell": cmd_wentzell,
    "reproduce": reproduce,
}


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    """Execute ``cfg``, write its artifact and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg.validate()
        outcome = COMMANDS[cfg.command](cfg)
        if cfg.out:
            Path(cfg.out).write_text(outcome.text)
        else:
            stdout.write(outcome.text)
    except InputError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=stderr)
        return EXIT_INPUT
    except WeinstockLabError as exc:  # pragma: no cover - every subclass is mapped above
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    if not outcome.ok:
        for line in outcome.failures:
            print(f"FAIL {line}", file=stderr)
        print(f"{len(outcome.failures)} verdict failure(s)", file=stderr)
        return EXIT_VERDICT
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _default_jobs() -> int:
    env = os.environ.get("WEINSTOCK_LAB_JOBS")
    try:
        return int(env) if env else 1
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (u64)")
    common.add_argument("--out", help="write the artifact here instead of stdout")
    common.add_argument("--csv", dest="csv_path", help="same as --out with --format csv")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--jobs", type=int, default=None, help="worker threads (env WEINSTOCK_LAB_JOBS)")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--body", action="append", default=[], help="body JSON file (repeatable)")
    inputs.add_argument("--generate", choices=GENERATORS, help="random body family")
    inputs.add_argument("--count", type=int, default=1)

    parser = argparse.ArgumentParser(prog="weinstock-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("functionals", parents=[common, inputs], help="all functionals of the input bodies")
    p.add_argument("--gamma", type=_floats, default=[])
    sub.add_parser("verify-main", parents=[common, inputs], help="check the main inequality on each body")

    p = sub.add_parser("flow-imcf", parents=[common, inputs], help="inverse mean curvature flow history")
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=0.01)

    p = sub.add_parser("crop", parents=[common, inputs], help="cut sweep at the farthest point")
    p.add_argument("--eps", type=_floats, default=[])

    for name in ("steklov", "wentzell"):
        p = sub.add_parser(name, parents=[common, inputs], help=f"{name} eigenvalues by finite elements")
        p.add_argument("--refine", dest="refinements", type=int, default=4)
        p.add_argument("--k", type=int, default=6)
        if name == "wentzell":
            p.add_argument("--beta", type=_floats, default=[])

    p = sub.add_parser("reproduce", parents=[common], help="canonical reproduction experiments")
    p.add_argument("target", help="one of: " + ", ".join(TARGETS))
    p.add_argument("--gamma", type=_floats, default=[])
    p.add_argument("--k", dest="ks", type=_ints, default=[])
    p.add_argument("--beta", type=_floats, default=[])
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--refine", dest="refinements", type=int, default=3)
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    out = ns.out
    fmt = ns.fmt
    if ns.csv_path:
        if out:
            raise BadConfig("--csv and --out are exclusive")
        out, fmt = ns.csv_path, "csv"
    return ExperimentConfig(
        command=ns.command,
        body_paths=getattr(ns, "body", []),
        generate=getattr(ns, "generate", None),
        count=getattr(ns, "count", 1),
        seed=ns.seed,
        eps=getattr(ns, "eps", []),
        T=getattr(ns, "T", 2.0),
        dt=getattr(ns, "dt", 0.01),
        beta=getattr(ns, "beta", []),
        refinements=getattr(ns, "refinements", 4),
        k=getattr(ns, "k", 6),
        gamma=getattr(ns, "gamma", []),
        ks=getattr(ns, "ks", []),
        target=getattr(ns, "target", None),
        out=out,
        fmt=fmt,
        jobs=ns.jobs if ns.jobs is not None else _default_jobs(),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except BadConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
