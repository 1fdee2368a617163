"""Command-line front end.

    hardy-moser eigen   [--config cfg.json] [--out DIR]
    hardy-moser sweep   --gammas 2pi,3pi,3.5pi --alphas 0,0.5lambda1 --jobs 4
    hardy-moser testfn  --eps 1e-3,1e-4 --alpha 0

Exit codes: 0 success, 1 numerical failure, 2 usage or domain error.
Data files carry no timestamps; wall times go to ``meta.json``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .bubble import DEFAULT_SAMPLES, DEFAULT_WINDOW
from .errors import DomainError, ParameterError, ResolutionError
from .extremal import SolverOptions, concentration_report, maximize_subcritical
from .forms import assemble_forms, first_eigenvalue
from .green import MODES as GREEN_MODES
from .green import green_l2_sq, solve_green, upper_bound
from .radial import (DEFAULT_DELTA_B, DEFAULT_GRADING, DEFAULT_N, DEFAULT_R_MIN, build_grid,
                     write_csv)
from .testfn import run_test_function

log = logging.getLogger("hardy_moser")

FOUR_PI = 4.0 * math.pi
SWEEP_COLUMNS = ["gamma", "alpha", "J", "lambda_eps", "c_eps", "norm", "residual", "iters",
                 "n", "r_min", "delta_b", "grading", "config_hash", "status"]
TESTFN_COLUMNS = ["eps", "R", "c", "B", "A0", "alpha", "norm", "integral", "bound", "margin",
                  "predicted_margin", "pass", "config_hash"]
# fields that do not change computed numbers and are excluded from the hash
_VOLATILE = {"out", "jobs", "format"}


class ConfigError(ParameterError):
    """Invalid configuration; the message names the offending field."""


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_scalar(text, *, allow_lambda: bool = False):
    """Parse ``3.5pi``, ``pi``, ``1e-4``, ``0.5lambda1`` (the latter kept symbolic)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().replace("*", "").replace(" ", "")
    m = re.fullmatch(rf"({_NUM})?(pi|π|lambda1)?", s)
    if not m or (m.group(1) is None and m.group(2) is None):
        raise ValueError(f"cannot parse {text!r}")
    coef = float(m.group(1)) if m.group(1) is not None else 1.0
    unit = m.group(2)
    if unit in ("pi", "π"):
        return coef * math.pi
    if unit == "lambda1":
        if not allow_lambda:
            raise ValueError(f"'lambda1' is not allowed in {text!r}")
        return f"{coef!r}lambda1"
    return coef


def _as_list(v):
    if v is None:
        return []
    if isinstance(v, str):
        return [p for p in (x.strip() for x in v.split(",")) if p]
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


@dataclass
class RunConfig:
    n: int = DEFAULT_N
    r_min: float = DEFAULT_R_MIN
    delta_b: float = DEFAULT_DELTA_B
    grading: float = DEFAULT_GRADING
    alpha: object = 0.0
    alphas: list = field(default_factory=list)
    gammas: list = field(default_factory=lambda: [2 * math.pi, 3 * math.pi, 3.5 * math.pi])
    eps: list = field(default_factory=lambda: [1e-3, 1e-4, 1e-5])
    tol: float = 1e-8
    max_iter: int = 10_000
    theta: float = 0.5
    n_perturb: int = 50
    certify: bool = True
    window: float = DEFAULT_WINDOW
    samples: int = DEFAULT_SAMPLES
    green_mode: str = "hardy"
    testfn_mode: str = "exact"
    out: str = "out"
    jobs: int = 1
    format: str = "both"

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config field '{key}'")
        cfg = cls(**{k: v for k, v in data.items()})
        cfg.normalize()
        return cfg

    def normalize(self) -> None:
        def num(name, cast=float):
            try:
                setattr(self, name, cast(getattr(self, name)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field '{name}': {exc}") from exc

        for name in ("r_min", "delta_b", "grading", "tol", "theta", "window"):
            num(name)
        for name in ("n", "max_iter", "n_perturb", "samples", "jobs"):
            v = getattr(self, name)
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"field '{name}': expected an integer, got {v!r}")
        try:
            self.alpha = parse_scalar(self.alpha, allow_lambda=True)
            self.alphas = [parse_scalar(a, allow_lambda=True) for a in _as_list(self.alphas)]
        except ValueError as exc:
            raise ConfigError(f"field 'alpha': {exc}") from exc
        try:
            self.gammas = [parse_scalar(g) for g in _as_list(self.gammas)]
        except ValueError as exc:
            raise ConfigError(f"field 'gammas': {exc}") from exc
        try:
            self.eps = [parse_scalar(e) for e in _as_list(self.eps)]
        except ValueError as exc:
            raise ConfigError(f"field 'eps': {exc}") from exc
        self.validate()

    def validate(self) -> None:
        if self.n < 3:
            raise ConfigError("field 'n': need at least 3 nodes")
        if not (0 < self.r_min < 1 - self.delta_b) or not (0 < self.delta_b < 1):
            raise ConfigError("fields 'r_min'/'delta_b': need 0 < r_min < 1 - delta_b < 1")
        if not (0 < self.grading <= 1):
            raise ConfigError("field 'grading': must lie in (0, 1]")
        for a in [self.alpha, *self.alphas]:
            if isinstance(a, float) and a < 0:
                raise ConfigError(f"field 'alpha': must be >= 0, got {a}")
        for g in self.gammas:
            if not (0 < g < FOUR_PI):
                raise ConfigError(f"field 'gammas': {g} is outside (0, 4 pi)")
        for e in self.eps:
            if not (0 < e < math.exp(-1)):
                raise ConfigError(f"field 'eps': {e} is outside (0, 1/e)")
        if self.tol <= 0:
            raise ConfigError("field 'tol': must be positive")
        if not (0 < self.theta <= 1):
            raise ConfigError("field 'theta': must lie in (0, 1]")
        if self.max_iter < 1 or self.jobs < 1:
            raise ConfigError("fields 'max_iter'/'jobs': must be >= 1")
        if self.format not in ("json", "csv", "both"):
            raise ConfigError("field 'format': one of json, csv, both")
        if self.green_mode not in GREEN_MODES:
            raise ConfigError(f"field 'green_mode': one of {GREEN_MODES}")
        if self.testfn_mode not in ("exact", "asymptotic"):
            raise ConfigError("field 'testfn_mode': one of exact, asymptotic")

    def hash(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k not in _VOLATILE}
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def grid(self):
        return build_grid(self.n, self.r_min, self.delta_b, self.grading)

    def provenance(self) -> dict:
        return {"n": self.n, "r_min": self.r_min, "delta_b": self.delta_b,
                "grading": self.grading, "config_hash": self.hash()}

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, max_iter=self.max_iter, theta=self.theta,
                             n_perturb=self.n_perturb, certify=self.certify)


def load_config(path: Optional[str]) -> dict:
    """JSON document, or ``key = value`` lines (values parsed as JSON when possible)."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key = value")
            k, v = (p.strip() for p in line.split("=", 1))
            try:
                data[k] = json.loads(v)
            except json.JSONDecodeError:
                data[k] = v
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data


def resolve_alpha(a, lambda1: float) -> float:
    if isinstance(a, str) and a.endswith("lambda1"):
        return float(a[: -len("lambda1")]) * lambda1
    return float(a)


# ----------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_rows(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n")


def _emit(cfg: RunConfig, name: str, record, rows=None, columns=None) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.format in ("json", "both"):
        _write_json(out / f"{name}.json", record)
    if cfg.format in ("csv", "both") and rows is not None:
        _write_rows(out / f"{name}.csv", columns, rows)


def _write_meta(cfg: RunConfig, command: str, wall: float, extra=None) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"command": command, "wall_time_s": wall, "config_hash": cfg.hash(),
            "config": asdict(cfg)}
    meta.update(extra or {})
    _write_json(out / "meta.json", meta)


# ----------------------------------------------------------------------------
# commands


def cmd_eigen(cfg: RunConfig) -> int:
    forms = assemble_forms(cfg.grid())
    spec = first_eigenvalue(forms)
    rec = spec.record()
    rec["config_hash"] = cfg.hash()
    _emit(cfg, "eigen", rec, [rec], list(rec))
    print(json.dumps(rec, sort_keys=True, default=_json_default))
    return 0


def _lambda1(cfg: RunConfig, forms=None) -> float:
    forms = forms or assemble_forms(cfg.grid())
    return forms.lambda1


def _alphas(cfg: RunConfig, forms=None) -> list[float]:
    raw = cfg.alphas or [cfg.alpha]
    if any(isinstance(a, str) for a in raw):
        lam = _lambda1(cfg, forms)
        return [resolve_alpha(a, lam) for a in raw]
    return [float(a) for a in raw]


def _sweep_row(args):
    cfg_dict, gamma, alpha = args
    cfg = RunConfig(**cfg_dict)
    forms = assemble_forms(cfg.grid())
    row = {"gamma": gamma, "alpha": alpha, **cfg.provenance()}
    try:
        res = maximize_subcritical(gamma, alpha, forms, cfg.solver_options())
    except DomainError as exc:
        row.update(status=f"domain_error: {exc}")
        return row, None
    except Exception as exc:  # noqa: BLE001 - recorded per row, sweep continues
        row.update(status=f"failed: {type(exc).__name__}: {exc}")
        return row, None
    row.update(res.record())
    row["status"] = "ok" if res.certified in (None, True) else "not_certified"
    return row, res


def _run_rows(cfg: RunConfig, fn, tasks):
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.gammas:
        raise ConfigError("field 'gammas': empty gamma list")
    alphas = _alphas(cfg)
    gammas = sorted(cfg.gammas)
    tasks = [(asdict(cfg), g, a) for a in sorted(alphas) for g in gammas]
    t0 = time.perf_counter()
    out = _run_rows(cfg, _sweep_row, tasks)
    rows = [r for r, _ in out]
    summary = {"rows": len(rows), "failed": sum(r["status"] != "ok" for r in rows),
               **cfg.provenance(), "trends": {}}
    forms = assemble_forms(cfg.grid())
    for a in sorted(alphas):
        results = [res for (r, res) in out if res is not None and r["alpha"] == a]
        if results:
            rep = concentration_report(results, forms=forms)
            summary["trends"][_fmt(a)] = rep.to_dict()
    _emit(cfg, "sweep", {"summary": summary, "rows": rows}, rows, SWEEP_COLUMNS)
    _write_meta(cfg, "sweep", time.perf_counter() - t0)
    print(json.dumps({k: summary[k] for k in ("rows", "failed", "config_hash")}))
    return 0 if summary["failed"] == 0 else 1


def cmd_maximize(cfg: RunConfig) -> int:
    if not cfg.gammas:
        raise ConfigError("field 'gammas': empty gamma list")
    forms = assemble_forms(cfg.grid())
    alpha = _alphas(cfg, forms)[0]
    res = maximize_subcritical(cfg.gammas[0], alpha, forms, cfg.solver_options())
    rec = {**res.record(), **cfg.provenance(), "certified": res.certified,
           "seed": res.seed, "seed_values": res.seed_values}
    _emit(cfg, "maximize", rec)
    if cfg.format in ("csv", "both"):
        write_csv(res.u, Path(cfg.out) / "maximizer.csv")
    print(json.dumps(res.record(), default=_json_default))
    return 0


def cmd_bubble(cfg: RunConfig) -> int:
    if not cfg.gammas:
        raise ConfigError("field 'gammas': empty gamma list")
    forms = assemble_forms(cfg.grid())
    alpha = _alphas(cfg, forms)[0]
    res = maximize_subcritical(max(cfg.gammas), alpha, forms, cfg.solver_options())
    diag = res.blowup(cfg.window, cfg.samples)
    rec = {**diag.summary(), "gamma": res.gamma, "alpha": res.alpha, **cfg.provenance()}
    _emit(cfg, "bubble", rec)
    if cfg.format in ("csv", "both"):
        diag.write_csv(Path(cfg.out) / "bubble.csv")
    print(json.dumps(rec, sort_keys=True, default=_json_default))
    return 0


def cmd_green(cfg: RunConfig) -> int:
    grid = cfg.grid()
    forms = assemble_forms(grid)
    alpha = _alphas(cfg, forms)[0]
    res = solve_green(alpha, grid, cfg.green_mode, forms)
    rec = {**res.record(), "green_l2_sq": green_l2_sq(res), "upper_bound": upper_bound(res.A0),
           **cfg.provenance()}
    _emit(cfg, "green", rec)
    if cfg.format in ("csv", "both"):
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        res.write_csv(Path(cfg.out) / "green.csv")
    print(json.dumps(rec, sort_keys=True, default=_json_default))
    return 0


def _testfn_row(args):
    cfg_dict, eps, alpha = args
    cfg = RunConfig(**cfg_dict)
    rep = run_test_function(eps, alpha, cfg.grid(), cfg.testfn_mode, check_alpha=False)
    return {**rep.to_dict(), "config_hash": cfg.hash()}


def cmd_testfn(cfg: RunConfig) -> int:
    if not cfg.eps:
        raise ConfigError("field 'eps': empty eps list")
    forms = assemble_forms(cfg.grid())
    alpha = _alphas(cfg, forms)[0]
    forms.with_alpha(alpha).check_alpha()
    t0 = time.perf_counter()
    rows = _run_rows(cfg, _testfn_row, [(asdict(cfg), e, alpha) for e in sorted(cfg.eps, reverse=True)])
    overall = all(r["pass"] for r in rows)
    _emit(cfg, "testfn", {"pass": overall, "rows": rows, **cfg.provenance()}, rows, TESTFN_COLUMNS)
    _write_meta(cfg, "testfn", time.perf_counter() - t0)
    for r in rows:
        print(f"eps={r['eps']:.3g} margin={r['margin']:.6g} norm={r['norm']:.12g} "
              f"{'PASS' if r['pass'] else 'FAIL'}")
    print("overall:", "PASS" if overall else "FAIL")
    return 0 if overall else 1


COMMANDS = {
    "eigen": cmd_eigen,
    "maximize": cmd_maximize,
    "sweep": cmd_sweep,
    "green": cmd_green,
    "bubble": cmd_bubble,
    "testfn": cmd_testfn,
}

_FLAG_FIELDS = {
    "n": int, "r_min": float, "delta_b": float, "grading": float, "alpha": str,
    "alphas": str, "gammas": str, "eps": str, "tol": float, "max_iter": int, "theta": float,
    "window": float, "samples": int, "green_mode": str, "testfn_mode": str,
    "out": str, "jobs": int, "format": str,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON (or key = value) config file; flags override it")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--format", choices=["json", "csv", "both"])
    common.add_argument("--n", type=int, help="grid nodes")
    common.add_argument("--r-min", dest="r_min", type=float)
    common.add_argument("--delta-b", dest="delta_b", type=float)
    common.add_argument("--grading", type=float)
    common.add_argument("--alpha", help="e.g. 0, 1.1 or 0.5lambda1")
    common.add_argument("--alphas", help="comma list, sweep only")
    common.add_argument("--gammas", help="comma list, e.g. 2pi,3pi,3.5pi")
    common.add_argument("--eps", help="comma list, e.g. 1e-3,1e-4")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--theta", type=float)
    common.add_argument("--window", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--green-mode", dest="green_mode", choices=list(GREEN_MODES))
    common.add_argument("--testfn-mode", dest="testfn_mode", choices=["exact", "asymptotic"])
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="hardy-moser", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__.replace("cmd_", ""))
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config)
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            data[name] = v
    return RunConfig.from_mapping(data)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, ParameterError, ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - numerical failure, reported as exit 1
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
