"""Command-line driver: ``radbilap {exponents,solve,verify,sweep}``.

All inputs come from one YAML file; ``--print-defaults`` shows every key.
Exit codes: 0 success, 2 invalid configuration, 3 uncertified exponents
under ``--strict``, 4 solver failure, 5 a bound check failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import logging
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from . import verify as vf
from .energy import NonlinearitySpec, PotentialSpec
from .exponents import (
    DomainError,
    GrowthParams,
    HypothesisError,
    certify_pair,
    power_law_params,
    power_law_report,
    threshold_infinity_thm23,
    threshold_infinity_thm24,
    window_origin_thm22,
)
from .grid import build_grid, laplacian
from .solve import SolverConfig, SolverError, minimize, mountain_pass

log = logging.getLogger("radbilap")

EXIT_OK, EXIT_CONFIG, EXIT_UNCERTIFIED, EXIT_SOLVER, EXIT_BOUND = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


_SOLVER_KEYS = [f.name for f in fields(SolverConfig)]

DEFAULTS: Dict[str, Any] = {
    "N": 5,
    "seed": 0,
    "out": "out",
    "potential": {
        "kind": "power_law",
        "a": 2,
        "beta0": 0,
        "beta_inf": 0,
        "V": None,
        "K": None,
        "table": None,
        "origin": None,
        "infinity": None,
        "Q": {"form": "zero", "c": 1.0, "p": 0.0},
    },
    "nonlinearity": {
        "kind": "pure_power",
        "q": 1.5,
        "M": 1.0,
        "q1": None,
        "q2": None,
        "sign_convention": "zero_on_negatives",
    },
    "grid": {"r_min": 1e-4, "r_max": 50.0, "M": 2048, "mode": "logarithmic"},
    "solver": {
        "method": "auto",
        **{k: getattr(SolverConfig(), k) for k in _SOLVER_KEYS},
        "grad_tol": 1e-6,
    },
    "verify": {
        "fields": 50,
        "tol": vf.DEFAULT_TOL,
        "constant_scale": 1.0,
        "R_outer": 1.0,
        "R_inner": 1.0,
        "estimates": [
            {
                "functional": "S0",
                "q": 5.0,
                "radii": [2.0**-k for k in range(6, 0, -1)],
                "trials": 200,
            }
        ],
    },
    "sweep": {"command": "exponents", "key": "potential.a", "values": [0, 1, 2, 3, 4]},
}


# -- configuration --------------------------------------------------------------


def _merge(base: dict, over: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "RunConfig":
        if d is not None and not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        cfg = cls(_merge(DEFAULTS, d or {}))
        cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            d = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable config: {exc}") from exc
        return cls.from_dict(d)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)

    def with_value(self, dotted: str, value) -> "RunConfig":
        d = copy.deepcopy(self.data)
        node = d
        keys = dotted.split(".")
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node[keys[-1]] = value
        return RunConfig.from_dict(d)

    def __getitem__(self, k):
        return self.data[k]

    # validation runs every module precondition that does not need compute
    def validate(self):
        d = self.data
        N = d["N"]
        if not isinstance(N, int) or N < 5:
            raise ConfigError(f"N must be an integer >= 5, got {N!r}")
        if not isinstance(d["seed"], int) or not 0 <= d["seed"] < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        p = d["potential"]
        if p["kind"] == "power_law":
            a = p["a"]
            if not isinstance(a, (int, float)) or not math.isfinite(a):
                raise ConfigError("potential.a must be a number")
            if a > 4:
                raise ConfigError(f"power-law exponent a={a} exceeds 4")
        elif p["kind"] == "named":
            for key in ("V", "K"):
                if not isinstance(p[key], dict):
                    raise ConfigError(f"named potential needs a form for {key}")
                _radial_form(p[key])
        elif p["kind"] == "table":
            if not p["table"]:
                raise ConfigError("table potential needs a file path")
        else:
            raise ConfigError(f"unknown potential kind {p['kind']!r}")
        _radial_form(p["Q"])
        for side in ("origin", "infinity"):
            if p[side] is not None:
                _growth(p[side])
        try:
            self.nonlinearity()
            self.solver_config()
            if not isinstance(d["grid"]["M"], int):
                raise ConfigError("grid.M must be an integer")
            build_grid(N, M=d["grid"]["M"], **self._grid_kwargs())
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if d["solver"]["method"] not in ("auto", "minimize", "mountain_pass"):
            raise ConfigError(f"unknown solver method {d['solver']['method']!r}")
        v = d["verify"]
        if not isinstance(v["fields"], int) or v["fields"] < 1:
            raise ConfigError("verify.fields must be a positive integer")
        for e in v["estimates"]:
            if e.get("functional") not in ("S0", "Sinf", "R0", "Rinf"):
                raise ConfigError(f"unknown functional {e.get('functional')!r}")
            if int(e.get("trials", 0)) < 100:
                raise ConfigError("estimates need at least 100 trials")
            if not e.get("radii"):
                raise ConfigError("estimates need radii")

    def _grid_kwargs(self):
        g = self.data["grid"]
        return {"r_min": float(g["r_min"]), "r_max": float(g["r_max"]), "mode": g["mode"]}

    def grid(self):
        return build_grid(self.data["N"], M=int(self.data["grid"]["M"]), **self._grid_kwargs())

    def nonlinearity(self) -> NonlinearitySpec:
        n = dict(self.data["nonlinearity"])
        kind = n.pop("kind")
        if kind == "pure_power":
            return NonlinearitySpec(kind=kind, q=n["q"], sign_convention=n["sign_convention"])
        if kind == "capped_pair":
            return NonlinearitySpec(
                kind=kind, M=n["M"], q1=n["q1"], q2=n["q2"], sign_convention=n["sign_convention"]
            )
        if kind == "zero":
            return NonlinearitySpec.zero()
        raise ConfigError(f"unsupported nonlinearity kind {kind!r}")

    def solver_config(self) -> SolverConfig:
        s = {k: v for k, v in self.data["solver"].items() if k != "method"}
        return SolverConfig(**s)

    def potential(self) -> PotentialSpec:
        p = self.data["potential"]
        Q = _radial_form(p["Q"])
        origin = _growth(p["origin"]) if p["origin"] is not None else None
        infinity = _growth(p["infinity"]) if p["infinity"] is not None else None
        if p["kind"] == "power_law":
            a = float(p["a"])
            o, i = power_law_params(p["a"], p["beta0"], p["beta_inf"])
            return PotentialSpec(
                V=lambda r: r**-a,
                K=lambda r: r ** (1 - a),
                Q=Q,
                origin=origin or o,
                infinity=infinity or i,
                label=f"power_law(a={p['a']})",
            )
        if p["kind"] == "named":
            return PotentialSpec(
                V=_radial_form(p["V"]), K=_radial_form(p["K"]), Q=Q, origin=origin, infinity=infinity,
                label="named",
            )
        return _table_potential(Path(p["table"]), Q, origin, infinity)


def _radial_form(spec: dict):
    if not isinstance(spec, dict) or "form" not in spec:
        raise ConfigError("radial form needs a 'form' key")
    form, c, p = spec["form"], float(spec.get("c", 1.0)), float(spec.get("p", 0.0))
    if form == "zero":
        return lambda r: np.zeros_like(r)
    if form == "constant":
        return lambda r: np.full_like(r, c)
    if form == "power":
        return lambda r: c * r**p
    if form == "exp":
        return lambda r: c * np.exp(-p * r)
    raise ConfigError(f"unknown radial form {form!r}")


def _growth(d) -> GrowthParams:
    try:
        return GrowthParams(d["alpha"], d["beta"], d.get("gamma"))
    except (KeyError, TypeError, DomainError) as exc:
        raise ConfigError(f"bad growth parameters {d!r}: {exc}") from exc


def _table_potential(path: Path, Q, origin, infinity) -> PotentialSpec:
    data = np.loadtxt(path, ndmin=2, comments="#")
    if data.shape[1] < 3:
        raise ConfigError("potential table needs columns r, V, K")
    lr = np.log(data[:, 0])

    def interp(col):
        return lambda r: np.interp(np.log(r), lr, data[:, col])

    q = interp(3) if data.shape[1] > 3 else Q
    return PotentialSpec(V=interp(1), K=interp(2), Q=q, origin=origin, infinity=infinity, label=str(path))


# -- output helpers ---------------------------------------------------------------


def _fmt(x) -> str:
    return vf._fmt(x)


def _write_rows(path: Path, header: List[str], rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


# -- commands --------------------------------------------------------------------


def cmd_exponents(cfg: RunConfig, out: Path, strict: bool = False, echo=print) -> int:
    N = cfg["N"]
    p = cfg["potential"]
    pot = cfg.potential()
    rows = []
    if p["kind"] == "power_law":
        try:
            w = power_law_report(N, p["a"])
        except HypothesisError as exc:
            echo(f"invalid configuration: {exc}")
            return EXIT_CONFIG
        label = f"a={p['a']}"
        lo, hi = (w.lo, w.hi) if w.kind == "interval" else (w.q2_threshold, w.q2_threshold)
        rows.append([N, label, float(lo), float(hi), w.kind, "2.2", "2.4"])
        if w.kind == "split_pair":
            echo(f"N={N} {label}: q1 in ({w.q1_window[0]}, {w.q1_window[1]}), q2 > {w.q2_threshold}")
        else:
            echo(f"N={N} {label}: {w.kind} ({w.lo}, {w.hi})")
    elif pot.origin is not None and pot.infinity is not None:
        o, i = pot.origin, pot.infinity
        w0 = window_origin_thm22(N, o)
        if i.gamma is not None and i.gamma <= 4:
            thr, ith = threshold_infinity_thm24(N, i), "2.4"
        else:
            thr, ith = threshold_infinity_thm23(N, i), "2.3"
        label = f"alpha0={o.alpha};beta0={o.beta};alphainf={i.alpha};betainf={i.beta}"
        lo = float(w0.lo) if not w0.is_empty else math.nan
        hi = float(w0.hi) if not w0.is_empty else math.nan
        rows.append([N, label, lo, hi, w0.kind, "2.2", ith])
        rows.append([N, label, float(thr.value), math.inf, "half_line", "2.2", ith])
        echo(f"N={N} origin window {w0.kind} ({lo}, {hi}); q2 > {thr.value} ({thr.term})")
    else:
        echo("invalid configuration: exponents need growth parameters at both ends")
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "windows.csv", ["N", "a_or_params", "q_lo", "q_hi", "kind", "origin_thm", "infinity_thm"], rows)

    ex = cfg.nonlinearity().exponents
    if ex is not None and pot.origin is not None and pot.infinity is not None:
        cert = certify_pair(N, pot.origin, pot.infinity, ex[0], ex[1])
        echo(f"nonlinearity exponents {ex}: {'certified' if cert.certified else 'NOT certified: ' + str(cert.failing)}")
        if strict and not cert.certified:
            return EXIT_UNCERTIFIED
    return EXIT_OK


def _decay_reports(cfg: RunConfig, grid, sp, u, tol, scale):
    """Applicable bound checks for one field as ``(kind, report)`` pairs."""
    v = cfg["verify"]
    reps = [
        vf.check_pointwise(grid, sp.V, u, "stima1", tol, scale),
        vf.check_pointwise(grid, sp.V, u, "stima2", tol, scale),
    ]
    spec = sp.spec
    gi = spec.infinity.gamma if spec is not None and spec.infinity is not None else None
    g0 = spec.origin.gamma if spec is not None and spec.origin is not None else None
    if gi is not None and gi <= 14 / 3:
        try:
            reps.append(vf.check_decay_outer(grid, sp, u, gi, float(v["R_outer"]), tol, scale))
        except HypothesisError as exc:
            log.info("outer bound skipped: %s", exc)
    if g0 is not None and g0 >= 4:
        try:
            reps.append(vf.check_decay_inner(grid, sp, u, float(v["R_inner"]), g0, tol, scale))
        except HypothesisError as exc:
            log.info("inner bound skipped: %s", exc)
    return reps


def cmd_solve(cfg: RunConfig, out: Path, strict: bool = False, echo=print) -> int:
    grid = cfg.grid()
    nl = cfg.nonlinearity()
    try:
        sp = cfg.potential().sample(grid)
    except ValueError as exc:
        echo(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    scfg = cfg.solver_config()
    method = cfg["solver"]["method"]
    ex = nl.exponents
    if method == "auto":
        method = "mountain_pass" if ex is not None and ex[0] > 2 else "minimize"
    if strict and ex is not None and sp.spec.origin is not None and sp.spec.infinity is not None:
        cert = certify_pair(cfg["N"], sp.spec.origin, sp.spec.infinity, *ex)
        if not cert.certified:
            echo(f"exponents not certified: {cert.failing}")
            return EXIT_UNCERTIFIED
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if method == "minimize":
                res = minimize(grid, sp, nl, scfg)
            else:
                res = mountain_pass(grid, sp, nl, scfg)
        for w in caught:
            echo(f"warning: {w.message}")
    except (SolverError, DomainError, HypothesisError, AssertionError) as exc:
        echo(f"solver failure: {type(exc).__name__}: {exc}")
        return EXIT_SOLVER

    out.mkdir(parents=True, exist_ok=True)
    u = res.u.values
    _write_rows(out / "solution.csv", ["r", "u", "laplacian_u"], zip(grid.nodes, u, laplacian(grid, u)))
    e = res.energy
    # below the solver tolerance u cannot be told apart from 0
    trivial = math.sqrt(max(e.norm_sq, 0.0)) <= scfg.grad_tol
    _write_rows(
        out / "result.csv",
        ["method", "classification", "half_norm_sq", "K_term", "Q_term", "energy", "residual_HV",
         "residual_L2", "iterations", "nonneg_violation", "nehari_gap", "trivial"],
        [[method, res.classification, e.half_norm_sq, e.K_term, e.Q_term, e.total, res.residual,
          res.residual_L2, res.iterations, res.nonneg_violation,
          res.nehari_gap if not trivial else 0.0, trivial]],
    )
    v = cfg["verify"]
    reps = _decay_reports(cfg, grid, sp, u, float(v["tol"]), float(v["constant_scale"]))
    vf.write_bounds_csv(out / "decay.csv", [("solution", r) for r in reps])
    echo(
        f"{res.classification}: I(u)={e.total:.10g} residual={res.residual:.3e} "
        f"iterations={res.iterations}{' (trivial solution u=0)' if trivial else ''}"
    )
    if res.classification == "failed":
        echo("solver failure: residual above grad_tol")
        return EXIT_SOLVER
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path, strict: bool = False, echo=print) -> int:
    grid = cfg.grid()
    try:
        sp = cfg.potential().sample(grid)
    except ValueError as exc:
        echo(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    v = cfg["verify"]
    seed = cfg["seed"]
    fields_ = vf.random_bump_fields(grid, int(v["fields"]), seed)
    rows = []
    for i, u in enumerate(fields_):
        for rep in _decay_reports(cfg, grid, sp, u, float(v["tol"]), float(v["constant_scale"])):
            rows.append((f"field{i}", rep))
    estimates = []
    for e in v["estimates"]:
        fn = vf.estimate_S if e["functional"] in ("S0", "Sinf") else vf.estimate_R
        estimates.append(
            fn(grid, sp, float(e["q"]), [float(r) for r in e["radii"]], int(e["trials"]), e["functional"], seed)
        )
    out.mkdir(parents=True, exist_ok=True)
    vf.write_bounds_csv(out / "bounds.csv", rows)
    vf.write_estimates_csv(out / "estimates.csv", estimates)
    failed = [(lab, r) for lab, r in rows if not r.passed]
    echo(f"{len(rows)} bound checks, {len(failed)} failed")
    for est in estimates:
        echo(f"{est.functional}(q={est.q}): slope {est.trend_slope:.4g}")
    return EXIT_BOUND if failed else EXIT_OK


COMMANDS = {"exponents": cmd_exponents, "solve": cmd_solve, "verify": cmd_verify}


def cmd_sweep(cfg: RunConfig, out: Path, strict: bool = False, jobs: int = 1, echo=print) -> int:
    sw = cfg["sweep"]
    if sw["command"] not in COMMANDS:
        echo(f"invalid configuration: unknown sweep command {sw['command']!r}")
        return EXIT_CONFIG
    try:
        cfgs = [cfg.with_value(sw["key"], val) for val in sw["values"]]
    except ConfigError as exc:
        echo(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    fn = COMMANDS[sw["command"]]

    def job(k):
        buf = io.StringIO()
        code = fn(cfgs[k], out / f"run{k:03d}", strict, lambda s: print(s, file=buf))
        return code, buf.getvalue()

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        results = list(ex.map(job, range(len(cfgs))))
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(
        out / "sweep.csv",
        ["run", "key", "value", "exit_code"],
        [[f"run{k:03d}", sw["key"], val, code] for k, (val, (code, _)) in enumerate(zip(sw["values"], results))],
    )
    for k, (code, text) in enumerate(results):
        echo(f"run{k:03d} {sw['key']}={sw['values'][k]} exit {code}")
        for line in text.splitlines():
            echo(f"  {line}")
    return max(code for code, _ in results) if results else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radbilap", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=["exponents", "solve", "verify", "sweep"])
    ap.add_argument("--config", type=Path, help="YAML configuration file")
    ap.add_argument("--jobs", type=int, default=1, help="worker threads for sweep")
    ap.add_argument("--seed", type=int, help="master seed (overrides config)")
    ap.add_argument("--out", type=Path, help="output directory (overrides config)")
    ap.add_argument("--strict", action="store_true", help="fail on uncertified exponents")
    ap.add_argument("--print-defaults", action="store_true", help="print the default config and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.print_defaults:
        sys.stdout.write(yaml.safe_dump(DEFAULTS, sort_keys=True))
        return EXIT_OK
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        text = args.config.read_text() if args.config else "{}"
        cfg = RunConfig.from_yaml(text)
        if args.seed is not None:
            cfg = cfg.with_value("seed", args.seed)
        if args.out is not None:
            cfg = cfg.with_value("out", str(args.out))
    except (OSError, ConfigError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["out"])
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.strict, args.jobs)
        return COMMANDS[args.command](cfg, out, args.strict)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
