"""Config-driven experiment runner: corpus management, dispatch and CSV/JSON reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from . import grammar
from .bwu_norms import BwuSpec, bwu_norm
from .decompose import decomposition_sweep
from .grid import (CATALOG, GridFunction, RadiusGrid, load_grid_function, make_grid_function,
                   save_grid_function)
from .hardy import (HardyGrid, HardyPair, PowerLaw, hardy_inequality_ratio, indicator,
                    muckenhoupt_condition)
from .interpolate import CoupleSpec, HypothesisError, sandwich_check
from .operators import OperatorHypothesisError, boundedness_table
from .weights import (check_almost_decreasing, check_doubling, check_membership_Wu,
                      check_theta_class, check_W_star)

log = logging.getLogger(__name__)

KINDS = ("norm", "classcheck", "decompose", "sandwich", "operator", "hardy", "suite")
GRID_KINDS = ("norm", "decompose", "sandwich", "operator")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


DEFAULT_CORPUS = (
    {"name": "indicator_cube", "params": [1.0]},
    {"name": "indicator_cube", "params": [0.5]},
    {"name": "step", "params": [1.0]},
    {"name": "step", "params": [2.0]},
    {"name": "bump", "params": [1.0]},
    {"name": "bump", "params": [2.0]},
    {"name": "sine", "params": [math.pi, 2.0]},
    {"name": "sine", "params": [2 * math.pi, 1.0]},
    {"name": "power_abs", "params": [0.5]},
    {"name": "power_abs", "params": [-0.25, 2.0]},
    {"name": "random_field", "params": [2.0], "seed": 1},
    {"name": "random_field", "params": [1.0], "seed": 2},
)


def make_corpus(spec="default", dim: int = 1, h: float = 1 / 64, R_max: float = 8.0,
                files=()) -> list[GridFunction]:
    """Catalogue entries (dicts with name, params, seed) plus grid files, in order."""
    entries = list(DEFAULT_CORPUS) if spec == "default" else list(spec or ())
    if not entries and not files:
        raise ConfigError("corpus: empty corpus spec")
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or "name" not in e:
            raise ConfigError(f"corpus[{i}]: entry needs a 'name'")
        if e["name"] not in CATALOG:
            raise ConfigError(f"corpus[{i}].name: unknown catalogue entry {e['name']!r}")
        seed = e.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"corpus[{i}].seed: must be a nonnegative integer")
        try:
            out.append(make_grid_function(e["name"], list(e.get("params", [])), dim, h, R_max,
                                          seed=seed, label=e.get("label")))
        except ValueError as exc:
            raise ConfigError(f"corpus[{i}]: {exc}") from exc
    for path in files:
        try:
            out.append(load_grid_function(path))
        except OSError as exc:
            raise ConfigError(f"corpus.files: {exc}") from exc
    return out


def write_corpus(corpus, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, f in enumerate(corpus):
        p = out_dir / f"{i:02d}_{_slug(f.label)}"
        save_grid_function(f, p)
        paths.append(p)
    return paths


def _slug(s: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in s)[:60]


# --- config -----------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    grid: dict = field(default_factory=lambda: {"dim": 1, "h": 1 / 64, "R_max": 8.0})
    corpus: Any = "default"
    corpus_files: tuple = ()
    window: dict = field(default_factory=lambda: {"r_min": 1 / 16, "r_max": 8.0,
                                                  "rho": 2 ** 0.25})
    params: dict = field(default_factory=dict)
    out_dir: str = "reports"
    tolerances: dict = field(default_factory=dict)
    expect: str = "pass"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: must be one of {', '.join(KINDS)}")
        if self.expect not in ("pass", "fail"):
            raise ConfigError("expect: must be 'pass' or 'fail'")
        for key in ("dim", "h", "R_max"):
            if key not in self.grid:
                raise ConfigError(f"grid.{key}: missing")
        for key in ("r_min", "r_max", "rho"):
            if key not in self.window:
                raise ConfigError(f"window.{key}: missing")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corpus_files"] = list(self.corpus_files)
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a mapping")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"{sorted(extra)[0]}: unknown config field")
        if "kind" not in d:
            raise ConfigError("kind: missing")
        d = dict(d)
        d["corpus_files"] = tuple(d.get("corpus_files", ()))
        return cls(**d)

    @classmethod
    def from_yaml(cls, text: str) -> ExperimentConfig:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not valid YAML ({exc})") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            return cls.from_yaml(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc})") from exc

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_yaml().encode()).hexdigest()

    def radii(self) -> RadiusGrid:
        w = self.window
        try:
            radii = RadiusGrid.from_window(float(w["r_min"]), float(w["r_max"]), float(w["rho"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"window: {exc}") from exc
        if self.kind in GRID_KINDS and radii.r_max > float(self.grid["R_max"]) * (1 + 1e-12):
            raise ConfigError(f"window.r_max: {radii.r_max:g} exceeds grid.R_max="
                              f"{self.grid['R_max']}")
        return radii

    def refined(self) -> ExperimentConfig:
        g = dict(self.grid, h=float(self.grid["h"]) / 2)
        w = dict(self.window, rho=math.sqrt(float(self.window["rho"])))
        return replace(self, grid=g, window=w)

    def make_corpus(self) -> list[GridFunction]:
        g = self.grid
        return make_corpus(self.corpus, int(g["dim"]), float(g["h"]), float(g["R_max"]),
                           self.corpus_files)


@dataclass
class RunReport:
    kind: str
    rows: list
    passed: bool
    config_hash: str
    certificates: list = field(default_factory=list)
    deltas: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    failures: list = field(default_factory=list)

    def csv_text(self) -> str:
        cols: list[str] = ["row_id"]
        for r in self.rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for i, r in enumerate(self.rows):
            w.writerow({"row_id": f"{self.config_hash[:12]}:{i}",
                        **{k: _cell(v) for k, v in r.items()}})
        return buf.getvalue()

    def summary(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "config_hash": self.config_hash,
                "rows": len(self.rows), "certificates": self.certificates,
                "deltas": self.deltas, "failures": self.failures,
                "wall_clock_s": round(self.wall_clock, 3),
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.kind}-{self.config_hash[:12]}"
        c, j = out / f"{stem}.csv", out / f"{stem}.json"
        c.write_text(self.csv_text())
        j.write_text(json.dumps(self.summary(), indent=2, default=_cell) + "\n")
        return c, j


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(_cell(x)) for x in v)
    return v


# --- experiments ------------------------------------------------------------------------

def _p(cfg: ExperimentConfig, key: str, default=None, required=False):
    if key in cfg.params:
        return cfg.params[key]
    if required:
        raise ConfigError(f"params.{key}: missing")
    return default


def _u(x) -> float:
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(x)


def _g(builder, text, where):
    try:
        return builder(text)
    except (grammar.GrammarError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _run_norm(cfg, threads):
    E = _g(grammar.build_space, _p(cfg, "space", required=True), "params.space")
    w = _g(grammar.build_weight, _p(cfg, "weight", required=True), "params.weight")
    spec = BwuSpec(E, w, _u(_p(cfg, "u", "inf")), bool(_p(cfg, "homogeneous", True)),
                   cfg.radii(), tail=bool(_p(cfg, "tail", False)))
    corpus = cfg.make_corpus()
    vals = _pmap(lambda f: bwu_norm(f, spec), corpus, threads)
    rows = [{"f": f.label, "space": E.label, "weight": w.spec(), "u": spec.u, "value": v}
            for f, v in zip(corpus, vals)]
    failures = []
    expected = _p(cfg, "expect_value")
    if expected is not None:
        tol = float(cfg.tolerances.get("value", 1e-9))
        for r in rows:
            r["expected"] = float(expected)
            if not abs(r["value"] - float(expected)) <= tol:
                failures.append(f"{r['f']}: {r['value']!r} != {expected} (tol {tol})")
    return rows, [], failures


def _run_classcheck(cfg, threads):
    probe = cfg.radii()
    rows, failures = [], []
    for i, text in enumerate(_p(cfg, "weights", [])):
        w = _g(grammar.build_weight, text, f"params.weights[{i}]")
        checks = {"doubling": check_doubling(w, probe),
                  "almost_decreasing": check_almost_decreasing(w, probe),
                  "W_star": check_W_star(w, probe)}
        for u in _p(cfg, "u_values", ["inf"]):
            checks[f"W^{u}"] = check_membership_Wu(w, _u(u), probe)
        for name, rep in checks.items():
            rows.append({"object": w.spec(), "check": name, "verdict": bool(rep.verdict),
                         "constant": float(rep.constant), "detail": rep.detail})
    for i, text in enumerate(_p(cfg, "thetas", [])):
        th = _g(grammar.build_theta, text, f"params.thetas[{i}]")
        rep = check_theta_class(th, probe)
        rows.append({"object": th.spec(), "check": "Theta", "verdict": bool(rep.verdict),
                     "constant": float(rep.constant), "detail": rep.detail})
    expect = _p(cfg, "expect_verdicts")
    if expect is not None:
        got = [r["verdict"] for r in rows]
        if list(map(bool, expect)) != got:
            failures.append(f"verdicts {got} != expected {expect}")
    return rows, [], failures


def _run_decompose(cfg, threads):
    radii = cfg.radii()
    spaces = [_g(grammar.build_space, s, f"params.spaces[{i}]")
              for i, s in enumerate(_p(cfg, "spaces", required=True))]
    corpus = cfg.make_corpus()
    bound = float(cfg.tolerances.get("constant_bound", 10.0))
    var_bound = float(cfg.tolerances.get("variation_bound", 2.0))

    def one(job):
        f, E = job
        sw = decomposition_sweep(f, E, radii)
        cs = [max(c) for c in sw["per_r"].values()]
        var = max((max(a / b, b / a) for a, b in zip(cs, cs[1:])), default=1.0)
        return {"f": f.label, "space": E.label, "C_sup": max(cs, default=1.0),
                "variation": var, "skipped": len(sw["skipped"])}
    rows = _pmap(one, [(f, E) for E in spaces for f in corpus], threads)
    failures = [f"{r['f']} {r['space']}: C={r['C_sup']:.4g} var={r['variation']:.4g}"
                for r in rows if not (r["C_sup"] <= bound and r["variation"] <= var_bound)]
    return rows, [], failures


def _couple_from(t: dict, radii, i: int):
    where = f"params.tuples[{i}]"
    E = _g(grammar.build_space, t.get("space", "Lp{p=1}"), f"{where}.space")
    hom = bool(t.get("homogeneous", True))
    w0 = _g(grammar.build_weight, t["w0"], f"{where}.w0")
    w1 = _g(grammar.build_weight, t["w1"], f"{where}.w1")
    th = _g(grammar.build_theta, t["theta"], f"{where}.theta")
    c = CoupleSpec(BwuSpec(E, w0, _u(t.get("u0", "inf")), hom, radii),
                   BwuSpec(E, w1, _u(t.get("u1", "inf")), hom, radii))
    return c, th, _u(t.get("u", "inf"))


def _run_sandwich(cfg, threads):
    radii = cfg.radii()
    corpus = cfg.make_corpus()
    rows, certs, failures = [], [], []
    for i, t in enumerate(_p(cfg, "tuples", required=True)):
        couple, th, u = _couple_from(t, radii, i)
        expect = t.get("expect", "pass")
        try:
            res = _pmap(lambda f: sandwich_check(f, couple, th, u), corpus, threads)
        except HypothesisError as exc:
            rows.append({"tuple": i, "f": "", "status": f"refused: {exc}"})
            if expect != "fail":
                failures.append(f"tuple {i}: {exc}")
            continue
        certs.extend(res[0].certificates if res else ())
        for f, r in zip(corpus, res):
            rows.append({"tuple": i, "f": f.label, "status": "ok", "lower_C": r.lower_C,
                         "upper_C": r.upper_C, "bwu": r.bwu, "interp": r.interp,
                         "swapped": r.swapped, "certificates": list(r.certificates)})
            if not (math.isfinite(r.lower_C) and math.isfinite(r.upper_C)):
                failures.append(f"tuple {i} {f.label}: non-finite sandwich constant")
        if expect == "fail":
            failures.append(f"tuple {i}: expected refusal but hypotheses passed")
    return rows, sorted(set(certs)), failures


def _run_operator(cfg, threads):
    radii = cfg.radii()
    corpus = cfg.make_corpus()
    rows, certs, failures = [], [], []
    tol = float(cfg.tolerances.get("refinement", 0.2))
    for i, t in enumerate(_p(cfg, "tuples", required=True)):
        where = f"params.tuples[{i}]"
        op = _g(grammar.build_operator, t["operator"], f"{where}.operator")
        w = _g(grammar.build_weight, t["weight"], f"{where}.weight")
        u = _u(t.get("u", 2))
        hom = bool(t.get("homogeneous", True))
        src = BwuSpec(_g(grammar.build_space, t["source"], f"{where}.source"), w, u, hom, radii)
        tgt = BwuSpec(_g(grammar.build_space, t["target"], f"{where}.target"), w, u, hom, radii)
        expect = t.get("expect", "pass")
        try:
            rep = boundedness_table(op, corpus, src, tgt, refine=bool(t.get("refine", True)))
        except OperatorHypothesisError as exc:
            rows.append({"tuple": i, "f": "", "status": f"refused: {exc}"})
            if expect != "fail":
                failures.append(f"tuple {i}: {exc}")
            continue
        certs.extend(rep.certificates)
        for r in rep.rows:
            rows.append({"tuple": i, "status": "ok", **r, "certificates": list(rep.certificates)})
        if not math.isfinite(rep.sup):
            failures.append(f"tuple {i}: sup ratio is infinite")
        for k in ("h/2", "sqrt_rho"):
            if k in rep.deltas and rep.deltas[k] > tol:
                failures.append(f"tuple {i}: refinement delta {k}={rep.deltas[k]:.3g} > {tol}")
        if expect == "fail":
            failures.append(f"tuple {i}: expected refusal but hypotheses passed")
    return rows, sorted(set(certs)), failures


def _power_law(x, where) -> PowerLaw:
    try:
        c, e = x
        return PowerLaw(float(c), float(e))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected [c, e]") from exc


def _run_hardy(cfg, threads):
    rows, failures = [], []
    radii = cfg.radii()
    for i, t in enumerate(_p(cfg, "pairs", required=True)):
        where = f"params.pairs[{i}]"
        pair = HardyPair(_power_law(t.get("U"), f"{where}.U"), _power_law(t.get("V"), f"{where}.V"),
                         _u(t.get("p", 2)), t.get("direction", "F_star_up"))
        cond = muckenhoupt_condition(pair, radii)
        lo, hi = float(t.get("t_lo", 1 / 64)), float(t.get("t_hi", 64))
        for a, b in t.get("tests", [[1, 2]]):
            r1 = hardy_inequality_ratio(pair, indicator(a, b), HardyGrid(lo, hi))
            r10 = hardy_inequality_ratio(pair, indicator(a, b), HardyGrid(lo, 10 * hi))
            rows.append({"pair": i, "test": f"1[{a},{b})", "condition": cond, "ratio": r1,
                         "ratio_ext10": r10, "growth": r10 / r1 if r1 else math.nan})
            if math.isfinite(cond) and r1 > 4 * cond:
                failures.append(f"pair {i}: ratio {r1:.4g} > 4 x condition {cond:.4g}")
    return rows, [], failures


def _run_suite(cfg, threads):
    from .suite import run_suite
    results = run_suite(quick=bool(_p(cfg, "quick", False)))
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
            for r in results]
    failures = [f"criterion {r.number}: {r.detail}" for r in results if not r.passed]
    return rows, [], failures


_DISPATCH = {"norm": _run_norm, "classcheck": _run_classcheck, "decompose": _run_decompose,
             "sandwich": _run_sandwich, "operator": _run_operator, "hardy": _run_hardy,
             "suite": _run_suite}


def _numeric_deltas(rows, rows2) -> dict:
    out = {}
    for a, b in zip(rows, rows2):
        for k, v in a.items():
            v2 = b.get(k)
            if isinstance(v, float) and isinstance(v2, float) and v and math.isfinite(v) \
                    and math.isfinite(v2):
                out[k] = max(out.get(k, 0.0), abs(v2 / v - 1))
    return out


def run(cfg: ExperimentConfig, threads: int = 1, refine: bool = False,
        out_dir=None) -> RunReport:
    """Execute ``cfg``; with ``refine`` the run is echoed at h/2 and sqrt(rho) and the
    worst relative change per numeric column is reported."""
    t0 = time.perf_counter()
    rows, certs, failures = _DISPATCH[cfg.kind](cfg, threads)
    deltas = {}
    if refine and cfg.kind not in ("suite", "hardy", "classcheck"):
        rows2, _, _ = _DISPATCH[cfg.kind](cfg.refined(), threads)
        deltas = _numeric_deltas(rows, rows2)
    passed = not failures if cfg.expect == "pass" else bool(failures)
    rep = RunReport(cfg.kind, rows, passed, cfg.config_hash(), certs, deltas,
                    time.perf_counter() - t0, failures)
    if out_dir is not None:
        rep.write(out_dir)
    return rep
