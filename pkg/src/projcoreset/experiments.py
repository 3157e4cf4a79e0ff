"""Batch experiments that emit CSV tables.

Three kinds are supported:

``curves``
    sensitivity sampling against uniform sampling over a list of sample sizes.
``dimension``
    one instance rotated into several ambient dimensions; subspace totals per ``d``.
``growth``
    total sensitivity as ``n`` grows, on integer grids or the lower-bound instance.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .coreset import draw, uniform_profile
from .errors import InputError
from .evaluation import evaluate
from .fitters import fit
from .geometry import FAMILIES, DistanceConfig, PointSet, random_rotation
from .generators import GENERATORS, generate
from .io import canonical_json, config_hash
from .sensitivity import lowerbound_total, sens_empirical, sens_kcenters, sens_subspace

KINDS = ("curves", "dimension", "growth")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    family: str = "kcenters"
    k: int = 1
    j: int = 0
    z: float = 2.0
    epsilon: float = 0.1
    n: int = 1000
    d: int = 2
    generator: dict = field(default_factory=lambda: {"kind": "mixture"})
    seeds: tuple = (0,)
    sizes: tuple = ()
    dims: tuple = ()
    ns: tuple = ()
    n_random: int = 50
    n_adversarial: int = 2
    budget: int = 256
    experimental_z: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"experiment kind must be one of {KINDS}")
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}")
        if self.generator.get("kind") not in GENERATORS:
            raise InputError(f"generator kind must be one of {GENERATORS}")
        DistanceConfig(self.z, self.experimental_z)  # rejects z < 1 unless experimental
        if not 0 < self.epsilon <= 1:
            raise InputError("epsilon must lie in (0, 1]")
        for name in ("k", "n", "d"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be >= 1")
        if self.j < 0:
            raise InputError("j must be >= 0")
        for name in ("seeds", "sizes", "dims", "ns"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def cfg(self) -> DistanceConfig:
        return DistanceConfig(self.z, self.experimental_z)

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("seeds", "sizes", "dims", "ns"):
            out[name] = list(out[name])
        return out

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InputError(f"bad experiment config: {exc}") from None

    @classmethod
    def from_json(cls, text: str, experimental_z: bool = False) -> "ExperimentConfig":
        """Parse a config; ``experimental_z=True`` enables z < 1 regardless of the file."""
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise InputError("config must be a JSON object")
        if experimental_z:
            obj["experimental_z"] = True
        return cls.from_dict(obj)


def _bounds(P: PointSet, family: str, cfg: DistanceConfig, k: int, j: int, seed: int, c: float | None = None):
    """Closed-form profile for kcenters and jflat; ``None`` for families without one."""
    if family == "kcenters":
        return sens_kcenters(P, fit(P, family, cfg, k=k, seed=seed, restarts=3), cfg, c=c)
    if family == "jflat":
        return sens_subspace(P, fit(P, family, cfg, j=j), cfg, c=c)
    return None


def _curves(cfg: ExperimentConfig) -> list[dict]:
    if cfg.family not in ("kcenters", "jflat"):
        raise InputError("curves need a family with a closed-form bound (kcenters or jflat)")
    dist = cfg.cfg
    rows = []
    P = generate(cfg.generator, cfg.n, cfg.d, cfg.k, cfg.j, seed=cfg.seeds[0] if cfg.seeds else 0)
    prof = _bounds(P, cfg.family, dist, cfg.k, cfg.j, seed=0)
    sizes = cfg.sizes or (max(1, P.n // 10),)
    for seed in cfg.seeds:
        for m in sizes:
            for method, profile in (("sensitivity", prof), ("uniform", uniform_profile(P))):
                S = draw(P, profile, m, seed=seed)
                rep = evaluate(P, S, cfg.family, dist, k=cfg.k, j=cfg.j, n_random=cfg.n_random,
                               n_adversarial=cfg.n_adversarial, seed=seed)
                rows.append({"seed": seed, "m": m, "method": method, "total": profile.total,
                             "max_error": rep["max_error"], "median_error": rep["quantiles"]["0.5"]})
    return rows


def _dimension(cfg: ExperimentConfig) -> list[dict]:
    if cfg.family != "jflat":
        raise InputError("the dimension sweep uses the jflat family")
    dims = cfg.dims or (cfg.d,)
    base = generate(cfg.generator, cfg.n, min(dims), cfg.k, cfg.j, seed=cfg.seeds[0] if cfg.seeds else 0)
    rows = []
    for d in dims:
        rng = np.random.default_rng([d, 17])
        R = random_rotation(d, rng)[: base.d]
        P = PointSet(base.coords @ R, base.weights)
        prof = _bounds(P, "jflat", cfg.cfg, 1, cfg.j, seed=0, c=1.0)
        rows.append({"d": d, "raw_total": prof.raw_total, "total": prof.total, "reduction_dim": prof.reduction_dim})
    return rows


def _growth(cfg: ExperimentConfig) -> list[dict]:
    ns = cfg.ns or (cfg.n,)
    rows = []
    for n in ns:
        if cfg.generator["kind"] == "lowerbound":
            rows.append({"n": n, "lowerbound_total": lowerbound_total(n)})
            continue
        P = generate(cfg.generator, n, cfg.d, cfg.k, cfg.j, seed=cfg.seeds[0] if cfg.seeds else 0)
        row = {"n": n}
        prof = _bounds(P, cfg.family, cfg.cfg, cfg.k, cfg.j, seed=0)
        row["closed_form_total"] = None if prof is None else prof.total
        emp = sens_empirical(P, cfg.family, cfg.cfg, k=cfg.k, j=cfg.j, budget=cfg.budget,
                             seed=cfg.seeds[0] if cfg.seeds else 0, structured=False)
        row["empirical_total"] = emp.total
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    return {"curves": _curves, "dimension": _dimension, "growth": _growth}[cfg.kind](cfg)


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    for r in rows[1:]:
        header += [key for key in r if key not in header]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({key: ("" if r.get(key) is None else _fmt(r.get(key))) for key in header})
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v
