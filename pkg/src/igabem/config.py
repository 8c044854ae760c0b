"""Run configuration, result records, single runs and sweeps."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from .assembly import QuadratureConfig, QuadratureWarning, assemble, solve
from .geometry import MultiPatchSurface
from .post import BoundaryProblem, BoundarySolution, evaluate_field, pointwise_error_eP, solution_error
from .space import build_space, collocation_points

log = logging.getLogger(__name__)

PROBLEM_IDS = ("pulsating_sphere", "rigid_scattering", "torus_interior", "custom")
CSV_COLUMNS = ("n", "h", "N_DOF", "e_L2", "runtime_s")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__("%s: %s" % (field_name, message))
        self.field = field_name


@dataclass
class RunConfig:
    """Parameters of one benchmark run.

    ``elements`` is the number of elements per direction on every patch
    (an int or a pair); for ``torus_interior`` an int n means (3n, n),
    so n = 3 is the starting mesh.  ``alpha`` sets every node count to
    12 alpha + 1.  ``p`` (if given) sets both QI degrees.  ``c`` defaults
    to 0.25 for the pulsating sphere and 0.1 otherwise.
    """

    problem: str = "rigid_scattering"
    kappa: float = 2.0
    degree: int = 2
    elements: object = 5
    knots: list | None = None
    continuity: str | None = None
    p_reg: int = 4
    p_sing: int = 2
    p: int | None = None
    m: int = 2
    alpha: int | None = None
    nu_reg: int | None = None
    nu_sing: int | None = None
    nu_rem: int | None = None
    nu_rhs: int | None = None
    c: float | None = None
    omega: float = 0.5
    amplitude: float = 1.0
    direction: list = field(default_factory=lambda: [1.0, 0.0, 0.0])
    circle_radius: float = 10.0
    circle_points: int = 72
    geometry: str | None = None
    source: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    domain: str = "exterior"
    out: str = "results"
    dump_field: bool = True
    strict: bool = False
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    # validation -----------------------------------------------------------
    def validate(self) -> None:
        if self.problem not in PROBLEM_IDS:
            raise ConfigError("problem", "must be one of %s" % (PROBLEM_IDS,))
        _num("kappa", self.kappa, 0.0, 1e3)
        if self.problem == "rigid_scattering" and not self.kappa > 0:
            raise ConfigError("kappa", "scattering needs a positive wavenumber")
        _int("degree", self.degree, 0, 6)
        el = np.atleast_1d(self.elements)
        if el.size not in (1, 2) or not np.issubdtype(el.dtype, np.integer) or el.min() < 1:
            raise ConfigError("elements", "positive integer or pair of positive integers expected")
        if self.continuity not in (None, "C0", "discontinuous"):
            raise ConfigError("continuity", "must be 'C0' or 'discontinuous'")
        if self.continuity == "C0" and self.degree < 1:
            raise ConfigError("continuity", "C0 spaces need degree >= 1")
        for name in ("p_reg", "p_sing"):
            _int(name, getattr(self, name), 1, 6)
        if self.p is not None:
            _int("p", self.p, 1, 6)
        _int("m", self.m, 1, 3)
        if self.alpha is not None:
            _int("alpha", self.alpha, 1, 20)
        for name in ("nu_reg", "nu_sing", "nu_rem", "nu_rhs"):
            if getattr(self, name) is not None:
                _int(name, getattr(self, name), 2, 401)
        if self.c is not None:
            _num("c", self.c, 0.0, 1.0, open_=True)
        _num("omega", self.omega, 0.0, 1.0, open_=True)
        _num("circle_radius", self.circle_radius, 0.0, 1e6, open_=True)
        _int("circle_points", self.circle_points, 1, 100000)
        if len(self.direction) != 3 or np.linalg.norm(self.direction) == 0:
            raise ConfigError("direction", "nonzero 3-vector expected")
        if self.problem == "custom":
            if self.geometry is None:
                raise ConfigError("geometry", "custom problems need a geometry file")
            if self.domain not in ("interior", "exterior"):
                raise ConfigError("domain", "must be 'interior' or 'exterior'")
            if len(self.source) != 3:
                raise ConfigError("source", "3-vector expected")
        if not isinstance(self.sweep, dict):
            raise ConfigError("sweep", "mapping from field name to a list of values expected")
        for k, vals in self.sweep.items():
            if k not in {f.name for f in dataclasses.fields(self)} or k == "sweep":
                raise ConfigError("sweep", "unknown field %r" % k)
            if not isinstance(vals, list) or not vals:
                raise ConfigError("sweep", "values of %r must be a nonempty list" % k)

    @classmethod
    def preset(cls, problem: str, **overrides) -> "RunConfig":
        """Settings of the reference experiments for each benchmark problem."""
        base = {
            "pulsating_sphere": dict(kappa=1.0, degree=0, elements=4, p=2, m=2, alpha=1, c=0.25),
            "rigid_scattering": dict(kappa=2.0, degree=2, elements=5, p_reg=4, p_sing=2, m=2, c=0.1),
            "torus_interior": dict(kappa=2.0, degree=2, elements=3, p_reg=4, p_sing=2, m=2, c=0.1),
            "custom": dict(kappa=1.0, degree=2, elements=4, c=0.1),
        }
        if problem not in base:
            raise ConfigError("problem", "must be one of %s" % (PROBLEM_IDS,))
        d = dict(base[problem], problem=problem)
        if problem == "torus_interior" and overrides.get("degree") == 3:
            d.update(m=3, nu_rem=13)
        d.update(overrides)
        return cls.from_dict(d)

    # derived settings -----------------------------------------------------
    @property
    def threshold_constant(self) -> float:
        if self.c is not None:
            return float(self.c)
        return 0.25 if self.problem == "pulsating_sphere" else 0.1

    def quadrature(self) -> QuadratureConfig:
        p_reg = self.p if self.p is not None else self.p_reg
        p_sing = self.p if self.p is not None else self.p_sing
        nq = None if self.alpha is None else 12 * self.alpha + 1
        pick = (lambda v: v if v is not None else nq)
        return QuadratureConfig(p_reg=p_reg, p_sing=p_sing, m=self.m, c=self.threshold_constant,
                                nu_reg=pick(self.nu_reg), nu_sing=pick(self.nu_sing), nu_rem=pick(self.nu_rem),
                                nu_rhs=pick(self.nu_rhs))

    def element_counts(self) -> tuple:
        el = np.atleast_1d(self.elements)
        if el.size == 2:
            return int(el[0]), int(el[1])
        n = int(el[0])
        return (3 * n, n) if self.problem == "torus_interior" else (n, n)

    @property
    def h(self) -> float:
        if self.knots is not None:
            return float(max(np.diff(np.asarray(k, float)).max() for k in self.knots))
        return 1.0 / min(self.element_counts())

    def space_continuity(self) -> str:
        if self.continuity is not None:
            return self.continuity
        return "discontinuous" if self.degree == 0 else "C0"

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigError(k, "unknown configuration field")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", "invalid JSON (%s)" % exc) from None
        if not isinstance(d, dict):
            raise ConfigError("<file>", "top level must be an object")
        return cls.from_dict(d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def expand(self) -> list:
        """Configurations of a sweep (cartesian product over ``sweep``), or [self]."""
        if not self.sweep:
            return [self]
        out = [{}]
        for k, vals in self.sweep.items():
            out = [dict(o, **{k: v}) for o in out for v in vals]
        base = self.to_dict()
        base["sweep"] = {}
        return [RunConfig.from_dict(dict(base, **o)) for o in out]


def _int(name, v, lo, hi):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not lo <= v <= hi:
        raise ConfigError(name, "integer in [%d, %d] expected, got %r" % (lo, hi, v))


def _num(name, v, lo, hi, open_=False):
    if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)) or not np.isfinite(v):
        raise ConfigError(name, "finite number expected, got %r" % (v,))
    ok = lo < v < hi if open_ else lo <= v <= hi
    if not ok:
        raise ConfigError(name, "must lie in %s%g, %g%s" % ("(" if open_ else "[", lo, hi, ")" if open_ else "]"))


@dataclass
class ResultRecord:
    n: object
    h: float
    n_dof: int
    e_l2: float
    runtime_s: float
    condition: float
    e_p: list = field(default_factory=list)
    e_p_max: float | None = None
    warnings: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def row(self) -> dict:
        return {"n": self.n, "h": self.h, "N_DOF": self.n_dof, "e_L2": self.e_l2, "runtime_s": self.runtime_s}


# problems ---------------------------------------------------------------

def point_source_problem(surface: MultiPatchSurface, kappa: float, source, domain: str) -> BoundaryProblem:
    """Neumann problem whose solution is the field of a point source on the other side of the surface."""
    x0 = np.asarray(source, dtype=float)

    def u(x):
        return bm.monopole(kappa, np.asarray(x, float) - x0)

    def datum(y, n):
        return np.einsum("...c,...c->...", bm.monopole_gradient(kappa, y - x0), n)

    return BoundaryProblem(domain, "neumann", float(kappa), surface, datum, None, lambda y, n: u(y), u, "custom")


def make_problem(cfg: RunConfig) -> BoundaryProblem:
    if cfg.problem == "pulsating_sphere":
        return bm.pulsating_sphere_problem(cfg.kappa)
    if cfg.problem == "rigid_scattering":
        return bm.rigid_scattering_problem(cfg.kappa, cfg.amplitude, cfg.direction)
    if cfg.problem == "torus_interior":
        return bm.torus_interior_problem(cfg.kappa)
    surface = MultiPatchSurface.load(cfg.geometry)
    return point_source_problem(surface, cfg.kappa, cfg.source, cfg.domain)


# runs -------------------------------------------------------------------

def solve_config(cfg: RunConfig) -> tuple:
    """Assemble and solve; returns (solution, system)."""
    pb = make_problem(cfg)
    if cfg.knots is not None:
        space = build_space(pb.surface, cfg.degree, None, cfg.space_continuity(), breakpoints=cfg.knots)
    else:
        space = build_space(pb.surface, cfg.degree, cfg.element_counts(), cfg.space_continuity())
    points = collocation_points(space, omega=cfg.omega)
    qc = cfg.quadrature()
    system = assemble(pb, space, qc, points)
    alpha = solve(system)
    return BoundarySolution(pb, space, alpha, qc), system


def run(cfg: RunConfig, out_dir=None, tag: str | None = None) -> ResultRecord:
    """One run: solve, measure errors, write the record (and field dump) under ``out_dir``."""
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        sol, system = solve_config(cfg)
        runtime = time.perf_counter() - t0
        e_l2 = solution_error(sol)
        e_p = []
        if cfg.problem == "rigid_scattering":
            x = bm.equatorial_circle(cfg.circle_radius, cfg.circle_points)
            e_p = pointwise_error_eP(evaluate_field(sol, x), sol.problem.exact_field(x)).tolist()
    msgs = [str(w.message) for w in caught if issubclass(w.category, QuadratureWarning)]
    for w in caught:
        if not issubclass(w.category, QuadratureWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    for msg in msgs:
        log.warning(msg)
    n = cfg.elements if cfg.alpha is None else cfg.alpha
    rec = ResultRecord(n=n, h=cfg.h, n_dof=sol.space.n_dof, e_l2=float(e_l2), runtime_s=runtime,
                       condition=float(system.condition), e_p=e_p, e_p_max=max(e_p) if e_p else None,
                       warnings=msgs, stats=dataclasses.asdict(system.stats), config=cfg.to_dict())
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = tag or "%s_d%d_n%s" % (cfg.problem, cfg.degree, "x".join(map(str, np.atleast_1d(n))))
        (out / ("%s.json" % tag)).write_text(json.dumps(rec.to_dict(), indent=2))
        if cfg.dump_field:
            dump_surface_field(sol, out / ("%s_field.csv" % tag))
    return rec


def dump_surface_field(sol: BoundarySolution, path, n_per_element: int = 2) -> None:
    """CSV rows (patch, t1, t2, re, im, abs_err) of the computed unknown on a parameter grid."""
    exact = sol.problem.exact
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["patch", "t1", "t2", "re", "im", "abs_err"])
        for k, sp in enumerate(sol.space.spaces):
            t1 = _refined(sp.knots_u.breakpoints, n_per_element)
            t2 = _refined(sp.knots_v.breakpoints, n_per_element)
            vals = sol.space.evaluate_grid(sol.alpha, k, t1, t2).ravel()
            T1, T2 = (a.ravel() for a in np.meshgrid(t1, t2, indexing="ij"))
            if exact is not None:
                patch = sol.space.surface[k]
                y = patch.eval_point(T1, T2)
                nu, jac = patch.normal_and_jacobian(T1, T2)
                err = np.abs(vals - exact(y, nu / jac[:, None]))
            else:
                err = np.full(vals.size, np.nan)
            for a, b, v, e in zip(T1, T2, vals, err):
                wr.writerow([k, "%.12g" % a, "%.12g" % b, "%.16e" % v.real, "%.16e" % v.imag, "%.6e" % e])


def _refined(breaks: np.ndarray, n: int) -> np.ndarray:
    t = [np.linspace(a, b, n + 1)[:-1] for a, b in zip(breaks[:-1], breaks[1:])]
    return np.r_[np.concatenate(t), breaks[-1]]


def sweep(cfg: RunConfig, out_dir=None) -> list:
    """Run every configuration of the sweep and write the convergence table ``table.csv``."""
    records = []
    for i, c in enumerate(cfg.expand()):
        rec = run(c, out_dir, tag="run%03d" % i)
        log.info("n=%s N_DOF=%d e_L2=%.3e (%.1fs)", rec.n, rec.n_dof, rec.e_l2, rec.runtime_s)
        records.append(rec)
    if out_dir is not None:
        write_table(records, Path(out_dir) / "table.csv", list(cfg.sweep))
    return records


def write_table(records: list, path, extra: list = ()) -> None:
    extra = [k for k in extra if k not in ("elements", "alpha")]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(list(CSV_COLUMNS) + extra)
        for r in records:
            n = r.n if np.ndim(r.n) == 0 else "x".join(map(str, r.n))
            wr.writerow([n, "%.8g" % r.h, r.n_dof, "%.8e" % r.e_l2, "%.3f" % r.runtime_s]
                        + [r.config[k] for k in extra])


def fitted_order(h, e) -> float:
    """Least-squares slope of log e against log h."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])
