"""Parameter sweeps, figure-data grids and optimum search over the closed forms."""
from __future__ import annotations

import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytic import steady_moments
from .errors import EmptyFeasibleRegionError, ThresholdError
from .model import LaserParams

__all__ = [
    "PARAM_NAMES",
    "OBSERVABLES",
    "MASK_TOKEN",
    "Axis",
    "SweepSpec",
    "SweepResult",
    "OptimumResult",
    "run_sweep",
    "find_optimum",
    "golden_section",
    "figure_spec",
    "FIGURES",
    "fmt",
    "exact",
]

PARAM_NAMES = ("gain_a", "kappa", "omega", "eta", "theta")
OBSERVABLES = ("var_minus", "var_plus", "mean_photon")
MASK_TOKEN = "ABOVE_THRESHOLD"
_ALIASES = {"A": "gain_a", "a": "gain_a", "gain": "gain_a"}


def canonical_name(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in PARAM_NAMES:
        raise ValueError(f"unknown parameter {name!r}; expected one of {PARAM_NAMES}")
    return name


def fmt(x) -> str:
    """12 significant digits, the precision of every emitted number."""
    return f"{x + 0.0:.12g}"


def exact(x) -> str:
    """Shortest round-trip text for an input value (provenance headers)."""
    return repr(float(x))


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    num: int

    def __post_init__(self):
        object.__setattr__(self, "name", canonical_name(self.name))
        if self.num < 1:
            raise ValueError("an axis needs at least one point")

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """Parse ``name:start:stop:num``."""
        try:
            name, start, stop, num = text.split(":")
            return cls(name, float(start), float(stop), int(num))
        except ValueError as exc:
            raise ValueError(f"bad axis {text!r}, expected name:start:stop:num") from exc

    def values(self):
        return np.linspace(self.start, self.stop, self.num)

    def __str__(self):
        return f"{self.name}:{exact(self.start)}:{exact(self.stop)}:{self.num}"


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition for a sweep of one observable.

    A single-point axis (``num == 1``) is allowed for degenerate sweeps;
    multi-point axes must have at least two points.
    """

    axes: tuple
    fixed: dict
    observable: str = "var_minus"
    output: str | None = None

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis.parse(a) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        fixed = {canonical_name(k): float(v) for k, v in self.fixed.items()}
        fixed.setdefault("theta", 0.0)
        object.__setattr__(self, "fixed", fixed)
        names = [a.name for a in axes]
        if not names:
            raise ValueError("a sweep needs at least one axis")
        if len(set(names)) != len(names):
            raise ValueError(f"axes must reference distinct parameters, got {names}")
        if not (len(axes) == 1 and axes[0].num == 1) and any(a.num < 2 for a in axes):
            raise ValueError("every axis of a grid sweep needs at least 2 points")
        missing = set(PARAM_NAMES) - set(names) - set(fixed)
        if missing:
            raise ValueError(f"parameters neither fixed nor swept: {sorted(missing)}")
        clash = set(names) & set(fixed)
        if clash:
            raise ValueError(f"parameters both fixed and swept: {sorted(clash)}")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}")

    def provenance(self):
        out = {"observable": self.observable, "axis": ",".join(str(a) for a in self.axes)}
        for name in PARAM_NAMES:
            if name in self.fixed:
                out[name] = exact(self.fixed[name])
        return out


def _evaluate(params_kwargs, observable):
    params = LaserParams(**params_kwargs)
    try:
        moments = steady_moments(params)
    except ThresholdError:
        return None
    return getattr(moments, observable)


@dataclass
class SweepResult:
    axes: tuple
    coords: tuple
    values: np.ndarray
    mask: np.ndarray
    observable: str
    provenance: dict = field(default_factory=dict)

    def points(self):
        """Yield (coordinates, value-or-None) in row-major order."""
        for idx in itertools.product(*(range(len(c)) for c in self.coords)):
            coord = tuple(self.coords[k][i] for k, i in enumerate(idx))
            yield coord, (None if self.mask[idx] else float(self.values[idx]))

    def to_csv(self, out=None, header=None) -> str:
        buf = io.StringIO()
        meta = {"schema": "sweep/1", "version": __version__}
        meta.update(self.provenance)
        if header:
            meta.update(header)
        for key, value in meta.items():
            buf.write(f"# {key}={value}\n")
        buf.write(",".join([a.name for a in self.axes] + [self.observable]) + "\n")
        for coord, value in self.points():
            cells = [fmt(c) for c in coord]
            cells.append(MASK_TOKEN if value is None else fmt(value))
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if out is not None:
            with open(out, "w") as fh:
                fh.write(text)
        return text


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate the steady-state observable on every grid point.

    Points above threshold are masked instead of raising.
    """
    coords = tuple(a.values() for a in spec.axes)
    shape = tuple(len(c) for c in coords)
    names = [a.name for a in spec.axes]
    indices = list(itertools.product(*(range(n) for n in shape)))

    def job(idx):
        kwargs = dict(spec.fixed)
        for name, grid, i in zip(names, coords, idx):
            kwargs[name] = float(grid[i])
        return _evaluate(kwargs, spec.observable)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, indices))
    else:
        results = [job(idx) for idx in indices]

    values = np.full(shape, np.nan)
    mask = np.zeros(shape, dtype=bool)
    for idx, value in zip(indices, results):
        if value is None:
            mask[idx] = True
        else:
            values[idx] = value
    result = SweepResult(spec.axes, coords, values, mask, spec.observable, spec.provenance())
    if spec.output:
        result.to_csv(spec.output)
    return result


INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-4):
    """Minimize a unimodal ``f`` on [a, b]; returns (x, f(x)) with bracket width <= tol."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass
class OptimumResult:
    params: LaserParams
    value: float
    objective: str
    bracket: dict
    evaluations: int


_OBJECTIVES = {
    "min_var_minus": ("var_minus", 1.0),
    "var_minus": ("var_minus", 1.0),
    "max_mean_photon": ("mean_photon", -1.0),
    "mean_photon": ("mean_photon", -1.0),
}


def find_optimum(objective: str, fixed: dict, bounds: dict, grid_points: int = 201,
                 tol: float = 1e-4, max_sweeps: int = 20) -> OptimumResult:
    """Coarse grid scan then golden-section refinement along each search axis.

    ``objective`` is 'min_var_minus' or 'max_mean_photon'. ``bounds`` maps
    parameter names to (low, high). Above-threshold points are infeasible.
    The reported value is recomputed from the returned parameters.
    """
    if objective not in _OBJECTIVES:
        raise ValueError(f"objective must be one of {sorted(_OBJECTIVES)}")
    observable, sign = _OBJECTIVES[objective]
    fixed = {canonical_name(k): float(v) for k, v in fixed.items()}
    fixed.setdefault("theta", 0.0)
    bounds = {canonical_name(k): (float(lo), float(hi)) for k, (lo, hi) in bounds.items()}
    names = list(bounds)
    counter = [0]

    def cost(point):
        counter[0] += 1
        kwargs = dict(fixed)
        kwargs.update(point)
        try:
            value = _evaluate(kwargs, observable)
        except ValueError:
            return math.inf
        return math.inf if value is None else sign * value

    grids = [np.linspace(lo, hi, grid_points) for lo, hi in bounds.values()]
    best_idx, best_cost = None, math.inf
    for idx in itertools.product(*(range(grid_points) for _ in names)):
        c = cost({n: float(grids[k][i]) for k, (n, i) in enumerate(zip(names, idx))})
        if c < best_cost:
            best_idx, best_cost = idx, c
    if best_idx is None:
        raise EmptyFeasibleRegionError("no below-threshold point in the search region")

    point = {n: float(grids[k][best_idx[k]]) for k, n in enumerate(names)}
    bracket = {
        n: (float(grids[k][max(best_idx[k] - 1, 0)]),
            float(grids[k][min(best_idx[k] + 1, grid_points - 1)]))
        for k, n in enumerate(names)
    }
    current = best_cost
    for _ in range(max_sweeps):
        previous = current
        for n in names:
            lo, hi = bracket[n]

            def along(x, n=n):
                trial = dict(point)
                trial[n] = x
                return cost(trial)

            x, c = golden_section(along, lo, hi, tol)
            if c < current:
                point[n], current = x, c
        if len(names) == 1 or previous - current <= 1e-15 * max(1.0, abs(current)):
            break

    params = LaserParams(**{**fixed, **point})
    value = getattr(steady_moments(params), observable)
    return OptimumResult(params, value, objective, bracket, counter[0])


# Figure grids. Family figures hold one curve per gain value in "family".
FIGURES = {
    "fig2": dict(fixed={"kappa": 0.2, "gain_a": 0.33}, axes=("omega:0:3", "eta:-1:1"),
                 observable="var_minus"),
    "fig3": dict(fixed={"kappa": 0.2, "omega": 0.0}, axes=("eta:0:1",),
                 observable="var_minus", family=(0.33, 10.0, 100.0, 1000.0)),
    "fig4": dict(fixed={"kappa": 0.2, "eta": 1.0}, axes=("omega:0:20",),
                 observable="var_minus", family=(0.33, 0.66, 0.99)),
    "fig5": dict(fixed={"kappa": 0.2, "eta": 0.0}, axes=("omega:0:3",),
                 observable="var_minus", family=(0.33, 10.0, 100.0, 1000.0)),
    "fig6": dict(fixed={"kappa": 0.2, "gain_a": 0.3}, axes=("omega:0:3", "eta:-1:1"),
                 observable="mean_photon"),
    "fig7": dict(fixed={"kappa": 0.2, "eta": 1.0}, axes=("omega:0:20",),
                 observable="mean_photon", family=(0.1, 0.2, 0.3)),
    "fig8": dict(fixed={"kappa": 0.2, "eta": 0.0}, axes=("omega:0:3",),
                 observable="mean_photon", family=(0.1, 0.2, 0.3)),
}


def figure_spec(name: str, gain_a: float | None = None, points: int = 201) -> SweepSpec:
    """SweepSpec for one figure; family figures need ``gain_a`` to pick a curve."""
    fig = FIGURES[name]
    fixed = dict(fig["fixed"])
    if "family" in fig:
        if gain_a is None:
            raise ValueError(f"{name} is a family of curves; pass gain_a")
        fixed["gain_a"] = gain_a
    axes = tuple(Axis.parse(f"{text}:{points}") for text in fig["axes"])
    return SweepSpec(axes, fixed, fig["observable"])
