"""Two-parameter fidelity grids.

Every grid point is an independent propagation from the initial product
state; the fidelity with the GHZ target is recorded at ``t_eval``.  Points are
integrated in vectorised batches on a common time grid whose start is the
earliest pre-pulse time over the whole grid, so a point's value depends only on
its own parameters and never on how the grid was partitioned across workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, NamedTuple, TextIO

import numpy as np

from . import __version__
from .darkstate import target_ghz
from .dynamics import check_density_matrix, final_states_batch, pre_pulse_start, NORM_TOL
from .model import SystemParams
from .observables import fidelity_mixed, fidelity_pure

AXES = {
    "tau": "g_tau",
    "T": "g_T",
    "omega0": "Omega0_over_g",
    "kappa": "kappa_over_g",
    "gamma": "gamma_over_g",
    "k_fiber": "k_over_g",
}
ENGINES = ("schrodinger", "lindblad")
SWEEP_DT = 0.02
DEFAULT_COUNT = 41


class AxisRange(NamedTuple):
    lo: float
    hi: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepSpec:
    x_param: str
    y_param: str
    x_range: AxisRange
    y_range: AxisRange
    base: SystemParams = field(default_factory=SystemParams)
    t_eval: float = 300.0
    engine: str = "schrodinger"
    dt: float = SWEEP_DT
    t_start: float | None = None
    preset: str | None = None

    def __post_init__(self) -> None:
        for name in (self.x_param, self.y_param):
            if name not in AXES:
                raise ValueError(f"unknown sweep parameter {name!r}; choose from {sorted(AXES)}")
        if self.x_param == self.y_param:
            raise ValueError("x and y parameters must differ")
        object.__setattr__(self, "x_range", AxisRange(*self.x_range))
        object.__setattr__(self, "y_range", AxisRange(*self.y_range))
        for name, r in (("x", self.x_range), ("y", self.y_range)):
            if r.count < 2:
                raise ValueError(f"{name} axis needs at least 2 points")
            if r.hi < r.lo:
                raise ValueError(f"{name} range is reversed")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        # every grid point must be a valid parameter set
        for x in (self.x_range.lo, self.x_range.hi):
            for y in (self.y_range.lo, self.y_range.hi):
                self.point(x, y)

    @property
    def xs(self) -> np.ndarray:
        return self.x_range.values()

    @property
    def ys(self) -> np.ndarray:
        return self.y_range.values()

    def point(self, x: float, y: float) -> SystemParams:
        return self.base.replace(**{self.x_param: float(x), self.y_param: float(y)})

    def grid_start(self) -> float:
        if self.t_start is not None:
            return float(self.t_start)
        return min(pre_pulse_start(self.point(x, y)) for x in self.xs for y in self.ys)


PRESETS: dict[str, dict] = {
    "fig4": dict(x_param="tau", x_range=(10.0, 130.0), y_param="T", y_range=(30.0, 160.0),
                 engine="schrodinger"),
    "fig5a": dict(x_param="omega0", x_range=(0.02, 0.3), y_param="kappa", y_range=(0.0, 0.05),
                  engine="lindblad"),
    "fig5b": dict(x_param="omega0", x_range=(0.02, 0.3), y_param="gamma", y_range=(0.0, 0.05),
                  engine="lindblad"),
    "fig6": dict(x_param="kappa", x_range=(0.0, 0.1), y_param="k_fiber", y_range=(0.0, 0.1),
                 engine="lindblad"),
    "fig7": dict(x_param="kappa", x_range=(0.0, 0.05), y_param="gamma", y_range=(0.0, 0.05),
                 engine="lindblad"),
}


def preset_spec(name: str, count: int = DEFAULT_COUNT, base: SystemParams | None = None, **overrides) -> SweepSpec:
    """Grid for a named preset on top of ``base`` (default pulses, v/g = 10)."""
    try:
        p = dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    p["x_range"] = (*p["x_range"], count)
    p["y_range"] = (*p["y_range"], count)
    p.update(overrides)
    return SweepSpec(base=base or SystemParams(), preset=name, **p)


@dataclass
class SweepResult:
    spec: SweepSpec
    fidelity: np.ndarray  # (nx, ny), NaN where a point failed
    failures: dict[tuple[int, int], str]
    metadata: dict

    @property
    def x_name(self) -> str:
        return AXES[self.spec.x_param]

    @property
    def y_name(self) -> str:
        return AXES[self.spec.y_param]

    def rows(self) -> Iterator[tuple[float, float, float]]:
        """(x, y, F) in row-major order: x outer, y inner."""
        for i, x in enumerate(self.spec.xs):
            for j, y in enumerate(self.spec.ys):
                yield float(x), float(y), float(self.fidelity[i, j])

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_name", "y_name", "x", "y", "fidelity"])
        for x, y, f in self.rows():
            w.writerow([self.x_name, self.y_name, repr(x), repr(y), "nan" if math.isnan(f) else repr(f)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


class Band(NamedTuple):
    lo: float
    hi: float
    n_points: int


def band_extract(result: SweepResult, threshold: float) -> Band | None:
    """Range of ``x / y`` over grid points with ``F >= threshold``; None if empty.

    Points where the ratio is undefined (``0 / 0``) count towards ``n_points``
    but not towards the range; if no defined ratio remains the range is NaN.
    """
    X, Y = np.meshgrid(result.spec.xs, result.spec.ys, indexing="ij")
    ok = np.nan_to_num(result.fidelity, nan=-np.inf) >= threshold
    if not ok.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = X / Y
    r = ratio[ok]
    r = r[~np.isnan(r)]
    if r.size == 0:
        return Band(math.nan, math.nan, int(ok.sum()))
    return Band(float(r.min()), float(r.max()), int(ok.sum()))


def _final_fidelities(spec: SweepSpec, points: list[SystemParams], t0: float, dt: float) -> tuple[list[float], list[str | None]]:
    target = target_ghz(spec.base)
    try:
        states, _ = final_states_batch(points, t0, spec.t_eval, dt, engine=spec.engine)
    except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        return [math.nan] * len(points), [f"batch failed: {exc}"] * len(points)
    fids, reasons = [], []
    for s in states:
        if not np.all(np.isfinite(s)):
            fids.append(math.nan)
            reasons.append("non-finite state")
            continue
        if spec.engine == "schrodinger":
            drift = abs(float(np.vdot(s, s).real) - 1.0)
            reason = None if drift <= NORM_TOL else f"norm drift {drift:.3g}"
            f = fidelity_pure(s, target)
        else:
            reason = check_density_matrix(s)
            f = fidelity_mixed(s, target)
        fids.append(math.nan if reason else f)
        reasons.append(reason)
    return fids, reasons


def _run_rows(spec: SweepSpec, rows: list[int], t0: float) -> dict[int, tuple[list[float], list[str | None]]]:
    if not rows:
        return {}
    ys = spec.ys
    points = [spec.point(spec.xs[i], y) for i in rows for y in ys]
    fids, reasons = _final_fidelities(spec, points, t0, spec.dt)
    n = len(ys)
    return {i: (fids[k * n:(k + 1) * n], reasons[k * n:(k + 1) * n]) for k, i in enumerate(rows)}


def _partition(n_rows: int, workers: int) -> list[list[int]]:
    workers = max(1, min(workers, n_rows))
    return [list(range(w, n_rows, workers)) for w in range(workers)]


def run_sweep(spec: SweepSpec, workers: int | None = None, *, convergence_check: bool = True) -> SweepResult:
    """Fidelity at ``spec.t_eval`` on every grid point.

    Rows (fixed x) are statically partitioned across ``workers`` processes and
    merged by index.  A failed point is stored as NaN with its reason; the grid
    is never aborted.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    t0 = spec.grid_start()
    nx = spec.x_range.count
    parts = _partition(nx, workers)
    merged: dict[int, tuple[list[float], list[str | None]]] = {}
    if len(parts) == 1:
        merged.update(_run_rows(spec, parts[0], t0))
    else:
        with ProcessPoolExecutor(max_workers=len(parts)) as pool:
            for chunk in pool.map(_run_rows, [spec] * len(parts), parts, [t0] * len(parts)):
                merged.update(chunk)
    fid = np.full((nx, spec.y_range.count), np.nan)
    failures: dict[tuple[int, int], str] = {}
    for i in range(nx):
        vals, reasons = merged[i]
        fid[i] = vals
        for j, r in enumerate(reasons):
            if r is not None:
                failures[(i, j)] = r

    meta = {
        "artifact_version": __version__,
        "preset": spec.preset,
        "x_param": spec.x_param,
        "y_param": spec.y_param,
        "x_name": AXES[spec.x_param],
        "y_name": AXES[spec.y_param],
        "x_range": list(spec.x_range),
        "y_range": list(spec.y_range),
        "base_params": asdict(spec.base),
        "engine": spec.engine,
        "integrator": "rk4-fixed-step",
        "dt": spec.dt,
        "t_start": t0,
        "t_eval": spec.t_eval,
        "gamma_convention": "per-branch rate; total spontaneous emission per atom is 3*gamma",
        "failures": [{"i": i, "j": j, "reason": r} for (i, j), r in sorted(failures.items())],
    }
    if convergence_check:
        meta["convergence"] = step_halving_probe(spec, t0)
    return SweepResult(spec, fid, failures, meta)


def step_halving_probe(spec: SweepSpec, t0: float | None = None) -> dict:
    """Fidelity change when dt is halved at the grid's central point."""
    t0 = spec.grid_start() if t0 is None else t0
    x = spec.xs[spec.x_range.count // 2]
    y = spec.ys[spec.y_range.count // 2]
    p = spec.point(x, y)
    (f1,), _ = _final_fidelities(spec, [p], t0, spec.dt)
    (f2,), _ = _final_fidelities(spec, [p], t0, spec.dt / 2)
    return {"x": float(x), "y": float(y), "dt": spec.dt, "F_dt": f1, "F_dt_half": f2, "abs_change": abs(f1 - f2)}
