"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 numerical-quality failure (an
:class:`~ghzpassage.dynamics.IntegrationError`), 3 validation failure.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from contextlib import contextmanager
from typing import Iterator, Sequence, TextIO

import numpy as np

from . import __version__
from .config import RunConfig, UsageError, build_parser, resolve_config
from .darkstate import dark_state_trace, instantaneous_spectrum, spectral_gap, target_ghz
from .dynamics import IntegrationError, pre_pulse_start, propagate_lindblad, propagate_schrodinger
from .model import enumerate_coherent_basis
from .observables import fidelity, trajectory_table
from .sweep import AxisRange, SweepSpec, run_sweep
from .validate import run_validation

EXIT_OK, EXIT_USAGE, EXIT_NUMERICS, EXIT_VALIDATION = 0, 1, 2, 3

GAMMA_NOTE = (
    "gamma is the per-branch spontaneous-emission rate; an excited atom decays "
    "at 3*gamma in total (gamma0 = 3*gamma)"
)


def _fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


@contextmanager
def _open_output(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        yield fh


def write_table(columns: dict[str, np.ndarray], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    for row in zip(*(columns[n] for n in names)):
        w.writerow([_fmt(v) for v in row])


def write_metadata(cfg: RunConfig, extra: dict) -> None:
    if cfg.metadata_path is None:
        return
    meta = {"artifact_version": __version__, "config": cfg.echo(), "gamma_convention": GAMMA_NOTE, **extra}
    with open(cfg.metadata_path, "w", newline="", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def tracked_indices(n_atoms: int) -> list[int]:
    """Zero-based indices of the odd ordinals 1, 3, ..., 4N-1 (the dark-state support)."""
    return list(range(0, 4 * n_atoms - 1, 2))


def _trace(cfg: RunConfig) -> int:
    s = cfg.settings
    prop = propagate_schrodinger if cfg.subcommand == "evolve" else propagate_lindblad
    window = dict(t_start=s.get("t_start"), t_end=s["t_end"])
    traj = prop(None, cfg.params, dt=s["dt"], sample_dt=s["sample_dt"], **window)
    target = target_ghz(cfg.params)
    cols = trajectory_table(traj, target, tracked_indices(cfg.params.n_atoms))
    t_from = s.get("output_from", traj.t_start)
    keep = cols["t"] >= t_from - 1e-9
    cols = {k: v[keep] for k, v in cols.items()}
    # mandatory convergence report: same run at half the step, final fidelity only
    half = prop(None, cfg.params, dt=s["dt"] / 2, sample_dt=None, **window)
    f1, f2 = fidelity(traj.final, target), fidelity(half.final, target)
    with _open_output(cfg.output) as fh:
        write_table(cols, fh)
    write_metadata(cfg, {
        "engine": traj.metadata["engine"],
        "integrator": "rk4-fixed-step",
        "dt_effective": traj.dt,
        "t_start": traj.t_start,
        "t_end": s["t_end"],
        "output_from": t_from,
        "basis": [st.label() for st in traj.basis],
        "step_halving": {"F_dt": f1, "F_dt_half": f2, "abs_change": abs(f1 - f2)},
    })
    return EXIT_OK


def _darkstate(cfg: RunConfig) -> int:
    s = cfg.settings
    p = cfg.params
    t0 = s.get("t_start", pre_pulse_start(p))
    t1 = s["t_end"]
    n = max(1, round((t1 - t0) / s["sample_dt"]))
    times = t0 + (t1 - t0) * np.arange(n + 1) / n
    t_from = s.get("output_from", t0)
    times = times[times >= t_from - 1e-9]
    basis = enumerate_coherent_basis(p)
    trace = dark_state_trace(times, p, basis)
    cols: dict[str, np.ndarray] = {
        "t": times,
        "X": np.array([d.x_ratio for d in trace]),
        "G": np.array([d.g_ratio for d in trace]),
    }
    amps = np.array([d.amplitudes for d in trace])
    for k in tracked_indices(p.n_atoms):
        cols[f"|c_{k + 1}|^2"] = np.abs(amps[:, k]) ** 2
    cols["gap"] = np.array([spectral_gap(instantaneous_spectrum(t, p, basis)) for t in times])
    with _open_output(cfg.output) as fh:
        write_table(cols, fh)
    write_metadata(cfg, {"t_start": float(times[0]), "t_end": t1, "basis": [st.label() for st in basis]})
    return EXIT_OK


def sweep_spec_from_config(cfg: RunConfig) -> SweepSpec:
    s = cfg.settings
    try:
        return SweepSpec(
            x_param=s["x_param"], y_param=s["y_param"],
            x_range=AxisRange(s["x_min"], s["x_max"], s["x_count"]),
            y_range=AxisRange(s["y_min"], s["y_max"], s["y_count"]),
            base=cfg.params, t_eval=s["t_eval"], engine=s["engine"], dt=s["dt"],
            t_start=s.get("t_start"), preset=cfg.preset,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sweep(cfg: RunConfig) -> int:
    result = run_sweep(sweep_spec_from_config(cfg), workers=cfg.workers)
    with _open_output(cfg.output) as fh:
        result.write_csv(fh)
    write_metadata(cfg, {"sweep": result.metadata})
    if result.failures:
        print(f"warning: {len(result.failures)} grid point(s) failed; see metadata", file=sys.stderr)
    return EXIT_OK


def _validate(cfg: RunConfig) -> int:
    results = run_validation(cfg.params, dt=cfg.settings["dt"])
    print(f"ghzpassage {__version__} validation, N = {cfg.params.n_atoms}, dt = {cfg.settings['dt']:g}")
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


HANDLERS = {"evolve": _trace, "lindblad": _trace, "darkstate": _darkstate, "sweep": _sweep, "validate": _validate}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = resolve_config(argv)
        if cfg is None:
            build_parser().print_help(sys.stderr)
            return EXIT_USAGE
        return HANDLERS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"numerical-quality failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
