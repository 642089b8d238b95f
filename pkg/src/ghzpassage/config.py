"""Run configuration: flags, TOML config files and named presets.

Resolution order, lowest to highest priority: built-in defaults, preset,
config file, command-line flags.  Config keys mirror the long flag names with
``-`` replaced by ``_`` (``--k-fiber`` is ``k_fiber``); anything else is a
usage error that names the key.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .dynamics import DEFAULT_DT, DEFAULT_T_END
from .model import SystemParams
from .sweep import AXES, ENGINES, PRESETS as SWEEP_PRESETS, SWEEP_DT, DEFAULT_COUNT

SUBCOMMANDS = ("evolve", "lindblad", "darkstate", "sweep", "validate")


class UsageError(Exception):
    """Bad command line or config file; maps to exit status 1."""


@dataclass(frozen=True)
class PhysicalPreset:
    """Laboratory numbers, in MHz.

    ``g``, ``gamma0`` and ``kappa`` are quoted as ``2 pi x value`` and read as
    angular frequencies.  The fiber rate is quoted without the ``2 pi``; by
    default it is read as a plain rate (``k / g = k / (2 pi g_MHz)``), and
    ``k_angular=True`` selects the other reading (``k / g = k / g_MHz``).
    """

    g_MHz: float = 75.0
    gamma0_MHz: float = 2.62
    kappa_MHz: float = 3.5
    k_MHz: float = 0.152
    k_angular: bool = False

    @property
    def gamma_over_g(self) -> float:
        """Per-branch rate: the total ``gamma0`` is shared by three decay branches."""
        return self.gamma0_MHz / self.g_MHz / 3.0

    @property
    def kappa_over_g(self) -> float:
        return self.kappa_MHz / self.g_MHz

    @property
    def k_over_g(self) -> float:
        if self.k_angular:
            return self.k_MHz / self.g_MHz
        return self.k_MHz / (2 * math.pi * self.g_MHz)

    def ratios(self) -> dict[str, float]:
        return {"kappa": self.kappa_over_g, "gamma": self.gamma_over_g, "k_fiber": self.k_over_g}

    def describe(self) -> dict[str, Any]:
        return {**asdict(self), "ratios": self.ratios()}


# key -> (type, help).  Types double as the TOML validators.
PARAM_KEYS: dict[str, tuple[type, str]] = {
    "n_atoms": (int, "number of atoms N (odd, >= 3)"),
    "v": (float, "fiber coupling v/g"),
    "omega0": (float, "peak drive Omega0/g"),
    "alpha": (float, "mixing angle alpha (rad)"),
    "tau": (float, "pulse offset g*tau"),
    "T": (float, "pulse width g*T"),
    "phi1": (float, "laser phase on atom 1 (rad)"),
    "phiN": (float, "laser phase on atom N (rad)"),
    "kappa": (float, "cavity decay kappa/g"),
    "k_fiber": (float, "fiber decay k/g"),
    "gamma": (float, "per-branch spontaneous emission gamma/g"),
    "gamma0": (float, "total spontaneous emission gamma0/g (gamma = gamma0/3)"),
}
TRACE_KEYS: dict[str, tuple[type, str]] = {
    "t_start": (float, "integration start g*t (default: before the pulses)"),
    "t_end": (float, "integration end g*t"),
    "dt": (float, "RK4 step g*dt"),
    "sample_dt": (float, "output sampling interval g*dt"),
    "output_from": (float, "first g*t written to the CSV (default: t_start)"),
}
OUTPUT_KEYS: dict[str, tuple[type, str]] = {
    "output": (str, "CSV path (default: stdout)"),
    "metadata": (str, "metadata JSON path (default: <output>.meta.json)"),
    "preset": (str, "named preset"),
    "k_angular": (bool, "physical preset: read the fiber rate as angular (2 pi x k)"),
}
SWEEP_KEYS: dict[str, tuple[type, str]] = {
    "engine": (str, "schrodinger or lindblad"),
    "t_eval": (float, "g*t at which the fidelity is recorded"),
    "t_start": (float, "common start g*t (default: earliest pre-pulse time on the grid)"),
    "dt": (float, "RK4 step g*dt"),
    "x_param": (str, "x axis: " + ", ".join(AXES)),
    "x_min": (float, "x lower bound"),
    "x_max": (float, "x upper bound"),
    "x_count": (int, "x points"),
    "y_param": (str, "y axis: " + ", ".join(AXES)),
    "y_min": (float, "y lower bound"),
    "y_max": (float, "y upper bound"),
    "y_count": (int, "y points"),
    "count": (int, "points per axis for both axes"),
    "workers": (int, "worker processes (default: CPU count)"),
}
VALIDATE_KEYS: dict[str, tuple[type, str]] = {
    "dt": (float, "RK4 step g*dt used by the convergence checks"),
}

TRACE_PRESETS = {
    "fig3": {"omega0": 0.1, "alpha": math.pi / 4, "tau": 50.0, "T": 80.0, "v": 10.0,
             "phi1": 0.0, "phiN": math.pi, "t_end": 170.0, "output_from": 0.0},
    "physical": {},  # filled from PhysicalPreset at resolution time
}


def keys_for(subcommand: str) -> dict[str, tuple[type, str]]:
    if subcommand in ("evolve", "lindblad", "darkstate"):
        return {**PARAM_KEYS, **TRACE_KEYS, **OUTPUT_KEYS}
    if subcommand == "sweep":
        return {**PARAM_KEYS, **SWEEP_KEYS, **OUTPUT_KEYS}
    if subcommand == "validate":
        return {"n_atoms": PARAM_KEYS["n_atoms"], **VALIDATE_KEYS}
    raise UsageError(f"unknown subcommand {subcommand!r}")


def presets_for(subcommand: str) -> tuple[str, ...]:
    if subcommand == "sweep":
        return tuple(SWEEP_PRESETS) + ("physical",)
    if subcommand == "validate":
        return ()
    return tuple(TRACE_PRESETS)


def trace_defaults(subcommand: str) -> dict[str, Any]:
    if subcommand == "sweep":
        return {"engine": "schrodinger", "t_eval": DEFAULT_T_END, "dt": SWEEP_DT, "count": DEFAULT_COUNT}
    if subcommand == "validate":
        return {"dt": DEFAULT_DT}
    return {"t_end": DEFAULT_T_END, "dt": DEFAULT_DT, "sample_dt": 0.5}


@dataclass
class RunConfig:
    subcommand: str
    params: SystemParams
    settings: dict[str, Any]
    output: str | None = None
    metadata_path: str | None = None
    workers: int | None = None
    preset: str | None = None
    physical: PhysicalPreset | None = None
    sources: dict[str, str] = field(default_factory=dict)

    def echo(self) -> dict[str, Any]:
        """Everything needed to rerun this exact computation."""
        out = {
            "subcommand": self.subcommand,
            "preset": self.preset,
            "params": asdict(self.params),
            "settings": dict(self.settings),
            "workers": self.workers,
            "sources": dict(self.sources),
        }
        if self.physical is not None:
            out["physical_preset"] = self.physical.describe()
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ghzpassage",
        description="Fractional adiabatic passage to GHZ states in fiber-coupled cavities.",
    )
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    helps = {
        "evolve": "pure-state trace on the coherent basis",
        "lindblad": "open-system trace with cavity, fiber and atomic decay",
        "darkstate": "instantaneous dark state and spectral gap",
        "sweep": "two-parameter fidelity grid",
        "validate": "run the invariant suite",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name],
                           argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="TOML file with keys mirroring the flag names")
        choices = presets_for(name)
        for key, (typ, text) in keys_for(name).items():
            if key == "preset":
                if choices:
                    p.add_argument("--preset", choices=choices, help=text)
                continue
            names = [_flag(key), "-o"] if key == "output" else [_flag(key)]
            if typ is bool:
                p.add_argument(*names, dest=key, action="store_true", help=text)
            elif key in ("x_param", "y_param"):
                p.add_argument(*names, dest=key, choices=tuple(AXES), help=text)
            elif key == "engine":
                p.add_argument(*names, dest=key, choices=ENGINES, help=text)
            else:
                p.add_argument(*names, dest=key, type=typ, metavar=key.upper(), help=text)
    return parser


def load_config_file(path: str, subcommand: str) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}") from None
    allowed = keys_for(subcommand)
    out: dict[str, Any] = {}
    for key, value in raw.items():
        k = key.replace("-", "_")
        if k not in allowed:
            raise UsageError(f"config file {path}: unknown key {key!r} for {subcommand}")
        typ = allowed[k][0]
        if typ is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
            raise UsageError(f"config file {path}: key {key!r} must be {typ.__name__}, got {value!r}")
        if k == "preset" and value not in presets_for(subcommand):
            raise UsageError(f"config file {path}: unknown preset {value!r}")
        out[k] = value
    return out


def _fold_gamma0(layer: dict[str, Any], where: str) -> dict[str, Any]:
    if "gamma0" not in layer:
        return layer
    if "gamma" in layer:
        raise UsageError(f"{where}: give either gamma (per branch) or gamma0 (total), not both")
    layer = dict(layer)
    layer["gamma"] = layer.pop("gamma0") / 3.0
    return layer


def _preset_layer(subcommand: str, name: str | None, physical: PhysicalPreset | None) -> dict[str, Any]:
    if name is None:
        return {}
    if name == "physical":
        return dict(physical.ratios())
    if subcommand == "sweep":
        spec = SWEEP_PRESETS[name]
        return {"x_param": spec["x_param"], "x_min": spec["x_range"][0], "x_max": spec["x_range"][1],
                "y_param": spec["y_param"], "y_min": spec["y_range"][0], "y_max": spec["y_range"][1],
                "engine": spec["engine"]}
    return dict(TRACE_PRESETS[name])


def resolve_config(argv: Sequence[str] | None, config_file: str | None = None) -> RunConfig | None:
    """Parse ``argv`` into a :class:`RunConfig`; ``None`` when no subcommand was given."""
    parser = build_parser()
    ns = vars(parser.parse_args(list(sys.argv[1:] if argv is None else argv)))
    subcommand = ns.pop("subcommand", None)
    if subcommand is None:
        return None
    config_file = ns.pop("config", config_file)
    flags = _fold_gamma0(ns, "command line")
    file_layer = _fold_gamma0(load_config_file(config_file, subcommand), f"config file {config_file}") if config_file else {}

    preset = flags.get("preset", file_layer.get("preset"))
    k_angular = bool(flags.get("k_angular", file_layer.get("k_angular", False)))
    physical = PhysicalPreset(k_angular=k_angular) if preset == "physical" else None
    layers = [
        ("default", trace_defaults(subcommand)),
        ("preset", _preset_layer(subcommand, preset, physical)),
        ("config", file_layer),
        ("flag", flags),
    ]
    merged: dict[str, Any] = {}
    sources: dict[str, str] = {}
    for origin, layer in layers:
        for k, v in layer.items():
            merged[k] = v
            sources[k] = origin
    merged.pop("preset", None)
    merged.pop("k_angular", None)

    param_fields = {k: merged.pop(k) for k in list(merged) if k in PARAM_KEYS}
    try:
        params = SystemParams(**param_fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None

    output = merged.pop("output", None)
    metadata_path = merged.pop("metadata", None)
    if metadata_path is None and output is not None:
        metadata_path = output + ".meta.json"
    workers = merged.pop("workers", None)
    if subcommand == "sweep" and workers is None:
        workers = os.cpu_count() or 1
    if workers is not None and workers < 1:
        raise UsageError("workers must be >= 1")
    if "dt" in merged and not merged["dt"] > 0:
        raise UsageError(f"dt must be > 0, got {merged['dt']}")
    if subcommand == "sweep":
        count = merged.pop("count")
        merged.setdefault("x_count", count)
        merged.setdefault("y_count", count)
        missing = [k for k in ("x_param", "x_min", "x_max", "y_param", "y_min", "y_max") if k not in merged]
        if missing:
            raise UsageError("sweep needs --preset or explicit " + ", ".join(_flag(k) for k in missing))
    return RunConfig(subcommand, params, merged, output, metadata_path, workers, preset, physical, sources)
