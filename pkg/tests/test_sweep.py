from __future__ import annotations

import math

import numpy as np
import pytest

from ghzpassage.sweep import (
    AXES,
    PRESETS,
    AxisRange,
    SweepSpec,
    band_extract,
    preset_spec,
    run_sweep,
)


@pytest.fixture(scope="module")
def small_spec():
    return SweepSpec("tau", "T", (30.0, 70.0, 3), (60.0, 100.0, 3))


@pytest.fixture(scope="module")
def small_result(small_spec):
    return run_sweep(small_spec, workers=1)


def test_constant_grid_gives_identical_values():
    spec = SweepSpec("tau", "T", (50.0, 50.0, 2), (80.0, 80.0, 2))
    r = run_sweep(spec, workers=1, convergence_check=False)
    assert np.all(r.fidelity == r.fidelity[0, 0])


def test_rows_are_row_major_and_complete(small_result, small_spec):
    rows = list(small_result.rows())
    assert len(rows) == 9
    assert [(x, y) for x, y, _ in rows] == [(x, y) for x in small_spec.xs for y in small_spec.ys]
    assert all(0 <= f <= 1 + 1e-6 for *_, f in rows)


def test_csv_layout(small_result):
    text = small_result.to_csv()
    lines = text.split("\n")
    assert lines[0] == "x_name,y_name,x,y,fidelity"
    assert lines[1].startswith("g_tau,g_T,30.0,60.0,0.")
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) == 11  # header, 9 rows, trailing newline


def test_deterministic_and_partition_independent(small_spec, small_result):
    again = run_sweep(small_spec, workers=1)
    parallel = run_sweep(small_spec, workers=2)
    assert again.to_csv() == small_result.to_csv()
    assert parallel.to_csv() == small_result.to_csv()


def test_metadata_is_complete(small_result):
    m = small_result.metadata
    for key in ("artifact_version", "base_params", "engine", "dt", "t_start", "t_eval", "x_range", "y_range",
                "gamma_convention", "convergence", "failures"):
        assert key in m
    assert m["t_start"] == -374.0  # floor(-70 - 100 sqrt(ln 1e4)): tau = 70, T = 100 starts earliest
    assert m["convergence"]["abs_change"] < 1e-6


def test_band_extract_limits(small_result, small_spec):
    full = band_extract(small_result, 0.0)
    assert full.lo == pytest.approx(30.0 / 100.0)
    assert full.hi == pytest.approx(70.0 / 60.0)
    assert full.n_points == 9
    assert band_extract(small_result, 1.01) is None


def test_failed_points_become_nan_with_reason():
    spec = SweepSpec("tau", "T", (40.0, 60.0, 2), (70.0, 90.0, 2), dt=0.5)
    with np.errstate(all="ignore"):
        r = run_sweep(spec, workers=1, convergence_check=False)
    assert np.isnan(r.fidelity).all()
    assert len(r.failures) == 4
    assert len(r.metadata["failures"]) == 4
    assert "nan" in r.to_csv()


def test_fidelity_non_increasing_along_kappa():
    spec = SweepSpec("kappa", "gamma", (0.0, 0.1, 10), (0.0, 0.0, 2), engine="lindblad")
    r = run_sweep(spec, workers=1, convergence_check=False)
    f = r.fidelity[:, 0]
    assert np.all(np.diff(f) <= 0)


def test_fig6_corner_point():
    r = run_sweep(preset_spec("fig6", count=2), workers=1, convergence_check=False)
    assert r.fidelity[0, 1] == pytest.approx(0.998, abs=0.003)  # kappa = 0, k = 0.1
    assert r.fidelity[0, 0] == pytest.approx(r.fidelity[0, 1], abs=0.003)


def test_presets_pin_ranges():
    assert PRESETS["fig4"]["x_range"] == (10.0, 130.0)
    assert PRESETS["fig4"]["y_range"] == (30.0, 160.0)
    spec = preset_spec("fig5b")
    assert spec.x_range == AxisRange(0.02, 0.3, 41)
    assert spec.y_param == "gamma" and spec.engine == "lindblad"
    assert set(AXES) == {"tau", "T", "omega0", "kappa", "gamma", "k_fiber"}


@pytest.mark.parametrize("kwargs", [
    dict(x_param="v", y_param="T", x_range=(1, 2, 2), y_range=(1, 2, 2)),
    dict(x_param="tau", y_param="tau", x_range=(1, 2, 2), y_range=(1, 2, 2)),
    dict(x_param="tau", y_param="T", x_range=(1, 2, 1), y_range=(1, 2, 2)),
    dict(x_param="tau", y_param="T", x_range=(1, 2, 2), y_range=(0, 2, 2)),
    dict(x_param="kappa", y_param="T", x_range=(-1, 2, 2), y_range=(10, 20, 2)),
    dict(x_param="tau", y_param="T", x_range=(1, 2, 2), y_range=(10, 20, 2), engine="monte-carlo"),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        preset_spec("fig9")


def test_band_with_zero_axis_values_ignores_undefined_ratios():
    spec = SweepSpec("kappa", "k_fiber", (0.0, 0.02, 2), (0.0, 0.02, 2), engine="lindblad",
                     t_start=-200.0, t_eval=-199.0)
    r = run_sweep(spec, workers=1, convergence_check=False)
    band = band_extract(r, 0.0)
    assert band.n_points == 4
    assert band.lo == 0.0 and math.isinf(band.hi)
