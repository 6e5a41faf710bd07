"""Two-axis parameter sweeps written to CSV.

A sweep file uses the same flat format as configs::

    axis1.path = timing.window_ns
    axis1.start = 1
    axis1.stop = 40
    axis1.num = 14
    axis2.path = source.alpha_a
    axis2.values = "0.25, 0.5, 1"
    outputs = "s_norm, w_norm"

Axis values are written in the units of the path as given (``window_ns``
columns hold nanoseconds). The CSV starts with ``#`` metadata lines, then a
header row of axis names, quantity names and ``flags``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, _canonical_key, _known_key, build_config, config_hash, normalize, parse_flat, read_flat
from .correction import UncorrectableError, correct
from .counting import dead_time_corrections
from .montecarlo import montecarlo_rates
from .protocols import analytic_rates, bb84, ekert_chsh, ekert_wigner
from .security import NormalizationError, evaluate


@dataclass(frozen=True)
class Axis:
    path: str
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ConfigError("axis range is empty", key=self.path)
        canon, _ = _canonical_key(self.path, 1.0)
        if not _known_key(canon):
            raise ConfigError("axis path does not resolve to a config key", key=self.path)

    @classmethod
    def linspace(cls, path: str, start: float, stop: float, num: int) -> "Axis":
        if num < 1:
            raise ConfigError("num must be >= 1", key=path)
        return cls(path, tuple(float(v) for v in np.linspace(start, stop, int(num))))


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis | None = None
    outputs: tuple = ("qber_bb84",)

    def __post_init__(self):
        unknown = [q for q in self.outputs if q not in QUANTITIES]
        if unknown:
            raise ConfigError(f"unknown quantities {unknown}", key="outputs")
        if not self.outputs:
            raise ConfigError("no outputs requested", key="outputs")

    @property
    def axes(self) -> tuple:
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)

    def cells(self):
        """Axis-value tuples in row order (axis1 outer)."""
        if self.axis2 is None:
            return [(v,) for v in self.axis1.values]
        return [(a, b) for a in self.axis1.values for b in self.axis2.values]


def _axis_from_flat(flat: dict, name: str) -> Axis | None:
    keys = {k[len(name) + 1 :]: v for k, v in flat.items() if k.startswith(name + ".")}
    if not keys:
        return None
    path = keys.get("path")
    if not isinstance(path, str):
        raise ConfigError("axis needs a path", key=f"{name}.path")
    if "values" in keys:
        raw = keys["values"]
        vals = [raw] if isinstance(raw, float) else [float(s) for s in str(raw).split(",") if s.strip()]
        return Axis(path, tuple(vals))
    try:
        return Axis.linspace(path, float(keys["start"]), float(keys["stop"]), int(keys.get("num", 1)))
    except KeyError as exc:
        raise ConfigError("missing", key=f"{name}.{exc.args[0]}") from None


def parse_sweep(text: str) -> SweepSpec:
    flat = parse_flat(text)
    for k in flat:
        if not (k == "outputs" or k.startswith("axis1.") or k.startswith("axis2.")):
            raise ConfigError("unknown key", key=k, line=flat.lines.get(k))
    axis1 = _axis_from_flat(flat, "axis1")
    if axis1 is None:
        raise ConfigError("missing", key="axis1.path")
    outputs = tuple(s.strip() for s in str(flat.get("outputs", "qber_bb84")).split(",") if s.strip())
    return SweepSpec(axis1, _axis_from_flat(flat, "axis2"), outputs)


def load_sweep(path_or_preset) -> SweepSpec:
    p = Path(path_or_preset)
    if p.is_file():
        return parse_sweep(p.read_text())
    from .config import preset_text

    return parse_sweep(preset_text(str(path_or_preset), ".sweep"))


# ---------------------------------------------------------------------------
# quantities


class _Cell:
    """Lazily evaluated results for one grid cell."""

    def __init__(self, config: ExperimentConfig, rates):
        self.config = config
        self.rates = rates
        self._cache: dict = {}
        self.flags: list[str] = []

    def get(self, name: str, fn: Callable):
        if name not in self._cache:
            self._cache[name] = fn()
        return self._cache[name]

    def protocol(self, which: str):
        fn = {"bb84": bb84, "chsh": ekert_chsh, "wi": ekert_wigner}[which]
        return self.get(which, lambda: fn(self.config, rates=self.rates))

    def security(self):
        def run():
            try:
                return evaluate(self.config, rates=self.rates)
            except NormalizationError:
                self.flags.append("no_coincidences")
                return None

        return self.get("security", run)

    def correction(self):
        def run():
            r = self.protocol("bb84")
            try:
                res = correct(r.sifted_key, r.qber, r.qabr)
            except UncorrectableError:
                self.flags.append("uncorrectable")
                return None
            if not res.converged:
                self.flags.append("nonconverged")
            return res

        return self.get("correction", run)


def _sec(attr):
    def f(cell):
        s = cell.security()
        return math.nan if s is None else getattr(s, attr)

    return f


def _corr(attr):
    def f(cell):
        c = cell.correction()
        return math.nan if c is None else float(getattr(c, attr))

    return f


QUANTITIES: dict[str, Callable[[_Cell], float]] = {}
for _p in ("bb84", "chsh", "wi"):
    QUANTITIES[f"qber_{_p}"] = lambda c, p=_p: c.protocol(p).qber
    QUANTITIES[f"qabr_{_p}"] = lambda c, p=_p: c.protocol(p).qabr
    QUANTITIES[f"k_{_p}"] = lambda c, p=_p: c.protocol(p).sifted_key
QUANTITIES.update(
    s=_sec("s"),
    s_prime=_sec("s_prime"),
    w_param=_sec("w_param"),
    s_norm=_sec("s_norm"),
    w_norm=_sec("w_norm"),
    corrected_qber_bb84=_corr("residual_qber"),
    corrected_key_bb84=_corr("corrected_key"),
    passes_bb84=_corr("passes"),
    residual_qabr_bb84=_corr("residual_qabr"),
    half_qabr_wi=lambda c: 0.5 * c.protocol("wi").qabr,
    pi_a=lambda c: dead_time_corrections(c.config, (c.config.theta_a, c.config.theta_a))[0],
    pi_b=lambda c: dead_time_corrections(c.config, (c.config.theta_a, c.config.theta_a))[1],
    alpha_a=lambda c: c.config.alpha_a,
    lambda_p=lambda c: c.config.source.lambda_p,
)


# ---------------------------------------------------------------------------
# running


@dataclass
class SweepResult:
    axes: tuple
    outputs: tuple
    rows: list = field(default_factory=list)  # (axis values, quantity values, flags)

    def column(self, name: str) -> np.ndarray:
        if name in self.axes:
            i = self.axes.index(name)
            return np.array([r[0][i] for r in self.rows])
        i = self.outputs.index(name)
        return np.array([r[1][i] for r in self.rows])

    def grid(self, name: str) -> np.ndarray:
        """Values reshaped to ``(len(axis1), len(axis2))`` in row order."""
        col = self.column(name)
        if len(self.axes) == 1:
            return col
        n1 = len(dict.fromkeys(r[0][0] for r in self.rows))
        return col.reshape(n1, -1)

    @property
    def flagged(self) -> list:
        return [r for r in self.rows if r[2]]


def cell_config(base: dict, spec: SweepSpec, values: tuple) -> ExperimentConfig:
    """Config for one grid cell: the base keys with the axis values overriding."""
    flat = normalize(base)
    for axis, v in zip(spec.axes, values):
        key, val = _canonical_key(axis.path, float(v))
        flat[key] = val
    return build_config(flat)


def evaluate_cell(config: ExperimentConfig, outputs, mode: str = "analytic", seed: int = 0, duration: float | None = None):
    if mode == "analytic":
        rates = analytic_rates(config)
    elif mode == "montecarlo":
        rates = montecarlo_rates(config, duration, seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    cell = _Cell(config, rates)
    values = []
    for q in outputs:
        v = float(QUANTITIES[q](cell))
        if not math.isfinite(v):
            cell.flags.append(f"nonfinite:{q}")
        values.append(v)
    return values, sorted(set(cell.flags))


def _meta(base: dict, spec: SweepSpec, mode: str, seed, duration) -> dict:
    meta = {
        "version": __version__,
        "config_hash": config_hash(normalize(base)),
        "mode": mode,
        "outputs": ",".join(spec.outputs),
    }
    if mode == "montecarlo":
        meta["seed"] = seed
        meta["duration"] = repr(duration)
    return meta


def _fmt(v: float) -> str:
    return repr(float(v))


def run_sweep(
    base: dict | str | Path,
    spec: SweepSpec,
    mode: str = "analytic",
    seed: int = 0,
    duration: float | None = None,
    out: str | Path | None = None,
    on_cell: Callable | None = None,
) -> SweepResult:
    """Evaluate ``spec.outputs`` on every grid cell.

    ``base`` is a flat dict (raw keys) or a config path / preset name. With
    ``out`` set, rows are appended to the CSV as they are computed; an
    existing file with matching metadata is resumed, skipping finished cells.
    """
    if not isinstance(base, dict):
        base = read_flat(base)
    base = dict(base)
    axes = tuple(a.path for a in spec.axes)
    result = SweepResult(axes, spec.outputs)
    meta = _meta(base, spec, mode, seed, duration)

    done: dict = {}
    fh = writer = None
    if out is not None:
        out = Path(out)
        if out.exists() and out.stat().st_size > 0:
            old = read_csv(out)
            if old.meta != {k: str(v) for k, v in meta.items()} or old.axes != axes or old.outputs != spec.outputs:
                raise ConfigError(f"{out} holds a different sweep; remove it to start over")
            done = {tuple(r[0]): r for r in old.rows}
            fh = open(out, "a", newline="")
            writer = csv.writer(fh)
        else:
            fh = open(out, "w", newline="")
            for k, v in meta.items():
                fh.write(f"# {k} = {v}\n")
            writer = csv.writer(fh)
            writer.writerow([*axes, *spec.outputs, "flags"])
    try:
        for values in spec.cells():
            key = tuple(float(v) for v in values)
            if key in done:
                result.rows.append(done[key])
                continue
            cfg = cell_config(base, spec, values)
            q, flags = evaluate_cell(cfg, spec.outputs, mode, seed, duration)
            row = (key, tuple(q), tuple(flags))
            result.rows.append(row)
            if writer is not None:
                writer.writerow([*map(_fmt, key), *map(_fmt, q), ";".join(flags)])
                fh.flush()
            if on_cell is not None:
                on_cell(row)
    finally:
        if fh is not None:
            fh.close()
    return result


@dataclass
class CsvTable:
    meta: dict
    axes: tuple
    outputs: tuple
    rows: list


def read_csv(path: str | Path) -> CsvTable:
    """Reload a sweep CSV written by :func:`run_sweep`."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                meta[k.strip()] = v.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    n_out = len(meta.get("outputs", "").split(","))
    n_axes = len(header) - 1 - n_out
    axes, outputs = tuple(header[:n_axes]), tuple(header[n_axes:-1])
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(
            (
                tuple(float(v) for v in rec[:n_axes]),
                tuple(float(v) for v in rec[n_axes:-1]),
                tuple(f for f in rec[-1].split(";") if f),
            )
        )
    return CsvTable(meta, axes, outputs, rows)
