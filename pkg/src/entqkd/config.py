"""Experiment configuration: parameter types, flat-file loader, bundled presets.

Config files are flat ``key = value`` text with dotted keys. Values are SI
(seconds, 1/s, radians); keys ending in ``_ns``, ``_us``, ``_khz``, ``_mhz``
or ``_deg`` are converted on load. ``#`` starts a comment.

Shorthand keys apply to every member of a group and are overridden by the
specific key, e.g. ``detectors.eta = 0.5`` then ``detectors.2b.eta = 0.45``.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .polarization import DETECTORS, EntanglementParams, PbsParams

ALICE = ("1a", "2a")
BOB = ("1b", "2b")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field, ``line`` its source line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class DetectorParams:
    eta: float = 1.0
    tau: float = 1.0
    lambda_d: float = 0.0
    lambda_u: float = 0.0

    def __post_init__(self):
        for name in ("eta", "tau"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"must lie in [0, 1], got {v}", key=name)
        for name in ("lambda_d", "lambda_u"):
            v = getattr(self, name)
            if not v >= 0.0:
                raise ConfigError(f"must be >= 0, got {v}", key=name)

    @property
    def efficiency(self) -> float:
        """Quantum efficiency times optical transmittance, before dead-time loss."""
        return self.eta * self.tau


@dataclass(frozen=True)
class ChannelParams:
    dead_time: float = 0.0

    def __post_init__(self):
        if not self.dead_time >= 0.0:
            raise ConfigError(f"must be >= 0, got {self.dead_time}", key="dead_time")


@dataclass(frozen=True)
class SourceParams:
    lambda_p: float = 0.0

    def __post_init__(self):
        if not self.lambda_p >= 0.0:
            raise ConfigError(f"must be >= 0, got {self.lambda_p}", key="lambda_p")


@dataclass(frozen=True)
class TimingParams:
    window: float = 4e-9
    duration: float = 1.0

    def __post_init__(self):
        if not self.window >= 0.0:
            raise ConfigError(f"must be >= 0, got {self.window}", key="window")
        if not self.duration > 0.0:
            raise ConfigError(f"must be > 0, got {self.duration}", key="duration")


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceParams = field(default_factory=SourceParams)
    entanglement: EntanglementParams = field(default_factory=EntanglementParams)
    pbs_a: PbsParams = field(default_factory=PbsParams.ideal)
    pbs_b: PbsParams = field(default_factory=PbsParams.ideal)
    detectors: dict = field(default_factory=lambda: {d: DetectorParams() for d in DETECTORS})
    channels: dict = field(default_factory=lambda: {"a": ChannelParams(), "b": ChannelParams()})
    timing: TimingParams = field(default_factory=TimingParams)
    theta_a: float = 0.0

    def __post_init__(self):
        if set(self.detectors) != set(DETECTORS):
            raise ConfigError(f"need exactly detectors {DETECTORS}", key="detectors")
        if set(self.channels) != {"a", "b"}:
            raise ConfigError("need channels 'a' and 'b'", key="channels")
        dead = [c.dead_time for c in self.channels.values() if c.dead_time > 0]
        if dead and self.timing.window >= min(dead):
            warnings.warn("coincidence window is not shorter than the dead time", stacklevel=3)

    @property
    def alpha_a(self) -> float:
        """Correlation level of Alice's channel, lambda_p / (lambda_p + sum lambda_u)."""
        total = self.source.lambda_p + sum(self.detectors[d].lambda_u for d in ALICE)
        return self.source.lambda_p / total if total > 0 else float("nan")

    @property
    def alpha_b(self) -> float:
        total = self.source.lambda_p + sum(self.detectors[d].lambda_u for d in BOB)
        return self.source.lambda_p / total if total > 0 else float("nan")

    def with_pbs(self, pbs_a: PbsParams, pbs_b: PbsParams | None = None) -> "ExperimentConfig":
        return replace(self, pbs_a=pbs_a, pbs_b=pbs_b if pbs_b is not None else pbs_a)

    def with_timing(self, **kw) -> "ExperimentConfig":
        return replace(self, timing=replace(self.timing, **kw))


def derive_source_rates(lambda_a: float, alpha_a: float, ratio_ba: float):
    """Pair rate and per-channel uncorrelated rates from the total Alice rate.

    Returns ``(lambda_p, sum_u_alice, sum_u_bob)``.
    """
    if not 0.0 < alpha_a <= 1.0:
        raise ConfigError(f"must lie in (0, 1], got {alpha_a}", key="source.alpha_a")
    if lambda_a < 0:
        raise ConfigError(f"must be >= 0, got {lambda_a}", key="source.lambda_a")
    if ratio_ba <= 0:
        raise ConfigError(f"must be > 0, got {ratio_ba}", key="source.ratio_ba")
    lambda_p = alpha_a * lambda_a
    u_alice = lambda_a - lambda_p
    u_bob = ratio_ba * lambda_a - lambda_p
    if u_bob < -1e-9 * max(1.0, lambda_a):
        raise ConfigError(
            f"ratio_ba * lambda_a = {ratio_ba * lambda_a:.6g} is below lambda_p = {lambda_p:.6g}",
            key="source.ratio_ba",
        )
    return lambda_p, max(u_alice, 0.0), max(u_bob, 0.0)


# ---------------------------------------------------------------------------
# flat key/value format

_UNIT_SUFFIXES = {
    "_ns": 1e-9,
    "_us": 1e-6,
    "_ms": 1e-3,
    "_khz": 1e3,
    "_mhz": 1e6,
    "_deg": math.pi / 180.0,
}

_GROUP_KEYS = {
    "source": {"lambda_p", "lambda_a", "alpha_a", "ratio_ba"},
    "entanglement": {"epsilon", "zeta"},
    "timing": {"window", "duration"},
    "analyzer": {"theta_a"},
}
_DETECTOR_FIELDS = {"eta", "tau", "lambda_d", "lambda_u"}
_PBS_FIELDS = {"t_mag", "tperp_mag", "t2", "tperp2"}
_CHANNEL_FIELDS = {"dead_time"}


def _parse_value(text: str):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        return text


def parse_flat(text: str) -> dict:
    """Parse ``key = value`` lines into an ordered dict (raw keys, no unit conversion)."""
    out: dict = {}
    lines: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=n)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", line=n)
        if key in out:
            raise ConfigError("duplicate key", key=key, line=n)
        out[key] = _parse_value(value)
        lines[key] = n
    out_lines = _LineDict(out)
    out_lines.lines = lines
    return out_lines


class _LineDict(dict):
    lines: dict = {}


def _canonical_key(key: str, value):
    """Strip a unit suffix from the last key component and scale the value."""
    head, _, last = key.rpartition(".")
    for suffix, scale in _UNIT_SUFFIXES.items():
        if last.endswith(suffix):
            if not isinstance(value, (int, float)):
                raise ConfigError("unit-suffixed keys need a real number", key=key)
            last = last[: -len(suffix)]
            return (f"{head}.{last}" if head else last), value * scale
    return key, value


def normalize(flat: dict) -> dict:
    """Convert unit-suffixed keys to SI and reject unknown keys."""
    lines = getattr(flat, "lines", {})
    out = {}
    for key, value in flat.items():
        ck, cv = _canonical_key(key, value)
        if not _known_key(ck):
            raise ConfigError("unknown key", key=key, line=lines.get(key))
        if ck in out:
            raise ConfigError("given twice (with and without unit suffix)", key=key, line=lines.get(key))
        out[ck] = cv
    return out


def _known_key(key: str) -> bool:
    parts = key.split(".")
    group = parts[0]
    if group in _GROUP_KEYS:
        return len(parts) == 2 and parts[1] in _GROUP_KEYS[group]
    if group == "detectors":
        if len(parts) == 2:
            return parts[1] in _DETECTOR_FIELDS | {"lambda_u_alice", "lambda_u_bob"}
        return len(parts) == 3 and parts[1] in DETECTORS and parts[2] in _DETECTOR_FIELDS
    if group == "pbs":
        if len(parts) == 2:
            return parts[1] in _PBS_FIELDS
        return len(parts) == 3 and parts[1] in ("a", "b") and parts[2] in _PBS_FIELDS
    if group == "channels":
        if len(parts) == 2:
            return parts[1] in _CHANNEL_FIELDS
        return len(parts) == 3 and parts[1] in ("a", "b") and parts[2] in _CHANNEL_FIELDS
    return False


def _real(flat: dict, key: str, default=None) -> float:
    v = flat.get(key, default)
    if v is None:
        raise ConfigError("missing", key=key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a real number, got {v!r}", key=key)
    return float(v)


def _pick(flat: dict, specific: str, generic: str, default=None) -> float:
    return _real(flat, specific if specific in flat else generic, default)


def build_config(flat: dict) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig` from SI flat keys."""
    lines = getattr(flat, "lines", {})
    try:
        flat = normalize(flat)
        return _build(flat)
    except ConfigError as exc:
        if exc.line is None and exc.key in lines:
            raise ConfigError(str(exc).split(": ", 1)[-1], key=exc.key, line=lines[exc.key]) from None
        raise


def _build(flat: dict) -> ExperimentConfig:
    has = lambda k: k in flat  # noqa: E731
    if has("source.lambda_a") and has("source.lambda_p"):
        raise ConfigError("give either lambda_a or lambda_p, not both", key="source.lambda_p")
    ratio = _real(flat, "source.ratio_ba", 1.0)
    if has("source.alpha_a"):
        alpha = _real(flat, "source.alpha_a")
        if has("source.lambda_a"):
            lambda_a = _real(flat, "source.lambda_a")
        else:
            if not 0 < alpha <= 1:
                raise ConfigError(f"must lie in (0, 1], got {alpha}", key="source.alpha_a")
            lambda_a = _real(flat, "source.lambda_p", 0.0) / alpha
        lambda_p, u_alice, u_bob = derive_source_rates(lambda_a, alpha, ratio)
    else:
        if has("source.lambda_a"):
            raise ConfigError("lambda_a needs alpha_a", key="source.lambda_a")
        lambda_p = _real(flat, "source.lambda_p", 0.0)
        u_alice = _real(flat, "detectors.lambda_u_alice", 0.0)
        u_bob = _real(flat, "detectors.lambda_u_bob", 0.0)
        if has("source.ratio_ba"):
            raise ConfigError("ratio_ba needs alpha_a", key="source.ratio_ba")

    detectors = {}
    for det in DETECTORS:
        share = (u_alice if det in ALICE else u_bob) / 2.0
        kwargs = {}
        for name in ("eta", "tau", "lambda_d"):
            kwargs[name] = _pick(flat, f"detectors.{det}.{name}", f"detectors.{name}", 1.0 if name != "lambda_d" else 0.0)
        kwargs["lambda_u"] = _pick(flat, f"detectors.{det}.lambda_u", "detectors.lambda_u", share)
        try:
            detectors[det] = DetectorParams(**kwargs)
        except ConfigError as exc:
            key = f"detectors.{det}.{exc.key}"
            raise ConfigError(str(exc).split(": ", 1)[-1], key=key if key in flat else f"detectors.{exc.key}") from None

    def pbs(arm: str) -> PbsParams:
        def get(name):
            for k in (f"pbs.{arm}.{name}", f"pbs.{name}"):
                if k in flat:
                    return k, _real(flat, k)
            return None, None

        k_amp, t_mag = get("t_mag")
        k_int, t2 = get("t2")
        kp_amp, tp_mag = get("tperp_mag")
        kp_int, tp2 = get("tperp2")
        if t_mag is None:
            t_mag = math.sqrt(t2) if t2 is not None and t2 >= 0 else (1.0 if t2 is None else float("nan"))
        if tp_mag is None:
            tp_mag = math.sqrt(tp2) if tp2 is not None and tp2 >= 0 else (0.0 if tp2 is None else float("nan"))
        try:
            return PbsParams(t_mag, tp_mag)
        except ValueError as exc:
            key = k_amp or k_int if "tperp" not in str(exc) else kp_amp or kp_int
            raise ConfigError(str(exc), key=key) from None

    channels = {}
    for ch in ("a", "b"):
        channels[ch] = ChannelParams(_pick(flat, f"channels.{ch}.dead_time", "channels.dead_time", 0.0))

    eps = flat.get("entanglement.epsilon", 1.0)
    zeta = flat.get("entanglement.zeta", 1.0)
    for k, v in (("entanglement.epsilon", eps), ("entanglement.zeta", zeta)):
        if isinstance(v, bool) or not isinstance(v, (int, float, complex)):
            raise ConfigError(f"expected a number, got {v!r}", key=k)
    try:
        ent = EntanglementParams(complex(eps), complex(zeta))
    except ValueError as exc:
        raise ConfigError(str(exc), key="entanglement.zeta") from None

    return ExperimentConfig(
        source=SourceParams(lambda_p),
        entanglement=ent,
        pbs_a=pbs("a"),
        pbs_b=pbs("b"),
        detectors=detectors,
        channels=channels,
        timing=TimingParams(_real(flat, "timing.window", 4e-9), _real(flat, "timing.duration", 1.0)),
        theta_a=_real(flat, "analyzer.theta_a", 0.0),
    )


# ---------------------------------------------------------------------------
# files and presets


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("entqkd.presets").iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str, suffix: str = ".cfg") -> str:
    res = resources.files("entqkd.presets") / f"{name}{suffix}"
    if not res.is_file():
        raise FileNotFoundError(f"no preset named {name!r}")
    return res.read_text()


def read_flat(path_or_preset: str | Path, suffix: str = ".cfg") -> dict:
    """Read a config (or sweep) file, falling back to a bundled preset name."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_flat(p.read_text())
    try:
        return parse_flat(preset_text(str(path_or_preset), suffix))
    except FileNotFoundError:
        raise FileNotFoundError(f"{path_or_preset}: no such file or preset") from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a config file or bundled preset (``fig5``, ...)."""
    return build_config(read_flat(path))


def config_hash(flat: dict) -> str:
    canon = "\n".join(f"{k}={flat[k]!r}" for k in sorted(flat))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
