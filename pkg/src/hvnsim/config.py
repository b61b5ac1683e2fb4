"""Flat ``key=value`` configuration mapped onto the nested run dataclasses.

Keys are dotted paths in camelCase (``radio.adhoc.queueCapacity=64``);
snake_case spellings are accepted too. ``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
import itertools
import re
import typing
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .drrm import SchemeKind
from .engine import ConfigError, RunConfig


def camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(p[:1].upper() + p[1:] for p in rest)


def snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _coerce(raw: str, hint, key: str):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if raw.strip().lower() in ("", "none", "null"):
            return None
        hint = args[0]
    try:
        if hint is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is SchemeKind:
            return SchemeKind.parse(raw)
        if hint is str:
            return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(hint, '__name__', hint)}: {exc}") from None
    raise ConfigError(f"{key}: unsupported value type {hint}")


def _resolve(cls, parts: list[str], key: str) -> tuple[list[str], object]:
    """Map a dotted key to snake_case field names and the leaf's type."""
    names = []
    for i, part in enumerate(parts):
        hints = _hints(cls)
        name = snake(part)
        if name not in hints:
            raise ConfigError(f"unknown config key {key!r}")
        names.append(name)
        hint = hints[name]
        if dataclasses.is_dataclass(hint) and hint is not SchemeKind:
            if i == len(parts) - 1:
                raise ConfigError(f"{key!r} names a section, not a value")
            cls = hint
        elif i != len(parts) - 1:
            raise ConfigError(f"unknown config key {key!r}")
        else:
            return names, hint
    raise ConfigError(f"unknown config key {key!r}")


def _set(obj, names: list[str], value):
    if len(names) == 1:
        return dataclasses.replace(obj, **{names[0]: value})
    child = getattr(obj, names[0])
    return dataclasses.replace(obj, **{names[0]: _set(child, names[1:], value)})


def apply_overrides(cfg: RunConfig, overrides: Mapping[str, str] | Iterable[tuple[str, str]]) -> RunConfig:
    """Return ``cfg`` with each ``dotted.key -> raw string`` applied in order."""
    items = overrides.items() if isinstance(overrides, Mapping) else overrides
    for key, raw in items:
        names, hint = _resolve(RunConfig, key.strip().split("."), key)
        value = _coerce(str(raw), hint, key)
        try:
            cfg = _set(cfg, names, value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}={raw}: {exc}") from None
    return cfg


def parse_lines(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_file(path: str | Path) -> list[tuple[str, str]]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_lines(text, str(p))


def flatten(cfg, prefix: str = "") -> dict[str, str]:
    """Inverse of :func:`apply_overrides`: every leaf as a camelCase key."""
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        key = prefix + camel(f.name)
        if dataclasses.is_dataclass(value) and not isinstance(value, SchemeKind):
            out.update(flatten(value, key + "."))
        else:
            out[key] = "none" if value is None else str(value)
    return out


# Desk-scale overload scenario used by the figure presets and `compare`.
# The radio values put a 50-vehicle fleet past the NLM threshold often
# enough for the schemes to differ; see README for the rationale.
DESK = {
    "highway.vehicleCount": "50",
    "duration": "30",
    "replicates": "5",
    "radio.adhoc.overheadBits": "34000",
    "radio.adhoc.queueCapacity": "1",
    "radio.adhoc.senseRangeMeters": "400",
}

PAPER_SCALE = {
    "highway.vehicleCount": "150",
    "duration": "100",
    "replicates": "10",
}


def scenario(paper_scale: bool = False) -> RunConfig:
    cfg = apply_overrides(RunConfig(), DESK)
    if paper_scale:
        cfg = apply_overrides(cfg, PAPER_SCALE)
    return cfg


# Figure presets: list of (key, values) axes, expanded as a Cartesian product.
# Percent-valued knobs are fractions.
RFACTORS = ["0.1", "0.25", "0.5"]
RTOLERANCES = ["0.2", "0.5", "0.8"]
TREDUCED = ["5", "10", "20"]
TINITIAL = ["1", "2", "5"]
SCHEMES = ["qos"] + [f"periodic:{p}" for p in (2, 4, 6, 8, 10)] + ["nobfa", "nolte"]

SWEEPS = {
    "fig4a": [("qos.rFactor", RFACTORS)],
    "fig4b": [("qos.rTolerance", RTOLERANCES)],
    "fig4c": [("qos.rFactor", RFACTORS), ("qos.rTolerance", RTOLERANCES)],
    "fig5a": [("qos.tReduced", TREDUCED)],
    "fig5b": [("qos.tInitial", TINITIAL)],
    "fig5c": [("qos.tReduced", TREDUCED), ("qos.tInitial", TINITIAL)],
    "fig6": [("scheme", SCHEMES)],
}


def parse_sweep(specs: Iterable[str]) -> list[tuple[str, list[str]]]:
    """Each item is ``key=v1,v2,...`` or a named preset such as ``fig4c``."""
    axes = []
    for spec in specs:
        spec = spec.strip()
        if spec in SWEEPS:
            axes.extend((k, list(v)) for k, v in SWEEPS[spec])
            continue
        key, sep, vals = spec.partition("=")
        values = [v.strip() for v in vals.split(",") if v.strip()]
        if not sep or not values:
            raise ConfigError(f"sweep must be key=v1,v2,... or one of {', '.join(SWEEPS)}; got {spec!r}")
        _resolve(RunConfig, key.strip().split("."), key)
        axes.append((key.strip(), values))
    if not axes:
        raise ConfigError("empty sweep")
    keys = [k for k, _ in axes]
    if len(set(keys)) != len(keys):
        raise ConfigError(f"swept key repeated: {keys}")
    return axes


def combinations(axes: list[tuple[str, list[str]]]) -> list[list[tuple[str, str]]]:
    return [list(zip([k for k, _ in axes], combo)) for combo in itertools.product(*(v for _, v in axes))]


def build(
    file: Optional[str] = None,
    sets: Iterable[str] = (),
    paper_scale: bool = False,
) -> RunConfig:
    """Defaults, then the config file, then flags (``--paper-scale``, ``--set``)."""
    cfg = scenario()
    if file:
        cfg = apply_overrides(cfg, load_file(file))
    if paper_scale:
        cfg = apply_overrides(cfg, PAPER_SCALE)
    pairs = []
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs.append((key, value))
    return apply_overrides(cfg, pairs)
