"""Flat ``key = value`` run configuration and labelled RNG streams.

A config file holds one ``key = value`` per line; ``#`` starts a comment.
Each command owns a schema; keys outside it are rejected, and every
value is converted and validated before the command runs.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class Key:
    type: Callable[[str], Any]
    default: Any
    help: str = ""
    check: Callable[[Any], bool] | None = None
    describe: str = ""


def positive(v) -> bool:
    return v > 0


def non_negative(v) -> bool:
    return v >= 0


def one_of(*choices) -> Callable[[Any], bool]:
    def check(v):
        return v in choices
    check.choices = choices
    return check


def int_list(s: str) -> tuple:
    return tuple(int(p) for p in str(s).replace(",", " ").split())


def parse_bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def read_config_file(path) -> dict:
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], f"line {n} is not of the form key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        if not k:
            raise ConfigError("", f"line {n} has an empty key")
        out[k.replace("-", "_")] = v
    return out


def resolve(schema: dict, file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file values and explicit overrides, then validate."""
    for k in list(file_values) + list(overrides):
        if k not in schema:
            raise ConfigError(k, "unknown key")
    raw = {k: spec.default for k, spec in schema.items()}
    raw.update(file_values)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    out = {}
    for k, spec in schema.items():
        v = raw[k]
        if v is not None and isinstance(v, str):
            try:
                v = spec.type(v)
            except (TypeError, ValueError) as e:
                raise ConfigError(k, f"cannot parse {raw[k]!r}: {e}") from None
        if v is not None and spec.check is not None and not spec.check(v):
            choices = getattr(spec.check, "choices", None)
            what = f"one of {', '.join(map(str, choices))}" if choices else (spec.describe or "a valid value")
            raise ConfigError(k, f"invalid value {raw[k]!r}; expected {what}")
        out[k] = v
    return out


def component_rng(seed: int, label: str) -> np.random.Generator:
    """Independent stream for ``label`` derived from the global ``seed``.

    Streams are keyed by a stable hash of the label, so adding a new
    component never changes another component's draws.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(label.encode()),)))
