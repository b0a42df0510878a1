"""Key-value configuration for the command line tool.

A config file holds ``key = value`` lines; ``#`` starts a comment. Any key
can be overridden with an environment variable named ``CMA_<KEY>`` in upper
case. Keys are the :class:`EngineParams` fields plus the judge, evaluation
and path settings below.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

from .params import EngineParams, ParamError

ENV_PREFIX = "CMA_"


@dataclass
class Config:
    params: EngineParams = field(default_factory=EngineParams)
    judge_tie_margin: float = 0.1
    judge_both_wrong_floor: float = 0.25
    judge_ordering_bonus: float = 0.1
    eval_seeds: tuple[int, ...] = (0, 1, 2)
    n_shuffles: int = 10000
    store_path: str = "cma-store"

    def validate(self) -> "Config":
        self.params.validate()
        for key in ("judge_tie_margin", "judge_both_wrong_floor", "judge_ordering_bonus"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ParamError(key, f"{v!r} outside [0, 1]")
        if not self.eval_seeds:
            raise ParamError("eval_seeds", "need at least one seed")
        if self.n_shuffles < 1:
            raise ParamError("n_shuffles", "must be >= 1")
        if not self.store_path:
            raise ParamError("store_path", "must not be empty")
        return self

    def items(self) -> list[tuple[str, str]]:
        """Every key with its canonical text form, params first."""
        out = [(f.name, _format(getattr(self.params, f.name))) for f in fields(EngineParams)]
        for f in fields(self):
            if f.name != "params":
                out.append((f.name, _format(getattr(self, f.name))))
        return out

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _param_types() -> dict[str, type]:
    types = {f.name: type(getattr(EngineParams(), f.name)) for f in fields(EngineParams)}
    base = Config()
    for f in fields(Config):
        if f.name != "params":
            types[f.name] = type(getattr(base, f.name))
    return types


def _coerce(key: str, text: str, kind: type):
    text = text.strip()
    try:
        if kind is bool:
            raise ValueError
        if kind is int:
            return int(text)
        if kind is float:
            v = float(text)
            if math.isnan(v):
                raise ValueError
            return v
        if kind is tuple:
            parts = [p.strip() for p in text.split(",") if p.strip()]
            return tuple(int(p) for p in parts)
        return text
    except ValueError:
        raise ParamError(key, f"cannot parse {text!r} as {kind.__name__}") from None


def parse_lines(text: str, source: str = "<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamError(f"{source}:{lineno}", "expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParamError(f"{source}:{lineno}", "empty key")
        raw[key] = value
    return raw


def build(raw: Mapping[str, str]) -> Config:
    types = _param_types()
    param_names = {f.name for f in fields(EngineParams)}
    params, rest = {}, {}
    for key, value in raw.items():
        if key not in types:
            raise ParamError(key, "unknown configuration key")
        (params if key in param_names else rest)[key] = _coerce(key, value, types[key])
    cfg = Config(params=EngineParams(**params), **rest)
    return cfg.validate()


def load(path: str | os.PathLike | None = None, environ: Mapping[str, str] | None = None) -> Config:
    """File values first, then ``CMA_*`` environment overrides.

    ``path`` defaults to ``$CMA_CONFIG``; with neither, defaults are used.
    """
    environ = os.environ if environ is None else environ
    path = path or environ.get(f"{ENV_PREFIX}CONFIG")
    raw: dict[str, str] = {}
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParamError("config", f"cannot read {path}: {exc.strerror or exc}") from None
        raw.update(parse_lines(text, str(path)))
    types = _param_types()
    for key in types:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            raw[key] = environ[env_key]
    return build(raw)
