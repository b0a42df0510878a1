"""Global engine tunables.

Every threshold the engine consults lives on :class:`EngineParams` so that a
snapshot carries the exact configuration it was produced under.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

WEEK_SECONDS = 604800.0

#: 7-day half-life.
DEFAULT_DECAY_RATE = math.log(2) / WEEK_SECONDS


class ParamError(ValueError):
    """Raised when a tunable is outside its allowed range."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class EngineParams:
    dim: int = 256
    decay_rate: float = DEFAULT_DECAY_RATE
    # activation
    damping: float = 0.5
    max_hops: int = 3
    fan_out: int = 16
    activation_floor: float = 0.01
    seed_k: int = 8
    # ingest
    merge_threshold: float = 0.92
    semantic_threshold: float = 0.55
    max_semantic_edges: int = 4
    temporal_edge_weight: float = 0.5
    episode_gap: float = 1800.0
    size_threshold: int = 2000
    context_buffer: int = 8
    capacity: int = 10000
    # retrieval mutation
    reinforce_step: float = 0.5
    suppress_step: float = 0.25
    near_miss_count: int = 3
    near_miss_ratio: float = 0.8
    assoc_pairs_top: int = 3
    assoc_initial: float = 0.3
    assoc_step: float = 0.1
    wake_threshold: float = 0.80
    # consolidation
    dormancy_threshold: float = 0.15
    abstraction_fade: float = 1.5
    replay_window: float = 86400.0
    replay_step: float = 0.1
    cluster_threshold: float = 0.6
    cluster_min_size: int = 3
    cluster_coverage: float = 0.8
    gist_threshold: float = 0.7
    gist_min_episodes: int = 3
    # score weights: sim, act, rec, reinf, ctx
    w_sim: float = 0.35
    w_act: float = 0.25
    w_rec: float = 0.20
    w_reinf: float = 0.10
    w_ctx: float = 0.10

    @property
    def weights(self) -> tuple[float, float, float, float, float]:
        return (self.w_sim, self.w_act, self.w_rec, self.w_reinf, self.w_ctx)

    def validate(self) -> "EngineParams":
        def unit(key, lo=0.0, hi=1.0, open_lo=False, open_hi=False):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or math.isnan(v):
                raise ParamError(key, f"expected a number, got {v!r}")
            if (v < lo or (open_lo and v == lo)) or (v > hi or (open_hi and v == hi)):
                lb = "(" if open_lo else "["
                rb = ")" if open_hi else "]"
                raise ParamError(key, f"{v!r} outside {lb}{lo}, {hi}{rb}")

        def positive_int(key, minimum=1):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
                raise ParamError(key, f"expected an integer >= {minimum}, got {v!r}")

        for key in ("dim", "max_hops", "fan_out", "seed_k", "max_semantic_edges",
                    "size_threshold", "context_buffer", "capacity", "near_miss_count",
                    "assoc_pairs_top", "gist_min_episodes"):
            positive_int(key)
        positive_int("cluster_min_size", 2)
        unit("damping", open_lo=True, open_hi=True)
        for key in ("activation_floor", "merge_threshold", "semantic_threshold",
                    "temporal_edge_weight", "near_miss_ratio", "assoc_initial",
                    "assoc_step", "wake_threshold", "dormancy_threshold",
                    "replay_step", "cluster_threshold", "cluster_coverage",
                    "gist_threshold", "w_sim", "w_act", "w_rec", "w_reinf", "w_ctx"):
            unit(key)
        for key in ("decay_rate", "episode_gap", "replay_window",
                    "reinforce_step", "suppress_step"):
            unit(key, hi=math.inf)
        unit("abstraction_fade", lo=1.0, hi=math.inf)
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            raise ParamError("w_sim", f"score weights must sum to 1, got {total!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParamError(sorted(unknown)[0], "unknown parameter")
        return cls(**data).validate()
