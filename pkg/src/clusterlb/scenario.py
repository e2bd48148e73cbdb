"""Scenario configuration, seeded load generation and sweep specs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .loads import Thresholds
from .metrics import Metrics, count_high, summarize
from .sim import DEFAULT_EVENT_CEILING, InvariantViolation, PayloadTime, RoundResult, build_topology, run_round

PROFILES = ("low", "medium", "high")

# probability of drawing a LOW / MEDIUM / HIGH load for each profile
PROFILE_WEIGHTS = {
    "low": (0.6, 0.3, 0.1),
    "medium": (0.2, 0.6, 0.2),
    "high": (0.1, 0.3, 0.6),
}

DEFAULT_INTERVALS = ((5, 9), (10, 14), (15, 20))
DEFAULT_THRESHOLDS = Thresholds(low_max=9, medium_max=14)


class ConfigError(ValueError):
    """Bad configuration; ``where`` names the field or line at fault."""

    def __init__(self, where: str, problem: str):
        self.where = where
        self.problem = problem
        super().__init__(f"{where}: {problem}")


# --------------------------------------------------------------------------
# load generation

@dataclass(frozen=True)
class LoadSpec:
    profile: str = "medium"
    intervals: tuple[tuple[int, int], ...] = DEFAULT_INTERVALS
    seed: int | tuple[int, ...] = 0
    weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.weights is None and self.profile not in PROFILE_WEIGHTS:
            raise ConfigError("generator.profile", f"unknown profile {self.profile!r}")
        iv = self.intervals
        if len(iv) != 3:
            raise ConfigError("generator.intervals", "need exactly three (lo, hi) intervals")
        for name, (lo, hi) in zip(("low", "medium", "high"), iv):
            if lo < 0 or lo > hi:
                raise ConfigError("generator.intervals", f"{name} interval [{lo}, {hi}] is invalid")
        for (_, hi), (lo, _) in zip(iv, iv[1:]):
            if lo <= hi:
                raise ConfigError("generator.intervals", "intervals must be ordered and disjoint")
        w = self.class_weights
        if len(w) != 3 or any(x < 0 for x in w) or not np.isclose(sum(w), 1.0):
            raise ConfigError("generator.weights", f"weights {w} must be three non-negatives summing to 1")

    @property
    def class_weights(self) -> tuple[float, float, float]:
        return tuple(self.weights) if self.weights is not None else PROFILE_WEIGHTS[self.profile]

    def to_dict(self) -> dict:
        out = {"profile": self.profile, "intervals": [list(x) for x in self.intervals],
               "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


def generate_loads(spec: LoadSpec, n: int) -> list[int]:
    """Draw a class per actor from the profile weights, then a uniform integer in its interval."""
    rng = np.random.default_rng(spec.seed)
    classes = rng.choice(3, size=n, p=np.asarray(spec.class_weights))
    lo = np.array([spec.intervals[c][0] for c in classes])
    hi = np.array([spec.intervals[c][1] for c in classes])
    return [int(x) for x in rng.integers(lo, hi + 1)]


# --------------------------------------------------------------------------
# single-round configuration

@dataclass
class ScenarioConfig:
    cluster_sizes: list[int]
    thresholds: Thresholds = DEFAULT_THRESHOLDS
    d: int = 1
    T: float = 1.0
    L: PayloadTime = field(default_factory=PayloadTime)
    loads: list[int] | None = None
    generator: LoadSpec | None = None
    timers: str | list[float] = "simultaneous"
    event_ceiling: int = DEFAULT_EVENT_CEILING

    def __post_init__(self):
        if not self.cluster_sizes or any(s < 1 for s in self.cluster_sizes):
            raise ConfigError("cluster_sizes", "need a non-empty list of positive sizes")
        if (self.loads is None) == (self.generator is None):
            raise ConfigError("loads", "give exactly one of 'loads' or 'generator'")
        if self.loads is not None:
            if len(self.loads) != self.n_actors:
                raise ConfigError("loads", f"{len(self.loads)} loads for {self.n_actors} actors")
            if any(x < 0 for x in self.loads):
                raise ConfigError("loads", "loads must be non-negative")
        if isinstance(self.timers, str):
            if self.timers != "simultaneous":
                raise ConfigError("timers", f"expected 'simultaneous' or a list, got {self.timers!r}")
        elif len(self.timers) != len(self.cluster_sizes):
            raise ConfigError("timers", f"{len(self.timers)} offsets for {len(self.cluster_sizes)} clusters")
        if self.event_ceiling < 1:
            raise ConfigError("event_ceiling", "must be positive")
        if self.d < 1 or self.T <= 0:
            raise ConfigError("d/T", "need d >= 1 and T > 0")

    @property
    def n_actors(self) -> int:
        return sum(self.cluster_sizes)

    def initial_loads(self) -> list[int]:
        if self.loads is not None:
            return list(self.loads)
        return generate_loads(self.generator, self.n_actors)

    def topology(self):
        return build_topology(self.cluster_sizes, d=self.d, T=self.T, L=self.L)

    def to_dict(self) -> dict:
        out = {
            "cluster_sizes": list(self.cluster_sizes),
            "thresholds": {"low_max": self.thresholds.low_max, "medium_max": self.thresholds.medium_max},
            "d": self.d,
            "T": self.T,
            "L": {self.L.kind: self.L.value},
            "timers": self.timers if isinstance(self.timers, str) else list(self.timers),
            "event_ceiling": self.event_ceiling,
        }
        if self.loads is not None:
            out["loads"] = list(self.loads)
        else:
            out["generator"] = self.generator.to_dict()
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {"cluster_sizes", "thresholds", "d", "T", "L", "loads", "generator", "timers", "event_ceiling"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        if "cluster_sizes" not in raw:
            raise ConfigError("cluster_sizes", "missing")
        kw = {"cluster_sizes": _int_list(raw["cluster_sizes"], "cluster_sizes")}
        if "thresholds" in raw:
            kw["thresholds"] = _thresholds(raw["thresholds"], "thresholds")
        if "d" in raw:
            kw["d"] = _int(raw["d"], "d")
        if "T" in raw:
            kw["T"] = _num(raw["T"], "T")
        if "L" in raw:
            kw["L"] = _payload(raw["L"], "L")
        if "loads" in raw:
            kw["loads"] = _int_list(raw["loads"], "loads")
        if "generator" in raw:
            kw["generator"] = _load_spec(raw["generator"], "generator")
        if "timers" in raw:
            tm = raw["timers"]
            kw["timers"] = tm if isinstance(tm, str) else [_num(x, "timers") for x in _list(tm, "timers")]
        if "event_ceiling" in raw:
            kw["event_ceiling"] = _int(raw["event_ceiling"], "event_ceiling")
        return cls(**kw)


def _list(v, where):
    if not isinstance(v, list):
        raise ConfigError(where, f"expected a list, got {type(v).__name__}")
    return v


def _int(v, where) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(where, f"expected an integer, got {v!r}")
    return v


def _num(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"expected a number, got {v!r}")
    return float(v)


def _int_list(v, where) -> list[int]:
    return [_int(x, f"{where}[{i}]") for i, x in enumerate(_list(v, where))]


def _thresholds(v, where) -> Thresholds:
    if not isinstance(v, dict) or set(v) != {"low_max", "medium_max"}:
        raise ConfigError(where, "expected {'low_max': int, 'medium_max': int}")
    try:
        return Thresholds(_int(v["low_max"], f"{where}.low_max"), _int(v["medium_max"], f"{where}.medium_max"))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(where, str(e)) from None


def _payload(v, where) -> PayloadTime:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return PayloadTime("constant", float(v))
    if not isinstance(v, dict) or len(v) != 1:
        raise ConfigError(where, "expected {'constant': c} or {'linear': alpha}")
    (kind, value), = v.items()
    try:
        return PayloadTime(kind, _num(value, f"{where}.{kind}"))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(where, str(e)) from None


def _load_spec(v, where) -> LoadSpec:
    if not isinstance(v, dict):
        raise ConfigError(where, "expected an object")
    extra = set(v) - {"profile", "intervals", "seed", "weights"}
    if extra:
        raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown field")
    kw = {}
    if "profile" in v:
        kw["profile"] = v["profile"]
    if "intervals" in v:
        iv = _list(v["intervals"], f"{where}.intervals")
        kw["intervals"] = tuple(tuple(_int_list(x, f"{where}.intervals[{i}]")) for i, x in enumerate(iv))
        if any(len(x) != 2 for x in kw["intervals"]):
            raise ConfigError(f"{where}.intervals", "each interval is [lo, hi]")
    if "seed" in v:
        s = v["seed"]
        kw["seed"] = tuple(_int_list(s, f"{where}.seed")) if isinstance(s, list) else _int(s, f"{where}.seed")
    if "weights" in v:
        kw["weights"] = tuple(_num(x, f"{where}.weights") for x in _list(v["weights"], f"{where}.weights"))
    return LoadSpec(**kw)


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}", e.msg) from None
    return ScenarioConfig.from_dict(raw)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


# --------------------------------------------------------------------------
# running

def check_round(result: RoundResult) -> None:
    """Post-round invariants every completed round must satisfy."""
    t = result.thresholds
    if sum(result.final_loads) != sum(result.initial_loads):
        raise InvariantViolation(
            f"load not conserved: {sum(result.initial_loads)} -> {sum(result.final_loads)}")
    if count_high(result.final_loads, t) > count_high(result.initial_loads, t):
        raise InvariantViolation("round increased the number of HIGH nodes")
    if result.circuits > 1:
        raise InvariantViolation(f"{result.circuits} tokens completed the ring")


def run_scenario(cfg: ScenarioConfig, loads: Sequence[int] | None = None) -> tuple[RoundResult, Metrics]:
    loads = cfg.initial_loads() if loads is None else list(loads)
    timers = None if cfg.timers == "simultaneous" else cfg.timers
    result = run_round(cfg.topology(), loads, cfg.thresholds, timers=timers,
                       event_ceiling=cfg.event_ceiling)
    check_round(result)
    return result, summarize(result.initial_loads, result.final_loads, result, cfg.thresholds)


def worked_example_config() -> ScenarioConfig:
    """Four clusters of six with coordinators 0, 6, 12 and 18.

    Node 2 starts at 15; clusters 0 and 12 stay HIGH after local balancing,
    cluster 6 sits exactly at capacity, and cluster 18 absorbs both
    clusters' excess, cluster 12 shipping it as chunks of 3, 3 and 2.  The
    figure's exact labels are not reproduced; these loads are reconstructed
    to satisfy the stated facts.
    """
    loads = [
        13, 9, 15, 7, 10, 10,    # cluster 0: total 64
        10, 10, 10, 10, 10, 10,  # cluster 6: total 60
        15, 13, 12, 8, 10, 10,   # cluster 12: total 68
        10, 10, 5, 6, 9, 8,      # cluster 18: total 48
    ]
    return ScenarioConfig(cluster_sizes=[6, 6, 6, 6], thresholds=Thresholds(5, 10), loads=loads)


# --------------------------------------------------------------------------
# sweeps

@dataclass
class SweepCell:
    scenario_id: str
    n_actors: int
    cluster_size: int
    profile: str
    seed: int
    config: ScenarioConfig


def split_clusters(n_actors: int, cluster_size: int) -> list[int]:
    full, rest = divmod(n_actors, cluster_size)
    return [cluster_size] * full + ([rest] if rest else [])


@dataclass
class SweepSpec:
    actors: list[int] = field(default_factory=list)
    cluster_sizes: list[int] = field(default_factory=list)
    profiles: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    thresholds: Thresholds = DEFAULT_THRESHOLDS
    intervals: tuple[tuple[int, int], ...] = DEFAULT_INTERVALS
    weights: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    d: int = 1
    T: float = 1.0
    L: PayloadTime = field(default_factory=PayloadTime)
    event_ceiling: int = DEFAULT_EVENT_CEILING

    def cells(self) -> Iterator[SweepCell]:
        for profile in self.profiles:
            for cs in self.cluster_sizes:
                for n in self.actors:
                    for seed in self.seeds:
                        # fold the cell coordinates into the seed so cells never share draws
                        entropy = (seed, n, cs, PROFILES.index(profile) if profile in PROFILES else 99)
                        gen = LoadSpec(profile=profile, intervals=self.intervals, seed=entropy,
                                       weights=self.weights.get(profile))
                        cfg = ScenarioConfig(cluster_sizes=split_clusters(n, cs), thresholds=self.thresholds,
                                             d=self.d, T=self.T, L=self.L, generator=gen,
                                             event_ceiling=self.event_ceiling)
                        yield SweepCell(f"n{n}-c{cs}-{profile}", n, cs, profile, seed, cfg)

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSpec":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "sweep spec must be a JSON object")
        known = {"actors", "cluster_sizes", "profiles", "seeds", "thresholds", "intervals",
                 "weights", "d", "T", "L", "event_ceiling"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        kw = {}
        for key in ("actors", "cluster_sizes", "seeds"):
            if key in raw:
                kw[key] = _int_list(raw[key], key)
        if "profiles" in raw:
            profs = _list(raw["profiles"], "profiles")
            for i, p in enumerate(profs):
                if p not in PROFILES and p not in raw.get("weights", {}):
                    raise ConfigError(f"profiles[{i}]", f"unknown profile {p!r}")
            kw["profiles"] = list(profs)
        if "thresholds" in raw:
            kw["thresholds"] = _thresholds(raw["thresholds"], "thresholds")
        if "intervals" in raw:
            kw["intervals"] = _load_spec({"intervals": raw["intervals"]}, "<sweep>").intervals
        if "weights" in raw:
            w = raw["weights"]
            if not isinstance(w, dict):
                raise ConfigError("weights", "expected {profile: [w_low, w_med, w_high]}")
            kw["weights"] = {p: tuple(_num(x, f"weights.{p}") for x in _list(v, f"weights.{p}"))
                             for p, v in w.items()}
        if "d" in raw:
            kw["d"] = _int(raw["d"], "d")
        if "T" in raw:
            kw["T"] = _num(raw["T"], "T")
        if "L" in raw:
            kw["L"] = _payload(raw["L"], "L")
        if "event_ceiling" in raw:
            kw["event_ceiling"] = _int(raw["event_ceiling"], "event_ceiling")
        spec = cls(**kw)
        if any(a < 1 for a in spec.actors) or any(c < 1 for c in spec.cluster_sizes):
            raise ConfigError("actors/cluster_sizes", "must be positive")
        return spec


def default_sweep_spec() -> SweepSpec:
    """12..120 actors, cluster sizes 3/4/6, all three profiles, seeds 0-2."""
    return SweepSpec(actors=list(range(12, 121, 12)), cluster_sizes=[3, 4, 6],
                     profiles=list(PROFILES), seeds=[0, 1, 2])


def random_suite(profile: str, count: int, base_seed: int = 0) -> Iterator[SweepCell]:
    """``count`` seeded scenarios with 12-120 actors and cluster size 3, 4 or 6."""
    for i in range(count):
        rng = np.random.default_rng((base_seed, i, PROFILES.index(profile)))
        n = int(rng.integers(1, 11)) * 12
        cs = int(rng.choice([3, 4, 6]))
        gen = LoadSpec(profile=profile, seed=(base_seed, i, n, cs))
        cfg = ScenarioConfig(cluster_sizes=split_clusters(n, cs), generator=gen)
        yield SweepCell(f"rand{i}-n{n}-c{cs}-{profile}", n, cs, profile, i, cfg)
