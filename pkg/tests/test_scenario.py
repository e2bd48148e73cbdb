import pytest
from hypothesis import given, strategies as st

from clusterlb.loads import Thresholds
from clusterlb.scenario import (
    DEFAULT_INTERVALS, ConfigError, LoadSpec, ScenarioConfig, SweepSpec, default_sweep_spec, dump_config,
    generate_loads, parse_config, split_clusters, worked_example_config,
)
from clusterlb.sim import PayloadTime


def test_generator_range_and_determinism():
    spec = LoadSpec(profile="low", seed=7)
    a = generate_loads(spec, 200)
    assert a == generate_loads(spec, 200)
    assert all(5 <= x <= 20 for x in a)
    assert a != generate_loads(LoadSpec(profile="low", seed=8), 200)


def test_degenerate_intervals_give_constants():
    spec = LoadSpec(intervals=((3, 3), (4, 4), (9, 9)), weights=(0, 0, 1))
    assert generate_loads(spec, 10) == [9] * 10


def test_forced_high_class():
    loads = generate_loads(LoadSpec(profile="high", weights=(0.0, 0.0, 1.0), seed=1), 50)
    lo, hi = DEFAULT_INTERVALS[2]
    assert all(lo <= x <= hi for x in loads)


@pytest.mark.parametrize("kw", [
    {"intervals": ((5, 9), (9, 14), (15, 20))},
    {"intervals": ((5, 9), (10, 14))},
    {"intervals": ((9, 5), (10, 14), (15, 20))},
    {"profile": "extreme"},
    {"weights": (0.5, 0.5, 0.5)},
])
def test_bad_generator_specs(kw):
    with pytest.raises(ConfigError):
        LoadSpec(**kw)


def test_config_round_trip():
    cfg = ScenarioConfig(cluster_sizes=[3, 4], thresholds=Thresholds(4, 8), d=2, T=1.5,
                         L=PayloadTime("linear", 0.25), generator=LoadSpec("high", seed=(1, 2)),
                         timers=[0.0, 2.0], event_ceiling=500)
    assert parse_config(dump_config(cfg)) == cfg
    golden = worked_example_config()
    assert parse_config(dump_config(golden)) == golden


@given(st.lists(st.integers(1, 6), min_size=1, max_size=4), st.data())
def test_explicit_config_round_trip(sizes, data):
    n = sum(sizes)
    loads = data.draw(st.lists(st.integers(0, 30), min_size=n, max_size=n))
    cfg = ScenarioConfig(cluster_sizes=sizes, loads=loads, d=data.draw(st.integers(1, 4)))
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text,where", [
    ('{"cluster_sizes": [2], "loads": [1, 2,]}', "line 1"),
    ('{"cluster_sizes": [2], "loads": [1]}', "loads"),
    ('{"cluster_sizes": [2], "loads": [1, "x"]}', "loads[1]"),
    ('{"cluster_sizes": [2], "loads": [1, 2], "color": 3}', "color"),
    ('{"loads": [1, 2]}', "cluster_sizes"),
    ('{"cluster_sizes": [2], "loads": [1, 2], "thresholds": {"low_max": 9, "medium_max": 3}}', "thresholds"),
    ('{"cluster_sizes": [2], "generator": {"profile": "low", "intervals": [[5, 9], [1, 14], [15, 20]]}}',
     "generator.intervals"),
    ('{"cluster_sizes": [2], "loads": [1, 2], "L": {"cubic": 1}}', "L"),
])
def test_config_errors_name_the_field(text, where):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.where.startswith(where)


def test_split_clusters():
    assert split_clusters(12, 4) == [4, 4, 4]
    assert split_clusters(14, 4) == [4, 4, 4, 2]


def test_default_sweep_shape():
    cells = list(default_sweep_spec().cells())
    assert len(cells) == 10 * 3 * 3 * 3
    assert len({c.scenario_id for c in cells}) == 90


def test_sweep_spec_validation():
    assert list(SweepSpec.from_dict({}).cells()) == []
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"profiles": ["nope"]})
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"actors": [0], "cluster_sizes": [3]})
