from __future__ import annotations

import copy
import statistics

import pytest
import yaml

from fabrid.addr import AsId
from fabrid.data_plane import PathInvalid, PathValid
from fabrid.sim import (
    ConfigError,
    EventLoop,
    Fault,
    Network,
    RttScenario,
    SimulationError,
    UnknownAs,
    clear_faults,
    inject_fault,
    load_topology,
    run_beaconing,
    run_rtt_experiment,
    run_send,
    samples_csv,
    topology_from_dict,
)

SRC, P, DST = AsId(1, 10), AsId(1, 12), AsId(1, 14)


@pytest.fixture
def rtt_dict(configs):
    return yaml.safe_load((configs / "rtt.yaml").read_text())


def _net(d, seed=None):
    net = Network(topology_from_dict(d, seed))
    run_beaconing(net)
    return net


def _no_jitter(d):
    d = copy.deepcopy(d)
    for a in d["ases"]:
        if "default_route" in a:
            a["default_route"]["jitter"] = {"mean_ms": 0}
    return d


def test_event_loop_orders_by_time_then_fifo():
    loop, seen = EventLoop(), []
    loop.at(5, seen.append, "b")
    loop.at(1, seen.append, "a")
    loop.at(5, seen.append, "c")
    loop.after(3, seen.append, "x")
    loop.run()
    assert seen == ["a", "x", "b", "c"] and loop.now == 5


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["ases"].append({"id": "1-10"}), "ases[5].id"),
        (lambda d: d["links"].append({"a": "1-10", "a_if": 1, "b": "1-14", "b_if": 9, "latency_ms": 1}), "links[4]"),
        (lambda d: d["links"].append({"a": "1-10", "a_if": 7, "b": "1-99", "b_if": 9, "latency_ms": 1}), "links[4]"),
        (lambda d: d["links"].pop(), "links"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d.update(colour="red"), "topology"),
        (lambda d: d["ases"][2]["policies"].append({"index": 1, "pid": 1, "scope": "global"}), "ases[2].policies"),
        (lambda d: d["ases"][2]["policies"].append({"index": 3, "pid": 5, "scope": "global"}), "ases[1-12].policies"),
        (lambda d: d["ases"][2]["routes"].append({"id": "z", "indices": [0], "latency_ms": 1}), "ases[2].routes[1].indices"),
        (lambda d: d["global_policies"][0].update(description="manu(r) = = 1"), "global_policies[0].description"),
    ],
)
def test_config_errors_name_the_field(rtt_dict, mutate, field):
    mutate(rtt_dict)
    with pytest.raises(ConfigError) as ei:
        topology_from_dict(rtt_dict)
    assert ei.value.field == field


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_topology(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("ases: [")
    with pytest.raises(ConfigError):
        load_topology(bad)


def test_seed_determines_keys(rtt_dict):
    a, b = topology_from_dict(rtt_dict), topology_from_dict(copy.deepcopy(rtt_dict))
    c = topology_from_dict(rtt_dict, seed=7)
    ka = {x: cfg.secret.key.bytes_ for x, cfg in a.ases.items()}
    assert ka == {x: cfg.secret.key.bytes_ for x, cfg in b.ases.items()}
    assert ka != {x: cfg.secret.key.bytes_ for x, cfg in c.ases.items()}
    assert len(set(ka.values())) == len(ka)


def test_same_seed_same_samples(rtt_dict):
    sc = RttScenario(SRC, DST, count=20)
    one = run_rtt_experiment(_net(rtt_dict), sc)
    two = run_rtt_experiment(_net(rtt_dict), sc)
    other = run_rtt_experiment(_net(rtt_dict, seed=99), sc)
    assert one == two and len(one) == 20
    assert one != other


def test_zero_jitter_delta_is_exact(rtt_dict):
    net = _net(_no_jitter(rtt_dict))
    fast = run_rtt_experiment(net, RttScenario(SRC, DST, index=1, policy_as=P, count=5))
    slow = run_rtt_experiment(net, RttScenario(SRC, DST, index=0, count=5))
    assert {s.rtt_ms for s in fast} == {70.0}
    assert {s.rtt_ms for s in slow} == {98.0}


def test_jittered_means_near_calibration(rtt_dict):
    net = _net(rtt_dict)
    slow = run_rtt_experiment(net, RttScenario(SRC, DST, index=0, count=400))
    fast = run_rtt_experiment(net, RttScenario(SRC, DST, index=1, count=50))
    assert {s.rtt_ms for s in fast} == {70.0}
    assert 105 < statistics.mean(s.rtt_ms for s in slow) < 125
    assert min(s.rtt_ms for s in slow) > 70.0


def test_samples_csv(rtt_dict):
    samples = run_rtt_experiment(_net(_no_jitter(rtt_dict)), RttScenario(SRC, DST, index=1, count=2))
    assert samples_csv(samples) == "seq,index,rtt_ms\n0,1,70.000\n1,1,70.000\n"


def test_honest_send_is_valid_and_conserved(rtt_dict):
    net = _net(rtt_dict)
    rep = run_send(net, SRC, DST, [0, 0, 1, 0, 0], count=30, interval_ms=10)
    assert rep.delivered == 30
    assert all(isinstance(r.validation, PathValid) for r in rep.results)
    assert net.stats.balanced and net.stats.sent == 30


def test_skip_fault_localised(rtt_dict):
    net = inject_fault(_net(rtt_dict), Fault("skip_hvf_update", P))
    rep = run_send(net, SRC, DST, count=3)
    assert all(r.validation == PathInvalid(r.validation.ts, (3,)) for r in rep.results)
    clear_faults(net)
    assert isinstance(run_send(net, SRC, DST).results[0].validation, PathValid)


def test_tamper_fault_dropped_downstream(rtt_dict):
    net = inject_fault(_net(rtt_dict), Fault("tamper_index", P, offset=1))
    rep = run_send(net, SRC, DST, count=4)
    assert rep.delivered == 0
    assert {(r.where, r.drop) for r in rep.results} == {(AsId(1, 13), "BadHvf")}
    assert net.stats.balanced and net.stats.dropped["BadHvf"] == 4


def test_wrong_route_shifts_rtt(rtt_dict):
    d = _no_jitter(rtt_dict)
    honest = run_rtt_experiment(_net(d), RttScenario(SRC, DST, index=1, policy_as=P, count=3))
    net = inject_fault(_net(d), Fault("wrong_route", P))
    faulty = run_rtt_experiment(net, RttScenario(SRC, DST, index=1, policy_as=P, count=3))
    assert [s.rtt_ms for s in honest] == [70.0] * 3
    assert [s.rtt_ms for s in faulty] == [98.0] * 3


def test_unsupported_index_is_control_reply(rtt_dict):
    net = _net(rtt_dict)
    rep = run_send(net, SRC, DST, [0, 0, 2, 0, 0])
    assert rep.results[0].drop == "ControlReply" and rep.results[0].where == P
    assert net.stats.replies == 1 and net.stats.balanced
    with pytest.raises(SimulationError):
        run_rtt_experiment(net, RttScenario(SRC, DST, indices=(0, 0, 2, 0, 0), count=1))


def test_unknown_as_errors(rtt_dict):
    net = _net(rtt_dict)
    with pytest.raises(UnknownAs):
        inject_fault(net, Fault("skip_hvf_update", AsId(9, 9)))
    with pytest.raises(ValueError):
        inject_fault(net, Fault("melt", P))
    with pytest.raises(UnknownAs):
        net.node(AsId(9, 9))
    with pytest.raises(SimulationError):
        run_rtt_experiment(net, RttScenario(AsId(1, 11), DST, count=1))


def test_announcement_without_route_is_diagnosed(rtt_dict):
    rtt_dict["ases"][2]["policies"].append({"index": 4, "pid": 1, "scope": "global"})
    net = _net(rtt_dict)
    kinds = {(d.as_id, d.kind) for d in net.diagnostics}
    assert (P, "UnsupportedAnnouncement") in kinds
    # beaconing still completes without the announcement
    assert run_send(net, SRC, DST).delivered == 1


def test_chain_beaconing_single_up_segment(configs):
    from fabrid.control_plane import SegmentKind

    net = Network(load_topology(configs / "chain4.yaml"))
    run_beaconing(net)
    (seg,) = net.segments(SegmentKind.UP, AsId(1, 4))
    assert seg.pcb.ases == [AsId(1, 1), AsId(1, 2), AsId(1, 3), AsId(1, 4)]
