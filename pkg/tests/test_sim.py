import csv
import json
import os
import subprocess
import sys
import warnings

import pytest

from decent.agent import Agent
from decent.sim import events
from decent.sim.experiments import run_adversary_experiment, run_post_experiment, run_wall_experiment
from decent.sim.network import NetworkConfig, SimEnvironment, build_network
from decent.sim.results import CSV_COLUMNS, ExperimentResult, TrialRecord, emit_results, mean_ci

from oracles import r_squared

GROUP = "toy-256-64"


def small(**kw):
    return NetworkConfig(**{"nodes": 80, "group": GROUP, "seed": 1, **kw})


def test_event_loop_orders_by_time_then_insertion():
    loop = events.EventLoop()
    seen = []
    loop.schedule(5, lambda: seen.append("b"))
    loop.schedule(1, lambda: seen.append("a"))
    loop.schedule(5, lambda: seen.append("c"))
    loop.run()
    assert seen == ["a", "b", "c"] and loop.now == 5
    with pytest.raises(ValueError):
        loop.schedule(-1, lambda: None)


def test_latency_model():
    net = build_network(small(nodes=2))
    t = net.transport
    a, b = 10**9, 10**9 + 1
    t.coords[a], t.coords[b] = (0.0, 0.0), (0.3, 0.4)
    assert t.delay(a, b) == pytest.approx(5 + 100 * 0.5)
    assert t.delay(a, a) == 0


def test_trace_accounts_for_all_simulated_time():
    net = build_network(small())
    env = SimEnvironment(net)
    net.loop.tracing = True
    start = net.loop.now
    alice = Agent.join("alice", env, group=GROUP)
    bob = Agent.join("bob", env, group=GROUP)
    alice.add_contact(bob, ["friend"])
    for i in range(3):
        alice.post_status(f"s{i}", "friend")
    bob.view_wall(alice.account.root_ref)
    spent = sum(e.cost for e in net.loop.trace)
    assert spent == pytest.approx(net.loop.now - start)
    assert {e.kind for e in net.loop.trace} >= {"net", "policy_decrypt_leaf"}


def test_same_seed_same_results():
    a = run_wall_experiment(3, trials=3, config=small())
    b = run_wall_experiment(3, trials=3, config=small())
    strip = lambda r: [(t.sim_ms, t.dht_gets, t.policy_decrypts) for t in r.trials]
    assert strip(a) == strip(b)
    c = run_wall_experiment(3, trials=3, config=small(seed=2))
    assert strip(a) != strip(c)


SCRIPT = """
from decent.sim.experiments import run_wall_experiment
from decent.sim.network import NetworkConfig
r = run_wall_experiment(2, trials=2, config=NetworkConfig(nodes=60, group="toy-256-64", seed=5))
print([t.sim_ms for t in r.trials])
"""


def test_deterministic_across_hash_seeds():
    outs = set()
    for hs in ("0", "12345"):
        env = {**os.environ, "PYTHONHASHSEED": hs}
        outs.add(subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True).stdout)
    assert len(outs) == 1


def test_wall_time_linear_in_items():
    xs = [5, 10, 20, 40]
    cfg = NetworkConfig(nodes=200, group=GROUP, seed=2)
    ys = [mean_ci(run_wall_experiment(x, trials=5, config=cfg).sim_ms)[0] for x in xs]
    assert r_squared(xs, ys) >= 0.99


def test_post_and_comment_costs_flat():
    post, comment = run_post_experiment(15, config=small())
    assert {(t.dht_gets, t.dht_puts, t.appends) for t in post.trials} == {(0, 2, 0)}
    assert len({(t.dht_gets, t.dht_puts, t.appends) for t in comment.trials}) == 1
    assert comment.trials[0].appends == 1 and comment.trials[0].dht_puts == 1


def test_threat_bound_warning():
    with pytest.warns(UserWarning, match="threat-model"):
        NetworkConfig(malicious=0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        NetworkConfig(malicious=0.25)
    with pytest.raises(ValueError):
        NetworkConfig(malicious=1.5)


def test_config_validation():
    for bad in ({"churn": 1.0}, {"departures": "eventually"}, {"replicas": 0}):
        with pytest.raises(ValueError):
            NetworkConfig(**bad)


def test_mean_ci():
    m, lo, hi = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and lo < 2.0 < hi
    assert hi - m == pytest.approx(4.302652729749464 * 1.0 / 3**0.5)
    assert mean_ci([4.0]) == (4.0, 4.0, 4.0)


def test_emit_results(tmp_path):
    res = ExperimentResult("wall", "items", "5", extra={"note": 1})
    res.trials = [TrialRecord("wall", i, "items", "5", 1.5 + i, 0.1, 7, 0, 0, 7, 0) for i in range(3)]
    trials_path, agg_path = emit_results([res], tmp_path)
    rows = list(csv.reader(trials_path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0] == "experiment,trial,param,value,sim_ms,wall_ms,dht_gets,dht_puts,appends,policy_decrypts,failures".split(",")
    assert len(rows) == 4
    agg = list(csv.DictReader(agg_path.open()))
    assert agg[0]["sim_ms_mean"] == "2.500000"
    assert "wall_ms" not in agg[0]
    assert json.loads((tmp_path / "extra.json").read_text()) == [{"experiment": "wall", "value": "5", "note": 1}]


def test_small_adversary_run():
    res = run_adversary_experiment(0.1, 3, nodes=120, objects=60, rounds=5, trials=3, seed=4)
    rep = res.extra["availability"]
    assert rep["objects"] == 60 and len(res.trials) == 3
    assert rep["stale"] == 0
    assert rep["retrieved"] >= 57
