"""Experiment drivers: wall views, newsfeeds, posting cost, and availability under attack."""
from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass

from .. import objects as obj
from .. import policy as pol
from ..agent import Agent, WallUnreadable
from ..crypto import abe
from ..crypto.group import SeededRng, get_group
from ..crypto.primitives import signature_keypair
from ..dht.overlay import NoReplicaResponded
from ..dht.storage import Behavior
from .network import NetworkConfig, SimEnvironment, SimNetwork, build_network
from .results import ExperimentResult, TrialRecord

COMPOSITIONS = ("statuses", "posts", "full")
MIN_TRIALS = 20


@dataclass
class _Snapshot:
    sim: float
    wall: float
    stats: Counter


def _snap(env: SimEnvironment) -> _Snapshot:
    return _Snapshot(env.loop.now, time.perf_counter(), Counter(env.stats))


def _record(env: SimEnvironment, before: _Snapshot, experiment: str, trial: int, param: str, value, failures: int) -> TrialRecord:
    d = Counter(env.stats)
    d.subtract(before.stats)
    return TrialRecord(
        experiment=experiment,
        trial=trial,
        param=param,
        value=str(value),
        sim_ms=env.loop.now - before.sim,
        wall_ms=(time.perf_counter() - before.wall) * 1000,
        dht_gets=d["gets"],
        dht_puts=d["puts"],
        appends=d["appends"],
        policy_decrypts=d["policy_decrypts"],
        failures=failures,
    )


def _env(network: SimNetwork | None, config: NetworkConfig | None) -> SimEnvironment:
    net = network if network is not None else build_network(config or NetworkConfig())
    return SimEnvironment(net)


def _join(env: SimEnvironment, name: str) -> Agent:
    return Agent.join(name, env, group=env.network.config.group)


def populate_wall(owner: Agent, friend: Agent, x: int, composition: str) -> list:
    """x statuses by ``owner``; x posts by ``friend`` if composition allows; one comment per status if full."""
    if composition not in COMPOSITIONS:
        raise ValueError(f"composition must be one of {COMPOSITIONS}")
    statuses = [owner.post_status(f"status {i}", "friend OR family") for i in range(x)]
    if composition in ("posts", "full"):
        for i in range(x):
            friend.post_to_wall(owner.account.root_ref, f"post {i}", "friend")
    if composition == "full":
        for i, ref in enumerate(statuses):
            friend.comment(ref, f"comment {i}", "friend")
    return statuses


def run_wall_experiment(
    x: int,
    mode: str = "others",
    composition: str = "full",
    *,
    trials: int = MIN_TRIALS,
    config: NetworkConfig | None = None,
    network: SimNetwork | None = None,
) -> ExperimentResult:
    """Time ``view_wall`` on a wall holding ``x`` of each item kind in ``composition``.

    Each trial uses fresh users placed on random honest nodes: an owner, a
    friend who posts and comments, and (mode "others") a separate viewer.
    """
    if mode not in ("own", "others"):
        raise ValueError("mode must be 'own' or 'others'")
    env = _env(network, config)
    name = f"wall-{mode}-{composition}"
    result = ExperimentResult(name, "items", str(x))
    tag = env.network.overlay.next_request_id()
    for trial in range(trials):
        prefix = f"{name}-{x}-{tag}-{trial}"
        owner = _join(env, f"{prefix}-owner")
        friend = _join(env, f"{prefix}-friend")
        owner.add_contact(friend, ["friend"])
        friend.add_contact(owner, ["friend"])
        if mode == "others":
            viewer = _join(env, f"{prefix}-viewer")
            owner.add_contact(viewer, ["friend"])
            friend.add_contact(viewer, ["friend"])
        else:
            viewer = owner
        populate_wall(owner, friend, x, composition)
        before = _snap(env)
        try:
            view = viewer.view_wall(owner.account.root_ref)
            failures = len(view.errors)
        except WallUnreadable:
            failures = 1
        result.trials.append(_record(env, before, name, trial, "items", x, failures))
    return result


def run_newsfeed_experiment(
    friends: int,
    *,
    trials: int = MIN_TRIALS,
    config: NetworkConfig | None = None,
    network: SimNetwork | None = None,
) -> ExperimentResult:
    """Time ``view_newsfeed`` for a viewer with ``friends`` contacts, each with one status."""
    env = _env(network, config)
    result = ExperimentResult("newsfeed", "friends", str(friends))
    tag = env.network.overlay.next_request_id()
    pool = []
    for i in range(friends):
        f = _join(env, f"feed-{friends}-{tag}-friend{i}")
        f.post_status(f"latest from friend {i}", "friend")
        pool.append(f)
    for trial in range(trials):
        viewer = _join(env, f"feed-{friends}-{tag}-viewer{trial}")
        for f in pool:
            f.add_contact(viewer, ["friend"])
        before = _snap(env)
        feed = viewer.view_newsfeed()
        failures = sum(e.item is None for e in feed)
        result.trials.append(_record(env, before, "newsfeed", trial, "friends", friends, failures))
    return result


def run_post_experiment(
    posts: int = 100,
    *,
    config: NetworkConfig | None = None,
    network: SimNetwork | None = None,
) -> list[ExperimentResult]:
    """Cost of each of ``posts`` sequential status posts, and of a comment on each.

    One result per operation kind; trial ``i`` is the ``i``-th operation, made
    when the wall already holds ``i`` statuses.
    """
    env = _env(network, config)
    tag = env.network.overlay.next_request_id()
    owner = _join(env, f"poster-{tag}")
    friend = _join(env, f"commenter-{tag}")
    owner.add_contact(friend, ["friend"])
    post_res = ExperimentResult("post", "wall_size", "sequential")
    comment_res = ExperimentResult("comment", "wall_size", "sequential")
    for i in range(posts):
        before = _snap(env)
        ref = owner.post_status(f"status {i}", "friend")
        post_res.trials.append(_record(env, before, "post", i, "wall_size", i, 0))
        before = _snap(env)
        friend.comment(ref, f"comment {i}", "friend", inherited_spk=owner.account.spk)
        comment_res.trials.append(_record(env, before, "comment", i, "wall_size", i, 0))
    return [post_res, comment_res]


# -- availability -------------------------------------------------------------------


@dataclass
class AvailabilityReport:
    objects: int
    rounds: int
    retrieved: int
    retrieved_without_widening: int
    stale: int
    lost: int
    lost_with_honest_replica: int
    all_malicious_fraction: float
    final_all_malicious: int
    expected_all_malicious: float
    updates: int


def run_adversary_experiment(
    malicious: float,
    replicas: int,
    *,
    behaviors: tuple = (Behavior.DROP, Behavior.STALE, Behavior.REFUSE_APPEND, Behavior.GARBAGE),
    nodes: int = 1000,
    objects: int = 1000,
    rounds: int = 100,
    churn: float = 0.1,
    updates_per_round: int = 10,
    trials: int = MIN_TRIALS,
    seed: int = 0,
    group: str | None = "toy-256-64",
    departures: str = "crash",
    republish: bool = True,
    widen: bool = True,
) -> ExperimentResult:
    """Store ``objects`` sealed objects, churn and repair for ``rounds``, then read them all back.

    Every round: churn, holder-driven repair, publisher republication, then a
    few overwrites. A retrieval succeeds only if the reader authenticates the
    latest version; with ``widen`` it falls back from the R closest to the k
    closest nodes when the replica set yields nothing authentic. Objects are split into ``trials``
    equal batches to give per-batch success rates for the confidence interval.
    The policy group defaults to a small one because only storage matters here.
    """
    cfg = NetworkConfig(
        nodes=nodes,
        malicious=malicious,
        behaviors=behaviors,
        churn=churn,
        replicas=replicas,
        seed=seed,
        join_lookups=False,
        routing="oracle",
        group=group,
        departures=departures,
    )
    net = build_network(cfg)
    overlay = net.overlay
    env = SimEnvironment(net)
    rng = SeededRng(seed).fork("objects")
    grp = get_group(group) if group else get_group()
    master, ids = abe.keygen_master(["reader"], grp, rng, "owner")
    signing_key, _ = signature_keypair(rng)
    owner = obj.OwnerKeys(signing_key, master)
    read_policy = pol.parse_policy("reader", ids)
    writer = env.dht("adversary-writer")

    class Tracked:
        __slots__ = ("sealed", "sym_key", "wask", "container", "ref", "auth_sig")

    tracked = []
    for i in range(objects):
        c = obj.create_object(obj.Blob(i.to_bytes(4, "big")), read_policy, None, owner, rng)
        writer.put_new(c.record)
        t = Tracked()
        t.sealed, t.sym_key, t.wask, t.container, t.ref = c.sealed, c.sym_key, c.wask, c.container, c.ref
        t.auth_sig = c.auth_sig
        tracked.append(t)

    def all_malicious(obj_id: bytes) -> bool:
        return all(not overlay.nodes[n].honest for n in overlay.closest_live(obj_id, replicas))

    picker = rng.fork("updates")
    bad_sets = 0
    updates = 0
    for _ in range(rounds):
        net.churn_round()
        overlay.replica_maintenance()
        if republish:
            for t in tracked:
                writer.republish(t.sealed.to_record(t.auth_sig))
        for _ in range(updates_per_round):
            t = tracked[picker.randbelow(objects)]
            sealed, auth_sig, container = obj.update_object(
                t.sealed, t.container, obj.Blob(t.container.content.data + b"+"), owner, t.wask, t.sym_key, rng
            )
            writer.put_update(sealed.to_record(auth_sig))
            t.sealed, t.container, t.auth_sig = sealed, container, auth_sig
            updates += 1
        bad_sets += sum(all_malicious(t.sealed.obj_id) for t in tracked)
    overlay.replica_maintenance()

    reader = env.dht("adversary-reader")
    batch = max(1, objects // trials)
    result = ExperimentResult("adversary", "f;R", f"{malicious};{replicas}")
    retrieved = narrow_ok = stale = lost_honest = final_bad = 0
    before = None
    batch_failures = 0
    for i, t in enumerate(tracked):
        if i % batch == 0:
            before = _snap(env)
            batch_failures = 0
        bad = all_malicious(t.sealed.obj_id)
        final_bad += bad
        got = None
        for width in (None, cfg.k) if widen else (None,):
            try:
                candidates = reader.get_fresh(t.sealed.obj_id, width)
            except NoReplicaResponded:
                continue
            for rec in candidates:
                try:
                    got = obj.open_with_key(obj.SealedObject.from_record(rec), t.sym_key, owner.spk)
                    break
                except (obj.ObjectError, ValueError):
                    continue
            if got is not None:
                narrow_ok += width is None and got.version == t.sealed.version
                break
        if got is not None and got.version == t.sealed.version:
            retrieved += 1
        else:
            batch_failures += 1
            if got is not None:
                stale += 1
            if not bad:
                lost_honest += 1
        if i % batch == batch - 1 or i == objects - 1:
            trial = len(result.trials)
            result.trials.append(_record(env, before, "adversary", trial, "f;R", f"{malicious};{replicas}", batch_failures))
    result.extra["availability"] = AvailabilityReport(
        objects=objects,
        rounds=rounds,
        retrieved=retrieved,
        retrieved_without_widening=narrow_ok,
        stale=stale,
        lost=objects - retrieved,
        lost_with_honest_replica=lost_honest,
        all_malicious_fraction=bad_sets / max(1, objects * rounds),
        final_all_malicious=final_bad,
        expected_all_malicious=malicious**replicas,
        updates=updates,
    ).__dict__
    return result


def run_adversary_sweep(
    fractions=(0.0, 0.1, 0.25),
    replica_counts=(1, 3, 5, 7),
    **kwargs,
) -> list[ExperimentResult]:
    return [run_adversary_experiment(f, r, **kwargs) for f in fractions for r in replica_counts]


def mean_lookup_hops(network: SimNetwork, lookups: int = 1000, seed: int = 0) -> float:
    """Mean iterative-lookup rounds for random targets from random nodes."""
    rng = SeededRng(seed).fork("lookups")
    ids = sorted(network.overlay.nodes)
    total = 0
    for _ in range(lookups):
        src = ids[rng.randbelow(len(ids))]
        total += network.overlay.client(src).lookup(rng.token_bytes(20)).hops
    return total / lookups


__all__ = [
    "AvailabilityReport",
    "COMPOSITIONS",
    "mean_lookup_hops",
    "populate_wall",
    "run_adversary_experiment",
    "run_adversary_sweep",
    "run_newsfeed_experiment",
    "run_post_experiment",
    "run_wall_experiment",
]
