"""Simulated network: coordinate latency, adversarial roles, churn, remote proxies."""
from __future__ import annotations

import math
import time
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from ..crypto import abe
from ..crypto.abe import ContactKey, ProxyRequest, ProxyShareState, ProxyState, ThresholdProxy
from ..crypto.group import Rng, SeededRng, get_group
from ..dht.overlay import DhtClient, DhtConfig, Overlay
from ..dht.storage import Behavior
from ..wire import DecodeError
from .events import EventLoop

THREAT_BOUND = 0.25
ADVERSARIAL = (Behavior.DROP, Behavior.STALE, Behavior.REFUSE_APPEND, Behavior.GARBAGE)


@dataclass
class CostModel:
    """Modeled local compute, in milliseconds per unit.

    Defaults are single-core timings of this implementation on the 2048-bit
    group, rounded. ``measure`` re-derives them on the current machine.
    """

    create: float = 0.5
    update: float = 0.5
    policy_encrypt_leaf: float = 0.9
    policy_decrypt_leaf: float = 2.1
    proxy_exp: float = 0.7
    open: float = 0.25
    verify_append: float = 0.2
    sign: float = 0.1

    def ms(self, op: str) -> float:
        return getattr(self, op, 0.0)

    @classmethod
    def measure(cls, group: str | None = None, repeats: int = 20) -> "CostModel":
        from .. import policy as pol
        from ..crypto.primitives import sign, signature_keypair, verify

        rng = SeededRng(0)
        g = get_group(group) if group else get_group()
        master, ids = abe.keygen_master(["a", "b"], g, rng, "m")
        tree = pol.parse_policy("a OR b", ids)
        proxy = ProxyState("m", g)
        key = abe.issue_key(master, proxy, "h", [ids["a"]], rng)

        def clock(fn) -> float:
            t = time.perf_counter()
            for _ in range(repeats):
                fn()
            return (time.perf_counter() - t) * 1000 / repeats

        ct = abe.encrypt(tree, b"k" * 32, master.public_params, rng)
        enc = clock(lambda: abe.encrypt(tree, b"k" * 32, master.public_params, rng)) / 2
        dec = clock(lambda: abe.decrypt(ct, key, [proxy], rng))
        exp = clock(lambda: g.exp(g.g, g.q - 2))
        sk, vk = signature_keypair(rng)
        sig = sign(sk, b"m")
        sg = clock(lambda: sign(sk, b"m"))
        vf = clock(lambda: verify(vk, b"m", sig))
        return cls(
            create=3 * sg,
            update=3 * sg,
            policy_encrypt_leaf=enc,
            policy_decrypt_leaf=max(dec - exp, 0.0),
            proxy_exp=exp,
            open=vf + 0.05,
            verify_append=vf,
            sign=sg,
        )


@dataclass
class NetworkConfig:
    nodes: int = 1000
    base_ms: float = 5.0
    ms_per_unit: float = 100.0
    malicious: float = 0.0
    behaviors: tuple = ADVERSARIAL
    churn: float = 0.0
    replicas: int = 5
    seed: int = 0
    k: int = 20
    alpha: int = 3
    timeout_ms: float = 1000.0
    routing: str = "iterative"
    join_lookups: bool = True
    # "crash": leavers vanish with their state; "graceful": honest leavers
    # first hand their records to the replica sets
    departures: str = "crash"
    group: str | None = None
    costs: CostModel = field(default_factory=CostModel)

    def __post_init__(self) -> None:
        if not 0.0 <= self.malicious <= 1.0:
            raise ValueError("malicious fraction must be within [0, 1]")
        if self.malicious > THREAT_BOUND:
            warnings.warn(
                f"malicious fraction {self.malicious} exceeds the {THREAT_BOUND} threat-model bound",
                stacklevel=2,
            )
        if not 0.0 <= self.churn < 1.0:
            raise ValueError("churn must be within [0, 1)")
        if self.departures not in ("graceful", "crash"):
            raise ValueError("departures must be 'graceful' or 'crash'")
        if self.nodes < 1 or self.replicas < 1:
            raise ValueError("need at least one node and one replica")
        self.behaviors = tuple(Behavior(b) for b in self.behaviors)


class SimTransport:
    """Delivers request batches through the event loop.

    One-way delay between two addresses is ``base + c * distance`` in the unit
    square. Requests in a batch travel concurrently; the caller resumes when
    the last reply arrives, or at the timeout if any reply is missing.
    """

    def __init__(self, loop: EventLoop, rng: Rng, base_ms: float, ms_per_unit: float, timeout_ms: float) -> None:
        self.loop = loop
        self.rng = rng
        self.base_ms = base_ms
        self.ms_per_unit = ms_per_unit
        self.timeout_ms = timeout_ms
        self.handlers: dict = {}
        self.service_ms: dict[int, float] = {}
        self.coords: dict[int, tuple[float, float]] = {}
        self.stats: Counter = Counter()

    def place(self, addr: int) -> tuple[float, float]:
        if addr not in self.coords:
            self.coords[addr] = (self.rng.random(), self.rng.random())
        return self.coords[addr]

    def register(self, addr: int, handler, service_ms: float = 0.0) -> None:
        self.place(addr)
        self.handlers[addr] = handler
        self.service_ms[addr] = service_ms

    def unregister(self, addr: int) -> None:
        self.handlers.pop(addr, None)

    def delay(self, a: int, b: int) -> float:
        if a == b:
            return 0.0
        (x1, y1), (x2, y2) = self.place(a), self.place(b)
        return self.base_ms + self.ms_per_unit * math.hypot(x1 - x2, y1 - y2)

    def call(self, src: int, dst: int, payload: bytes) -> bytes | None:
        return self.call_many(src, [(dst, payload)])[0]

    def call_many(self, src: int, requests: Sequence[tuple[int, bytes]]) -> list:
        loop = self.loop
        start = loop.now
        results: list = [None] * len(requests)
        finish = [start]

        def arrive(i: int, resp: bytes) -> None:
            results[i] = resp
            finish[0] = max(finish[0], loop.now)
            self.stats["messages"] += 1
            self.stats["bytes"] += len(resp)

        def deliver(i: int, dst: int, payload: bytes) -> None:
            handler = self.handlers.get(dst)
            resp = handler(src, payload) if handler is not None else None
            if resp is not None:
                loop.schedule(self.delay(dst, src) + self.service_ms.get(dst, 0.0), lambda: arrive(i, resp))

        for i, (dst, payload) in enumerate(requests):
            self.stats["messages"] += 1
            self.stats["bytes"] += len(payload)
            loop.schedule(self.delay(src, dst), lambda i=i, dst=dst, payload=payload: deliver(i, dst, payload))
        loop.run()
        end = finish[0]
        missing = sum(r is None for r in results)
        if missing:
            self.stats["timeouts"] += missing
            end = max(end, start + self.timeout_ms)
        loop.now = end
        loop.record("net", f"{len(requests)} requests from {src:x}", end - start)
        return results


# -- remote proxies ---------------------------------------------------------------

class RemoteProxy:
    """Client handle for a proxy running at its own simulated address."""

    def __init__(self, owner: str, addr: int, transport: SimTransport, src: int, group) -> None:
        self.owner = owner
        self.addr = addr
        self.transport = transport
        self.src = src
        self.group = group

    def _ask(self, holder: str, attr: bytes, element: int, subset: tuple = ()) -> int:
        req = ProxyRequest(holder, attr, self.group.encode_element(element), subset)
        raw = self.transport.call(self.src, self.addr, req.to_bytes())
        if raw is None:
            raise abe.ProxyUnavailable(f"proxy of {self.owner!r} did not answer")
        try:
            out = abe.decode_proxy_response(raw)
        except DecodeError as exc:
            raise abe.ProxyUnavailable(str(exc)) from None
        if out is None:
            raise abe.RevokedError(f"proxy of {self.owner!r} refused {holder!r}")
        return self.group.decode_element(out)

    def transform(self, holder: str, attr: bytes, element: int) -> int:
        return self._ask(holder, attr, element)


class RemoteShare(RemoteProxy):
    def __init__(self, owner: str, addr: int, transport: SimTransport, src: int, group, index: int) -> None:
        super().__init__(owner, addr, transport, src, group)
        self.index = index

    def partial(self, holder: str, attr: bytes, element: int, subset) -> int:
        return self._ask(holder, attr, element, tuple(subset))


@dataclass
class ProxyDeployment:
    owner: str
    state: object  # ProxyState or ThresholdProxy over ProxyShareStates
    addrs: list


class SimNetwork:
    """An overlay on the event loop plus users' homes and proxy nodes."""

    def __init__(self, config: NetworkConfig) -> None:
        self.config = config
        self.rng = SeededRng(config.seed)
        self.loop = EventLoop()
        self.transport = SimTransport(
            self.loop, self.rng.fork("coords"), config.base_ms, config.ms_per_unit, config.timeout_ms
        )
        self.overlay = Overlay(
            self.transport,
            DhtConfig(k=config.k, alpha=config.alpha, replicas=config.replicas, routing=config.routing),
            self.rng.fork("ids"),
        )
        self._roles = self.rng.fork("roles")
        self._churn = self.rng.fork("churn")
        self.homes: dict[str, int] = {}
        self.proxies: dict[str, ProxyDeployment] = {}

    def pick_behavior(self) -> Behavior:
        cfg = self.config
        if cfg.malicious and self._roles.random() < cfg.malicious:
            return cfg.behaviors[self._roles.randbelow(len(cfg.behaviors))]
        return Behavior.HONEST

    def populate(self) -> None:
        for _ in range(self.config.nodes - len(self.overlay.nodes)):
            self.overlay.add_node(behavior=self.pick_behavior(), lookups=self.config.join_lookups)

    def churn_round(self) -> tuple[int, int]:
        """Replace a ``churn`` fraction of non-home nodes with fresh joiners."""
        cfg = self.config
        pinned = set(self.homes.values())
        candidates = [n for n in sorted(self.overlay.nodes) if n not in pinned]
        leave = int(round(cfg.churn * len(self.overlay.nodes)))
        leave = min(leave, len(candidates))
        gone = []
        for _ in range(leave):
            gone.append(candidates.pop(self._churn.randbelow(len(candidates))))
        for nid in gone:
            if cfg.departures == "graceful":
                self.overlay.hand_off(nid)
            self.overlay.remove_node(nid)
        for _ in range(leave):
            self.overlay.add_node(behavior=self.pick_behavior(), lookups=self.config.join_lookups)
        return leave, leave

    def home_for(self, user: str) -> int:
        """Attach a user to a random honest node, once."""
        if user not in self.homes:
            taken = set(self.homes.values())
            pool = [n for n in sorted(self.overlay.nodes) if self.overlay.nodes[n].honest and n not in taken]
            self.homes[user] = pool[self._roles.randbelow(len(pool))]
        return self.homes[user]

    def deploy_proxy(self, owner: str, state) -> ProxyDeployment:
        shares = list(state.shares) if isinstance(state, ThresholdProxy) else [state]
        addrs = []
        service = self.config.costs.proxy_exp
        for share in shares:
            addr = self.overlay.new_id()
            self.transport.register(addr, lambda src, data, s=share: abe.serve_proxy_request(s, data), service)
            addrs.append(addr)
        dep = ProxyDeployment(owner, state, addrs)
        self.proxies[owner] = dep
        return dep

    def proxy_handle(self, owner: str, src: int):
        dep = self.proxies.get(owner)
        if dep is None:
            raise abe.ProxyUnavailable(f"no proxy deployed for {owner!r}")
        state = dep.state
        if isinstance(state, ThresholdProxy):
            group = state.group
            remote = [
                RemoteShare(owner, addr, self.transport, src, group, share.index)
                for addr, share in zip(dep.addrs, state.shares)
            ]
            return ThresholdProxy(remote, state.threshold, owner)
        return RemoteProxy(owner, dep.addrs[0], self.transport, src, state.group)


class SimEnvironment:
    """Agent environment whose every DHT and proxy exchange costs simulated time."""

    def __init__(self, network: SimNetwork) -> None:
        self.network = network
        self.rng = network.rng.fork("agents")
        self.stats: Counter = Counter()

    @property
    def loop(self) -> EventLoop:
        return self.network.loop

    def dht(self, user: str) -> DhtClient:
        return self.network.overlay.client(self.network.home_for(user), self.stats)

    def proxies_for(self, key: ContactKey) -> list:
        src = self.network.home_for(key.holder)
        handles = []
        for owner, _ in key.hops:
            handles.append(self.network.proxy_handle(owner, src))
        return handles

    def register_proxy(self, owner: str, proxy) -> None:
        self.network.deploy_proxy(owner, proxy)

    def charge(self, op: str, units: int = 1) -> None:
        if units:
            self.stats[f"cost:{op}"] += units
            self.loop.advance(self.network.config.costs.ms(op) * units, op)

    def now(self) -> float:
        return self.loop.now


def build_network(config: NetworkConfig) -> SimNetwork:
    """Join ``config.nodes`` nodes by Kademlia bootstrap, with seeded roles."""
    net = SimNetwork(config)
    net.populate()
    return net


def all_proxy_states(net: SimNetwork) -> list:
    out = []
    for dep in net.proxies.values():
        state = dep.state
        out.extend(state.shares if isinstance(state, ThresholdProxy) else [state])
    return [s for s in out if isinstance(s, (ProxyState, ProxyShareState))]
