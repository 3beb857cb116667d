"""A small persistent overlay for command-line use.

The home directory holds ``accounts/<name>.json`` (see ``UserAccount.to_json``)
and ``store.bin``, the stores of a fixed set of local DHT nodes. Every command
rebuilds the overlay, restores the stores, runs, and saves them back.
"""
from __future__ import annotations

import os
import time
from pathlib import Path

from .agent import Agent, LocalEnvironment, UserAccount
from .crypto.group import SeededRng, SystemRng
from .dht.overlay import DhtConfig, Overlay
from .dht.storage import StoredRecord, Tombstone
from .wire import Reader, Writer

STORE_MAGIC = b"DCNTSTO1"
LOCAL_NODES = 16


class ClockEnvironment(LocalEnvironment):
    """Local environment stamping items with wall-clock time."""

    def now(self) -> float:
        return time.time()


class Home:
    def __init__(self, path: str | Path, nodes: int = LOCAL_NODES) -> None:
        self.path = Path(path)
        self.accounts_dir = self.path / "accounts"
        self.store_path = self.path / "store.bin"
        self.overlay = Overlay(config=DhtConfig(routing="oracle"), rng=SeededRng(0).fork("local-ids"))
        for _ in range(nodes):
            self.overlay.add_node()
        self.env = ClockEnvironment(self.overlay, SystemRng())
        self._load_store()
        self._agents: dict[str, Agent] = {}

    @classmethod
    def default_path(cls) -> Path:
        return Path(os.environ.get("DECENT_HOME", Path.home() / ".decent"))

    # -- accounts ----------------------------------------------------------------
    def account_path(self, name: str) -> Path:
        if not name or "/" in name or name.startswith("."):
            raise ValueError(f"bad user name {name!r}")
        return self.accounts_dir / f"{name}.json"

    def exists(self, name: str) -> bool:
        return self.account_path(name).exists()

    def names(self) -> list[str]:
        if not self.accounts_dir.exists():
            return []
        return sorted(p.stem for p in self.accounts_dir.glob("*.json"))

    def agent(self, name: str) -> Agent:
        """Load an account; every other account's proxy is registered too."""
        if name not in self._agents:
            if not self.exists(name):
                raise KeyError(f"no account {name!r} in {self.path}")
            self._agents[name] = Agent(UserAccount.load(self.account_path(name)), self.env)
            for other in self.names():
                if other not in self._agents and other != name:
                    acct = UserAccount.load(self.account_path(other))
                    self.env.register_proxy(other, acct.proxy)
        return self._agents[name]

    def adopt(self, agent: Agent) -> None:
        self._agents[agent.name] = agent

    def save(self) -> None:
        self.accounts_dir.mkdir(parents=True, exist_ok=True)
        for name, agent in self._agents.items():
            agent.account.save(self.account_path(name))
        self._save_store()

    # -- stores ----------------------------------------------------------------
    def _save_store(self) -> None:
        w = Writer().raw(STORE_MAGIC)
        nodes = sorted(self.overlay.nodes.items())
        w.u32(len(nodes))
        for nid, node in nodes:
            w.raw(nid.to_bytes(20, "big"))
            recs = sorted(node.store.records.values(), key=lambda r: r.obj_id)
            w.u32(len(recs))
            for rec in recs:
                w.blob(rec.to_bytes())
            tombs = sorted(node.store.tombstones.values(), key=lambda t: t.obj_id)
            w.u32(len(tombs))
            for t in tombs:
                w.raw(t.obj_id).blob(t.wapk).u64(t.version).blob(t.signature)
        self.path.mkdir(parents=True, exist_ok=True)
        tmp = self.store_path.with_suffix(".tmp")
        tmp.write_bytes(w.getvalue())
        tmp.replace(self.store_path)

    def _load_store(self) -> None:
        if not self.store_path.exists():
            return
        r = Reader(self.store_path.read_bytes())
        if r.raw(len(STORE_MAGIC)) != STORE_MAGIC:
            raise ValueError("not a store file")
        for _ in range(r.u32()):
            nid = int.from_bytes(r.raw(20), "big")
            node = self.overlay.nodes.get(nid)
            recs = [StoredRecord.from_bytes(r.blob()) for _ in range(r.u32())]
            tombs = [Tombstone(r.raw(20), r.blob(), r.u64(), r.blob()) for _ in range(r.u32())]
            if node is None:
                continue
            node.store.records = {rec.obj_id: rec for rec in recs}
            node.store.tombstones = {t.obj_id: t for t in tombs}
        r.done()
