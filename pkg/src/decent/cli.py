"""Command-line front end: local accounts plus the simulator."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from . import policy as pol
from .agent import DEFAULT_ATTRIBUTES, Agent, AgentError, ANY_CONTACT, WallUnreadable
from .crypto import abe
from .localnet import Home

SIM_DEFAULTS = {
    "nodes": 1000,
    "malicious": "0",
    "replicas": "5",
    "seed": 0,
    "experiment": "wall",
    "items": "5,10,20",
    "friends": "10,20,40",
    "trials": 20,
    "mode": "others",
    "composition": "full",
    "posts": 100,
    "objects": 1000,
    "rounds": 100,
    "churn": 0.1,
    "group": None,
    "out": "results",
}


def _csv_list(text, cast):
    return [cast(v) for v in str(text).split(",") if v.strip()]


def _fmt_time(ts: float) -> str:
    if ts > 1e6:
        return _dt.datetime.fromtimestamp(ts, _dt.timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
    return f"t={ts:g}"


def _user(args, home: Home) -> Agent:
    if not args.user:
        raise SystemExit("pick an account with --user (or DECENT_USER)")
    return home.agent(args.user)


# -- account commands --------------------------------------------------------------

def cmd_join(args, home: Home) -> int:
    if home.exists(args.name):
        print(f"account {args.name!r} already exists", file=sys.stderr)
        return 1
    attrs = _csv_list(args.attributes, str) if args.attributes else list(DEFAULT_ATTRIBUTES)
    any_of = " OR ".join(attrs)
    agent = Agent.join(
        args.name,
        home.env,
        attributes=attrs,
        root_policy=args.root_policy or any_of,
        wall_policy=args.wall_policy or any_of,
        wall_append_policy=args.wall_append_policy or any_of,
        profile={"name": args.name},
        group=args.group,
    )
    home.adopt(agent)
    home.save()
    print(f"joined as {args.name}; account at {home.account_path(args.name)}")
    return 0


def cmd_add_contact(args, home: Home) -> int:
    me = _user(args, home)
    peer = home.agent(args.peer)
    attrs = _csv_list(args.attrs, str) if args.attrs else ["friend"]
    me.add_contact(peer, attrs)
    home.adopt(peer)
    home.save()
    print(f"{me.name} issued {', '.join(attrs)} to {peer.name}")
    return 0


def cmd_revoke(args, home: Home) -> int:
    me = _user(args, home)
    attrs = _csv_list(args.attrs, str) if args.attrs else None
    me.revoke_contact(args.peer, attrs)
    home.save()
    print(f"{me.name} revoked {', '.join(attrs) if attrs else 'all attributes'} from {args.peer}")
    return 0


def cmd_post(args, home: Home) -> int:
    me = _user(args, home)
    if args.on and args.on != me.name:
        contact = me.account.contacts.get(args.on)
        if contact is None or contact.root_ref is None:
            print(f"{args.on!r} is not a contact", file=sys.stderr)
            return 1
        ref = me.post_to_wall(contact.root_ref, args.text, args.policy)
    else:
        ref = me.post_status(args.text, args.policy, args.append_policy)
    home.save()
    print(ref.obj_id.hex())
    return 0


def _find_ref(me: Agent, owner: str, prefix: str):
    if owner == me.name:
        root_ref = me.account.root_ref
    else:
        contact = me.account.contacts.get(owner)
        if contact is None or contact.root_ref is None:
            raise AgentError(f"{owner!r} is not a contact")
        root_ref = contact.root_ref
    _, wall = me.open_wall(root_ref)
    for ref in wall.content.items:
        if ref.obj_id.hex().startswith(prefix):
            return ref, root_ref.spk
    for ref in wall.comments:
        if ref.obj_id.hex().startswith(prefix):
            return ref, None
    raise AgentError(f"no status or post {prefix!r} on {owner}'s wall")


def cmd_comment(args, home: Home) -> int:
    me = _user(args, home)
    ref, spk = _find_ref(me, args.owner, args.obj_id.lower())
    new = me.comment(ref, args.text, args.policy, inherited_spk=spk)
    home.save()
    print(new.obj_id.hex())
    return 0


def _render_item(item, indent: str = "") -> str:
    who = item.author or "?"
    return f"{indent}[{item.obj_id.hex()[:12]}] {_fmt_time(item.timestamp)} {who}: {item.text}"


def cmd_view_wall(args, home: Home) -> int:
    me = _user(args, home)
    target = args.owner or me.name
    if target == me.name:
        root_ref = me.account.root_ref
    else:
        contact = me.account.contacts.get(target)
        if contact is None or contact.root_ref is None:
            print(f"{target!r} is not a contact", file=sys.stderr)
            return 1
        root_ref = contact.root_ref
    try:
        view = me.view_wall(root_ref)
    except WallUnreadable as exc:
        print(f"cannot read {target}'s wall: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(
            {
                "items": [
                    {"kind": i.kind, "id": i.obj_id.hex(), "author": i.author, "text": i.text,
                     "timestamp": i.timestamp, "parent": i.parent.hex() if i.parent else None}
                    for i in view.items
                ],
                "errors": [{"id": o.hex(), "reason": r} for o, r in view.errors],
            },
            indent=1,
        ))
        return 0
    print(f"== wall of {target} ==")
    for item in view.items:
        if item.kind == "status":
            print(_render_item(item))
        elif item.kind == "comment":
            print(_render_item(item, "    ↳ "))
    posts = view.of_kind("post")
    if posts:
        print("-- posts --")
        for item in posts:
            print(_render_item(item))
    if view.errors:
        print(f"({len(view.errors)} item(s) not readable)")
    return 0


def cmd_newsfeed(args, home: Home) -> int:
    me = _user(args, home)
    for entry in me.view_newsfeed():
        if entry.item is not None:
            print(_render_item(entry.item))
        else:
            print(f"{entry.contact}: ({entry.reason})")
    return 0


# -- simulate ------------------------------------------------------------------------

def _sim_settings(args) -> dict:
    """Defaults, then the config file, then flags given on the command line."""
    settings = dict(SIM_DEFAULTS)
    if args.config:
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - set(SIM_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update(data)
    for key in SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def cmd_simulate(args, _home=None) -> int:
    from .sim import (
        NetworkConfig,
        build_network,
        emit_results,
        run_adversary_experiment,
        run_newsfeed_experiment,
        run_post_experiment,
        run_wall_experiment,
    )

    s = _sim_settings(args)
    fractions = _csv_list(s["malicious"], float)
    replica_counts = _csv_list(s["replicas"], int)
    exp = s["experiment"]
    results = []
    if exp == "adversary":
        kw = dict(nodes=s["nodes"], objects=s["objects"], rounds=s["rounds"], churn=s["churn"],
                  trials=s["trials"], seed=s["seed"])
        if s["group"]:
            kw["group"] = s["group"]
        for f in fractions:
            for r in replica_counts:
                res = run_adversary_experiment(f, r, **kw)
                a = res.extra["availability"]
                print(f"f={f} R={r}: retrieved {a['retrieved']}/{a['objects']}", file=sys.stderr)
                results.append(res)
    else:
        cfg = NetworkConfig(
            nodes=s["nodes"], malicious=fractions[0], replicas=replica_counts[0], seed=s["seed"], group=s["group"]
        )
        # every sweep point starts from an identical network so routing state
        # warmed by earlier points does not leak into later ones
        if exp == "wall":
            for x in _csv_list(s["items"], int):
                results.append(run_wall_experiment(x, s["mode"], s["composition"], trials=s["trials"], network=build_network(cfg)))
        elif exp == "newsfeed":
            for n in _csv_list(s["friends"], int):
                results.append(run_newsfeed_experiment(n, trials=s["trials"], network=build_network(cfg)))
        elif exp == "post":
            results.extend(run_post_experiment(s["posts"], network=build_network(cfg)))
        else:
            raise SystemExit(f"unknown experiment {exp!r}")
    trials_path, agg_path = emit_results(results, s["out"])
    for res in results:
        m = res.summary()
        print(f"{res.experiment} {res.param}={res.value}: {m['sim_ms_mean']:.1f} ms "
              f"[{m['sim_ms_ci_low']:.1f}, {m['sim_ms_ci_high']:.1f}] over {m['trials']} trials")
    print(f"wrote {trials_path} and {agg_path}")
    return 0


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    import os

    p = argparse.ArgumentParser(prog="decent", description="Private social networking over a DHT.")
    p.add_argument("--home", default=None, help="state directory (default $DECENT_HOME or ~/.decent)")
    p.add_argument("--user", "-u", default=os.environ.get("DECENT_USER"), help="account to act as")
    sub = p.add_subparsers(dest="command", required=True)

    j = sub.add_parser("join", help="create an account with profile, wall and root objects")
    j.add_argument("name")
    j.add_argument("--attributes", help=f"comma-separated attribute names (default {','.join(DEFAULT_ATTRIBUTES)})")
    j.add_argument("--root-policy")
    j.add_argument("--wall-policy")
    j.add_argument("--wall-append-policy")
    j.add_argument("--group", default=None, help="policy group name")
    j.set_defaults(func=cmd_join)

    a = sub.add_parser("add-contact", help="issue attributes to another local account")
    a.add_argument("peer")
    a.add_argument("--attrs", help="comma-separated attribute names (default friend)")
    a.set_defaults(func=cmd_add_contact)

    po = sub.add_parser("post", help="post a status, or post on a contact's wall with --on")
    po.add_argument("text")
    po.add_argument("--policy", default=ANY_CONTACT, help="read policy")
    po.add_argument("--append-policy", default=ANY_CONTACT, help="who may comment")
    po.add_argument("--on", help="contact whose wall to post on")
    po.set_defaults(func=cmd_post)

    c = sub.add_parser("comment", help="comment on a status or post")
    c.add_argument("owner", help="whose wall the item is on")
    c.add_argument("obj_id", help="object id or unique hex prefix")
    c.add_argument("text")
    c.add_argument("--policy", default=ANY_CONTACT, help="read policy of the comment")
    c.set_defaults(func=cmd_comment)

    v = sub.add_parser("view-wall", help="render a wall")
    v.add_argument("owner", nargs="?")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_view_wall)

    n = sub.add_parser("newsfeed", help="latest status of every contact")
    n.set_defaults(func=cmd_newsfeed)

    r = sub.add_parser("revoke", help="revoke attributes from a contact")
    r.add_argument("peer")
    r.add_argument("--attrs", help="comma-separated attribute names (default all issued)")
    r.set_defaults(func=cmd_revoke)

    s = sub.add_parser("simulate", help="run an experiment and write CSV results")
    s.add_argument("--config", help="JSON file overriding defaults; flags override the file")
    s.add_argument("--nodes", type=int)
    s.add_argument("--malicious", help="fraction of malicious nodes, comma list for adversary sweeps")
    s.add_argument("--replicas", help="replica count, comma list for adversary sweeps")
    s.add_argument("--seed", type=int)
    s.add_argument("--experiment", choices=["wall", "newsfeed", "post", "adversary"])
    s.add_argument("--items", help="wall items per kind, comma list")
    s.add_argument("--friends", help="newsfeed contacts, comma list")
    s.add_argument("--trials", type=int)
    s.add_argument("--mode", choices=["own", "others"])
    s.add_argument("--composition", choices=["statuses", "posts", "full"])
    s.add_argument("--posts", type=int)
    s.add_argument("--objects", type=int)
    s.add_argument("--rounds", type=int)
    s.add_argument("--churn", type=float)
    s.add_argument("--group")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return args.func(args)
        return args.func(args, Home(args.home or Home.default_path()))
    except (AgentError, abe.ProxyUnavailable, pol.PolicyError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
