"""Command line front end.

Exit codes: 0 success (screen: all cases secure), 1 unexpected error,
2 configuration problem, 3 cannot bind the service port, 4 bad input
data (snapshot, archive, query), 5 base case insecure, 10 screening
finished and found insecure cases.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__, analytics, server
from .analytics import CaseArchive
from .config import EngineConfig, config_from_document, load_config
from .contingency import build_contingency_set
from .criteria import SecurityLimits
from .errors import (
    BasecaseInsecureError,
    BindError,
    ConfigError,
    DegenerateError,
    EmptyWindowError,
    GridSentryError,
    ParseError,
    UnknownProfileError,
    ValidationError,
)
from .netmodel import load_snapshot, system_metrics
from .policy import load_profile
from .screener import rank_insecure, screen

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BIND = 3
EXIT_DATA = 4
EXIT_BASECASE = 5
EXIT_INSECURE = 10


def _load_cfg(args) -> EngineConfig:
    cfg = load_config(args.config) if args.config \
        else config_from_document({})
    if getattr(args, "workers", None):
        cfg = dataclasses.replace(cfg, workers=args.workers)
    if getattr(args, "policy_profile", None):
        cfg = dataclasses.replace(
            cfg, policy=load_profile(args.policy_profile))
    for item in getattr(args, "limits_override", None) or []:
        key, _, raw = item.partition("=")
        names = {f.name for f in dataclasses.fields(SecurityLimits)}
        if key not in names:
            raise ConfigError(f"unknown limit {key!r}; have {sorted(names)}")
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(
                f"limit override {item!r} is not name=number") from None
        cfg = dataclasses.replace(
            cfg, limits=dataclasses.replace(cfg.limits, **{key: value}))
    cfg.validate()
    return cfg


def cmd_validate(args) -> int:
    warnings: list[str] = []
    snap = load_snapshot(Path(args.snapshot), strict=not args.lenient,
                         warnings=warnings)
    m = system_metrics(snap)
    print(f"snapshot {snap.timestamp}: {len(snap.buses)} buses, "
          f"{len(snap.branches)} branches, {len(snap.machines)} machines, "
          f"{len(snap.ibr_units)} IBR units, {len(snap.loads)} loads")
    print(f"demand {m.demand_mw:.1f} MW  inertia {m.inertia_mws:.0f} MWs  "
          f"SNSP {m.snsp_pct:.1f}%  MUON {m.muon_count}")
    for w in warnings:
        print(f"warning: {w}")
    print("ok")
    return EXIT_OK


def cmd_screen(args) -> int:
    cfg = _load_cfg(args)
    snap = load_snapshot(Path(args.snapshot))
    conts = build_contingency_set(
        snap, ibr_mw_floor=cfg.ibr_mw_floor,
        splits=[(s.name, s.branches) for s in cfg.splits])
    report = screen(
        snap, contingencies=conts, limits=cfg.limits,
        policy_limits=cfg.policy, sim_config=cfg.sim,
        budget_s=cfg.budget_s, workers=cfg.workers,
        trace_dir=args.dump_traces,
    )

    if args.output:
        payload = report.to_json(normalize=args.normalize_output)
        if args.output == "-":
            print(payload)
        else:
            Path(args.output).write_text(payload)

    t = report.totals
    print(f"snapshot {report.snapshot_ts}  cases {t['cases']}  "
          f"secure {t['secure']}  insecure {t['insecure']}  "
          f"failed {t['failed']}  wall {report.wall_time_s:.1f}s"
          + ("  OVER BUDGET" if report.over_budget else ""))

    arch = CaseArchive()
    arch.add(report)
    try:
        summary = analytics.summarize(arch)
        print(f"{'constraint':<12}{'count':>6}{'% of cases':>12}"
              f"{'% of insecure':>15}")
        for row in summary.rows:
            print(f"{row.constraint:<12}{row.count:>6}"
                  f"{row.pct_of_all:>12.2f}{row.pct_of_insecure:>15.2f}")
        print(f"insecure cycle-cases: {summary.n_insecure} "
              f"({summary.insecure_pct:.2f}%)")
    except EmptyWindowError:
        pass  # nothing assessed, totals line already said so

    ranked = rank_insecure(report.cases, cfg.limits)
    if ranked:
        print("most severe first:")
        for c in ranked[:10]:
            flags = ",".join(sorted(c.metrics.binding))
            print(f"  {c.contingency_id}  [{flags}]")

    print("policy: " + "  ".join(
        f"{r.name}={'n/a' if r.compliant is None else ('ok' if r.compliant else 'BREACH')}"
        for r in report.policy.rows))

    return EXIT_INSECURE if t["insecure"] else EXIT_OK


def cmd_analyze(args) -> int:
    arch = CaseArchive(args.archive)
    if args.what == "summary":
        s = analytics.summarize(arch, args.from_ts, args.to_ts)
        print(f"cycles {s.n_cycles}  cycle-cases {s.n_cycle_cases}  "
              f"insecure {s.n_insecure} ({s.insecure_pct:.2f}%)")
        print(f"{'constraint':<12}{'count':>6}{'% of cases':>12}"
              f"{'% of insecure':>15}")
        for row in s.rows:
            print(f"{row.constraint:<12}{row.count:>6}"
                  f"{row.pct_of_all:>12.2f}{row.pct_of_insecure:>15.2f}")
    elif args.what == "correlations":
        if not args.var:
            raise ConfigError("correlations need --var")
        c = analytics.correlate(arch, args.var, flag=args.flag,
                                from_ts=args.from_ts, to_ts=args.to_ts)
        label = c.flag or "any insecurity"
        print(f"{c.variable} [{c.unit}] vs {label}: r={c.r:+.3f} "
              f"p={c.p_value:.2e} over {c.n_cycles} cycles "
              f"({c.n_flagged} flagged)")
        print(f"mean when flagged {c.mean_flagged:.2f}, "
              f"otherwise {c.mean_clear:.2f}")
    else:  # scatter
        if not args.x or not args.y:
            raise ConfigError("scatter needs --x and --y")
        if args.out:
            with open(args.out, "w") as fh:
                n = analytics.scatter_export(
                    arch, args.x, args.y, fh, flag=args.flag,
                    from_ts=args.from_ts, to_ts=args.to_ts)
            print(f"wrote {n} rows to {args.out}")
        else:
            analytics.scatter_export(
                arch, args.x, args.y, sys.stdout, flag=args.flag,
                from_ts=args.from_ts, to_ts=args.to_ts)
    return EXIT_OK


def cmd_serve(args) -> int:
    cfg = _load_cfg(args)
    return server.serve(cfg, snapshot_path=args.snapshot,
                        inbox=args.inbox, listen=args.listen)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridsentry",
        description="N-1 dynamic security assessment engine",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and sanity-check a snapshot")
    v.add_argument("snapshot")
    v.add_argument("--lenient", action="store_true",
                   help="tolerate unknown document keys")
    v.set_defaults(fn=cmd_validate)

    s = sub.add_parser("screen", help="run one assessment cycle")
    s.add_argument("snapshot")
    s.add_argument("--config", help="engine TOML config")
    s.add_argument("--workers", type=int)
    s.add_argument("--policy-profile", dest="policy_profile",
                   help="policy profile name, replaces the config's "
                        "[policy] section")
    s.add_argument("--limits-override", dest="limits_override",
                   action="append", metavar="NAME=VALUE",
                   help="override one security limit (repeatable)")
    s.add_argument("--dump-traces", dest="dump_traces", metavar="DIR",
                   help="write per-case frequency/angle CSV traces")
    s.add_argument("--output", metavar="PATH",
                   help="write the cycle report JSON ('-' for stdout)")
    s.add_argument("--normalize-output", dest="normalize_output",
                   action="store_true",
                   help="strip execution timing from the report JSON")
    s.set_defaults(fn=cmd_screen)

    a = sub.add_parser("analyze", help="query an archive directory")
    a.add_argument("what", choices=["summary", "correlations", "scatter"])
    a.add_argument("--archive", required=True)
    a.add_argument("--from", dest="from_ts", type=int, default=None)
    a.add_argument("--to", dest="to_ts", type=int, default=None)
    a.add_argument("--var", help="system variable for correlations")
    a.add_argument("--flag", help="constraint flag filter")
    a.add_argument("--x")
    a.add_argument("--y")
    a.add_argument("--out", help="output file for scatter CSV")
    a.set_defaults(fn=cmd_analyze)

    d = sub.add_parser("serve", help="run the HTTP service")
    d.add_argument("--config", help="engine TOML config")
    d.add_argument("--workers", type=int)
    d.add_argument("--policy-profile", dest="policy_profile")
    d.add_argument("--snapshot", help="screen this snapshot at startup")
    d.add_argument("--inbox", help="watch this directory for snapshots")
    d.add_argument("--listen", help="host:port, overrides config and env")
    d.set_defaults(fn=cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, UnknownProfileError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BindError as exc:
        print(f"bind error: {exc}", file=sys.stderr)
        return EXIT_BIND
    except BasecaseInsecureError as exc:
        print(f"base case insecure: {exc}", file=sys.stderr)
        return EXIT_BASECASE
    except (ParseError, ValidationError, EmptyWindowError,
            DegenerateError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GridSentryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
