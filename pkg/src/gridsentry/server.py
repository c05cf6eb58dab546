"""HTTP service: assessment cycles, archive queries, what-if studies.

One Engine owns the current snapshot and the archive. Cycles are
triggered by snapshots arriving in the inbox directory; each completed
cycle is persisted before the result is visible to any reader, so a
crash never shows a cycle that is not on disk. What-if studies run the
same screening path on a modified copy of the snapshot but are never
persisted and carry explicit provenance back to the base snapshot.
"""

from __future__ import annotations

import collections
import dataclasses
import io
import json
import os
import signal
import threading
import time
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import analytics
from .analytics import CaseArchive
from .config import EngineConfig, parse_listen
from .contingency import build_contingency_set
from .errors import (
    BasecaseInsecureError,
    BindError,
    DegenerateError,
    EmptyWindowError,
    GridSentryError,
    LimitError,
    ParseError,
    UnknownElementError,
    ValidationError,
)
from .netmodel import (
    Modification,
    Snapshot,
    apply_modifications,
    load_snapshot,
    system_metrics,
)
from .policy import check
from .screener import CycleReport, rank_insecure, screen

LISTEN_ENV = "GRIDSENTRY_LISTEN"
WHATIF_SLOTS = 2
MAX_BODY = 1 << 20


class Engine:
    """Owns the snapshot, the archive, and the screening configuration."""

    def __init__(self, cfg: EngineConfig, archive: CaseArchive | None = None):
        cfg.validate()
        self.cfg = cfg
        self.archive = archive if archive is not None \
            else CaseArchive(cfg.archive_dir)
        self.snapshot: Snapshot | None = None
        self.lock = threading.RLock()
        self.inbox_errors: collections.deque = collections.deque(maxlen=20)
        self._whatif_gate = threading.Semaphore(WHATIF_SLOTS)
        self._last_cycle_mono: float | None = None

    def _contingencies(self, snap: Snapshot):
        return build_contingency_set(
            snap,
            ibr_mw_floor=self.cfg.ibr_mw_floor,
            splits=[(s.name, s.branches) for s in self.cfg.splits],
        )

    def run_cycle(self, snap: Snapshot) -> CycleReport:
        """Screen a snapshot, persist the report, make it current."""
        t0 = time.perf_counter()
        try:
            report = screen(
                snap,
                contingencies=self._contingencies(snap),
                limits=self.cfg.limits,
                policy_limits=self.cfg.policy,
                sim_config=self.cfg.sim,
                budget_s=self.cfg.budget_s,
                workers=self.cfg.workers,
            )
        except BasecaseInsecureError as exc:
            # still a cycle: the operating point was looked at and
            # found wanting, and that belongs in the record
            m = system_metrics(snap)
            report = CycleReport(
                snapshot_ts=snap.timestamp,
                system=m,
                policy=check(m, self.cfg.policy),
                cases=(),
                wall_time_s=time.perf_counter() - t0,
                budget_s=self.cfg.budget_s,
                workers=self.cfg.workers,
                basecase_failure=str(exc),
            )
        with self.lock:
            self.archive.add(report)
            self.snapshot = snap
            self._last_cycle_mono = time.monotonic()
        return report

    def cycle_age_s(self) -> float | None:
        with self.lock:
            if self._last_cycle_mono is None:
                return None
            return time.monotonic() - self._last_cycle_mono

    def what_if(self, doc: dict) -> dict:
        """Ephemeral study on a modified snapshot; never archived."""
        with self.lock:
            snap = self.snapshot
        if snap is None:
            raise EmptyWindowError("no snapshot loaded yet")
        mods = [Modification.from_document(m)
                for m in doc.get("modifications", [])]
        modified = apply_modifications(snap, mods)
        conts = self._contingencies(modified)
        wanted = doc.get("contingencies")
        if wanted is not None:
            by_id = {c.id: c for c in conts}
            missing = [i for i in wanted if i not in by_id]
            if missing:
                raise ValidationError(
                    f"unknown contingency ids: {missing}")
            conts = [by_id[i] for i in wanted]
        report = screen(
            modified,
            contingencies=conts,
            limits=self.cfg.limits,
            policy_limits=self.cfg.policy,
            sim_config=self.cfg.sim,
            budget_s=self.cfg.budget_s,
            workers=1,
        )
        return {
            "ephemeral": True,
            "base_snapshot_ts": snap.timestamp,
            "modifications": [m.to_document() for m in mods],
            "report": report.to_document(),
        }

    def try_whatif_slot(self) -> bool:
        return self._whatif_gate.acquire(blocking=False)

    def release_whatif_slot(self) -> None:
        self._whatif_gate.release()


class InboxWatcher(threading.Thread):
    """Polls a directory for snapshot files.

    When several are queued, only the one with the newest data
    timestamp is screened; everything seen is moved to consumed/ so a
    bad file cannot wedge the loop.
    """

    def __init__(self, engine: Engine, inbox: str | Path,
                 poll_s: float = 1.0):
        super().__init__(daemon=True, name="inbox-watcher")
        self.engine = engine
        self.inbox = Path(inbox)
        self.poll_s = poll_s
        self._stop = threading.Event()
        self.inbox.mkdir(parents=True, exist_ok=True)
        (self.inbox / "consumed").mkdir(exist_ok=True)

    def stop(self) -> None:
        self._stop.set()

    def run(self) -> None:
        while not self._stop.wait(self.poll_s):
            self.sweep()

    def sweep(self) -> None:
        files = sorted(p for p in self.inbox.glob("*.json") if p.is_file())
        if not files:
            return
        best: Snapshot | None = None
        for path in files:
            try:
                snap = load_snapshot(path)
                if best is None or snap.timestamp > best.timestamp:
                    best = snap
            except GridSentryError as exc:
                self.engine.inbox_errors.append(f"{path.name}: {exc}")
        for path in files:
            os.replace(path, self.inbox / "consumed" / path.name)
        if best is None:
            return
        try:
            self.engine.run_cycle(best)
        except GridSentryError as exc:
            self.engine.inbox_errors.append(
                f"cycle for ts {best.timestamp}: {exc}")


# --- HTTP layer --------------------------------------------------------------

def _qp(query: dict, name: str, conv, default=None):
    if name not in query:
        return default
    raw = query[name][-1]
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"query {name}={raw!r} is malformed") \
            from None


class _Handler(BaseHTTPRequestHandler):
    engine: Engine = None  # set by make_server
    server_version = "gridsentry"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    # -- plumbing --

    def _json(self, code: int, doc) -> None:
        body = json.dumps(doc).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _csv(self, code: int, text: str) -> None:
        body = text.encode()
        self.send_response(code)
        self.send_header("Content-Type", "text/csv")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._json(code, {"error": message})

    # -- routing --

    def do_GET(self):
        url = urllib.parse.urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        query = urllib.parse.parse_qs(url.query)
        try:
            self._route_get(parts, query)
        except ValidationError as exc:
            self._error(400, str(exc))
        except EmptyWindowError as exc:
            self._error(404, str(exc))
        except DegenerateError as exc:
            self._error(422, str(exc))
        except GridSentryError as exc:
            self._error(500, str(exc))

    def _route_get(self, parts, query):
        eng = self.engine
        if parts == ["healthz"]:
            self._json(200, {"ok": True, "cycles": len(eng.archive)})
        elif parts == ["cycles", "latest"]:
            rep = eng.archive.latest()
            if rep is None:
                return self._error(404, "no cycles yet")
            doc = rep.to_document()
            age = eng.cycle_age_s()
            doc["age_s"] = age
            doc["stale"] = (age is None or age > eng.cfg.cycle_period_s)
            self._json(200, doc)
        elif len(parts) >= 2 and parts[0] == "cycles":
            self._cycle_routes(parts, query)
        elif parts == ["policy", "latest"]:
            rep = eng.archive.latest()
            if rep is None:
                return self._error(404, "no cycles yet")
            self._json(200, rep.policy.to_document())
        elif parts == ["analytics", "summary"]:
            s = analytics.summarize(
                eng.archive,
                _qp(query, "from", int), _qp(query, "to", int))
            self._json(200, s.to_document())
        elif parts == ["analytics", "correlations"]:
            var = _qp(query, "var", str)
            if var is None:
                return self._error(400, "var= is required")
            c = analytics.correlate(
                eng.archive, var, flag=_qp(query, "flag", str),
                from_ts=_qp(query, "from", int),
                to_ts=_qp(query, "to", int))
            self._json(200, c.to_document())
        elif parts == ["analytics", "scatter"]:
            x = _qp(query, "x", str)
            y = _qp(query, "y", str)
            if x is None or y is None:
                return self._error(400, "x= and y= are required")
            buf = io.StringIO()
            analytics.scatter_export(
                eng.archive, x, y, buf, flag=_qp(query, "flag", str),
                from_ts=_qp(query, "from", int),
                to_ts=_qp(query, "to", int))
            self._csv(200, buf.getvalue())
        else:
            self._error(404, f"no route for {self.path!r}")

    def _cycle_routes(self, parts, query):
        eng = self.engine
        try:
            ts = int(parts[1])
        except ValueError:
            return self._error(400, f"cycle id {parts[1]!r} is not an "
                                    "integer timestamp")
        try:
            rep = eng.archive.get(ts)
        except KeyError:
            return self._error(404, f"no cycle at ts {ts}")
        if len(parts) == 2:
            self._json(200, rep.to_document())
        elif parts[2:] == ["cases"]:
            status = _qp(query, "status", str)
            if status is not None and status not in (
                    "secure", "insecure", "failed"):
                return self._error(400, f"unknown status {status!r}")
            cases = [c.to_document() for c in rep.cases
                     if status is None or c.status == status]
            self._json(200, {"snapshot_ts": ts, "cases": cases})
        elif parts[2:] == ["ranked"]:
            ranked = rank_insecure(rep.cases, eng.cfg.limits)
            # triage clients show each metric against its limit, so the
            # active limits ride along with the ranked list
            self._json(200, {
                "snapshot_ts": ts,
                "limits": dataclasses.asdict(eng.cfg.limits),
                "cases": [c.to_document() for c in ranked],
            })
        else:
            self._error(404, f"no route for {self.path!r}")

    def do_POST(self):
        url = urllib.parse.urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if parts != ["whatif"]:
            return self._error(404, f"no route for {self.path!r}")
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            return self._error(413, "request body too large")
        try:
            doc = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError as exc:
            return self._error(400, f"body is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            return self._error(400, "body must be a JSON object")
        if not self.engine.try_whatif_slot():
            self.send_response(503)
            self.send_header("Retry-After", "1")
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        try:
            self._json(200, self.engine.what_if(doc))
        except BasecaseInsecureError as exc:
            self._error(422, f"modified base case is insecure: {exc}")
        except EmptyWindowError as exc:
            self._error(409, str(exc))
        except (ValidationError, ParseError, UnknownElementError,
                LimitError) as exc:
            self._error(400, str(exc))
        except GridSentryError as exc:
            self._error(500, str(exc))
        finally:
            self.engine.release_whatif_slot()


def make_server(cfg: EngineConfig, engine: Engine | None = None,
                listen: str | None = None) -> tuple[ThreadingHTTPServer,
                                                    Engine]:
    """Bind the service socket; does not start serving."""
    engine = engine or Engine(cfg)
    listen = listen or os.environ.get(LISTEN_ENV) or cfg.listen
    host, port = parse_listen(listen)

    handler = type("Handler", (_Handler,), {"engine": engine})
    try:
        httpd = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
    httpd.daemon_threads = True
    return httpd, engine


def serve(cfg: EngineConfig, snapshot_path: str | None = None,
          inbox: str | None = None, listen: str | None = None) -> int:
    """Run the service until SIGINT/SIGTERM. Returns the exit code."""
    httpd, engine = make_server(cfg, listen=listen)
    if snapshot_path is not None:
        engine.run_cycle(load_snapshot(Path(snapshot_path)))
    watcher = None
    if inbox is not None:
        watcher = InboxWatcher(engine, inbox)
        watcher.start()

    def _shutdown(signum, frame):
        threading.Thread(target=httpd.shutdown, daemon=True).start()

    old = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        old[sig] = signal.signal(sig, _shutdown)
    try:
        host, port = httpd.server_address[:2]
        print(f"listening on {host}:{port}", flush=True)
        httpd.serve_forever(poll_interval=0.2)
    finally:
        if watcher is not None:
            watcher.stop()
            watcher.join(timeout=5)
        httpd.server_close()
        for sig, h in old.items():
            signal.signal(sig, h)
    return 0
