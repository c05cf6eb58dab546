"""Engine configuration from TOML.

Unknown keys are rejected rather than ignored: a typo in an operator
config must fail loudly at startup, not silently run with defaults.
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .criteria import SecurityLimits
from .dynsim import SimConfig
from .errors import ConfigError, GridSentryError
from .policy import PolicyLimits, load_profile


@dataclasses.dataclass(frozen=True)
class SplitRule:
    name: str
    branches: tuple[str, ...]


@dataclasses.dataclass(frozen=True)
class EngineConfig:
    cycle_period_s: float = 300.0
    budget_s: float = 60.0
    workers: int = 1
    archive_dir: str | None = None
    listen: str = "127.0.0.1:8910"
    limits: SecurityLimits = SecurityLimits()
    policy: PolicyLimits = load_profile("2023")
    sim: SimConfig = SimConfig()
    ibr_mw_floor: float = 0.0
    splits: tuple[SplitRule, ...] = ()

    def validate(self) -> None:
        if self.cycle_period_s <= 0:
            raise ConfigError("cycle_period_s must be positive")
        if not 0 < self.budget_s <= self.cycle_period_s:
            raise ConfigError(
                f"budget_s {self.budget_s} must lie in "
                f"(0, cycle_period_s={self.cycle_period_s}]"
            )
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.limits.validate()
            self.policy.validate()
            self.sim.validate()
        except GridSentryError as exc:
            raise ConfigError(str(exc)) from exc
        if self.limits.rocof_limit > self.policy.rocof_limit_hz_s:
            raise ConfigError(
                "security rocof_limit exceeds the operational policy "
                "limit; the screen would pass cases the policy forbids"
            )
        parse_listen(self.listen)
        names = [s.name for s in self.splits]
        if len(set(names)) != len(names):
            raise ConfigError("split rule names must be unique")


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port_s = listen.rpartition(":")
    if not host or not port_s:
        raise ConfigError(f"listen address {listen!r} is not host:port")
    try:
        port = int(port_s)
    except ValueError:
        raise ConfigError(f"listen port {port_s!r} is not an integer") \
            from None
    if not 0 <= port < 65536:
        raise ConfigError(f"listen port {port} out of range")
    return host, port  # port 0 asks the OS for an ephemeral port


def listen_address(cfg: EngineConfig) -> tuple[str, int]:
    return parse_listen(cfg.listen)


_ENGINE_KEYS = {"cycle_period_s", "budget_s", "workers", "archive_dir",
                "listen"}
_POLICY_EXTRA = {"profile"}


def _build(section: dict, cls, what: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    bad = set(section) - allowed
    if bad:
        raise ConfigError(f"unknown {what} keys: {sorted(bad)}")
    return cls(**section)


def load_config(path: str | Path) -> EngineConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_document(doc)


def config_from_document(doc: dict) -> EngineConfig:
    known = {"engine", "limits", "policy", "simulation", "contingencies"}
    bad = set(doc) - known
    if bad:
        raise ConfigError(f"unknown config sections: {sorted(bad)}")

    engine = dict(doc.get("engine", {}))
    bad = set(engine) - _ENGINE_KEYS
    if bad:
        raise ConfigError(f"unknown engine keys: {sorted(bad)}")

    limits = _build(dict(doc.get("limits", {})), SecurityLimits, "limits")

    pol_sec = dict(doc.get("policy", {}))
    profile = pol_sec.pop("profile", "2023")
    try:
        policy = load_profile(profile)
    except GridSentryError as exc:
        raise ConfigError(str(exc)) from exc
    allowed = {f.name for f in dataclasses.fields(PolicyLimits)} \
        - _POLICY_EXTRA
    bad = set(pol_sec) - allowed
    if bad:
        raise ConfigError(f"unknown policy keys: {sorted(bad)}")
    if pol_sec:
        policy = dataclasses.replace(policy, **pol_sec)

    sim = _build(dict(doc.get("simulation", {})), SimConfig, "simulation")

    cont = dict(doc.get("contingencies", {}))
    bad = set(cont) - {"ibr_mw_floor", "splits"}
    if bad:
        raise ConfigError(f"unknown contingency keys: {sorted(bad)}")
    splits = []
    for entry in cont.get("splits", []):
        bad = set(entry) - {"name", "branches"}
        if bad:
            raise ConfigError(f"unknown split keys: {sorted(bad)}")
        try:
            splits.append(SplitRule(name=entry["name"],
                                    branches=tuple(entry["branches"])))
        except KeyError as exc:
            raise ConfigError(f"split rule missing {exc}") from exc

    cfg = EngineConfig(
        **engine,
        limits=limits,
        policy=policy,
        sim=sim,
        ibr_mw_floor=float(cont.get("ibr_mw_floor", 0.0)),
        splits=tuple(splits),
    )
    cfg.validate()
    return cfg
