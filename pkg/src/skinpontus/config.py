"""Run configuration: an INI file with ``[chain]``, ``[protocol]``, ``[numerics]``, ``[output]`` sections."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_THRESHOLD, DEFAULT_TOL
from .errors import ContractError
from .model import ChainParams

TREL_MODES = ("settling", "first-crossing")
FORMATS = ("csv", "json")
PROTOCOL_KINDS = ("direct", "pontus")
INITIAL_STATES = ("first", "last")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    chain: ChainParams
    kinds: tuple = ("direct",)
    initial_states: tuple = ("first", "last")
    tau: Optional[float] = None
    eps1: Optional[float] = None
    tau_grid: tuple = ()
    threshold: float = DEFAULT_THRESHOLD
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    tol: float = DEFAULT_TOL
    trel_mode: str = "settling"
    method: str = "auto"
    workers: int = 1
    out_dir: Path = Path("out")
    fmt: str = "csv"
    seed: int = 0
    oracle_L_values: tuple = tuple(range(2, 31))
    oracle_r_values: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    oracle_samples: int = 100
    oracle_t_max: float = 20.0
    extra: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.dt > 0 or not self.horizon > 0:
            raise ConfigError("dt and horizon must be positive")
        if self.trel_mode not in TREL_MODES:
            raise ConfigError(f"trel_mode must be one of {TREL_MODES}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.method not in ("auto", "spectral", "numeric"):
            raise ConfigError(f"unknown propagation method {self.method!r}")
        for k in self.kinds:
            if k not in PROTOCOL_KINDS:
                raise ConfigError(f"unknown protocol kind {k!r}")
        for s in self.initial_states:
            if s not in INITIAL_STATES:
                raise ConfigError(f"unknown initial state {s!r} (use first/last)")
        if "pontus" in self.kinds and self.tau is None and self.eps1 is None:
            raise ConfigError("pontus protocol needs tau or eps1 in [protocol]")
        if any(t <= 0 for t in self.tau_grid):
            raise ConfigError("tau_grid entries must be positive")
        return self

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw).validate()


def parse_grid(text: str) -> tuple:
    """``"0.5, 1, 2"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) == 2:
            parts.append(1.0)
        start, stop, step = parts
        if step <= 0:
            raise ConfigError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(x) for x in np.round(start + step * np.arange(n), 12))
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _names(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep J_R / J_L case
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_parser(cp)


def config_from_parser(cp: configparser.ConfigParser) -> RunConfig:
    try:
        if not cp.has_section("chain"):
            raise ConfigError("config needs a [chain] section")
        ch = cp["chain"]
        chain = ChainParams(
            L=ch.getint("L"),
            J=ch.getfloat("J", 1.0),
            eps=ch.getfloat("eps", 0.0),
            J_R=ch.getfloat("J_R", 1.0),
            J_L=ch.getfloat("J_L", 1.0),
        )
        pr = cp["protocol"] if cp.has_section("protocol") else {}
        nu = cp["numerics"] if cp.has_section("numerics") else {}
        out = cp["output"] if cp.has_section("output") else {}
        run = cp["run"] if cp.has_section("run") else {}
        orc = cp["oracle"] if cp.has_section("oracle") else {}

        def opt_float(sec, key):
            return float(sec[key]) if key in sec else None

        cfg = RunConfig(
            chain=chain,
            kinds=_names(pr.get("kinds", "direct")),
            initial_states=_names(pr.get("initial_states", "first, last")),
            tau=opt_float(pr, "tau"),
            eps1=opt_float(pr, "eps1"),
            tau_grid=parse_grid(pr.get("tau_grid", "")),
            threshold=float(nu.get("threshold", DEFAULT_THRESHOLD)),
            dt=float(nu.get("dt", DEFAULT_DT)),
            horizon=float(nu.get("horizon", DEFAULT_HORIZON)),
            tol=float(nu.get("tol", DEFAULT_TOL)),
            trel_mode=nu.get("trel_mode", "settling"),
            method=nu.get("method", "auto"),
            workers=int(nu.get("workers", 1)),
            out_dir=Path(out.get("dir", "out")),
            fmt=out.get("format", "csv"),
            seed=int(run.get("seed", 0)),
        )
        if "L_values" in orc:
            cfg.oracle_L_values = tuple(int(x) for x in parse_grid(orc["L_values"]))
        if "r_values" in orc:
            cfg.oracle_r_values = parse_grid(orc["r_values"])
        if "samples" in orc:
            cfg.oracle_samples = int(orc["samples"])
        if "t_max" in orc:
            cfg.oracle_t_max = float(orc["t_max"])
    except (KeyError, ValueError, TypeError, ContractError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg.validate()
