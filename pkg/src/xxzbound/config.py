"""Run configuration: TOML/JSON files, ``key=value`` overrides, strict resolution."""
from __future__ import annotations

import copy
import hashlib
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .evolution import Amplitudes, SiteExcitation
from .model import (QUASIRANDOM_BETA, QUASIRANDOM_PHI, ChainSpec, Explicit, Quasirandom,
                    ReservoirSpec, Uniform)

DEFAULTS = {
    "chain": {"N": 12, "J": 1.0, "U": 1.0, "boundary": "periodic", "field": {"kind": "uniform"}},
    "reservoir": {"eta": 0.1, "s": 1.0, "omega_c": 3.0},
    "spectrum": {"classify_threshold": 0.01},
    "evolve": {
        "init": 1,
        "t_max": 100.0,
        "h": 0.01,
        "oracle": False,
        "M": 4000,
        "omega_max": 60.0,
        "memory_window": None,
        "check_convergence": False,
        "amplitudes": False,
    },
    "wstate": {"N_list": [100, 200, 400, 800, 1600, 3200]},
    "output": {"directory": "results", "format": "csv", "precision": 6},
    "sweep": {},
}

FIELD_KEYS = {
    "uniform": {"h0": 0.0},
    "quasirandom": {"Delta": 0.0, "beta": QUASIRANDOM_BETA, "phi": QUASIRANDOM_PHI},
    "explicit": {"h": None},
}

FORMATS = ("csv", "json", "both")


@dataclass(frozen=True)
class RunConfig:
    chain: ChainSpec
    reservoir: ReservoirSpec
    spectrum: dict
    evolve: dict
    wstate: dict
    output: dict

    def __hash__(self):
        return hash(canonical_json(self.to_dict()))

    @property
    def init(self):
        v = self.evolve["init"]
        if isinstance(v, int):
            return SiteExcitation(v)
        return Amplitudes(tuple(complex(*x) if isinstance(x, list) else complex(x) for x in v))

    def to_dict(self) -> dict:
        return {
            "chain": chain_to_dict(self.chain),
            "reservoir": {"eta": self.reservoir.eta, "s": self.reservoir.s,
                          "omega_c": self.reservoir.omega_c},
            "spectrum": dict(self.spectrum),
            "evolve": dict(self.evolve),
            "wstate": dict(self.wstate),
            "output": dict(self.output),
        }

    def digest(self, command: str) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k != "output"}
        payload["command"] = command
        return hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:12]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def chain_to_dict(chain: ChainSpec) -> dict:
    f = chain.field
    if isinstance(f, Uniform):
        field = {"kind": "uniform", "h0": f.h0}
    elif isinstance(f, Quasirandom):
        field = {"kind": "quasirandom", "Delta": f.Delta, "beta": f.beta, "phi": f.phi}
    else:
        field = {"kind": "explicit", "h": list(f.h)}
    return {"N": chain.N, "J": chain.J, "U": chain.U, "boundary": chain.boundary, "field": field}


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc


def parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def set_key(raw: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"cannot set {dotted}: {p} is not a section")
    node[parts[-1]] = value


def apply_overrides(raw: dict, overrides) -> dict:
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        set_key(raw, key.strip(), parse_value(value.strip()))
    return raw


def _merge(base, new, where):
    out = copy.deepcopy(base)
    for k, v in new.items():
        if k not in base:
            raise ConfigurationError(f"unknown key {where}{k}")
        if isinstance(base[k], dict) and k != "field" and where + k != "sweep":
            if not isinstance(v, dict):
                raise ConfigurationError(f"{where}{k} must be a section")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        elif k == "field" and isinstance(v, dict):
            # a different kind starts from that kind's defaults
            if v.get("kind", out[k].get("kind")) != out[k].get("kind"):
                out[k] = {}
            out[k].update(v)
        else:
            out[k] = v
    return out


def _build_field(raw):
    kind = raw.get("kind", "uniform")
    if kind not in FIELD_KEYS:
        raise ConfigurationError(f"unknown field kind {kind!r}")
    extra = set(raw) - set(FIELD_KEYS[kind]) - {"kind"}
    if extra:
        raise ConfigurationError(f"unknown keys for {kind} field: {sorted(extra)}")
    vals = {**FIELD_KEYS[kind], **{k: v for k, v in raw.items() if k != "kind"}}
    try:
        if kind == "uniform":
            return Uniform(float(vals["h0"]))
        if kind == "quasirandom":
            return Quasirandom(float(vals["Delta"]), float(vals["beta"]), float(vals["phi"]))
        if vals["h"] is None:
            raise ConfigurationError("explicit field needs a list h")
        return Explicit(tuple(vals["h"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad field value: {exc}") from exc


def _number(section, key, cast=float):
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{key} must be a number, got {v!r}")
    if cast is int:
        if int(v) != v:
            raise ConfigurationError(f"{key} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def resolve(raw: dict) -> tuple:
    """Merge ``raw`` over the defaults; return ``(RunConfig, sweep)``."""
    merged = _merge(DEFAULTS, raw or {}, "")
    c = merged["chain"]
    try:
        chain = ChainSpec(N=_number(c, "N", int), J=_number(c, "J"), U=_number(c, "U"),
                          boundary=c["boundary"], field=_build_field(c["field"]))
        r = merged["reservoir"]
        res = ReservoirSpec(eta=_number(r, "eta"), s=_number(r, "s"), omega_c=_number(r, "omega_c"))
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc

    spectrum = {"classify_threshold": _number(merged["spectrum"], "classify_threshold")}
    e = merged["evolve"]
    init = e["init"]
    if isinstance(init, bool) or not isinstance(init, (int, list)):
        raise ConfigurationError("evolve.init must be a site index or a list of amplitudes")
    evolve = {
        "init": init,
        "t_max": _number(e, "t_max"),
        "h": _number(e, "h"),
        "oracle": bool(e["oracle"]),
        "M": _number(e, "M", int),
        "omega_max": _number(e, "omega_max"),
        "memory_window": None if e["memory_window"] is None else _number(e, "memory_window"),
        "check_convergence": bool(e["check_convergence"]),
        "amplitudes": bool(e["amplitudes"]),
    }
    if evolve["h"] <= 0 or evolve["t_max"] < 0:
        raise ConfigurationError("evolve.h must be > 0 and evolve.t_max >= 0")
    nl = merged["wstate"]["N_list"]
    if isinstance(nl, int):
        nl = [nl]
    if not isinstance(nl, list) or not all(isinstance(n, int) and n >= 1 for n in nl):
        raise ConfigurationError("wstate.N_list must be a list of positive integers")
    o = merged["output"]
    if o["format"] not in FORMATS:
        raise ConfigurationError(f"output.format must be one of {FORMATS}")
    output = {"directory": str(o["directory"]), "format": o["format"],
              "precision": _number(o, "precision", int)}
    if not 1 <= output["precision"] <= 17:
        raise ConfigurationError("output.precision must be in 1..17")
    sweep = merged["sweep"]
    if not isinstance(sweep, dict) or not all(isinstance(v, list) and v for v in sweep.values()):
        raise ConfigurationError("sweep entries must be non-empty lists")
    cfg = RunConfig(chain=chain, reservoir=res, spectrum=spectrum, evolve=evolve,
                    wstate={"N_list": list(nl)}, output=output)
    return cfg, sweep


def expand(raw: dict) -> list:
    """Resolved configs for every point of the ``sweep`` table (cartesian product)."""
    _, sweep = resolve(raw)
    if not sweep:
        return [resolve(raw)[0]]
    base = copy.deepcopy(raw)
    base.pop("sweep", None)
    keys = sorted(sweep)
    out = []
    for combo in itertools.product(*(sweep[k] for k in keys)):
        point = copy.deepcopy(base)
        for k, v in zip(keys, combo):
            set_key(point, k, v)
        out.append(resolve(point)[0])
    return out


def build(path=None, overrides=None, **flags) -> list:
    raw = load_file(path) if path else {}
    raw = apply_overrides(raw, overrides)
    for key, value in flags.items():
        if value is not None:
            set_key(raw, f"output.{key}", value)
    return expand(raw)
