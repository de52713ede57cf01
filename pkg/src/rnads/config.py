"""Run configuration files.

Configs are YAML documents with the top-level blocks ``background``,
``mesh``, ``initial``, ``flow``, ``output``, ``graph`` and ``sweep``.  Every
block is optional except ``background``; missing keys take the defaults in
``DEFAULTS``.  Parsing fills in the defaults, so ``to_dict`` of a parsed
config is the canonical form and parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import copy
import itertools
import os
from dataclasses import dataclass

import numpy as np
import yaml

from .background import BackgroundParams, existence_check
from .errors import ConfigError, MeshError
from .hypersurface import RadialProfile, perturbed_profile
from .spaceform import build_mesh, read_field_csv

__all__ = ["RunConfig", "DEFAULTS", "FORMAT_VERSION", "load_config", "parse_config", "dump_config",
           "expand_sweep", "set_dotted"]

FORMAT_VERSION = 1

DEFAULTS = {
    "background": {"n": None, "eps": None, "kappa": None, "m": None, "q": 0.0},
    "mesh": {"kind": "sphere_axisym", "resolution": 64, "side": None, "volume": None},
    "initial": {"kind": "slice", "lambda0": None, "modes": [], "random_modes": 0,
                "random_amplitude": 0.05, "seed": 0, "path": None, "column": None},
    "flow": {"T": 3.0, "samples": 40, "safety": 0.25, "dt_max": 0.01, "dt_min": 1e-9},
    "output": {"directory": "rnads_out", "formats": ["csv", "json"]},
    "graph": {"mode": "embed", "m_upper": None, "m_lower": None, "s_max": None, "points": 400,
              "path": None, "tau": None, "theta": None},
    "sweep": {"target": None, "ranges": {}, "workers": 1},
}

_INITIAL_KINDS = ("slice", "perturbed", "file")
_GRAPH_MODES = ("embed", "file")
_TARGETS = ("flow", "check", "mass")


def _merge(block, defaults, name):
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError(f"block {name!r} must be a mapping")
    unknown = set(block) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(sorted(unknown))}")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(block))
    return out


def _num(block, key, name, kind=float, required=True):
    v = block[key]
    if v is None:
        if required:
            raise ConfigError(f"missing {name}.{key}")
        return None
    try:
        if kind is int and (isinstance(v, bool) or float(v) != int(v)):
            raise ValueError
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key} must be {kind.__name__}, got {v!r}") from None


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration; ``data`` holds the canonical nested dict."""

    data: dict
    base_dir: str = "."

    def to_dict(self):
        return copy.deepcopy(self.data)

    def __getitem__(self, key):
        return self.data[key]

    def background_params(self):
        return BackgroundParams(**self.data["background"])

    def require_existence(self):
        p = self.background_params()
        report = existence_check(p)
        if not report:
            raise ConfigError(f"background parameters fail the existence check: {report.detail}")
        return p

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def build_mesh(self):
        m, p = self.data["mesh"], self.data["background"]
        try:
            return build_mesh(m["kind"], m["resolution"], eps=p["eps"], side=m["side"],
                              volume=m["volume"], dim=p["n"] - 1)
        except MeshError as exc:
            raise ConfigError(str(exc)) from exc

    def initial_profile(self, mesh, p, seed=None):
        ini = self.data["initial"]
        kind = ini["kind"]
        if kind == "file":
            return profile_from_file(self.resolve(ini["path"]), mesh, p, ini["column"])
        lam0 = ini["lambda0"]
        if lam0 is None:
            lam0 = 1.5 * p.s0
        if not lam0 > p.s0:
            raise ConfigError(f"initial.lambda0 = {lam0} is not outside the horizon s0 = {p.s0:.12g}")
        if kind == "slice":
            return RadialProfile.slice(mesh, p, lam0)
        modes = [tuple(md) for md in ini["modes"]]
        count = ini["random_modes"]
        if count:
            rng = np.random.default_rng(ini["seed"] if seed is None else seed)
            amp = ini["random_amplitude"]
            for _ in range(count):
                if mesh.kind == "torus":
                    kx, ky = (int(k) for k in rng.integers(0, 3, size=2))
                    modes.append((kx, ky, float(rng.uniform(-amp, amp))))
                else:
                    modes.append((int(rng.integers(1, 5)), float(rng.uniform(-amp, amp))))
        return perturbed_profile(mesh, p, lam0, modes)

    def flow_options(self):
        from .flow import FlowOptions

        f = self.data["flow"]
        return FlowOptions(safety=f["safety"], dt_max=f["dt_max"], dt_min=f["dt_min"],
                           samples=f["samples"])


def profile_from_file(path, mesh, p, column=None):
    """Read a profile CSV with columns (coordinates..., lambda) or (coordinates..., r)."""
    if not os.path.exists(path):
        raise ConfigError(f"profile file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if column is None:
        column = "lambda" if "lambda" in header else "r"
    if column not in ("lambda", "r"):
        raise ConfigError("initial.column must be 'lambda' or 'r'")
    try:
        field = read_field_csv(path, mesh, name=column)
    except MeshError as exc:
        raise ConfigError(str(exc)) from exc
    if column == "lambda":
        return RadialProfile.from_lambda(mesh, p, field.values)
    return RadialProfile.from_r(mesh, p, field.values)


def parse_config(raw, base_dir="."):
    """Validate a raw nested dict and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    version = raw.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    unknown = set(raw) - set(DEFAULTS) - {"version"}
    if unknown:
        raise ConfigError(f"unknown block(s): {', '.join(sorted(unknown))}")
    data = {"version": FORMAT_VERSION}
    for name, defaults in DEFAULTS.items():
        data[name] = _merge(raw.get(name), defaults, name)

    bg = data["background"]
    bg["n"] = _num(bg, "n", "background", int)
    bg["eps"] = _num(bg, "eps", "background", int)
    for key in ("kappa", "m", "q"):
        bg[key] = _num(bg, key, "background")
    try:
        BackgroundParams(**bg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    mesh = data["mesh"]
    mesh["resolution"] = _num(mesh, "resolution", "mesh", int, required=False)
    mesh["side"] = _num(mesh, "side", "mesh", required=False)
    mesh["volume"] = _num(mesh, "volume", "mesh", required=False)

    ini = data["initial"]
    if ini["kind"] not in _INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {_INITIAL_KINDS}")
    ini["lambda0"] = _num(ini, "lambda0", "initial", required=False)
    ini["random_modes"] = _num(ini, "random_modes", "initial", int)
    ini["random_amplitude"] = _num(ini, "random_amplitude", "initial")
    ini["seed"] = _num(ini, "seed", "initial", int)
    try:
        ini["modes"] = [[float(x) if i == len(md) - 1 else int(x) for i, x in enumerate(md)]
                        for md in ini["modes"]]
    except (TypeError, ValueError):
        raise ConfigError("initial.modes must be a list of [degree, amplitude] or [kx, ky, amplitude]") from None
    if ini["kind"] == "file":
        if not ini["path"]:
            raise ConfigError("initial.kind = file needs initial.path")
        if not os.path.exists(os.path.join(base_dir, ini["path"]) if not os.path.isabs(ini["path"])
                              else ini["path"]):
            raise ConfigError(f"initial.path does not exist: {ini['path']}")

    fl = data["flow"]
    for key in ("T", "safety", "dt_max", "dt_min"):
        fl[key] = _num(fl, key, "flow")
    fl["samples"] = _num(fl, "samples", "flow", int)

    out = data["output"]
    if not isinstance(out["formats"], list) or not set(out["formats"]) <= {"csv", "json"}:
        raise ConfigError("output.formats must be a subset of [csv, json]")

    gr = data["graph"]
    if gr["mode"] not in _GRAPH_MODES:
        raise ConfigError(f"graph.mode must be one of {_GRAPH_MODES}")
    for key in ("m_upper", "m_lower", "s_max", "tau", "theta"):
        gr[key] = _num(gr, key, "graph", required=False)
    gr["points"] = _num(gr, "points", "graph", int)

    sw = data["sweep"]
    if sw["target"] is not None and sw["target"] not in _TARGETS:
        raise ConfigError(f"sweep.target must be one of {_TARGETS}")
    if not isinstance(sw["ranges"], dict):
        raise ConfigError("sweep.ranges must map dotted keys to lists")
    for key, values in sw["ranges"].items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.ranges.{key} must be a non-empty list")
        block = key.split(".")[0]
        if block not in DEFAULTS or block == "sweep" or len(key.split(".")) != 2 \
                or key.split(".")[1] not in DEFAULTS[block]:
            raise ConfigError(f"sweep key {key!r} does not name a config entry")
    sw["workers"] = _num(sw, "workers", "sweep", int)
    return RunConfig(data, base_dir)


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw, os.path.dirname(os.path.abspath(path)))


def dump_config(cfg, path=None):
    text = yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def set_dotted(raw, key, value):
    block, name = key.split(".")
    raw.setdefault(block, {})
    raw[block][name] = value


def expand_sweep(cfg):
    """Cartesian product of ``sweep.ranges``: list of (overrides, RunConfig)."""
    ranges = cfg["sweep"]["ranges"]
    keys = sorted(ranges)
    items = []
    for combo in itertools.product(*(ranges[k] for k in keys)):
        raw = cfg.to_dict()
        raw["sweep"] = copy.deepcopy(DEFAULTS["sweep"])
        overrides = dict(zip(keys, combo))
        for k, v in overrides.items():
            set_dotted(raw, k, v)
        items.append((overrides, parse_config(raw, cfg.base_dir)))
    return items
