"""Config parsing, validation, and canonical serialization.

Configs are INI-style sections of typed key/value pairs. Parsing is strict:
unknown sections or keys are errors, every module-level invariant is
re-validated here with the offending key path in the message, and a parsed
config serializes back to a canonical form that parses to an equal value.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from pathlib import Path

from .adaptive import AadeimConfig
from .exceptions import ConfigError
from .models import (
    AdvectionModel,
    AdvectionParams,
    FlameModel,
    FlameParams,
    FullModel,
    PulseProfile,
    TimeSpec,
)

EMIT_CHOICES = ("trajectory", "probes", "error", "ledger", "diagnostics", "summary")

# Keys per section: name -> (type tag, default or REQUIRED).
_REQUIRED = object()

_MODEL_COMMON = {
    "kind": ("enum:advection,flame", _REQUIRED),
    "nx": ("int", _REQUIRED),
    "dx": ("float", None),  # defaults to 1/nx
    "a": ("float", 1.0),
}
_MODEL_ADVECTION = {
    "profile": ("enum:gaussian,step", "gaussian"),
    "profile_center": ("float", 0.25),
    "profile_width": ("float", 0.02),
}
_MODEL_FLAME = {
    "nu_T": ("float", 1e-3),
    "nu_Y": ("float", 1e-3),
    "A_r": ("float", 50.0),
    "T_a": ("float", 4.0),
    "Q_r": ("float", 3.0),
    "T_in": ("float", 1.0),
    "forcing_amp": ("float", 0.1),
    "forcing_freq": ("float", 2.0),
}
_SCHEMA = {
    "model": dict(_MODEL_COMMON, **_MODEL_ADVECTION, **_MODEL_FLAME),
    "time": {
        "dt": ("float", _REQUIRED),
        "steps": ("int", _REQUIRED),
    },
    "rom": {
        "mode": ("enum:static,aadeim", "static"),
        "n": ("int", 6),
    },
    "aadeim": {
        "w_init": ("int", None),
        "w": ("int", None),  # defaults to n + 1
        "m_s": ("int", None),
        "z": ("int", None),
        "basis_update_period": ("int", 1),
    },
    "training": {
        "snapshots": ("strlist", ()),
        "snapshot_stride": ("int", 1),
    },
    "output": {
        "directory": ("str", "out"),
        "probes": ("floatlist", ()),
        "probe_variables": ("strlist", ()),
        "emit": ("strlist", EMIT_CHOICES),
    },
    "run": {
        "seed": ("int", 0),
        "label": ("str", "run"),
    },
}


@dataclass(frozen=True)
class RomSection:
    mode: str
    n: int


@dataclass(frozen=True)
class TrainingSection:
    snapshots: tuple
    snapshot_stride: int


@dataclass(frozen=True)
class OutputSection:
    directory: str
    probes: tuple
    probe_variables: tuple
    emit: tuple


@dataclass(frozen=True)
class RunConfig:
    model_kind: str
    model_params: object  # AdvectionParams | FlameParams
    time: TimeSpec
    rom: RomSection
    aadeim: AadeimConfig | None
    training: TrainingSection
    output: OutputSection
    seed: int
    label: str


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config; raises ConfigError with a key path."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keys are case sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    raw = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"[{section}]: unknown section")
        raw[section] = dict(cp.items(section))

    values = {}
    present = {}
    for section, keys in _SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in keys:
                raise ConfigError(f"{section}.{key}: unknown key")
        out = {}
        for key, (tag, default) in keys.items():
            if key in given:
                out[key] = _convert(section, key, tag, given[key])
            elif default is _REQUIRED:
                raise ConfigError(f"{section}.{key}: missing required key")
            else:
                out[key] = default
        values[section] = out
        present[section] = frozenset(given)

    return _assemble(values, present)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _convert(section: str, key: str, tag: str, text: str):
    path = f"{section}.{key}"
    text = text.strip()
    if tag == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{path}: expected an integer, got {text!r}") from None
    if tag == "float":
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {text!r}") from None
    if tag == "str":
        return text
    if tag == "strlist":
        return tuple(text.split())
    if tag == "floatlist":
        try:
            return tuple(float(t) for t in text.split())
        except ValueError:
            raise ConfigError(f"{path}: expected numbers, got {text!r}") from None
    if tag.startswith("enum:"):
        choices = tag[5:].split(",")
        if text not in choices:
            raise ConfigError(f"{path}: must be one of {', '.join(choices)}")
        return text
    raise AssertionError(f"unhandled schema tag {tag}")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _assemble(v: dict, present: dict) -> RunConfig:
    m, t, r, a, tr, o, run = (v[s] for s in ("model", "time", "rom", "aadeim", "training", "output", "run"))

    _require(t["dt"] > 0.0, "time.dt: must be > 0")
    _require(t["steps"] >= 1, "time.steps: must be ≥ 1")
    time = TimeSpec(dt=t["dt"], steps=t["steps"])

    kind = m["kind"]
    _require(m["nx"] >= 2, "model.nx: must be ≥ 2")
    dx = m["dx"] if m["dx"] is not None else 1.0 / m["nx"]
    _require(dx > 0.0, "model.dx: must be > 0")
    _require(m["a"] >= 0.0, "model.a: must be ≥ 0")
    foreign = _MODEL_FLAME if kind == "advection" else _MODEL_ADVECTION
    # Keys of the other model kind are rejected even though the schema knows them.
    for key in foreign:
        if key in present["model"]:
            raise ConfigError(f"model.{key}: not a key for model.kind = {kind}")
    if kind == "advection":
        _require(m["profile_width"] > 0.0, "model.profile_width: must be > 0")
        params = AdvectionParams(
            nx=m["nx"], a=m["a"], dx=dx,
            profile=PulseProfile(kind=m["profile"], center=m["profile_center"], width=m["profile_width"]),
        )
        _require(params.a * time.dt / params.dx <= 1.0,
                 f"model.a: CFL number a*dt/dx = {m['a'] * t['dt'] / dx:.6g} exceeds 1")
    else:
        _require(m["nx"] >= 3, "model.nx: must be ≥ 3 for the flame model")
        _require(m["nu_T"] >= 0.0, "model.nu_T: must be ≥ 0")
        _require(m["nu_Y"] >= 0.0, "model.nu_Y: must be ≥ 0")
        _require(0.0 <= m["forcing_amp"] < 1.0, "model.forcing_amp: must lie in [0, 1)")
        params = FlameParams(
            nx=m["nx"], dx=dx, a=m["a"], nu_T=m["nu_T"], nu_Y=m["nu_Y"], A_r=m["A_r"],
            T_a=m["T_a"], Q_r=m["Q_r"], T_in=m["T_in"],
            forcing_amp=m["forcing_amp"], forcing_freq=m["forcing_freq"],
        )
        _require(max(m["nu_T"], m["nu_Y"]) * time.dt / dx**2 <= 0.5,
                 f"model.nu_T: diffusion number nu*dt/dx^2 = {max(m['nu_T'], m['nu_Y']) * t['dt'] / dx**2:.6g} exceeds 1/2")
        _require(params.a * time.dt / dx <= 1.0,
                 f"model.a: CFL number a*dt/dx = {m['a'] * t['dt'] / dx:.6g} exceeds 1")
    dim = m["nx"] if kind == "advection" else 2 * m["nx"]

    _require(r["n"] >= 1, "rom.n: must be ≥ 1")
    _require(r["n"] <= dim, f"rom.n: must be ≤ model dimension {dim}")
    rom = RomSection(mode=r["mode"], n=r["n"])

    aadeim = None
    if rom.mode == "aadeim":
        for key in ("w_init", "m_s", "z"):
            _require(a[key] is not None, f"aadeim.{key}: missing required key")
        w = a["w"] if a["w"] is not None else rom.n + 1
        _require(w >= 1, "aadeim.w: must be ≥ 1")
        _require(a["m_s"] >= 1, "aadeim.m_s: must be ≥ 1")
        _require(a["m_s"] <= dim, f"aadeim.m_s: must be ≤ model dimension {dim}")
        _require(a["z"] >= 1, "aadeim.z: must be ≥ 1")
        _require(a["basis_update_period"] >= 1, "aadeim.basis_update_period: must be ≥ 1")
        _require(a["w_init"] >= w, "aadeim.w_init: must be ≥ aadeim.w")
        _require(a["w_init"] >= rom.n, "aadeim.w_init: must be ≥ rom.n")
        _require(a["w_init"] <= t["steps"], "aadeim.w_init: must be ≤ time.steps")
        aadeim = AadeimConfig(n=rom.n, w_init=a["w_init"], w=w, m_s=a["m_s"], z=a["z"],
                              basis_update_period=a["basis_update_period"])
    else:
        for key in present["aadeim"]:
            raise ConfigError(f"aadeim.{key}: not a key for rom.mode = static")

    _require(tr["snapshot_stride"] >= 1, "training.snapshot_stride: must be ≥ 1")
    training = TrainingSection(snapshots=tr["snapshots"], snapshot_stride=tr["snapshot_stride"])

    for item in o["emit"]:
        _require(item in EMIT_CHOICES, f"output.emit: unknown item {item!r}")
    domain = m["nx"] * dx
    for x in o["probes"]:
        _require(0.0 <= x <= domain, f"output.probes: location {x:g} outside domain [0, {domain:g}]")
    var_names = ("q",) if kind == "advection" else ("T", "Y")
    for name in o["probe_variables"]:
        _require(name in var_names, f"output.probe_variables: unknown variable {name!r}")
    output = OutputSection(directory=o["directory"], probes=o["probes"],
                           probe_variables=o["probe_variables"], emit=tuple(o["emit"]))

    return RunConfig(model_kind=kind, model_params=params, time=time, rom=rom,
                     aadeim=aadeim, training=training, output=output,
                     seed=run["seed"], label=run["label"])


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parsing it back yields an equal RunConfig."""
    out = io.StringIO()

    def sect(name, pairs):
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")

    p = cfg.model_params
    pairs = [("kind", cfg.model_kind), ("nx", p.nx), ("dx", p.dx), ("a", p.a)]
    if cfg.model_kind == "advection":
        pairs += [("profile", p.profile.kind), ("profile_center", p.profile.center),
                  ("profile_width", p.profile.width)]
    else:
        pairs += [(k, getattr(p, k)) for k in ("nu_T", "nu_Y", "A_r", "T_a", "Q_r", "T_in",
                                               "forcing_amp", "forcing_freq")]
    sect("model", pairs)
    sect("time", [("dt", cfg.time.dt), ("steps", cfg.time.steps)])
    sect("rom", [("mode", cfg.rom.mode), ("n", cfg.rom.n)])
    if cfg.aadeim is not None:
        ac = cfg.aadeim
        sect("aadeim", [("w_init", ac.w_init), ("w", ac.w), ("m_s", ac.m_s), ("z", ac.z),
                        ("basis_update_period", ac.basis_update_period)])
    sect("training", [("snapshots", cfg.training.snapshots),
                      ("snapshot_stride", cfg.training.snapshot_stride)])
    sect("output", [("directory", cfg.output.directory), ("probes", cfg.output.probes),
                    ("probe_variables", cfg.output.probe_variables), ("emit", cfg.output.emit)])
    sect("run", [("seed", cfg.seed), ("label", cfg.label)])
    return out.getvalue()


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def build_model(cfg: RunConfig) -> FullModel:
    if cfg.model_kind == "advection":
        return AdvectionModel(cfg.model_params, cfg.time)
    return FlameModel(cfg.model_params, cfg.time)


def builtin_config_path(name: str) -> Path:
    """Path of a shipped config (without the .cfg suffix)."""
    path = Path(__file__).parent / "configs" / f"{name}.cfg"
    if not path.is_file():
        raise FileNotFoundError(f"no shipped config named {name!r}")
    return path
