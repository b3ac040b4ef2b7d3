"""INI config files: strict typed parsing and a lossless resolved writer.

Sections: [target] (kind plus kind-specific keys), [target.regularity]
(declared gamma/xi/zeta), [run] (sampler settings; seed is required),
[ula] (baseline settings for comparisons), [plan] (sweep settings).
Unknown sections or keys are ConfigError, not warnings: a typo in a
config should fail loudly before any compute happens. Floats are written
with repr() so a written file parses back to bit-identical values.
"""

from __future__ import annotations

import configparser
import os

from .errors import ConfigError
from .harness import ExperimentPlan
from .sampler import EpsSchedule, SamplerConfig
from .targets import build_target

_TARGET_KEYS = {
    "kind": "str",
    "dim": "int",
    "mean": "floats",
    "log_scale": "float",
    "weights": "floats",
    "means": "rows",
    "radius": "float",
}
_REG_KEYS = {"gamma": "float", "xi": "float", "zeta": "float"}
_RUN_KEYS = {
    "seed": "int",
    "steps": "int",
    "particles": "int",
    "drift": "str",
    "mc_size": "int",
    "eps_rule": "str",
    "record_trajectory": "bool",
}
_ULA_KEYS = {"step_size": "float", "burn_in": "int", "post_steps": "int"}
_PLAN_KEYS = {
    "name": "str",
    "axis": "str",
    "values": "floats",
    "replications": "int",
    "metric": "str",
}
_SECTIONS = {
    "target": _TARGET_KEYS,
    "target.regularity": _REG_KEYS,
    "run": _RUN_KEYS,
    "ula": _ULA_KEYS,
    "plan": _PLAN_KEYS,
}
_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_value(section, key, kind, raw):
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            try:
                return _BOOL_WORDS[raw.lower()]
            except KeyError:
                raise ValueError(raw) from None
        if kind == "floats":
            vals = [float(tok) for tok in raw.replace(",", " ").split()]
            if not vals:
                raise ValueError(raw)
            return vals
        # rows: semicolon-separated vectors, e.g. "2 0; -2 0"
        rows = [
            [float(tok) for tok in part.replace(",", " ").split()]
            for part in raw.split(";")
        ]
        if not rows or any(not r for r in rows):
            raise ValueError(raw)
        return rows
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot read {raw!r} as {kind}"
        ) from None


def _read_section(cp, name, known):
    if not cp.has_section(name):
        return {}
    out = {}
    for key, raw in cp.items(name):
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section [{name}]")
        out[key] = _parse_value(name, key, known[key], raw)
    return out


def read_ini(path):
    """Parse an INI file into per-section typed dicts.

    Raises:
        ConfigError: unreadable file, malformed INI, unknown section or
            key, or a value that does not parse as its declared type.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_string(fh.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}] in {path}")
    return {name: _read_section(cp, name, keys) for name, keys in _SECTIONS.items()}


def target_options_from_config(sections):
    """Assemble the build_target options dict from parsed sections."""
    opts = dict(sections.get("target", {}))
    if "kind" not in opts:
        raise ConfigError("config has no [target] section with a kind")
    reg = sections.get("target.regularity", {})
    if reg:
        if "gamma" not in reg or "xi" not in reg:
            raise ConfigError("[target.regularity] needs both gamma and xi")
        opts["regularity"] = reg
    return opts


def target_from_config(sections):
    return build_target(target_options_from_config(sections))


def sampler_from_config(sections, overrides=None):
    """Build the SamplerConfig from [run], with CLI overrides winning.

    Args:
        sections: dict from read_ini (or a compatible literal).
        overrides: optional {key: value} with the same keys as [run];
            None values are ignored.

    Raises:
        ConfigError: no seed anywhere, or an unknown override key.
    """
    run = dict(sections.get("run", {}))
    for key, value in (overrides or {}).items():
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown run setting {key!r}")
        if value is not None:
            run[key] = value
    if "seed" not in run:
        raise ConfigError("no seed: set seed under [run] or pass --seed")
    eps_text = run.pop("eps_rule", "none")
    try:
        eps = EpsSchedule.parse(str(eps_text))
    except ValueError as exc:
        raise ConfigError(f"[run] eps_rule: {exc}") from None
    return SamplerConfig(
        steps=int(run.pop("steps", 100)),
        particles=int(run.pop("particles", 1000)),
        seed=run.pop("seed"),
        drift=str(run.pop("drift", "auto")),
        mc_size=run.pop("mc_size", None),
        eps=eps,
        record_trajectory=bool(run.pop("record_trajectory", False)),
    )


def ula_from_config(sections):
    """Extract Langevin baseline settings, or raise if they are missing."""
    ula = sections.get("ula", {})
    if "step_size" not in ula or "burn_in" not in ula:
        raise ConfigError("comparison needs [ula] with step_size and burn_in")
    return {
        "step_size": float(ula["step_size"]),
        "burn_in": int(ula["burn_in"]),
        "post_steps": ula.get("post_steps"),
    }


def plan_from_config(sections, base):
    """Build an ExperimentPlan from [plan] around a base SamplerConfig."""
    plan = sections.get("plan", {})
    if "axis" not in plan or "values" not in plan:
        raise ConfigError("sweep needs [plan] with axis and values")
    try:
        return ExperimentPlan(
            name=str(plan.get("name", "sweep")),
            target_options=target_options_from_config(sections),
            base=base,
            axis=str(plan["axis"]),
            values=tuple(plan["values"]),
            replications=int(plan.get("replications", 3)),
            metric=str(plan.get("metric", "w2_1d")),
        )
    except ValueError as exc:
        raise ConfigError(f"[plan]: {exc}") from None


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return "; ".join(" ".join(_fmt(v) for v in row) for row in value)
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _eps_text(eps):
    if eps.rule == "fixed":
        return f"fixed:{eps.value!r}"
    return eps.rule


def write_resolved_ini(path, target, config, ula=None, plan=None):
    """Write the fully resolved settings as an INI that parses back losslessly.

    The [target] section is rebuilt from target.params, so what lands on
    disk is what build_target actually constructed, not what the user
    typed.
    """
    lines = ["[target]"]
    for key, value in sorted(target.params.items()):
        lines.append(f"{key} = {_fmt(value)}")
    if target.regularity is not None:
        lines.append("")
        lines.append("[target.regularity]")
        for key, value in sorted(target.regularity.describe().items()):
            lines.append(f"{key} = {_fmt(value)}")
    lines.append("")
    lines.append("[run]")
    lines.append(f"seed = {config.seed}")
    lines.append(f"steps = {config.steps}")
    lines.append(f"particles = {config.particles}")
    lines.append(f"drift = {config.drift}")
    if config.mc_size is not None:
        lines.append(f"mc_size = {config.mc_size}")
    lines.append(f"eps_rule = {_eps_text(config.eps)}")
    lines.append(f"record_trajectory = {_fmt(bool(config.record_trajectory))}")
    if ula is not None:
        lines.append("")
        lines.append("[ula]")
        lines.append(f"step_size = {_fmt(float(ula['step_size']))}")
        lines.append(f"burn_in = {int(ula['burn_in'])}")
        if ula.get("post_steps") is not None:
            lines.append(f"post_steps = {int(ula['post_steps'])}")
    if plan is not None:
        lines.append("")
        lines.append("[plan]")
        lines.append(f"name = {plan.name}")
        lines.append(f"axis = {plan.axis}")
        lines.append(f"values = {_fmt(list(plan.values))}")
        lines.append(f"replications = {plan.replications}")
        lines.append(f"metric = {plan.metric}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
