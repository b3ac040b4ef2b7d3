"""Config files: strict parsing, typed errors, and lossless round-trips."""

import os

import pytest

from sfsampler import ConfigError, EpsSchedule, SamplerConfig, UnknownTargetError
from sfsampler.config import (
    plan_from_config,
    read_ini,
    sampler_from_config,
    target_from_config,
    ula_from_config,
    write_resolved_ini,
)
from sfsampler.targets import build_target, describe


def _write(tmp_path, text, name="cfg.ini"):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


GOOD = """[target]
kind = mixture
weights = 0.5 0.5
means = 2; -2

[run]
seed = 7
steps = 25
particles = 400
drift = mc-grad
mc_size = 16
eps_rule = fixed:0.125

[ula]
step_size = 0.05
burn_in = 100

[plan]
axis = steps
values = 4 8 16
replications = 3
metric = w2_1d
"""


def test_full_config_parses(tmp_path):
    sections = read_ini(_write(tmp_path, GOOD))
    target = target_from_config(sections)
    config = sampler_from_config(sections)
    assert target.name == "mixture"
    assert config.steps == 25
    assert config.eps == EpsSchedule(rule="fixed", value=0.125)
    ula = ula_from_config(sections)
    assert ula == {"step_size": 0.05, "burn_in": 100, "post_steps": None}
    plan = plan_from_config(sections, config)
    assert plan.axis == "steps"
    assert plan.values == (4.0, 8.0, 16.0)


def test_overrides_win(tmp_path):
    sections = read_ini(_write(tmp_path, GOOD))
    config = sampler_from_config(sections, {"seed": 99, "steps": 50, "eps_rule": "none"})
    assert config.seed == 99
    assert config.steps == 50
    assert config.eps.rule == "none"
    assert config.particles == 400


@pytest.mark.parametrize(
    "options",
    [
        {"kind": "standard", "dim": 2},
        {"kind": "gaussian", "mean": [1.0, -2.0]},
        {
            "kind": "mixture",
            "weights": [0.25, 0.75],
            "means": [[2.0, 1.0], [-2.0, 0.5]],
            "regularity": {"gamma": 100.0, "xi": 0.01, "zeta": 8.0},
        },
        {"kind": "bump", "radius": 2.5},
        {"kind": "gaussian-potential", "mean": [0.5, 0.1], "log_scale": -3.75},
    ],
)
def test_resolved_ini_round_trips_losslessly(tmp_path, options):
    target = build_target(options)
    config = SamplerConfig(
        steps=17, particles=33, seed=123456789, drift="mc-stein", mc_size=9,
        eps=EpsSchedule(rule="fixed", value=0.0625),
    )
    path = os.path.join(tmp_path, "resolved.ini")
    write_resolved_ini(path, target, config)
    sections = read_ini(path)
    target2 = target_from_config(sections)
    config2 = sampler_from_config(sections)
    assert describe(target2) == describe(target)
    assert config2 == config


def test_round_trip_preserves_awkward_floats(tmp_path):
    target = build_target({"kind": "gaussian", "mean": [0.1, 1e-17, -2.0000000000000004]})
    path = os.path.join(tmp_path, "resolved.ini")
    write_resolved_ini(path, target, SamplerConfig(steps=1, particles=1, seed=0))
    target2 = target_from_config(read_ini(path))
    assert target2.params == target.params


def test_unknown_target_kind(tmp_path):
    path = _write(tmp_path, "[target]\nkind = cauchy\n\n[run]\nseed = 1\n")
    with pytest.raises(UnknownTargetError):
        target_from_config(read_ini(path))


@pytest.mark.parametrize(
    "text",
    [
        "[target]\nkind = gaussian\nmean = 1\ncolour = red\n",
        "[teleport]\nkind = gaussian\n",
        "[target]\nkind = gaussian\nmean = one two\n",
        "[run]\nseed = 1\nsteps = many\n",
        "not an ini file at all\n",
    ],
)
def test_malformed_configs_raise_config_error(tmp_path, text):
    with pytest.raises(ConfigError):
        read_ini(_write(tmp_path, text))


def test_missing_pieces_raise_config_error(tmp_path):
    no_target = read_ini(_write(tmp_path, "[run]\nseed = 1\n"))
    with pytest.raises(ConfigError):
        target_from_config(no_target)
    no_seed = read_ini(_write(tmp_path, "[target]\nkind = bump\n\n[run]\nsteps = 4\n"))
    with pytest.raises(ConfigError):
        sampler_from_config(no_seed)
    with pytest.raises(ConfigError):
        ula_from_config(no_seed)
    with pytest.raises(ConfigError):
        plan_from_config(no_seed, SamplerConfig(steps=1, particles=1, seed=0))
    assert sampler_from_config(no_seed, {"seed": 5}).seed == 5
    missing_file = os.path.join(tmp_path, "nope.ini")
    with pytest.raises(ConfigError):
        read_ini(missing_file)


def test_bad_eps_rule_is_a_config_error(tmp_path):
    path = _write(tmp_path, "[target]\nkind = bump\n\n[run]\nseed = 1\neps_rule = sqrt\n")
    with pytest.raises(ConfigError):
        sampler_from_config(read_ini(path))


def test_partial_regularity_is_rejected(tmp_path):
    path = _write(
        tmp_path,
        "[target]\nkind = bump\n\n[target.regularity]\ngamma = 3.0\n\n[run]\nseed = 1\n",
    )
    with pytest.raises(ConfigError):
        target_from_config(read_ini(path))
