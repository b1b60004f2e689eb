"""Sectioned key-value run configuration and the bundled presets.

A configuration file looks like::

    [experiment]
    model = gap_acceptance
    strategy = myopic
    horizon = 1
    discount = 1.0
    trials = 150
    replications = 500
    seed = 2021
    diagnostics = false
    diagnostics_replications = 500

    [parameter T_cr]
    lo = 5.0
    hi = 10.0
    count = 20
    true = 7.0

    [parameter sigma]
    ...

    [design]
    name = gap
    lo = 4.0
    hi = 12.0
    count = 25

Parameter sections appear in axis order; that order fixes the grid
flattening and the ``mse_p1``/``mse_p2`` columns. ``word_count`` is
accepted (and required to be positive) only for ``memory_retention``.
"""

from __future__ import annotations

import configparser
import io

from .engine import HorizonSpec
from .errors import ConfigurationError
from .grid import AxisSpec
from .harness import ExperimentConfig, Strategy
from .models import ModelKind, ResponseModel

_EXPERIMENT_KEYS = {
    "model", "strategy", "horizon", "discount", "trials", "replications", "seed",
    "diagnostics", "diagnostics_replications", "word_count",
}
_REQUIRED_EXPERIMENT = {"model", "trials", "replications"}
_PARAMETER_KEYS = {"lo", "hi", "count", "true"}
_DESIGN_KEYS = {"name", "lo", "hi", "count"}


def _get(section, key, conv, where):
    raw = section[key]
    try:
        if conv is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return conv(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{where}.{key}: cannot parse {raw!r}") from None


def _check_keys(section, allowed, required, where):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ConfigurationError(f"{where}: missing key(s) {sorted(missing)}")


def _axis(name, section, where):
    try:
        return AxisSpec(name, _get(section, "lo", float, where), _get(section, "hi", float, where),
                        _get(section, "count", int, where))
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from None

    if "experiment" not in cp:
        raise ConfigurationError("missing [experiment] section")
    if "design" not in cp:
        raise ConfigurationError("missing [design] section")
    for name in cp.sections():
        if name not in ("experiment", "design") and not name.startswith("parameter "):
            raise ConfigurationError(f"unknown section [{name}]")

    exp = cp["experiment"]
    _check_keys(exp, _EXPERIMENT_KEYS, _REQUIRED_EXPERIMENT, "experiment")
    try:
        kind = ModelKind(exp["model"].strip())
    except ValueError:
        raise ConfigurationError(
            f"experiment.model: unknown model {exp['model']!r}; "
            f"expected one of {[k.value for k in ModelKind]}") from None
    if "word_count" in exp:
        if kind is not ModelKind.MEMORY_RETENTION:
            raise ConfigurationError("experiment.word_count only applies to memory_retention")
        model = ResponseModel(kind, _get(exp, "word_count", int, "experiment"))
    else:
        model = ResponseModel(kind)

    axes, truth = [], []
    for name in cp.sections():
        if not name.startswith("parameter "):
            continue
        pname = name[len("parameter "):].strip()
        where = f"parameter {pname}"
        sec = cp[name]
        _check_keys(sec, _PARAMETER_KEYS, _PARAMETER_KEYS, where)
        axes.append(_axis(pname, sec, where))
        truth.append(_get(sec, "true", float, where))

    des = cp["design"]
    _check_keys(des, _DESIGN_KEYS, _DESIGN_KEYS, "design")
    design_axis = _axis(des["name"].strip(), des, "design")

    try:
        strategy = Strategy(exp.get("strategy", "myopic").strip())
    except ValueError:
        raise ConfigurationError(
            f"experiment.strategy: expected one of {[s.value for s in Strategy]}") from None
    horizon = HorizonSpec(
        _get(exp, "horizon", int, "experiment") if "horizon" in exp else 1,
        _get(exp, "discount", float, "experiment") if "discount" in exp else 1.0,
    )
    replications = _get(exp, "replications", int, "experiment")
    return ExperimentConfig(
        model=model,
        parameter_axes=tuple(axes),
        design_axis=design_axis,
        true_params=tuple(truth),
        trials=_get(exp, "trials", int, "experiment"),
        replications=replications,
        strategy=strategy,
        horizon=horizon,
        seed=_get(exp, "seed", int, "experiment") if "seed" in exp else 0,
        diagnostics_enabled=_get(exp, "diagnostics", bool, "experiment")
        if "diagnostics" in exp else False,
        diagnostics_replications=_get(exp, "diagnostics_replications", int, "experiment")
        if "diagnostics_replications" in exp else replications,
    )


def emit_config(config: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    exp = {
        "model": config.model.kind.value,
        "strategy": config.strategy.value,
        "horizon": str(config.horizon.T),
        "discount": repr(float(config.horizon.gamma)),
        "trials": str(config.trials),
        "replications": str(config.replications),
        "seed": str(config.seed),
        "diagnostics": "true" if config.diagnostics_enabled else "false",
        "diagnostics_replications": str(config.diagnostics_replications),
    }
    if config.model.kind is ModelKind.MEMORY_RETENTION:
        exp["word_count"] = str(config.model.word_count)
    cp["experiment"] = exp
    for axis, true in zip(config.parameter_axes, config.true_params):
        cp[f"parameter {axis.name}"] = {
            "lo": repr(float(axis.lo)), "hi": repr(float(axis.hi)),
            "count": str(axis.count), "true": repr(float(true)),
        }
    a = config.design_axis
    cp["design"] = {"name": a.name, "lo": repr(float(a.lo)), "hi": repr(float(a.hi)),
                    "count": str(a.count)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


PRESETS = {
    "gap": """\
[experiment]
model = gap_acceptance
strategy = myopic
horizon = 1
discount = 1.0
trials = 150
replications = 500
seed = 2021
diagnostics = false
diagnostics_replications = 500

[parameter T_cr]
lo = 5.0
hi = 10.0
count = 20
true = 7.0

[parameter sigma]
lo = 1.0
hi = 5.0
count = 20
true = 2.004

[design]
name = gap
lo = 4.0
hi = 12.0
count = 25
""",
    "visual": """\
[experiment]
model = visual_psychometric
strategy = myopic
horizon = 1
discount = 1.0
trials = 200
replications = 200
seed = 2021
diagnostics = false
diagnostics_replications = 200

[parameter s]
lo = 0.0
hi = 10.0
count = 50
true = 0.6312

[parameter b]
lo = 0.7
hi = 7.0
count = 50
true = 2.3643

[design]
name = intensity
lo = 0.0
hi = 3.0
count = 50
""",
    "memory": """\
[experiment]
model = memory_retention
word_count = 15
strategy = myopic
horizon = 1
discount = 1.0
trials = 80
replications = 200
seed = 2021
diagnostics = false
diagnostics_replications = 200

[parameter a]
lo = 0.0
hi = 1.0
count = 20
true = 0.7103

[parameter b]
lo = 0.0
hi = 1.0
count = 20
true = 0.0833

[design]
name = lag
lo = 0.0
hi = 50.0
count = 50
""",
}

# trials at which per-design curves are reported by default
DECOMPOSE_TRIALS = {
    ModelKind.GAP_ACCEPTANCE: (5, 25, 55, 85, 115, 145),
    ModelKind.VISUAL_PSYCHOMETRIC: (5, 25, 55, 95, 125, 165),
    ModelKind.MEMORY_RETENTION: (5, 15, 25, 35, 45, 65),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return parse_config(PRESETS[name])
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
