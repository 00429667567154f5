"""Scenario configuration files.

The format is flat ``key = value`` text grouped under ``[section]`` headers.
``#`` and ``;`` start comments. Rates are in units of kappa, angles in radians
(the constant ``pi`` and simple arithmetic such as ``3*pi/2`` are accepted),
dimensions are integers and lists are comma separated. Unknown sections or
keys are rejected so that typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import ast
import copy
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from ..errors import ConfigParse, UnknownScenario

SCENARIOS = ("param_map", "blockade_sweep", "rwa_check", "phase_sweep", "cat_wigner", "custom")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(text: str) -> float:
    """Evaluate a literal or a small arithmetic expression in ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    value = ev(ast.parse(text.strip(), mode="eval"))
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _as_float(text: str) -> float:
    return _eval_number(text)


def _as_int(text: str) -> int:
    v = _eval_number(text)
    if v != int(v):
        raise ValueError(text)
    return int(v)


def _as_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _as_floats(text: str) -> list[float]:
    return [_eval_number(t) for t in text.split(",") if t.strip()]


def _as_words(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _choice(*options: str) -> Callable[[str], str]:
    def conv(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    conv.__name__ = "one of " + "|".join(options)
    return conv


@dataclass(frozen=True)
class Key:
    conv: Callable[[str], Any]
    default: Any = None
    help: str = ""


_PARAMS = {
    "kappa": Key(_as_float, 1.0, "cavity decay rate (the rate unit)"),
    "gamma": Key(_as_float, 0.01, "mechanical decay rate"),
    "g0": Key(_as_float, 0.5, "bare optomechanical coupling"),
    "delta_m": Key(_as_float, 4000.0, "mechanical detuning from the modulation"),
    "lambda": Key(_as_float, None, "parametric amplification amplitude"),
    "delta": Key(_as_float, 0.02, "delta_m - lambda, used when lambda is absent"),
    "omega_d": Key(_as_float, 30.0, "modulation frequency"),
    "phi_d": Key(_as_float, math.pi, "amplification phase"),
    "bath": Key(_choice("matched", "vacuum", "explicit"), "matched",
                "matched: r_e = r_d; vacuum: r_e = 0; explicit: use r_e and phi_e"),
    "phi": Key(_as_float, math.pi, "bath phase phi_e - phi_d for the matched bath"),
    "r_e": Key(_as_float, 0.0, "bath squeezing (explicit bath only)"),
    "phi_e": Key(_as_float, 0.0, "bath reference phase (explicit bath only)"),
    "eps_p": Key(_as_float, 0.1, "probe amplitude"),
    "delta_c": Key(_as_float, None, "probe detuning; default is the single-photon resonance"),
}

_RUN = {
    "scenario": Key(str, None, "scenario name"),
    "cavity_dim": Key(_as_int, None, "cavity truncation"),
    "mech_dim": Key(_as_int, None, "mechanical truncation"),
    "threads": Key(_as_int, 1, "worker count, 0 = one per CPU"),
    "format": Key(_choice("csv", "json"), "csv", "output format"),
}

_SCENARIO_KEYS: dict[str, dict[str, Key]] = {
    "param_map": {
        "g0": Key(_as_float, 0.5, "coupling for the g_tilde(r_d) table"),
        "r_d_min": Key(_as_float, 0.0),
        "r_d_max": Key(_as_float, 4.0),
        "r_d_points": Key(_as_int, 81),
        "lambda_delta_m": Key(_as_float, 4000.0, "fixed delta_m of the r_d(lambda) table"),
        "lambda_min": Key(_as_float, 0.0),
        "lambda_max": Key(_as_float, 3999.98),
        "lambda_points": Key(_as_int, 81),
        "delta_m_lambda": Key(_as_float, 4000.0, "fixed lambda of the r_d(delta_m) table"),
        "delta_m_min": Key(_as_float, 4000.02),
        "delta_m_max": Key(_as_float, 8000.0),
        "delta_m_points": Key(_as_int, 81),
    },
    "blockade_sweep": {
        "g0_min": Key(_as_float, 0.01),
        "g0_max": Key(_as_float, 1.2),
        "points": Key(_as_int, 60),
        "tunneling_orders": Key(_as_floats, [1.0, 2.0], "m values of g_tilde/omega_m_tilde = sqrt(m/2)"),
        "leak_tol": Key(_as_float, 1e-3, "top-two-level population that flags a point"),
    },
    "rwa_check": {
        "t_max": Key(_as_float, 12.0),
        "dt": Key(_as_float, 0.01, "output spacing in 1/kappa"),
        "initial_cavity_nbar": Key(_as_float, 0.0, "thermal occupation of the initial cavity state"),
        "window_start": Key(_as_float, 1.0),
        "window_end": Key(_as_float, 10.0),
        "plateau_threshold": Key(_as_float, 1e-3),
        "plateau_mode": Key(_choice("relative", "absolute"), "relative",
                            "relative: |d ln g2 / d(kappa t)|; absolute: |d g2 / d(kappa t)|"),
        "safety": Key(_as_float, 0.05),
        "steps_per_period": Key(_as_int, 40),
        "steady_check": Key(_as_bool, False, "also solve for the steady state"),
    },
    "phase_sweep": {
        "phi_min": Key(_as_float, 0.0),
        "phi_max": Key(_as_float, 2 * math.pi),
        "points": Key(_as_int, 13),
        "leak_tol": Key(_as_float, 1e-3),
    },
    "cat_wigner": {
        "kappa_over_omega_m": Key(_as_floats, [3.16e-5], "one panel row per value"),
        "gamma_over_kappa": Key(_as_float, 1e-2),
        "g0_over_omega_m": Key(_as_floats, [1.26e-4, 1.03e-4, 0.89e-4]),
        "alpha": Key(_as_float, 2.0),
        "beta": Key(_as_float, 2.0),
        "variants": Key(_as_words, ["matched", "vacuum", "lossless"]),
        "grid_half_width": Key(_as_float, 4.0),
        "grid_points": Key(_as_int, 121),
        "write_grids": Key(_as_bool, True),
        "safety": Key(_as_float, 3.0),
        "steps_per_period": Key(_as_int, 200),
    },
    "custom": {
        "mode": Key(_choice("steady", "evolve"), "steady"),
        "t_max": Key(_as_float, 10.0),
        "dt": Key(_as_float, 0.1),
        "include_h_nr": Key(_as_bool, False),
        "initial_cavity_nbar": Key(_as_float, 0.0),
    },
}

DEFAULT_DIMS = {
    "param_map": (None, None),
    "blockade_sweep": (4, 24),
    "rwa_check": (4, 10),
    "phase_sweep": (4, 24),
    "cat_wigner": (25, 15),
    "custom": (4, 12),
}

_SCENARIO_PARAM_DEFAULTS = {
    "cat_wigner": {"eps_p": 0.0},
}


def schema(section: str) -> dict[str, Key]:
    if section == "run":
        return _RUN
    if section == "params":
        return _PARAMS
    if section in _SCENARIO_KEYS:
        return _SCENARIO_KEYS[section]
    raise KeyError(section)


@dataclass
class RawConfig:
    """Parsed text: ``values[section][key] = (raw string, line number)``."""

    values: dict[str, dict[str, tuple[str, int]]] = field(default_factory=dict)
    source: str = "<string>"
    sections: dict[str, int] = field(default_factory=dict)
    from_text: bool = True


def parse_text(text: str, source: str = "<string>") -> RawConfig:
    raw = RawConfig(source=source)
    section: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigParse(f"{source}:{lineno}: malformed section header {stripped!r}",
                                  line=lineno)
            section = stripped[1:-1].strip()
            try:
                schema(section)
            except KeyError:
                raise ConfigParse(f"{source}:{lineno}: unknown section [{section}]",
                                  key=section, line=lineno) from None
            raw.values.setdefault(section, {})
            raw.sections.setdefault(section, lineno)
            continue
        if "=" not in stripped:
            raise ConfigParse(f"{source}:{lineno}: expected 'key = value', got {stripped!r}",
                              line=lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if section is None:
            raise ConfigParse(f"{source}:{lineno}: key {key!r} appears before any [section]",
                              key=key, line=lineno)
        if key not in schema(section):
            raise ConfigParse(f"{source}:{lineno}: unknown key {key!r} in [{section}]",
                              key=key, line=lineno)
        if key in raw.values[section]:
            prev = raw.values[section][key][1]
            raise ConfigParse(f"{source}:{lineno}: key {key!r} already set on line {prev}",
                              key=key, line=lineno)
        raw.values[section][key] = (value, lineno)
    return raw


def parse_file(path) -> RawConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        from ..errors import IOFailure
        raise IOFailure(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, source=str(path))


@dataclass
class ScenarioConfig:
    """Fully resolved configuration of one run."""

    scenario: str
    run: dict[str, Any]
    params: dict[str, Any]
    options: dict[str, Any]
    defaults_used: list[str] = field(default_factory=list)

    @property
    def cavity_dim(self) -> Optional[int]:
        return self.run["cavity_dim"]

    @property
    def mech_dim(self) -> Optional[int]:
        return self.run["mech_dim"]

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "run": dict(self.run), "params": dict(self.params),
                self.scenario: dict(self.options), "defaults_used": list(self.defaults_used)}

    def to_text(self) -> str:
        """Config file text that resolves to this configuration."""
        lines = ["[run]", f"scenario = {self.scenario}"]
        for k, v in self.run.items():
            if k != "scenario" and v is not None:
                lines.append(f"{k} = {_fmt(v)}")
        lines.append("")
        lines.append("[params]")
        for k, v in self.params.items():
            # delta is derived from lambda once resolved
            if v is not None and k != "delta":
                lines.append(f"{k} = {_fmt(v)}")
        lines.append("")
        lines.append(f"[{self.scenario}]")
        for k, v in self.options.items():
            lines.append(f"{k} = {_fmt(v)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _convert(section: str, key: str, raw: tuple[str, int], source: str):
    text, lineno = raw
    spec = schema(section)[key]
    try:
        return spec.conv(text)
    except (ValueError, SyntaxError, TypeError, ZeroDivisionError) as exc:
        kind = getattr(spec.conv, "__name__", "value").lstrip("_").replace("as_", "")
        raise ConfigParse(f"{source}:{lineno}: cannot read {key!r} = {text!r} as {kind}"
                          f" ({exc})", key=key, line=lineno) from None


_ALIASES = {"blockade": "blockade_sweep", "rwa": "rwa_check", "phase": "phase_sweep",
            "cat": "cat_wigner"}


def _canonical(name: str) -> str:
    name = name.strip().replace("-", "_")
    return _ALIASES.get(name, name)


def resolve(raw: RawConfig, scenario: Optional[str] = None,
            overrides: Optional[dict[str, Any]] = None) -> ScenarioConfig:
    """Fill defaults and convert values; ``scenario`` overrides ``[run] scenario``."""
    vals = raw.values
    run_raw = vals.get("run", {})
    if "scenario" in run_raw:
        named, line = run_raw["scenario"][0].strip(), run_raw["scenario"][1]
    elif raw.from_text:
        line = raw.sections.get("run", 1)
        raise ConfigParse(f"{raw.source}:{line}: missing required key 'scenario' in [run]",
                          key="scenario", line=line)
    else:
        named, line = None, 0
    if named is not None and scenario is not None and _canonical(named) != _canonical(scenario):
        raise ConfigParse(f"{raw.source}:{line}: config is for scenario {named!r}, "
                          f"not {scenario!r}", key="scenario", line=line)
    scenario = _canonical(scenario if scenario is not None else named or "")
    if scenario not in SCENARIOS:
        raise UnknownScenario(f"unknown scenario {scenario!r} (line {line}); expected one of "
                              + ", ".join(SCENARIOS))
    for sec in vals:
        if sec in _SCENARIO_KEYS and sec != scenario:
            line = raw.sections.get(sec, 0)
            raise ConfigParse(f"{raw.source}:{line}: section [{sec}] does not apply to "
                              f"scenario {scenario!r}", key=sec, line=line)

    defaults_used: list[str] = []

    def fill(section: str, base: dict[str, Any]) -> dict[str, Any]:
        out = {}
        given = vals.get(section, {})
        for key, spec in schema(section).items():
            if key in given:
                out[key] = _convert(section, key, given[key], raw.source)
            else:
                out[key] = copy.deepcopy(base.get(key, spec.default))
                defaults_used.append(f"{section}.{key}")
        return out

    run = fill("run", {"cavity_dim": DEFAULT_DIMS[scenario][0],
                       "mech_dim": DEFAULT_DIMS[scenario][1]})
    run["scenario"] = scenario
    defaults_used.remove("run.scenario") if "run.scenario" in defaults_used else None
    params = fill("params", _SCENARIO_PARAM_DEFAULTS.get(scenario, {}))
    pgiven = vals.get("params", {})
    if "lambda" in pgiven and "delta" in pgiven:
        raise ConfigParse(f"{raw.source}:{pgiven['delta'][1]}: give either 'lambda' or "
                          f"'delta', not both", key="delta", line=pgiven["delta"][1])
    if params["lambda"] is None:
        params["lambda"] = params["delta_m"] - params["delta"]
    params["delta"] = params["delta_m"] - params["lambda"]
    options = fill(scenario, {})

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        run[key] = value
        tag = f"run.{key}"
        if tag in defaults_used:
            defaults_used.remove(tag)
    _validate(scenario, run, options, raw.source)
    return ScenarioConfig(scenario, run, params, options, defaults_used)


def _validate(scenario: str, run: dict, options: dict, source: str) -> None:
    for key in ("cavity_dim", "mech_dim"):
        v = run.get(key)
        if v is not None and v < 2:
            raise ConfigParse(f"{source}: {key} must be >= 2, got {v}", key=key, line=0)
    if run["threads"] < 0:
        raise ConfigParse(f"{source}: threads must be >= 0", key="threads", line=0)
    if scenario == "cat_wigner":
        bad = [v for v in options["variants"] if v not in ("matched", "vacuum", "lossless")]
        if bad:
            raise ConfigParse(f"{source}: unknown cat variant(s) {', '.join(bad)}",
                              key="variants", line=0)
    for key, v in options.items():
        if key.endswith("points") and v < 1:
            raise ConfigParse(f"{source}: {key} must be >= 1, got {v}", key=key, line=0)


def load(path=None, text: Optional[str] = None, scenario: Optional[str] = None,
         overrides: Optional[dict[str, Any]] = None) -> ScenarioConfig:
    """Parse and resolve a config file (or text); with neither, use pure defaults."""
    if path is not None:
        raw = parse_file(path)
    elif text is not None:
        raw = parse_text(text)
    else:
        raw = RawConfig(source="<defaults>", from_text=False)
    return resolve(raw, scenario=scenario, overrides=overrides)
