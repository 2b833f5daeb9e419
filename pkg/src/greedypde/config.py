"""Run configuration: line-oriented key=value files, presets, validation.

The config format is INI-like but hand-parsed so diagnostics can point at
exact line numbers: ``[section]`` headers, ``key = value`` lines, ``#``
comments.  Unknown sections or keys are rejected (no silent typos), and a
handful of cross-field invariants are enforced: the n sweep must be a
dyadic ladder, and the determinism flag only accepts true.
"""

from dataclasses import dataclass, field, fields, replace
from typing import List, Optional

from .uzawa import MAX_STEPS, penalty_parameter

__all__ = ["RunConfig", "ConfigError", "parse_config", "validate_config",
           "config_to_text", "PRESETS", "preset_config"]


class ConfigError(ValueError):
    """Invalid configuration; `diagnostics` lists line/field messages."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class RunConfig:
    """All parameters of one experiment, with spec'd defaults."""

    # problem
    dimension: int = 1
    a0: int = 0
    # solver
    k: int = 1
    n_list: tuple = (16, 32, 64, 128, 256)
    steps: int = 2
    delta_mode: str = "auto"          # "auto" or a literal float value
    delta_value: Optional[float] = None
    normalize_selection: bool = True
    include_boundary_mass: bool = True
    deterministic: bool = True        # seed-free determinism; always on
    # quadrature
    cells_per_axis: Optional[int] = None       # None -> per-d default
    gauss_points: Optional[int] = None
    boundary_panels: Optional[int] = None
    boundary_gauss: Optional[int] = None
    error_quadrature_refine: bool = False
    # dictionary
    n_omega: Optional[int] = None
    n_bias: Optional[int] = None
    bias_bound: Optional[float] = None          # None -> sup-norm + margin
    # output
    out_dir: str = "runs/latest"
    timing_in_csv: bool = False

    def resolved_delta(self):
        if self.delta_mode == "auto":
            return penalty_parameter(max(self.n_list), self.k, self.dimension)
        return self.delta_value

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["n_list"] = list(self.n_list)
        return d


def _parse_bool(raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_n_list(raw):
    return tuple(int(part) for part in raw.replace(" ", "").split(",") if part)


def _parse_opt_int(raw):
    return None if raw.strip().lower() in ("default", "auto") else int(raw)


def _parse_opt_float(raw):
    return None if raw.strip().lower() in ("default", "auto") else float(raw)


# (section, key) -> (RunConfig field, parser)
_SCHEMA = {
    ("problem", "dimension"): ("dimension", int),
    ("problem", "a0"): ("a0", int),
    ("solver", "k"): ("k", int),
    ("solver", "n_list"): ("n_list", _parse_n_list),
    ("solver", "steps"): ("steps", int),
    ("solver", "delta"): ("delta_mode", str),   # handled specially below
    ("solver", "normalize_selection"): ("normalize_selection", _parse_bool),
    ("solver", "include_boundary_mass"): ("include_boundary_mass", _parse_bool),
    ("solver", "deterministic"): ("deterministic", _parse_bool),
    ("quadrature", "cells_per_axis"): ("cells_per_axis", _parse_opt_int),
    ("quadrature", "gauss_points"): ("gauss_points", _parse_opt_int),
    ("quadrature", "boundary_panels"): ("boundary_panels", _parse_opt_int),
    ("quadrature", "boundary_gauss"): ("boundary_gauss", _parse_opt_int),
    ("quadrature", "error_refine"): ("error_quadrature_refine", _parse_bool),
    ("dictionary", "n_omega"): ("n_omega", _parse_opt_int),
    ("dictionary", "n_bias"): ("n_bias", _parse_opt_int),
    ("dictionary", "bias_bound"): ("bias_bound", _parse_opt_float),
    ("output", "dir"): ("out_dir", str),
    ("output", "timing_in_csv"): ("timing_in_csv", _parse_bool),
}

_SECTIONS = sorted({sec for sec, _ in _SCHEMA})


def parse_config(text, base=None):
    """Parse config text over a base RunConfig; raise ConfigError on issues."""
    cfg = base if base is not None else RunConfig()
    values = {}
    diagnostics = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                diagnostics.append(f"line {lineno}: unknown section "
                                   f"[{section}]")
                section = None
            continue
        if "=" not in line:
            diagnostics.append(f"line {lineno}: expected key = value")
            continue
        if section is None:
            diagnostics.append(f"line {lineno}: key outside any section")
            continue
        key, raw_value = (part.strip() for part in line.split("=", 1))
        spec = _SCHEMA.get((section, key.lower()))
        if spec is None:
            diagnostics.append(f"line {lineno}: unknown key "
                               f"{key!r} in section [{section}]")
            continue
        fname, parser = spec
        try:
            if fname == "delta_mode":
                if raw_value.strip().lower() == "auto":
                    values["delta_mode"] = "auto"
                    values["delta_value"] = None
                else:
                    values["delta_mode"] = "explicit"
                    values["delta_value"] = float(raw_value)
            else:
                values[fname] = parser(raw_value)
        except ValueError as exc:
            diagnostics.append(f"line {lineno}: field {key!r}: {exc}")
    if diagnostics:
        raise ConfigError(diagnostics)
    return validate_config(replace(cfg, **values))


def validate_config(cfg):
    """Check cross-field invariants; returns cfg or raises ConfigError."""
    diagnostics = []
    if cfg.dimension not in (1, 2, 3):
        diagnostics.append("field 'dimension': must be 1, 2 or 3")
    if cfg.a0 not in (0, 1):
        diagnostics.append("field 'a0': built-in problems need a0 in {0, 1}")
    if cfg.k < 1:
        diagnostics.append("field 'k': activation power must be >= 1")
    if not cfg.n_list:
        diagnostics.append("field 'n_list': must be nonempty")
    else:
        if any(n < 1 for n in cfg.n_list):
            diagnostics.append("field 'n_list': entries must be >= 1")
        for prev, cur in zip(cfg.n_list, cfg.n_list[1:]):
            if cur != 2 * prev:
                diagnostics.append(
                    f"field 'n_list': {cur} does not double {prev} "
                    "(rates need a dyadic ladder)")
                break
    if not 1 <= cfg.steps <= MAX_STEPS:
        diagnostics.append(f"field 'steps': must be in 1..{MAX_STEPS}")
    if cfg.delta_mode not in ("auto", "explicit"):
        diagnostics.append("field 'delta': must be 'auto' or a float")
    if cfg.delta_mode == "explicit" and (cfg.delta_value is None
                                         or cfg.delta_value <= 0):
        diagnostics.append("field 'delta': explicit value must be > 0")
    if not cfg.deterministic:
        diagnostics.append("field 'deterministic': only true is supported")
    if cfg.gauss_points is not None and not 1 <= cfg.gauss_points <= 5:
        diagnostics.append("field 'gauss_points': must be in 1..5")
    for name in ("cells_per_axis", "boundary_panels", "n_omega", "n_bias"):
        val = getattr(cfg, name)
        if val is not None and val < 1:
            diagnostics.append(f"field {name!r}: must be >= 1")
    if diagnostics:
        raise ConfigError(diagnostics)
    return cfg


def config_to_text(cfg):
    """Render a RunConfig as a parseable config file (round-trips)."""
    delta_line = ("auto" if cfg.delta_mode == "auto"
                  else repr(float(cfg.delta_value)))

    def opt(v):
        return "default" if v is None else str(v)

    return "\n".join([
        "[problem]",
        f"dimension = {cfg.dimension}",
        f"a0 = {cfg.a0}",
        "",
        "[solver]",
        f"k = {cfg.k}",
        f"n_list = {','.join(str(n) for n in cfg.n_list)}",
        f"steps = {cfg.steps}",
        f"delta = {delta_line}",
        f"normalize_selection = {str(cfg.normalize_selection).lower()}",
        f"include_boundary_mass = {str(cfg.include_boundary_mass).lower()}",
        f"deterministic = {str(cfg.deterministic).lower()}",
        "",
        "[quadrature]",
        f"cells_per_axis = {opt(cfg.cells_per_axis)}",
        f"gauss_points = {opt(cfg.gauss_points)}",
        f"boundary_panels = {opt(cfg.boundary_panels)}",
        f"boundary_gauss = {opt(cfg.boundary_gauss)}",
        f"error_refine = {str(cfg.error_quadrature_refine).lower()}",
        "",
        "[dictionary]",
        f"n_omega = {opt(cfg.n_omega)}",
        f"n_bias = {opt(cfg.n_bias)}",
        f"bias_bound = {opt(cfg.bias_bound)}",
        "",
        "[output]",
        f"dir = {cfg.out_dir}",
        f"timing_in_csv = {str(cfg.timing_in_csv).lower()}",
    ]) + "\n"


def _preset(d, a0, k, n_max=256):
    n_list = tuple(n for n in (16, 32, 64, 128, 256) if n <= n_max)
    return RunConfig(dimension=d, a0=a0, k=k, n_list=n_list)


#: One-command reproductions of the benchmark sweeps; 3D is capped at
#: n = 128 to stay at desk scale.
PRESETS = {
    "paper-1d-k1": _preset(1, 0, 1),
    "paper-1d-k1-a1": _preset(1, 1, 1),
    "paper-1d-k2": _preset(1, 0, 2),
    "paper-1d-k2-a1": _preset(1, 1, 2),
    "paper-2d-k1": _preset(2, 0, 1),
    "paper-2d-k1-a1": _preset(2, 1, 1),
    "paper-2d-k1-reduced": _preset(2, 0, 1, n_max=128),
    "paper-2d-k2": _preset(2, 0, 2),
    "paper-2d-k2-a1": _preset(2, 1, 2),
    "paper-3d-k1": _preset(3, 0, 1, n_max=128),
    "paper-3d-k1-a1": _preset(3, 1, 1, n_max=128),
    "paper-3d-k2": _preset(3, 0, 2, n_max=128),
    "paper-3d-k2-a1": _preset(3, 1, 2, n_max=128),
}


def preset_config(name):
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}")
