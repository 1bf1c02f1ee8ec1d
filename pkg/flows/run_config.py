"""TOML run configurations: parsing, validation and initial-curve construction."""

from __future__ import annotations

import json
import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.conf import settings

from curves.curve_files import read_curve
from curves.energy import FlowParams, natural_bc_residual
from curves.geometry import DiscreteCurve
from curves.samples import circle_arc, perturbed_line, straight_segment
from flows.flow import FlowConfig
from flows.serializers import DEFAULTS, DERIVED_DEFAULTS, RunConfigSerializer


logger = logging.getLogger(__name__)

SECTIONS = ("params", "flow", "initial", "output", "validation")

_LOCATION = re.compile(r"at line (\d+), column (\d+)")


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    def __init__(self, errors: dict[str, list[str]]):
        self.errors = errors
        super().__init__(
            "; ".join(f"{path}: {' '.join(messages)}" for path, messages in errors.items())
        )


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "line"
    bulge: float = 0.0
    amplitude: float = 0.0
    mode: int = 1
    extra_modes: int = 0
    seed: int = 0
    path: Path | None = None


@dataclass(frozen=True)
class OutputSpec:
    dir: Path
    snapshot_every: int = 100
    snapshot_pairs: bool = True
    svg: bool = True
    svg_snapshots: int = 6


@dataclass(frozen=True)
class Config:
    dim: int
    edges: int
    f_minus: tuple[float, ...]
    f_plus: tuple[float, ...]
    flow: FlowConfig
    initial: InitialSpec
    output: OutputSpec
    source: Path | None = None

    @property
    def params(self) -> FlowParams:
        return self.flow.params


def flatten_errors(errors, prefix: str = "") -> dict[str, list[str]]:
    """DRF error tree -> ``{"params.lambda": ["..."]}``."""

    flat: dict[str, list[str]] = {}
    if isinstance(errors, dict):
        for key, value in errors.items():
            if key == "non_field_errors":
                path = prefix or "config"
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            for sub_path, messages in flatten_errors(value, path).items():
                flat.setdefault(sub_path, []).extend(messages)
    elif isinstance(errors, list) and errors and all(isinstance(item, str) for item in errors):
        flat[prefix or "config"] = [str(item) for item in errors]
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if value:
                flat.update(flatten_errors(value, f"{prefix}[{index}]"))
    else:
        flat[prefix or "config"] = [str(errors)]
    return flat


def load_toml(path: str | Path) -> dict:
    source = Path(path)
    try:
        with source.open("rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        match = _LOCATION.search(str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise ConfigParseError(f"{source.name}: {exc}", line=line, column=column) from exc


def validate_config(raw: dict, source: Path | None = None) -> Config:
    data = dict(raw)
    for section in SECTIONS:
        data.setdefault(section, {})
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigValidationError(flatten_errors(serializer.errors))

    values = serializer.validated_data
    flow = values["flow"]
    params = values["params"]
    initial = values["initial"]
    output = values["output"]
    validation = values["validation"]
    zeta = params["zeta"] if params["zeta"] is not None else [0.0] * values["dim"]

    base = source.parent if source is not None else Path.cwd()
    path = Path(initial["path"]) if initial["path"] else None
    if path is not None and not path.is_absolute():
        path = base / path

    return Config(
        dim=values["dim"],
        edges=values["N"],
        f_minus=tuple(values["f_minus"]),
        f_plus=tuple(values["f_plus"]),
        flow=FlowConfig(
            params=FlowParams(lam=params["lam"], zeta=np.array(zeta)),
            integrator=flow["integrator"],
            velocity_mode=flow["velocity_mode"],
            dt_mode=flow["dt_mode"],
            dt=flow["dt"],
            safety=flow["safety"],
            t_end=flow["t_end"],
            max_steps=flow["max_steps"],
            stationarity_tol=flow["stationarity_tol"],
            redistribute_every=flow["redistribute_every"],
            h_min_factor=flow["h_min_factor"],
            validate_bc0=validation["validate_bc0"],
            bc0_tol=validation["bc0_tol"],
        ),
        initial=InitialSpec(
            kind=initial["kind"],
            bulge=initial["bulge"],
            amplitude=initial["amplitude"],
            mode=initial["mode"],
            extra_modes=initial["extra_modes"],
            seed=initial["seed"],
            path=path,
        ),
        output=OutputSpec(
            dir=Path(output["dir"]),
            snapshot_every=output["snapshot_every"],
            snapshot_pairs=output["snapshot_pairs"],
            svg=output["svg"],
            svg_snapshots=output["svg_snapshots"],
        ),
        source=source,
    )


def parse_config(path: str | Path) -> Config:
    source = Path(path)
    config = validate_config(load_toml(source), source=source)
    logger.debug("Loaded run configuration %s", source)
    return config


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    return repr(value)


def print_defaults() -> str:
    """The defaults table as a commented TOML document."""

    lines = [
        "# Required at the top level:",
        "# dim = 2",
        "# N = 64",
        "# f_minus = [0.0, 0.0]",
        "# f_plus = [1.0, 0.0]",
    ]
    for section, values in DEFAULTS.items():
        lines.extend(["", f"[{section}]"])
        for key, value in values.items():
            if value is None:
                note = DERIVED_DEFAULTS.get(f"{section}.{key}", "unset")
                lines.append(f"# {key}: {note}")
            else:
                lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def build_initial(config: Config) -> DiscreteCurve:
    spec = config.initial
    f_minus = np.array(config.f_minus)
    f_plus = np.array(config.f_plus)
    if spec.kind == "line":
        curve = straight_segment(f_minus, f_plus, config.edges)
    elif spec.kind == "arc":
        curve = circle_arc(f_minus, f_plus, spec.bulge, config.edges)
    elif spec.kind == "perturbed_line":
        curve = perturbed_line(
            f_minus,
            f_plus,
            config.edges,
            spec.amplitude,
            mode=spec.mode,
            extra_modes=spec.extra_modes,
            seed=spec.seed,
        )
    else:
        curve = _load_initial_file(config)

    if config.flow.validate_bc0:
        residuals = natural_bc_residual(curve, config.params)
        if max(residuals) > config.flow.bc0_tol:
            raise ConfigValidationError(
                {
                    "validation.bc0_tol": [
                        f"initial natural boundary residuals ({residuals[0]:.3e}, "
                        f"{residuals[1]:.3e}) exceed bc0_tol = {config.flow.bc0_tol:.3e}."
                    ]
                }
            )
    return curve


def _load_initial_file(config: Config) -> DiscreteCurve:
    curve = read_curve(config.initial.path)
    problems = []
    if curve.dim != config.dim:
        problems.append(f"file curve lives in R^{curve.dim}, dim = {config.dim}.")
    elif curve.edge_count != config.edges:
        problems.append(f"file curve has {curve.edge_count} edges, N = {config.edges}.")
    elif not (
        np.array_equal(curve.f_minus, config.f_minus)
        and np.array_equal(curve.f_plus, config.f_plus)
    ):
        problems.append("file curve endpoints differ from f_minus / f_plus.")
    if problems:
        raise ConfigValidationError({"initial.path": problems})
    return curve


def resolve_output_dir(config: Config) -> Path:
    """``CURVEFLOW_OUTPUT`` wins over ``output.dir``; relative dirs follow the config file."""

    override = getattr(settings, "CURVEFLOW_OUTPUT", "")
    if override:
        return Path(override)
    directory = config.output.dir
    if not directory.is_absolute() and config.source is not None:
        directory = config.source.parent / directory
    return directory
