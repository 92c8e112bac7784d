"""Scenario/import configuration in INI-style key-value text.

Example::

    [scenario]
    target_res_share = 0.5
    alpha_mean = 5.0
    alpha_std = 1.0
    rng_seed = 0
    homes_per_mw = 800

    [emission_factors]      ; kg CO2e/MWh per fuel, overrides the case
    coal = 1000
    gas = 500

    [import]
    load_value = 20
    blocks_per_generator = 3
    default_fuel = gas
    honor_pmin = false

    [fuel_classes]
    nuclear = green
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .caseio import ImportOptions
from .exceptions import CaseFormatError
from .scenario import ScenarioConfig

_SCENARIO_KEYS = {"target_res_share": float, "alpha_mean": float, "alpha_std": float,
                  "rng_seed": int, "homes_per_mw": float}
_IMPORT_KEYS = {"load_value": float, "blocks_per_generator": int, "default_fuel": str,
                "honor_pmin": "bool", "coordinates_path": str}


def load_config(path) -> tuple[ScenarioConfig, ImportOptions]:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise CaseFormatError(f"cannot read config: {exc.strerror or exc}", path=path) from None
    except configparser.Error as exc:
        raise CaseFormatError(str(exc).splitlines()[0], path=path, line=getattr(exc, "lineno", None)) from None

    known = {"scenario", "emission_factors", "import", "fuel_classes"}
    for section in parser.sections():
        if section not in known:
            raise CaseFormatError("unknown section", path=path, field=f"[{section}]")

    def convert(section, key, kind):
        field = f"[{section}] {key}"
        try:
            if kind == "bool":
                return parser.getboolean(section, key)
            return kind(parser.get(section, key))
        except ValueError as exc:
            raise CaseFormatError(str(exc), path=path, field=field) from None

    scen_kwargs = {}
    if parser.has_section("scenario"):
        for key in parser.options("scenario"):
            if key not in _SCENARIO_KEYS:
                raise CaseFormatError("unknown key", path=path, field=f"[scenario] {key}")
            scen_kwargs[key] = convert("scenario", key, _SCENARIO_KEYS[key])
    if parser.has_section("emission_factors"):
        scen_kwargs["emission_factors"] = {k: convert("emission_factors", k, float)
                                           for k in parser.options("emission_factors")}
    try:
        config = ScenarioConfig(**scen_kwargs)
    except ValueError as exc:
        raise CaseFormatError(str(exc), path=path, field="[scenario]") from None

    options = ImportOptions()
    if parser.has_section("import"):
        for key in parser.options("import"):
            if key not in _IMPORT_KEYS:
                raise CaseFormatError("unknown key", path=path, field=f"[import] {key}")
            setattr(options, key, convert("import", key, _IMPORT_KEYS[key]))
    if config.emission_factors:
        options.emission_factors.update(config.emission_factors)
    if parser.has_section("fuel_classes"):
        for key in parser.options("fuel_classes"):
            value = parser.get("fuel_classes", key).strip().lower()
            if value not in ("green", "black"):
                raise CaseFormatError("class must be green or black", path=path, field=f"[fuel_classes] {key}")
            options.fuel_classes[key] = value
    return config, options
