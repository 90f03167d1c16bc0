"""Flat key=value experiment configuration with strict schemas.

A config file is line-oriented: one ``key = value`` pair per line,
``#`` starts a comment, blank lines ignored.  Every experiment family
declares the full set of keys it accepts together with defaults;
unknown or duplicate keys are rejected so that a config diff is always
meaningful.
"""

from __future__ import annotations

__all__ = ["ConfigError", "parse_config_text", "load_config", "EXPERIMENTS",
           "default_config"]


class ConfigError(ValueError):
    """Malformed or out-of-schema configuration."""


def _int(s: str) -> int:
    return int(s)


def _float(s: str) -> float:
    return float(s)


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip() != ""]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip() != ""]


def _str(s: str) -> str:
    return s


def _bool(s: str) -> bool:
    if s in ("1", "true", "yes"):
        return True
    if s in ("0", "false", "no"):
        return False
    raise ValueError(f"expected a boolean flag, got {s!r}")


_REQUIRED = object()

# keys shared by every experiment family
_COMMON = {
    "experiment": (_str, None),
    "seed": (_int, 0),
    "threads": (_int, 1),
}

# schema per experiment family: key -> (parser, default)
EXPERIMENTS: dict[str, dict] = {
    "voronoi": {
        "geometry.H": (_floats, [0.5, 0.5]),
        "run.trials": (_int, 1000),
        "run.generators_max": (_int, 20),
    },
    "covering": {
        "geometry.H": (_floats, [0.5, 0.5]),
        "run.trials": (_int, 1000),
        "run.points": (_ints, [50, 100, 200]),
        "run.adversarial": (_bool, True),
    },
    "integral": {
        "geometry.H": (_floats, [0.5, 0.5]),
        "run.beta": (_floats, [1.0, 1.5]),
        "run.m": (_ints, [4, 16, 64]),
        "run.trials": (_int, 5),
        "run.resolution": (_int, 64),
    },
    "slnd": {
        "model.kind": (_str, "she-white"),
        "model.H": (_floats, [0.25, 0.5]),
        "model.beta": (_float, 1.0),
        "model.N": (_int, 1),
        "domain.lo": (_floats, [1.0, -1.0]),
        "domain.hi": (_floats, [2.0, 1.0]),
        "run.configs": (_int, 1000),
        "run.n_max": (_int, 6),
    },
    "localtime": {
        "model.kind": (_str, "fbm"),
        "model.H": (_floats, [0.5]),
        "run.replicates": (_int, 1000),
        "run.grid": (_int, 4096),
        "run.bin_width": (_float, 0.02),
        "run.level": (_float, 0.0),
        # the sharp moment-scaling rate needs the level to equal the field
        # value at the ball center; the default pins both at zero
        "run.center": (_float, 0.0),
        "run.radii": (_floats, [0.25, 0.176776695296636881, 0.125,
                                0.0883883476483184405, 0.0625]),
        "run.moment_orders": (_ints, [1, 2]),
    },
    "levelset": {
        "model.kind": (_str, "fbm"),
        "model.H": (_floats, [0.5]),
        "run.replicates": (_int, 100),
        "run.grid": (_int, 16384),
        "run.level": (_float, 0.0),
        "run.orders": (_ints, [1, 2, 3, 4, 5, 6]),
    },
    "she-verify": {
        "model.beta": (_float, 1.0),
        "model.N": (_int, 1),
        "run.lag_lo": (_float, 10.0 ** -2.5),
        "run.lag_hi": (_float, 10.0 ** -0.5),
        "run.n_lags": (_int, 9),
    },
}


def parse_config_text(text: str, experiment: str) -> dict:
    """Parse and validate config text against one experiment's schema.

    Returns the fully defaulted, typed config dict (string keys).
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"expected one of {sorted(EXPERIMENTS)}")
    schema = dict(_COMMON)
    schema.update(EXPERIMENTS[experiment])
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} for "
                              f"experiment {experiment!r}")
        raw[key] = value

    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config names experiment {raw['experiment']!r}, "
                          f"but {experiment!r} was requested")

    out: dict = {"experiment": experiment}
    for key, (parser, default) in schema.items():
        if key == "experiment":
            continue
        if key in raw:
            try:
                out[key] = parser(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            out[key] = default
    return out


def load_config(path: str, experiment: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), experiment)


def default_config(experiment: str) -> dict:
    """The fully defaulted config for an experiment family."""
    return parse_config_text("", experiment)


def config_echo(cfg: dict) -> dict:
    """JSON-serializable echo of a parsed config (lists kept as lists)."""
    return {k: v for k, v in sorted(cfg.items())}
