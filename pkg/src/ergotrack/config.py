"""Versioned INI experiment configs and the object builders behind them.

A config is a set of sections with typed keys; unknown sections or keys,
missing required fields and malformed values are rejected with the file
line that caused them.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .dynsys import (
    FULL_SHIFT,
    GOLDEN_MEAN,
    CircleRotation,
    ConfigurationError,
    CustomCost,
    FiberProduct,
    HammingOnLabels,
    IIDBinary,
    MarkovChain,
    NegLogDensity,
    NoisyLabelChannel,
    RotationGrid,
    RotationOrbit,
    SubshiftSFT,
    fixed_point_shift,
)

SCHEMA_VERSION = 1
KINDS = ("track", "joinlp", "quantid", "complexity", "mle", "acceptance")


def _number(text: str):
    t = text.strip()
    m = re.fullmatch(r"sqrt\((\d+)\)\s*/\s*(\d+)", t)
    if m:
        return math.sqrt(int(m.group(1))) / int(m.group(2))
    if "/" in t:
        return Fraction(t)
    return float(t)


def _matrix(text: str):
    return tuple(tuple(_number(v) for v in row.split(",")) for row in text.split(";"))


def _ints(text: str):
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _bool(text: str):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA = {
    "experiment": {"schema": int, "kind": str, "seed": int, "threads": int, "label": str},
    "reference": {"kind": str, "adjacency": _matrix, "symbol": int, "angle": _number,
                  "theta_step": str, "u_step": str, "refine": _bool},
    "source": {"kind": str, "p": _number, "transition": _matrix, "angle": _number, "u": _number,
               "flip": _number, "mean": _number},
    "cost": {"kind": str, "values": _matrix},
    "track": {"schedule": _ints, "resolution": int, "lp_level": int},
    "joinlp": {"k_max": int, "mode": str, "max_variables": int},
    "quantid": {"alpha": _number, "p": _number, "n": int, "schedule": _ints, "theta_step": str,
                "u_step": str, "u": _number, "refine": _bool},
    "complexity": {"n_max": int, "theta_points": int, "angle": _number},
    "mle": {"family": str, "grid_lo": float, "grid_hi": float, "grid_points": int, "schedule": _ints},
    "acceptance": {"criteria": _ints},
    "checks": {},
}
NUMERIC = {int, float, _number}
REQUIRED = {"track": ("reference", "source", "cost"), "joinlp": ("reference", "source", "cost"),
            "quantid": ("quantid",), "complexity": ("complexity",), "mle": ("mle", "source"),
            "acceptance": ()}
_CHECK_KEY = re.compile(r"[a-z_]+_(min|max)")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    sections: dict
    text: str = ""
    source_name: str = "<string>"
    lines: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    @property
    def threads(self) -> int:
        return int(self.get("experiment", "threads", 1))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def canonical(self) -> str:
        out = []
        for sec in sorted(self.sections):
            out.append(f"[{sec}]")
            for k in sorted(self.sections[sec]):
                out.append(f"{k} = {self.sections[sec][k]!r}")
        return "\n".join(out) + "\n"

    def with_value(self, dotted: str, raw: str, numeric_only: bool = False) -> "ExperimentConfig":
        """Copy with ``section.key`` set from a raw string, type-checked by the schema."""
        if "." not in dotted:
            raise ConfigurationError(f"field {dotted!r} must be written section.key")
        sec, key = dotted.split(".", 1)
        parser = _key_parser(sec, key, dotted)
        if numeric_only and parser not in NUMERIC and not sec == "checks":
            raise ConfigurationError(f"field {dotted!r} is not numeric")
        try:
            value = parser(str(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"field {dotted}: {exc}") from None
        sections = {s: dict(v) for s, v in self.sections.items()}
        sections.setdefault(sec, {})[key] = value
        seed = sections["experiment"]["seed"]
        return ExperimentConfig(self.kind, seed, sections, self.text, self.source_name, self.lines)


def _key_parser(section: str, key: str, where: str):
    if section not in SCHEMA:
        raise ConfigurationError(f"{where}: unknown section [{section}]; expected one of {sorted(SCHEMA)}")
    if section == "checks":
        if not _CHECK_KEY.fullmatch(key):
            raise ConfigurationError(f"{where}: check keys look like <metric>_min or <metric>_max")
        return float
    if key not in SCHEMA[section]:
        raise ConfigurationError(f"{where}: unknown key {key!r} in [{section}]; "
                                 f"allowed: {', '.join(sorted(SCHEMA[section]))}")
    return SCHEMA[section][key]


def _line_index(text: str) -> dict:
    lines, sec = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            sec = m.group(1).strip()
            lines[(sec, None)] = no
        elif sec and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            lines[(sec, key)] = no
    return lines


def parse_config(text: str, source_name: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source_name)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source_name}: {exc}") from None
    lines = _line_index(text)

    def where(sec, key=None):
        no = lines.get((sec, key)) or lines.get((sec, None))
        return f"{source_name}:{no}" if no else source_name

    sections = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(f"{where(sec)}: unknown section [{sec}]; expected one of {sorted(SCHEMA)}")
        vals = {}
        for key, raw in cp.items(sec):
            parser = _key_parser(sec, key, where(sec, key))
            try:
                vals[key] = parser(raw)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigurationError(f"{where(sec, key)}: field {sec}.{key}: {exc}") from None
        sections[sec] = vals
    exp = sections.get("experiment")
    if exp is None:
        raise ConfigurationError(f"{source_name}: missing section [experiment]")
    for req in ("schema", "kind", "seed"):
        if req not in exp:
            raise ConfigurationError(f"{where('experiment')}: missing required field experiment.{req}")
    if exp["schema"] != SCHEMA_VERSION:
        raise ConfigurationError(f"{where('experiment', 'schema')}: schema {exp['schema']} "
                                 f"is not supported (expected {SCHEMA_VERSION})")
    kind = exp["kind"]
    if kind not in KINDS:
        raise ConfigurationError(f"{where('experiment', 'kind')}: unknown kind {kind!r}; "
                                 f"registered kinds: {', '.join(KINDS)}")
    if not 0 <= exp["seed"] < 2 ** 64:
        raise ConfigurationError(f"{where('experiment', 'seed')}: seed must be a 64-bit unsigned integer")
    for sec in REQUIRED[kind]:
        if sec not in sections:
            raise ConfigurationError(f"{source_name}: kind {kind!r} needs a [{sec}] section")
    for sec, vals in sections.items():
        for key, v in vals.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and key in (
                    "resolution", "n", "n_max", "k_max", "theta_points", "grid_points", "threads",
                    "max_variables") and v < 1:
                raise ConfigurationError(f"{where(sec, key)}: {sec}.{key} must be positive")
    return ExperimentConfig(kind, exp["seed"], sections, text, source_name, lines)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

def build_reference(sec: dict):
    kind = sec.get("kind")
    if kind == "golden_mean":
        return GOLDEN_MEAN
    if kind == "full_shift":
        return FULL_SHIFT
    if kind == "fixed_point":
        return fixed_point_shift(int(sec.get("symbol", 0)))
    if kind == "sft":
        if "adjacency" not in sec:
            raise ConfigurationError("reference.adjacency is required for kind sft")
        return SubshiftSFT(tuple(tuple(int(v) for v in row) for row in sec["adjacency"]))
    if kind == "rotation":
        return CircleRotation(sec.get("angle", 0.0))
    if kind == "fiber":
        grid = RotationGrid.from_spacing(sec.get("theta_step", "1e-4"), sec.get("u_step", "1e-3"))
        return FiberProduct(grid, refine=sec.get("refine", True))
    raise ConfigurationError(f"reference.kind {kind!r} is not one of golden_mean, full_shift, "
                             "fixed_point, sft, rotation, fiber")


def build_source(sec: dict, seed: int):
    kind = sec.get("kind")
    if kind == "iid":
        return IIDBinary(sec.get("p", 0.5), seed)
    if kind == "markov":
        if "transition" not in sec:
            raise ConfigurationError("source.transition is required for kind markov")
        return MarkovChain(sec["transition"], seed)
    if kind == "rotation":
        return RotationOrbit(sec.get("angle", 0.0), u=sec.get("u"), seed=seed)
    if kind == "noisy":
        return NoisyLabelChannel(RotationOrbit(sec.get("angle", 0.0), u=sec.get("u")), sec.get("flip", 0.0), seed)
    if kind == "gaussian":
        from .mle import GaussianIID
        return GaussianIID(float(sec.get("mean", 0.0)), seed)
    raise ConfigurationError(f"source.kind {kind!r} is not one of iid, markov, rotation, noisy, gaussian")


def build_cost(sec: dict, family=None):
    kind = sec.get("kind", "hamming")
    if kind == "hamming":
        return HammingOnLabels()
    if kind == "custom":
        return CustomCost(sec.get("values", ()))
    if kind == "neglog":
        if family is None:
            raise ConfigurationError("cost.kind neglog needs an [mle] family")
        return NegLogDensity(family)
    raise ConfigurationError(f"cost.kind {kind!r} is not one of hamming, custom, neglog")


def build_family(sec: dict):
    from .dynsys import uniform_grid
    from .mle import BernoulliFamily, GaussianLocation

    name = sec.get("family", "bernoulli")
    if name == "bernoulli":
        lo, hi, pts = sec.get("grid_lo", 0.0), sec.get("grid_hi", 1.0), sec.get("grid_points", 1001)
        return BernoulliFamily(uniform_grid(lo, hi, pts))
    if name == "gaussian":
        lo, hi, pts = sec.get("grid_lo", -2.0), sec.get("grid_hi", 2.0), sec.get("grid_points", 401)
        return GaussianLocation(uniform_grid(lo, hi, pts))
    raise ConfigurationError(f"mle.family {name!r} is not one of bernoulli, gaussian")
