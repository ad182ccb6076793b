"""JSON system configs: parsing, validation and canonical serialization.

A config describes the triple (box, maps, sub-shift) plus flags, numeric
settings and output options.  Numbers may be JSON numbers or short
arithmetic strings such as ``"1/3"`` or ``"sqrt(3)/6"``.
"""

from __future__ import annotations

import ast
import copy
import hashlib
import json
import math
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .maps import Box, ContractionMap, IfsSystem, MapFamily, NotAContractionError, BoxInvarianceError
from .symbolic import (
    CodedFinite,
    CodedTruncated,
    FactorCode,
    Full,
    GeneratorFamily,
    HigherBlock,
    OrbitClosure,
    PowerShift,
    Sft,
    Sofic,
    SymbolError,
    format_word,
    parse_word,
)

__all__ = [
    "ConfigError",
    "AffineMap",
    "SystemConfig",
    "FactorPairConfig",
    "load_config",
    "parse_config",
    "named_configs",
    "parse_number",
    "parse_subshift",
    "DEFAULT_NUMERIC",
]


class ConfigError(ValueError):
    pass


class AffineMap(NamedTuple):
    """Plain ``x -> matrix @ x + offset``; used for the conjugacy ``phi2``."""

    matrix: np.ndarray
    offset: np.ndarray


DEFAULT_NUMERIC = {
    "epsilon": 1e-4,
    "tol": 1e-3,
    "n_max": 60,
    "horizon": 20,
    "image_cap": 4096,
    "seed_cap": 1_000_000,
    "horizon_cap": 1000,
    "max_period": 8,
}

DEFAULT_OUTPUT = {"formats": ["csv", "json"], "ppm_size": 1024}

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}
_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin}
_CONSTS = {"pi": math.pi}


def parse_number(v) -> float:
    """A JSON number or an arithmetic string like ``"1/3"`` or ``"sqrt(3)/6"``."""
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if not isinstance(v, str):
        raise ConfigError(f"expected a number, got {v!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ConfigError(f"unsupported expression {v!r}")

    try:
        out = ev(ast.parse(v.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad number {v!r}: {exc}") from None
    if not math.isfinite(out):
        raise ConfigError(f"non-finite number {v!r}")
    return out


def _word(v) -> tuple[int, ...]:
    try:
        return parse_word(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad word {v!r}: {exc}") from None


def _word_out(w) -> str | list[int]:
    return format_word(w) if not w or max(w) < 10 else list(w)


def _need(rec: dict, key: str, where: str):
    if key not in rec:
        raise ConfigError(f"{where}: missing key {key!r}")
    return rec[key]


def parse_subshift(rec: dict, default_alphabet: int | None = None):
    if not isinstance(rec, dict):
        raise ConfigError("subshift must be an object")
    kind = _need(rec, "kind", "subshift")
    k = rec.get("alphabet", default_alphabet)
    try:
        if kind == "full":
            return Full(int(k))
        if kind == "sft":
            return Sft(int(k), tuple(_word(w) for w in _need(rec, "forbidden", "sft")))
        if kind == "sofic":
            edges = [(str(p), str(q), int(a)) for p, q, a in _need(rec, "edges", "sofic")]
            return Sofic.from_edges(int(k), edges, rec.get("vertices"), rec.get("initial"))
        if kind == "coded":
            return CodedFinite(int(k), tuple(_word(w) for w in _need(rec, "generators", "coded")))
        if kind == "coded_truncated":
            fams = tuple(
                GeneratorFamily(
                    _word(f.get("prefix", "")),
                    _word(f.get("repeat", "")),
                    _word(f.get("suffix", "")),
                    int(f.get("min_repeat", 0)),
                )
                for f in rec.get("families", [])
            )
            words = tuple(_word(w) for w in rec.get("words", []))
            return CodedTruncated(int(k), fams, int(_need(rec, "max_length", "coded_truncated")), words)
        if kind == "orbit_closure":
            return OrbitClosure(int(k), _word(rec.get("transient", "")), _word(_need(rec, "period", "orbit_closure")))
        if kind == "power":
            return PowerShift(parse_subshift(_need(rec, "base", "power")), int(_need(rec, "power", "power")))
        if kind == "higher_block":
            return HigherBlock(parse_subshift(_need(rec, "base", "higher_block")), int(_need(rec, "block", "higher_block")))
    except ConfigError:
        raise
    except (SymbolError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"subshift {kind!r}: {exc}") from None
    raise ConfigError(f"unknown subshift kind {kind!r}")


def _canonical_subshift(rec: dict) -> dict:
    """Normalized copy of a subshift record (words as strings, keys sorted on dump)."""
    out = dict(rec)
    for key in ("forbidden", "generators", "words"):
        if key in out:
            out[key] = [_word_out(_word(w)) for w in out[key]]
    for key in ("transient", "period"):
        if key in out:
            out[key] = _word_out(_word(out[key]))
    if "families" in out:
        out["families"] = [
            {
                "prefix": _word_out(_word(f.get("prefix", ""))),
                "repeat": _word_out(_word(f.get("repeat", ""))),
                "suffix": _word_out(_word(f.get("suffix", ""))),
                "min_repeat": int(f.get("min_repeat", 0)),
            }
            for f in out["families"]
        ]
    if "edges" in out:
        out["edges"] = [[str(p), str(q), int(a)] for p, q, a in out["edges"]]
    if "base" in out:
        out["base"] = _canonical_subshift(out["base"])
    return out


def _parse_map(rec: dict, d: int) -> ContractionMap:
    try:
        if "a" in rec:
            if d != 1:
                raise ConfigError("scalar map shorthand needs a 1-dimensional box")
            return ContractionMap.scalar(parse_number(rec["a"]), parse_number(rec.get("b", 0)))
        M = np.array([[parse_number(x) for x in row] for row in _need(rec, "matrix", "map")], dtype=float)
        b = np.array([parse_number(x) for x in rec.get("offset", [0] * d)], dtype=float)
        if M.shape != (d, d) or b.shape != (d,):
            raise ConfigError(f"map shapes {M.shape}/{b.shape} do not match dimension {d}")
        return ContractionMap(M, b)
    except NotAContractionError as exc:
        raise ConfigError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad map record {rec!r}: {exc}") from None


def _parse_affine(rec, d: int):
    """``phi2`` records: ``"identity"`` or ``{"matrix", "offset"}`` (not required to contract)."""
    if rec in (None, "identity"):
        return None
    M = np.array([[parse_number(x) for x in row] for row in rec["matrix"]], dtype=float)
    b = np.array([parse_number(x) for x in rec.get("offset", [0] * d)], dtype=float)
    if M.shape != (d, d) or b.shape != (d,):
        raise ConfigError(f"phi2 shapes {M.shape}/{b.shape} do not match dimension {d}")
    return AffineMap(M, b)


@dataclass
class SystemConfig:
    raw: dict
    name: str
    system: IfsSystem
    numeric: dict
    output: dict

    @property
    def eps(self) -> float:
        return float(self.numeric["epsilon"])

    @property
    def tol(self) -> float:
        return float(self.numeric["tol"])

    def canonical(self) -> dict:
        return canonical_dict(self.raw)

    def digest(self) -> str:
        return config_digest(self.raw)


@dataclass
class FactorPairConfig:
    raw: dict
    name: str
    source: SystemConfig
    target: SystemConfig
    code: FactorCode
    phi2: AffineMap | None
    numeric: dict
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))

    def canonical(self) -> dict:
        return canonical_dict(self.raw)

    def digest(self) -> str:
        return config_digest(self.raw)


def canonical_dict(raw: dict) -> dict:
    out = copy.deepcopy(raw)
    if out.get("kind") == "factor_pair":
        out["source"] = canonical_dict(out["source"])
        out["target"] = canonical_dict(out["target"])
        code = out["code"]
        code["table"] = {
            format_word(_word(k)) if "." not in str(k) else str(k): int(v)
            for k, v in code["table"].items()
        }
        return out
    if "subshift" in out:
        out["subshift"] = _canonical_subshift(out["subshift"])
    num = dict(DEFAULT_NUMERIC)
    num.update(out.get("numeric", {}))
    out["numeric"] = num
    outp = dict(DEFAULT_OUTPUT)
    outp.update(out.get("output", {}))
    out["output"] = outp
    flags = {"totally_invariant": False, "declared_rooted_in_fixed_point": False}
    flags.update(out.get("flags", {}))
    out["flags"] = flags
    return out


def config_digest(raw: dict) -> str:
    blob = json.dumps(canonical_dict(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _parse_system(raw: dict, name: str) -> SystemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    box_rec = _need(raw, "box", "config")
    try:
        box = Box(
            tuple(parse_number(v) for v in _need(box_rec, "lo", "box")),
            tuple(parse_number(v) for v in _need(box_rec, "hi", "box")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad box: {exc}") from None
    map_recs = _need(raw, "maps", "config")
    if not isinstance(map_recs, list) or not map_recs:
        raise ConfigError("maps must be a nonempty list")
    maps = MapFamily([_parse_map(m, box.dim) for m in map_recs])
    shift = parse_subshift(_need(raw, "subshift", "config"), default_alphabet=len(maps))
    flags = raw.get("flags", {})
    unknown = set(flags) - {"totally_invariant", "declared_rooted_in_fixed_point"}
    if unknown:
        raise ConfigError(f"unknown flags {sorted(unknown)}")
    try:
        system = IfsSystem(
            box,
            maps,
            shift,
            bool(flags.get("totally_invariant", False)),
            bool(flags.get("declared_rooted_in_fixed_point", False)),
            name,
        )
    except (BoxInvarianceError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    numeric = dict(DEFAULT_NUMERIC)
    for k, v in raw.get("numeric", {}).items():
        if k not in DEFAULT_NUMERIC:
            raise ConfigError(f"unknown numeric setting {k!r}")
        numeric[k] = parse_number(v) if k in ("epsilon", "tol") else int(v)
    _check_numeric(numeric, box.dim)
    output = dict(DEFAULT_OUTPUT)
    output.update(raw.get("output", {}))
    return SystemConfig(raw, name, system, numeric, output)


def _check_numeric(numeric: dict, d: int):
    eps, tol = float(numeric["epsilon"]), float(numeric["tol"])
    if not eps > 0:
        raise ConfigError("epsilon must be positive")
    if tol < 2 * eps * math.sqrt(d) * (1 - 1e-12):
        raise ConfigError(f"tol={tol:g} must be >= 2*epsilon*sqrt(d)={2 * eps * math.sqrt(d):g}")
    if int(numeric["n_max"]) < 1:
        raise ConfigError("n_max must be >= 1")


def parse_config(raw: dict, name: str = ""):
    """Build a :class:`SystemConfig` or, for ``"kind": "factor_pair"``, a :class:`FactorPairConfig`."""
    name = raw.get("name", name) if isinstance(raw, dict) else name
    if isinstance(raw, dict) and raw.get("kind") == "factor_pair":
        src = _parse_system(_need(raw, "source", "factor_pair"), name + ":source")
        dst = _parse_system(_need(raw, "target", "factor_pair"), name + ":target")
        code_rec = _need(raw, "code", "factor_pair")
        try:
            code = FactorCode(
                int(code_rec.get("memory", 0)),
                int(code_rec.get("anticipation", 0)),
                {_word(k): int(v) for k, v in _need(code_rec, "table", "code").items()},
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad factor code: {exc}") from None
        numeric = dict(src.numeric)
        for k, v in raw.get("numeric", {}).items():
            numeric[k] = parse_number(v) if k in ("epsilon", "tol") else int(v)
        _check_numeric(numeric, src.system.dim)
        phi2 = _parse_affine(raw.get("phi2", "identity"), src.system.dim)
        return FactorPairConfig(raw, name, src, dst, code, phi2, numeric)
    return _parse_system(raw, name)


def named_configs() -> list[str]:
    root = resources.files("subshift_ifs") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(ref: str | Path):
    """Load a config from a path, or by name from the bundled examples."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
        name = path.stem
    else:
        res = resources.files("subshift_ifs") / "configs" / f"{ref}.json"
        if not res.is_file():
            raise ConfigError(f"no config file or bundled config named {str(ref)!r}")
        text = res.read_text(encoding="utf-8")
        name = str(ref)
    try:
        raw: Any = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(raw, name)
