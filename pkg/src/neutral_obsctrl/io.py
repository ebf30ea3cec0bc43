"""JSON system descriptions and report serialization."""

from __future__ import annotations

import enum
import json
from importlib import resources

import numpy as np

from .model import ConstantKernel, NeutralSystem, SampledKernel, ZeroKernel, validate_system

__all__ = [
    "SystemFormatError",
    "system_from_dict",
    "system_to_dict",
    "load_system",
    "dump_system",
    "load_fixture",
    "dumps_report",
    "SCHEMA",
]

SCHEMA = "neutral-obsctrl/1"


class SystemFormatError(ValueError):
    """The system description is malformed or dimensionally inconsistent."""


def _matrix(doc, key, shape=None):
    if key not in doc:
        raise SystemFormatError(f"missing field {key!r}")
    try:
        a = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SystemFormatError(f"field {key!r} is not a numeric array") from exc
    a = np.atleast_2d(a)
    if a.ndim != 2:
        raise SystemFormatError(f"field {key!r} must be a 2-D array")
    if shape is not None and a.shape != shape:
        raise SystemFormatError(f"field {key!r} has shape {a.shape}, expected {shape}")
    return a


def _kernel(entry, name):
    if entry is None or entry == "zero" or (isinstance(entry, dict) and "zero" in entry):
        return ZeroKernel()
    if not isinstance(entry, dict) or len(entry) != 1:
        raise SystemFormatError(f"kernel {name!r} must be tagged zero, constant or sampled")
    if "constant" in entry:
        return ConstantKernel(_matrix(entry, "constant"))
    if "sampled" in entry:
        body = entry["sampled"]
        try:
            N = int(body["N"])
            values = np.array(body["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFormatError(f"kernel {name!r}: sampled needs integer N and numeric values") from exc
        if values.shape[0] != N + 1:
            raise SystemFormatError(f"kernel {name!r}: expected N+1 = {N + 1} samples, got {values.shape[0]}")
        return SampledKernel(values)
    raise SystemFormatError(f"kernel {name!r}: unknown tag {next(iter(entry))!r}")


def system_from_dict(doc):
    """Build and validate a :class:`NeutralSystem` from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise SystemFormatError("system description must be a JSON object")
    try:
        n, m, p = int(doc["n"]), int(doc["m"]), int(doc["p"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemFormatError("fields n, m, p must be present integers") from exc
    sys = NeutralSystem(
        A_minus1=_matrix(doc, "A_minus1", (n, n)),
        B=_matrix(doc, "B", (n, m)),
        C=_matrix(doc, "C", (p, n)),
        A2=_kernel(doc.get("A2"), "A2"),
        A3=_kernel(doc.get("A3"), "A3"),
        D1=_matrix(doc, "D1", (n, n)) if doc.get("D1") is not None else None,
        output_kind=doc.get("output_kind", "delayed"),
    )
    problems = validate_system(sys)
    if problems:
        raise SystemFormatError("; ".join(problems))
    return sys


def _kernel_to_dict(k):
    if isinstance(k, ConstantKernel):
        return {"constant": k.matrix.tolist()}
    if isinstance(k, SampledKernel):
        return {"sampled": {"N": k.N, "values": k.values.tolist()}}
    return "zero"


def system_to_dict(sys):
    doc = {
        "n": sys.n,
        "m": sys.m,
        "p": sys.p,
        "A_minus1": sys.A_minus1.tolist(),
        "A2": _kernel_to_dict(sys.A2),
        "A3": _kernel_to_dict(sys.A3),
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "output_kind": sys.output_kind.value,
    }
    if sys.uses_d1:
        doc["D1"] = sys.D1.tolist()
    return doc


def load_system(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"{path}: invalid JSON ({exc})") from exc
    return system_from_dict(doc)


def dump_system(sys, path):
    with open(path, "w") as fh:
        json.dump(system_to_dict(sys), fh, indent=2)
        fh.write("\n")


def load_fixture(name):
    """Load a bundled fixture (``example1``, ``example1_scalar``, ``example2``)."""
    ref = resources.files("neutral_obsctrl") / "fixtures" / f"{name}.json"
    return system_from_dict(json.loads(ref.read_text()))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not np.isfinite(obj):
            return json.dumps(str(obj))
        return format(obj, ".17g")
    return json.dumps(obj)


def dumps_report(report):
    """Deterministic JSON text: ``schema`` first, floats at 17 significant digits."""
    body = {"schema": SCHEMA}
    body.update(_plain(report))
    return _encode(body, 2, 0) + "\n"
