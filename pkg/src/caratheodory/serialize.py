"""JSON codecs.  Complex matrices are nested lists of ``[re, im]`` pairs.

Output of :func:`dumps` is deterministic (sorted keys, fixed separators,
shortest round-trip float repr), so decode followed by encode reproduces a
file byte for byte.
"""

from __future__ import annotations

import json

import numpy as np

from .herglotz import HerglotzMeasure
from .kernels import RationalFunction, SampleSet, TableFunction, constant
from .operators import DualityTag
from .realization import Realization


class FormatError(ValueError):
    """Malformed input; ``where`` names the offending field."""

    def __init__(self, message, where=""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def loads(text: str, where="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", where) from None


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read(), str(path))
    except OSError as e:
        raise FormatError(str(e), str(path)) from None


def enc_complex(z):
    return [float(np.real(z)), float(np.imag(z))]


def dec_complex(v, where):
    if _is_number(v):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v):
        return complex(v[0], v[1])
    raise FormatError("expected a number or an [re, im] pair", where)


def enc_matrix(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError("matrix expected")
    return [[enc_complex(x) for x in row] for row in A]


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def dec_matrix(v, where, shape=None):
    # a bare number or a single [re, im] pair is shorthand for a 1 x 1 matrix
    if _is_number(v) or (isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v)):
        return _check_shape(np.array([[dec_complex(v, where)]]), where, shape)
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise FormatError("expected a matrix as nested lists of [re, im] pairs", where)
    width = len(v[0])
    rows = []
    for i, r in enumerate(v):
        if len(r) != width:
            raise FormatError(f"row {i} has {len(r)} entries, expected {width}", where)
        rows.append([dec_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)])
    return _check_shape(np.array(rows, dtype=complex), where, shape)


def _check_shape(A, where, shape):
    if shape is not None and A.shape != shape:
        raise FormatError(f"expected shape {shape}, got {A.shape}", where)
    return A


def _field(d, key, where):
    if not isinstance(d, dict):
        raise FormatError("expected an object", where)
    if key not in d:
        raise FormatError(f"missing field '{key}'", where)
    return d[key]


def _tag(d, where):
    try:
        return DualityTag(d.get("tag", DualityTag.B_TO_BSTAR.value))
    except ValueError:
        raise FormatError(f"unknown duality tag {d.get('tag')!r}", where) from None


# ---------------------------------------------------------------------------
# realizations and measures


def realization_to_json(R: Realization) -> dict:
    return {"d": R.state_dim, "n": R.dim, "V": enc_matrix(R.V) if R.state_dim else [],
            "C": enc_matrix(R.C) if R.state_dim else [], "D": enc_matrix(R.D), "tag": R.tag.value}


def realization_from_json(d, where="realization") -> Realization:
    D = dec_matrix(_field(d, "D", where), f"{where}.D")
    n = D.shape[0]
    k = _field(d, "d", where)
    if not isinstance(k, int) or k < 0:
        raise FormatError("state dimension d must be a non-negative integer", f"{where}.d")
    if k == 0:
        V, C = np.zeros((0, 0), complex), np.zeros((0, n), complex)
    else:
        V = dec_matrix(_field(d, "V", where), f"{where}.V", (k, k))
        C = dec_matrix(_field(d, "C", where), f"{where}.C", (k, n))
    return Realization(V, C, D, _tag(d, where))


def measure_to_json(mu: HerglotzMeasure) -> dict:
    return {
        "dim": mu.dim,
        "atoms": [{"t": float(t), "mass": enc_matrix(m)} for t, m in zip(mu.atom_t, mu.atom_mass)],
        "density": [{"t0": float(a), "t1": float(b), "m": enc_matrix(m)}
                    for a, b, m in zip(mu.cell_t0, mu.cell_t1, mu.density)],
        "D": enc_matrix(mu.D),
        "tag": mu.tag.value,
    }


def measure_from_json(d, where="measure") -> HerglotzMeasure:
    n = _field(d, "dim", where)
    if not isinstance(n, int) or n < 1:
        raise FormatError("dim must be a positive integer", f"{where}.dim")
    atoms = _field(d, "atoms", where) if "atoms" in d else []
    dens = d.get("density", [])
    if not isinstance(atoms, list) or not isinstance(dens, list):
        raise FormatError("atoms and density must be lists", where)
    at = [float(_field(a, "t", f"{where}.atoms[{k}]")) for k, a in enumerate(atoms)]
    am = [dec_matrix(_field(a, "mass", f"{where}.atoms[{k}]"), f"{where}.atoms[{k}].mass", (n, n))
          for k, a in enumerate(atoms)]
    t0 = [float(_field(c, "t0", f"{where}.density[{k}]")) for k, c in enumerate(dens)]
    t1 = [float(_field(c, "t1", f"{where}.density[{k}]")) for k, c in enumerate(dens)]
    m = [dec_matrix(_field(c, "m", f"{where}.density[{k}]"), f"{where}.density[{k}].m", (n, n))
         for k, c in enumerate(dens)]
    D = dec_matrix(d["D"], f"{where}.D", (n, n)) if "D" in d else np.zeros((n, n))
    try:
        return HerglotzMeasure(np.array(at), np.array(am).reshape(-1, n, n), np.array(t0), np.array(t1),
                               np.array(m).reshape(-1, n, n), D, _tag(d, where))
    except ValueError as e:
        raise FormatError(str(e), where) from None


# ---------------------------------------------------------------------------
# function specs and sample sets


def function_from_json(d, where="function"):
    """Function spec: ``{"kind": "rational" | "constant" | "table" |
    "realization" | "measure", ...}``."""
    try:
        return _function_from_json(d, where)
    except FormatError:
        raise
    except ValueError as e:
        raise FormatError(str(e), where) from None


def _function_from_json(d, where):
    kind = _field(d, "kind", where)
    if kind == "constant":
        value = dec_matrix(_field(d, "value", where), f"{where}.value")
        if value.shape[0] != value.shape[1]:
            raise FormatError(f"constant must be a square matrix, got shape {value.shape}", f"{where}.value")
        return constant(value, _tag(d, where))
    if kind == "rational":
        num = [dec_matrix(c, f"{where}.numerator[{k}]") for k, c in enumerate(_field(d, "numerator", where))]
        den = [dec_matrix(c, f"{where}.denominator[{k}]") for k, c in enumerate(_field(d, "denominator", where))]
        if not num or not den:
            raise FormatError("numerator and denominator need at least one coefficient", where)
        try:
            n = num[0].shape[0]
            den = [c if c.shape == (n, n) else c[0, 0] * np.eye(n) for c in den]
            return RationalFunction(np.array(num), np.array(den), _tag(d, where))
        except ValueError as e:
            raise FormatError(str(e), where) from None
    if kind == "table":
        pts = [dec_complex(p, f"{where}.points[{k}]") for k, p in enumerate(_field(d, "points", where))]
        vals = [dec_matrix(v, f"{where}.values[{k}]") for k, v in enumerate(_field(d, "values", where))]
        default = dec_matrix(d["default"], f"{where}.default") if "default" in d else None
        try:
            return TableFunction(np.array(pts), np.array(vals), default, _tag(d, where))
        except ValueError as e:
            raise FormatError(str(e), where) from None
    if kind == "realization":
        return realization_from_json(d, where)
    if kind == "measure":
        return measure_from_json(d, where)
    raise FormatError(f"unknown function kind {kind!r}", f"{where}.kind")


def function_to_json(phi) -> dict:
    if isinstance(phi, Realization):
        return {"kind": "realization", **realization_to_json(phi)}
    if isinstance(phi, HerglotzMeasure):
        return {"kind": "measure", **measure_to_json(phi)}
    if isinstance(phi, TableFunction):
        out = {"kind": "table", "points": [enc_complex(p) for p in phi.points],
               "values": [enc_matrix(v) for v in phi.values], "tag": phi.tag.value}
        if phi.default is not None:
            out["default"] = enc_matrix(phi.default)
        return out
    if isinstance(phi, RationalFunction):
        return {"kind": "rational", "numerator": [enc_matrix(c) for c in phi.numerator],
                "denominator": [enc_matrix(c) for c in phi.denominator], "tag": phi.tag.value}
    raise TypeError(f"cannot serialize {type(phi).__name__}")


def samples_from_json(d, where="samples") -> SampleSet:
    """``{"points": [...], "include_origin": bool}`` or, with values,
    ``{"dim": n, "samples": [{"z": .., "value": ..}]}``."""
    try:
        if "samples" in d:
            rows = _field(d, "samples", where)
            if not isinstance(rows, list) or not rows:
                raise FormatError("samples must be a non-empty list", f"{where}.samples")
            n = d.get("dim")
            pts = [dec_complex(_field(r, "z", f"{where}.samples[{k}]"), f"{where}.samples[{k}].z")
                   for k, r in enumerate(rows)]
            vals = [dec_matrix(_field(r, "value", f"{where}.samples[{k}]"), f"{where}.samples[{k}].value",
                               None if n is None else (n, n)) for k, r in enumerate(rows)]
            return SampleSet(np.array(pts), None, np.array(vals))
        pts = [dec_complex(p, f"{where}.points[{k}]") for k, p in enumerate(_field(d, "points", where))]
        return SampleSet.from_points(np.array(pts, dtype=complex), include_origin=bool(d.get("include_origin", False)))
    except FormatError:
        raise
    except ValueError as e:
        raise FormatError(str(e), where) from None


def samples_to_json(S: SampleSet) -> dict:
    if S.values is None:
        return {"points": [enc_complex(p) for p in S.points], "include_origin": S.include_origin}
    return {"dim": int(S.values.shape[1]),
            "samples": [{"z": enc_complex(p), "value": enc_matrix(v)} for p, v in zip(S.points, S.values)]}
