"""JSON encodings for matrices, factorizations, and solver objects.

Matrices are stored row major as {"rows": p, "cols": q, "data": [[...]]};
complex entries are two-element [re, im] lists. NaN and infinity are rejected
on both paths. All loaders accept either a path or an already-parsed dict.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .factors import PsdFactorization, make_factorization
from .geometry import Ellipse

_FIELDS = ("real", "hermitian")


def _entry_out(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        re, im = float(np.real(x)), float(np.imag(x))
        if im == 0.0:
            return re
        return [re, im]
    return float(x)


def _entry_in(x, where):
    if isinstance(x, (int, float)):
        v = float(x)
        if not math.isfinite(v):
            raise InputError(f"{where}: entries must be finite")
        return v
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        re, im = float(x[0]), float(x[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            raise InputError(f"{where}: entries must be finite")
        return complex(re, im)
    raise InputError(f"{where}: entries must be numbers or [re, im] pairs")


def encode_matrix(m) -> dict:
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise InputError("only two dimensional arrays are encoded")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise InputError("matrix entries must be finite")
    data = [[_entry_out(x) for x in row] for row in arr]
    return {"rows": int(arr.shape[0]), "cols": int(arr.shape[1]), "data": data}


def decode_matrix(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= set(obj):
        raise InputError(f"{where}: expected keys rows, cols, data")
    p, q = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if not isinstance(data, list) or len(data) != p:
        raise InputError(f"{where}: data must have {p} rows")
    out = []
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != q:
            raise InputError(f"{where}: row {i} must have {q} entries")
        out.append([_entry_in(x, where) for x in row])
    if p == 0 or q == 0:
        return np.zeros((p, q))
    arr = np.array(out)
    if arr.dtype == object:
        raise InputError(f"{where}: entries must be numbers or [re, im] pairs")
    return arr


def encode_factorization(f: PsdFactorization) -> dict:
    return {
        "k": f.k,
        "field": f.field,
        "row_factors": [encode_matrix(a) for a in f.row_factors],
        "col_factors": [encode_matrix(b) for b in f.col_factors],
    }


def decode_factorization(obj) -> PsdFactorization:
    if not isinstance(obj, dict) or not {"row_factors", "col_factors"} <= set(obj):
        raise InputError("factorization: expected keys row_factors, col_factors")
    field = obj.get("field")
    if field is not None and field not in _FIELDS:
        raise InputError(f"factorization: field must be one of {_FIELDS}")
    rows = [decode_matrix(a, "row factor") for a in obj["row_factors"]]
    cols = [decode_matrix(b, "col factor") for b in obj["col_factors"]]
    return make_factorization(rows, cols, field=field)


def encode_ellipse(e: Ellipse) -> dict:
    return {
        "theta": encode_matrix(e.theta),
        "multipliers": [float(x) for x in e.multipliers],
    }


def decode_ellipse(obj) -> Ellipse:
    if not isinstance(obj, dict) or not {"theta", "multipliers"} <= set(obj):
        raise InputError("ellipse: expected keys theta, multipliers")
    theta = decode_matrix(obj["theta"], "ellipse theta")
    mults = [float(x) for x in obj["multipliers"]]
    if any(not math.isfinite(x) for x in mults):
        raise InputError("ellipse: multipliers must be finite")
    return Ellipse(theta, tuple(mults))


def encode_protocol(pr) -> dict:
    return {
        "k": pr.k,
        "alice": [encode_matrix(e) for e in pr.alice.elements],
        "bob": [encode_matrix(e) for e in pr.bob.elements],
        "rho": encode_matrix(pr.rho),
    }


def decode_protocol(obj):
    from .quantum import CorrelationProtocol, Povm

    if not isinstance(obj, dict) or not {"k", "alice", "bob", "rho"} <= set(obj):
        raise InputError("protocol: expected keys k, alice, bob, rho")
    k = int(obj["k"])
    alice = Povm([decode_matrix(e, "alice element") for e in obj["alice"]])
    bob = Povm([decode_matrix(e, "bob element") for e in obj["bob"]])
    rho = decode_matrix(obj["rho"], "state")
    return CorrelationProtocol(k, alice, bob, rho)


def encode_gram(g) -> dict:
    return {"k": g.k, "factors": [encode_matrix(a) for a in g.factors]}


def decode_gram(obj):
    from .cpsd import SymmetricGram

    if not isinstance(obj, dict) or "factors" not in obj:
        raise InputError("gram: expected key factors")
    return SymmetricGram([decode_matrix(a, "gram factor") for a in obj["factors"]])


def encode_problem(pb) -> dict:
    return {
        "n": pb.n,
        "blocks": [[encode_matrix(g) for g in blk] for blk in pb.blocks],
        "c": None if pb.c is None else [float(x) for x in pb.c],
        "eq_a": None if pb.eq_a is None else encode_matrix(pb.eq_a),
        "eq_d": None if pb.eq_d is None else [float(x) for x in pb.eq_d],
    }


def decode_problem(obj):
    from .sdp import SdpProblem

    if not isinstance(obj, dict) or not {"n", "blocks"} <= set(obj):
        raise InputError("problem: expected keys n, blocks")
    n = int(obj["n"])
    blocks = [[decode_matrix(g, "block term") for g in blk] for blk in obj["blocks"]]
    c = obj.get("c")
    eq_a = obj.get("eq_a")
    eq_d = obj.get("eq_d")
    return SdpProblem(
        n,
        blocks,
        c=None if c is None else np.array([float(x) for x in c]),
        eq_a=None if eq_a is None else decode_matrix(eq_a, "eq_a"),
        eq_d=None if eq_d is None else np.array([float(x) for x in eq_d]),
    )


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}")


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_matrix(path) -> np.ndarray:
    return decode_matrix(load_json(path), where=str(path))


def save_matrix(m, path) -> None:
    dump_json(encode_matrix(m), path)
