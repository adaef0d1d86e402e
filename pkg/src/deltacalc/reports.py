"""Report containers and JSON encoding shared by the numeric modules."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .fock import FockMatrix, max_norm
from .opalg import AntiNormalPoly, NormalPoly, to_records


def jsonable(x: Any) -> Any:
    """Convert library values into plain JSON types.

    Complex numbers become ``[re, im]``, polynomials their record lists and
    matrices ``{"dim", "entries"}`` with row-major ``[re, im]`` pairs.
    """
    if isinstance(x, (NormalPoly, AntiNormalPoly)):
        return to_records(x)
    if isinstance(x, FockMatrix):
        return matrix_json(x.entries)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return jsonable(x.tolist())
        return x.tolist()
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def matrix_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"dim": int(M.shape[0]), "entries": [[float(v.real), float(v.imag)] for v in M.ravel()]}


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, allow_nan=False)


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """Named term norms plus a residual.

    ``residual`` keeps the residual matrix so that callers can re-measure it
    on a smaller index range, e.g. the range shared by two truncations.
    """

    terms: dict
    residual_norm: float
    dim: int
    mode: str
    extras: dict = field(default_factory=dict)
    residual: FockMatrix | None = field(default=None, repr=False)

    def norm_upto(self, k: int) -> float:
        """Max-norm of the residual on indices ``0..k``."""
        if self.residual is None:
            return self.residual_norm
        return max_norm(self.residual, k)

    @property
    def exact_upto(self) -> int | None:
        return None if self.residual is None else self.residual.exact_upto

    def is_finite(self) -> bool:
        vals = [self.residual_norm, *self.terms.values()]
        return all(np.isfinite(v) for v in vals)

    def to_dict(self) -> dict:
        return {
            "terms": {k: float(v) for k, v in self.terms.items()},
            "residual_norm": float(self.residual_norm),
            "dim": int(self.dim),
            "mode": self.mode,
            "extras": jsonable(self.extras),
        }


def stable(x: float, y: float, rel: float = 0.1, atol: float = 1e-12) -> bool:
    """``True`` when two report values agree within ``rel`` relative difference."""
    return abs(x - y) <= rel * max(abs(x), abs(y)) + atol
