"""JSON/CSV input and output formats.

Complex scalars are stored as [re, im] pairs. Backends, morphisms, cell
complexes, representations, determinant-line elements, verdicts, and
torsion reports all round-trip through plain JSON so the command line
pipeline stays diff-friendly.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .backends import (
    BackendKind,
    CategoryBackend,
    HObject,
    Morphism,
    expand_group_matrix,
    family_backend,
    group_backend,
    matrix_backend,
)
from .cellular import (
    CellComplex,
    PiSpec,
    Representation,
    circle_regular_representation,
    finite_pi,
    infinite_cyclic_pi,
    matrix_representation,
    regular_representation,
)
from .detline import DetLineElement
from .errors import InputValidationError
from .spectral import DetClassVerdict, SpectralDensity
from .torsion import TorsionReport


def _c2j(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _j2c(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(v[0], v[1])


def _matrix_to_json(m: np.ndarray) -> list:
    return [[_c2j(z) for z in row] for row in np.atleast_2d(m)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[_j2c(v) for v in row] for row in rows], dtype=complex)


def _finite_number(x: float):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return float(x)


# ---------------------------------------------------------------------------
# backends and morphisms


def backend_to_json(b: CategoryBackend) -> dict:
    out = {"kind": b.kind.value, "scale": b.scale}
    if b.kind is BackendKind.FINITE_GROUP:
        out["group_table"] = np.asarray(b.group_table).tolist()
    if b.kind is BackendKind.FAMILY:
        out["samples"] = np.asarray(b.sample_points).tolist()
    return out


def backend_from_json(d: dict) -> CategoryBackend:
    kind = d.get("kind")
    scale = float(d.get("scale", 1.0))
    if kind == "Matrix":
        return matrix_backend(scale)
    if kind == "FiniteGroup":
        if "group_table" not in d:
            raise InputValidationError("FiniteGroup backend needs 'group_table'")
        return group_backend(d["group_table"], scale)
    if kind == "Family":
        if "samples" not in d:
            raise InputValidationError("Family backend needs 'samples'")
        return family_backend(d["samples"], scale)
    raise InputValidationError(f"unknown backend kind {kind!r}")


def morphism_to_json(m: Morphism) -> dict:
    b = m.backend
    out = {
        "backend": backend_to_json(b),
        "source_dims": list(m.source.dims),
        "target_dims": list(m.target.dims),
    }
    if b.kind is BackendKind.FAMILY:
        out["data"] = [_matrix_to_json(blk) for blk in m.blocks]
    elif b.kind is BackendKind.FINITE_GROUP:
        coeffs = m.group_ring_coefficients()
        out["data"] = [
            [[_c2j(z) for z in entry] for entry in row] for row in coeffs
        ]
        n = b.group_order
        out["source_dims"] = [m.source.dims[0] // n]
        out["target_dims"] = [m.target.dims[0] // n]
    else:
        out["data"] = _matrix_to_json(m.blocks[0])
    return out


def morphism_from_json(d: dict) -> Morphism:
    backend = backend_from_json(d["backend"])
    data = d["data"]
    if backend.kind is BackendKind.MATRIX:
        blk = _matrix_from_json(data)
        src = HObject(backend, (blk.shape[1],))
        tgt = HObject(backend, (blk.shape[0],))
        return Morphism(src, tgt, (blk,))
    if backend.kind is BackendKind.FINITE_GROUP:
        coeffs = np.array(
            [[[_j2c(v) for v in entry] for entry in row] for row in data],
            dtype=complex,
        )
        n = backend.group_order
        src = HObject(backend, (coeffs.shape[1] * n,))
        tgt = HObject(backend, (coeffs.shape[0] * n,))
        return Morphism(
            src, tgt, (expand_group_matrix(np.asarray(backend.group_table), coeffs),)
        )
    blocks = tuple(_matrix_from_json(blk) for blk in data)
    src = HObject(backend, tuple(b.shape[1] for b in blocks))
    tgt = HObject(backend, tuple(b.shape[0] for b in blocks))
    return Morphism(src, tgt, blocks)


# ---------------------------------------------------------------------------
# spectral output


def density_to_csv(density: SpectralDensity) -> str:
    lines = ["lambda,cumulative_mass"]
    if density.zero_mass > 0:
        lines.append(f"0.0,{float(density.zero_mass):.17g}")
    running = float(density.zero_mass)
    for lam, mass in zip(density.values, density.masses):
        running += float(mass)
        lines.append(f"{float(lam):.17g},{running:.17g}")
    return "\n".join(lines) + "\n"


def verdict_to_json(v: DetClassVerdict, ns: float | None = None) -> dict:
    return {
        "status": v.status,
        "log_integral": _finite_number(v.log_integral),
        "ns_exponent": _finite_number(ns),
        "ladder": [[eps, val] for eps, val in v.ladder],
        "below_floor": _finite_number(v.below_floor),
        "injective": bool(v.injective),
        "dense_image": bool(v.dense_image),
    }


def element_to_json(e: DetLineElement) -> dict:
    return {
        "frame": [
            {
                "label": frame.label,
                "exponent": int(exp),
                "dim_tau": frame.obj.dim_tau,
            }
            for frame, exp in e.word
        ],
        "log_coeff": _finite_number(e.log_coeff),
    }


def report_to_json(r: TorsionReport) -> dict:
    return {
        "epsilon": _finite_number(r.epsilon) if r.epsilon is not None else None,
        "log_rho_large": _finite_number(r.log_rho_large),
        "rho_small": element_to_json(r.rho_small),
        "combined": element_to_json(r.combined),
        "scalar_value": _finite_number(r.scalar_value)
        if r.scalar_value is not None
        else None,
        "detclass": [verdict_to_json(v) for v in r.detclass],
        "betti": [float(b) for b in r.betti],
        "checks": r.checks,
    }


# ---------------------------------------------------------------------------
# cell complexes and representations


def cell_complex_to_json(k: CellComplex) -> dict:
    return {
        "cells": [[int(d), cid] for cid, d in k.cells.items()],
        "boundaries": {
            cid: [
                [fid, [[int(tok), c if isinstance(c, int) else float(c)]
                       for tok, c in s]]
                for fid, s in faces
            ]
            for cid, faces in k.boundaries.items()
        },
        "pi": {"finite": [list(r) for r in k.pi.table]}
        if k.pi.finite
        else {"infinite_cyclic": True},
        "chi": k.euler_characteristic,
    }


def cell_complex_from_json(d: dict) -> CellComplex:
    pi_d = d.get("pi", {})
    if "finite" in pi_d:
        pi = finite_pi(pi_d["finite"])
    elif pi_d.get("infinite_cyclic"):
        pi = infinite_cyclic_pi()
    else:
        raise InputValidationError("pi must be 'finite' or 'infinite_cyclic'")
    cells = {cid: int(dim) for dim, cid in d["cells"]}
    boundaries = {
        cid: tuple(
            (fid, tuple((int(tok), coeff) for tok, coeff in s))
            for fid, s in faces
        )
        for cid, faces in d.get("boundaries", {}).items()
    }
    k = CellComplex(cells, boundaries, pi)
    if "chi" in d and int(d["chi"]) != k.euler_characteristic:
        raise InputValidationError(
            "declared Euler characteristic disagrees with the cell counts"
        )
    return k


def representation_to_json(rep: Representation) -> dict:
    out = {"pi": {"finite": [list(r) for r in rep.pi.table]}
           if rep.pi.finite else {"infinite_cyclic": True}}
    desc = rep.descriptor
    if "regular_s1" in desc:
        out["images"] = {"regular_s1": desc["regular_s1"]}
    elif desc.get("regular"):
        out["images"] = {"regular": True}
    elif rep.pi.finite:
        out["images"] = {
            "elements": [
                _matrix_to_json(rep.image(g).blocks[0]) for g in range(rep.pi.order)
            ]
        }
    else:
        out["images"] = {"t": _matrix_to_json(rep.image(1).blocks[0])}
    return out


def representation_from_json(d: dict, grid: int | None = None) -> Representation:
    pi_d = d.get("pi", {})
    images = d.get("images", {})
    if "regular_s1" in images:
        n = int(grid or images["regular_s1"].get("grid", 1024))
        return circle_regular_representation(n)
    if "finite" in pi_d:
        pi = finite_pi(pi_d["finite"])
        if images.get("regular"):
            return regular_representation(pi)
        mats = [_matrix_from_json(m) for m in images.get("elements", [])]
        return matrix_representation(pi, mats)
    if pi_d.get("infinite_cyclic"):
        return matrix_representation(
            infinite_cyclic_pi(), {1: _matrix_from_json(images["t"])}
        )
    raise InputValidationError("representation needs a group and images")


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
