"""Finite cell complexes, group-ring boundaries, and combinatorial torsion.

A :class:`CellComplex` stores the cellular chain data of the universal
cover: one lifted cell per cell of the base, boundary entries in the group
ring of the fundamental group (tokens are group-element indices for a
finite group, or integer powers of the generator for the infinite cyclic
group). A :class:`Representation` turns tokens into invertible morphisms on
a coefficient module over one of the backends; applying it to the boundary
entries produces the cochain complex whose torsion is the combinatorial
L2-torsion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backends import (
    CategoryBackend,
    BackendKind,
    HObject,
    Morphism,
    circle_samples,
    cyclic_group_table,
    family_backend,
    family_object,
    group_backend,
    group_object,
    group_ring_morphism,
    matrix_backend,
    matrix_object,
)
from .detline import DetLineElement
from .errors import (
    InputValidationError,
    NotAChainComplexError,
    NotUnimodularError,
    ShapeMismatchError,
    UnsupportedCellError,
)
from .extcoh import ChainComplexC
from .spectral import log_fk_det, singular_density
from .torsion import TorsionReport, complex_det_element, torsion


# ---------------------------------------------------------------------------
# fundamental group specification


@dataclass(frozen=True)
class PiSpec:
    """Fundamental group: a finite Cayley table or the infinite cyclic group."""

    table: tuple | None = None  # rows of the Cayley table, identity at 0

    @property
    def finite(self) -> bool:
        return self.table is not None

    @property
    def order(self) -> int:
        return len(self.table) if self.finite else 0

    def mul(self, a: int, b: int) -> int:
        if self.finite:
            return int(self.table[a][b])
        return a + b

    def inv(self, a: int) -> int:
        if not self.finite:
            return -a
        row = self.table[a]
        for b, ab in enumerate(row):
            if ab == 0:
                return b
        raise InputValidationError("element without inverse in Cayley table")


def finite_pi(table) -> PiSpec:
    arr = np.asarray(table, dtype=int)
    return PiSpec(tuple(tuple(int(x) for x in row) for row in arr))


def infinite_cyclic_pi() -> PiSpec:
    return PiSpec(None)


GroupRingSum = tuple  # tuple of (token, coefficient)


def ring_mul(pi: PiSpec, a: GroupRingSum, b: GroupRingSum) -> GroupRingSum:
    acc: dict = {}
    for ta, ca in a:
        for tb, cb in b:
            t = pi.mul(ta, tb)
            acc[t] = acc.get(t, 0) + ca * cb
    return tuple((t, c) for t, c in acc.items() if c != 0)


def ring_add(a: GroupRingSum, b: GroupRingSum) -> GroupRingSum:
    acc: dict = {}
    for t, c in tuple(a) + tuple(b):
        acc[t] = acc.get(t, 0) + c
    return tuple((t, c) for t, c in acc.items() if c != 0)


# ---------------------------------------------------------------------------
# cell complexes


@dataclass
class CellComplex:
    """Cells with group-ring boundary data over the fundamental group.

    ``cells`` maps a cell id to its dimension (insertion order fixes the
    basis order within each dimension). ``boundaries[id]`` lists
    (face_id, group-ring sum) pairs describing the boundary of the chosen
    lift of the cell.
    """

    cells: dict
    boundaries: dict
    pi: PiSpec

    def __post_init__(self) -> None:
        for cid, faces in self.boundaries.items():
            if cid not in self.cells:
                raise InputValidationError(f"boundary given for unknown cell {cid!r}")
            for fid, _ in faces:
                if fid not in self.cells:
                    raise InputValidationError(f"unknown face {fid!r} of {cid!r}")
                if self.cells[fid] != self.cells[cid] - 1:
                    raise InputValidationError(
                        f"face {fid!r} of {cid!r} has the wrong dimension"
                    )
        self._check_dd_zero()

    def cells_of_dim(self, d: int) -> list:
        return [cid for cid, cd in self.cells.items() if cd == d]

    @property
    def dimension(self) -> int:
        return max(self.cells.values()) if self.cells else 0

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** d for d in self.cells.values())

    def boundary_sum(self, cid: str, fid: str) -> GroupRingSum:
        acc: GroupRingSum = ()
        for gid, s in self.boundaries.get(cid, ()):
            if gid == fid:
                acc = ring_add(acc, s)
        return acc

    def _check_dd_zero(self) -> None:
        for cid, dim in self.cells.items():
            if dim < 2:
                continue
            acc: dict = {}
            for fid, s in self.boundaries.get(cid, ()):
                for gid, s2 in self.boundaries.get(fid, ()):
                    prod = ring_mul(self.pi, s, s2)
                    acc[gid] = ring_add(acc.get(gid, ()), prod)
            for gid, s in acc.items():
                if s:
                    raise NotAChainComplexError(
                        f"boundary of boundary of {cid!r} is nonzero at {gid!r}"
                    )


def re_lift(k: CellComplex, lifts: dict) -> CellComplex:
    """Change the chosen lifts of cells by group elements.

    Replacing the lift of cell e by g_e times it transforms each boundary
    entry a_{ef} into g_e * a_{ef} * g_f^{-1}; the torsion of a unimodular
    representation is invariant under this change.
    """
    pi = k.pi
    new_boundaries = {}
    for cid, faces in k.boundaries.items():
        ge = ((lifts.get(cid, 0 if pi.finite else 0), 1),)
        out = []
        for fid, s in faces:
            gf_inv = ((pi.inv(lifts.get(fid, 0)), 1),)
            out.append((fid, ring_mul(pi, ring_mul(pi, ge, s), gf_inv)))
        new_boundaries[cid] = tuple(out)
    return CellComplex(dict(k.cells), new_boundaries, pi)


def elementary_subdivision(k: CellComplex, cell_id: str) -> CellComplex:
    """Subdivide a 1-cell into two, inserting a new vertex.

    The edge boundary must consist of one +1 end term and one -1 start term
    (as for any CW 1-cell); the new vertex is lifted with the trivial group
    element, so the two half-edges get boundaries (new - start) and
    (end - new). Cells of dimension 2 and higher that mention the edge see
    it replaced by the sum of the halves. Only 1-cells are subdividable.
    """
    if cell_id not in k.cells:
        raise InputValidationError(f"unknown cell {cell_id!r}")
    if k.cells[cell_id] != 1:
        raise UnsupportedCellError("only 1-dimensional cells can be subdivided")
    pos, neg = [], []
    for fid, s in k.boundaries.get(cell_id, ()):
        for tok, coeff in s:
            if coeff > 0:
                pos.append((fid, tok, coeff))
            else:
                neg.append((fid, tok, coeff))
    if (
        sum(c for _, _, c in pos) != 1
        or sum(c for _, _, c in neg) != -1
        or len(pos) != 1
        or len(neg) != 1
    ):
        raise UnsupportedCellError("edge boundary is not (end - start)")
    v_new = f"{cell_id}.v"
    e_minus = f"{cell_id}.a"
    e_plus = f"{cell_id}.b"
    for nid in (v_new, e_minus, e_plus):
        if nid in k.cells:
            raise InputValidationError(f"cell id {nid!r} already taken")

    cells = {}
    for cid, d in k.cells.items():
        if cid == cell_id:
            cells[v_new] = 0
            cells[e_minus] = 1
            cells[e_plus] = 1
        else:
            cells[cid] = d

    ident = 0
    boundaries = {}
    for cid, faces in k.boundaries.items():
        if cid == cell_id:
            continue
        out = []
        for fid, s in faces:
            if fid == cell_id:
                out.append((e_minus, s))
                out.append((e_plus, s))
            else:
                out.append((fid, s))
        boundaries[cid] = tuple(out)
    (pf, pt, _), (nf, nt, _) = pos[0], neg[0]
    boundaries[e_minus] = ((v_new, ((ident, 1),)), (nf, ((nt, -1),)))
    boundaries[e_plus] = ((pf, ((pt, 1),)), (v_new, ((ident, -1),)))
    return CellComplex(cells, boundaries, k.pi)


# ---------------------------------------------------------------------------
# representations


@dataclass(eq=False)
class Representation:
    """Action of the fundamental group on a coefficient module.

    ``image_fn(token)`` must return an invertible endomorphism of ``module``
    for every group token appearing in boundary data. ``generators`` lists
    tokens whose images certify unimodularity (all elements for a finite
    group, t for the infinite cyclic group).
    """

    pi: PiSpec
    module: HObject
    image_fn: object
    generators: tuple
    descriptor: dict = field(default_factory=dict)

    def image(self, token: int) -> Morphism:
        return self.image_fn(token)

    def sum_image(self, s: GroupRingSum):
        """Fiber blocks of the image of a group-ring sum (None for zero)."""
        blocks = None
        for tok, coeff in s:
            m = self.image(tok)
            if blocks is None:
                blocks = [coeff * b for b in m.blocks]
            else:
                blocks = [acc + coeff * b for acc, b in zip(blocks, m.blocks)]
        return blocks

    def check_relations(self, tol: float = 1e-10) -> None:
        if self.pi.finite:
            n = self.pi.order
            for a in range(n):
                for b in range(n):
                    lhs = self.image(self.pi.mul(a, b))
                    ga, gb = self.image(a), self.image(b)
                    dev = max(
                        np.linalg.norm(l - x @ y)
                        for l, x, y in zip(lhs.blocks, ga.blocks, gb.blocks)
                    )
                    if dev > tol * max(1.0, max(np.linalg.norm(b_) for b_ in ga.blocks)):
                        raise InputValidationError(
                            f"representation violates the group law at ({a},{b})"
                        )
        else:
            t, ti = self.image(1), self.image(-1)
            dev = max(
                np.linalg.norm(x @ y - np.eye(x.shape[0]))
                for x, y in zip(t.blocks, ti.blocks)
            )
            if dev > tol:
                raise InputValidationError("images of t and t^-1 are not inverse")

    def unimodular_defect(self) -> float:
        """max |log Fuglede-Kadison determinant| over the generator images."""
        worst = 0.0
        for g in self.generators:
            m = self.image(g)
            density = singular_density(m)
            if density.zero_mass > 1e-10:
                raise InputValidationError(f"image of token {g} is singular")
            worst = max(worst, abs(density.log_moment()))
        return worst

    @property
    def unimodular(self) -> bool:
        return self.unimodular_defect() < 1e-8


def matrix_representation(pi: PiSpec, images: dict | list, scale: float = 1.0,
                          descriptor: dict | None = None) -> Representation:
    """Matrix-backend representation.

    For a finite group, ``images`` is a list of matrices indexed by element;
    for the infinite cyclic group, ``images`` maps token 1 to the image of t
    (powers and inverses are derived).
    """
    backend = matrix_backend(scale)
    if pi.finite:
        mats = [np.asarray(m, complex) for m in images]
        if len(mats) != pi.order:
            raise InputValidationError("need one image per group element")
        n = mats[0].shape[0]
        obj = matrix_object(backend, n)

        def image_fn(tok: int) -> Morphism:
            return Morphism(obj, obj, (mats[tok],))

        return Representation(pi, obj, image_fn, tuple(range(pi.order)),
                              descriptor or {})
    t = np.asarray(images[1] if isinstance(images, dict) else images, complex)
    n = t.shape[0]
    obj = matrix_object(matrix_backend(scale), n)
    t_inv = np.linalg.inv(t)

    def image_fn(tok: int) -> Morphism:
        base = t if tok >= 0 else t_inv
        return Morphism(obj, obj, (np.linalg.matrix_power(base, abs(tok)),))

    return Representation(pi, obj, image_fn, (1, -1), descriptor or {})


def regular_representation(pi: PiSpec, scale: float = 1.0) -> Representation:
    """Left regular representation of a finite group on l2 of the group."""
    if not pi.finite:
        raise InputValidationError("use circle_regular_representation for t")
    table = np.asarray(pi.table, int)
    backend = group_backend(table, scale)
    obj = group_object(backend, 1)

    def image_fn(tok: int) -> Morphism:
        coeffs = np.zeros((1, 1, pi.order), complex)
        coeffs[0, 0, tok] = 1.0
        return group_ring_morphism(obj, obj, coeffs)

    return Representation(pi, obj, image_fn, tuple(range(pi.order)),
                          {"regular": True})


def circle_regular_representation(grid: int, scale: float = 1.0) -> Representation:
    """Regular representation of the infinite cyclic group, realized as the
    function model over the circle on a midpoint sample grid.

    t acts fiberwise as multiplication by e^(i theta_j); the midpoint grid
    keeps every fiber of t - 1 invertible.
    """
    samples = circle_samples(grid)
    backend = family_backend(samples, scale)
    obj = family_object(backend, 1)
    phases = np.exp(1j * samples[:, 0])

    def image_fn(tok: int) -> Morphism:
        return Morphism(
            obj, obj, tuple(np.array([[p ** tok]]) for p in phases)
        )

    return Representation(infinite_cyclic_pi(), obj, image_fn, (1, -1),
                          {"regular_s1": {"grid": int(grid)}})


# ---------------------------------------------------------------------------
# the cochain complex and combinatorial torsion


def cochain_complex(k: CellComplex, rep: Representation) -> ChainComplexC:
    """Cochain complex of the cover with coefficients in the module.

    C^i is one copy of the module per i-cell; the differential block from
    the slot of an i-cell e to the slot of an (i+1)-cell E is the image of
    the boundary entry of E at e.
    """
    module = rep.module
    backend = module.backend
    nf = backend.n_fibers
    dims_per_cell = module.dims
    by_dim = [k.cells_of_dim(d) for d in range(k.dimension + 1)]

    objects = []
    for cells in by_dim:
        dims = tuple(len(cells) * dims_per_cell[f] for f in range(nf))
        objects.append(HObject(backend, dims))

    diffs = []
    zero_blocks = {
        f: np.zeros((dims_per_cell[f], dims_per_cell[f]), complex) for f in range(nf)
    }
    for d in range(k.dimension):
        rows, cols = by_dim[d + 1], by_dim[d]
        blocks = []
        for f in range(nf):
            m = dims_per_cell[f]
            blk = np.zeros((len(rows) * m, len(cols) * m), complex)
            blocks.append(blk)
        for ri, big in enumerate(rows):
            entries = {fid: s for fid, s in _merged_boundary(k, big)}
            for ci, small in enumerate(cols):
                s = entries.get(small)
                if not s:
                    continue
                img = rep.sum_image(s)
                if img is None:
                    continue
                for f in range(nf):
                    m = dims_per_cell[f]
                    blocks[f][ri * m : (ri + 1) * m, ci * m : (ci + 1) * m] = img[f]
        diffs.append(Morphism(objects[d], objects[d + 1], tuple(blocks)))
    # relations hold symbolically in the group ring; a differential whose
    # image happens to be numerically tiny must not shrink the d^2 = 0 bound
    scale = max((d.norm() for d in diffs), default=0.0) ** 2
    return ChainComplexC(tuple(objects), tuple(diffs), check_scale=scale)


def _merged_boundary(k: CellComplex, cid: str):
    acc: dict = {}
    order: list = []
    for fid, s in k.boundaries.get(cid, ()):
        if fid not in acc:
            acc[fid] = ()
            order.append(fid)
        acc[fid] = ring_add(acc[fid], s)
    return [(fid, acc[fid]) for fid in order]


def combinatorial_torsion(
    k: CellComplex,
    rep: Representation,
    sigma_log: float = 0.0,
    epsilon: float | None = None,
    tol: float = 1e-10,
) -> TorsionReport:
    """Combinatorial L2-torsion of the complex with the given coefficients.

    The volume element of the module, raised to the Euler characteristic,
    is carried through the cochain complex and the torsion pipeline. The
    representation must be unimodular (all generator images of unit
    Fuglede-Kadison determinant); then the result does not depend on the
    chosen cell lifts, and for Euler characteristic zero it does not depend
    on the volume element either. ``sigma_log`` scales the module volume
    element by exp(sigma_log).
    """
    defect = rep.unimodular_defect()
    if defect >= 1e-8:
        raise NotUnimodularError(
            f"generator determinant defect {defect:.2e} exceeds 1e-8"
        )
    c = cochain_complex(k, rep)
    chi = k.euler_characteristic
    sigma = complex_det_element(c, log_coeff=chi * sigma_log)
    return torsion(c, sigma, epsilon=epsilon, tol=tol)


@dataclass
class SubdivisionReport:
    passed: bool
    logs: list
    max_deviation: float


def subdivision_invariance_check(
    k: CellComplex,
    rep: Representation,
    depth: int,
    seed: int = 0,
    agree_tol: float = 1e-9,
    epsilon: float | None = None,
) -> SubdivisionReport:
    """Compare torsion across rounds of random elementary 1-cell subdivisions."""
    rng = np.random.default_rng(seed)
    logs = []
    current = k
    for _ in range(depth + 1):
        report = combinatorial_torsion(current, rep, epsilon=epsilon)
        if report.scalar_value is None:
            logs.append(report.combined.log_coeff)
        else:
            logs.append(math.log(report.scalar_value))
        edges = [cid for cid, d in current.cells.items() if d == 1]
        current = elementary_subdivision(current, edges[rng.integers(len(edges))])
    devs = [abs(x - logs[0]) for x in logs[1:]]
    return SubdivisionReport(max(devs) <= agree_tol, logs, max(devs))


# ---------------------------------------------------------------------------
# bundled example complexes


def circle_complex() -> CellComplex:
    """Circle with one vertex and one edge; boundary of the edge is (t - 1)v."""
    pi = infinite_cyclic_pi()
    cells = {"v": 0, "e": 1}
    boundaries = {"e": (("v", ((1, 1), (0, -1))),)}
    return CellComplex(cells, boundaries, pi)


def circle_complex_two_cells() -> CellComplex:
    """Circle with two vertices and two edges (the subdivided structure)."""
    pi = infinite_cyclic_pi()
    cells = {"v0": 0, "v1": 0, "a": 1, "b": 1}
    boundaries = {
        "a": (("v1", ((0, 1),)), ("v0", ((0, -1),))),
        "b": (("v0", ((1, 1),)), ("v1", ((0, -1),))),
    }
    return CellComplex(cells, boundaries, pi)


def circle_complex_finite(p: int) -> CellComplex:
    """Circle with the p-fold cover structure group: pi = Z/p, edge (t - 1)v."""
    pi = finite_pi(cyclic_group_table(p))
    cells = {"v": 0, "e": 1}
    boundaries = {"e": (("v", ((1, 1), (0, -1))),)}
    return CellComplex(cells, boundaries, pi)


def torus_quotient_complex(p: int = 3) -> CellComplex:
    """Torus cell structure (1 vertex, 2 edges, 1 face) with the fundamental
    group truncated to the finite abelian quotient (Z/p)^2.

    Tokens encode (a, b) as a * p + b; the relation dd = 0 for the standard
    face boundary (1 - y) a + (x - 1) b needs only commutativity, which the
    quotient preserves.
    """
    n = p * p

    def mul(u, v):
        return ((u // p + v // p) % p) * p + (u % p + v % p) % p

    table = [[mul(a, b) for b in range(n)] for a in range(n)]
    pi = finite_pi(table)
    x = 1 * p + 0
    y = 0 * p + 1
    cells = {"v": 0, "a": 1, "b": 1, "F": 2}
    boundaries = {
        "a": (("v", ((x, 1), (0, -1))),),
        "b": (("v", ((y, 1), (0, -1))),),
        "F": (("a", ((0, 1), (y, -1))), ("b", ((x, 1), (0, -1)))),
    }
    return CellComplex(cells, boundaries, pi)


def lens_complex(p: int, q: int) -> CellComplex:
    """Lens space L(p, q) with the standard one-cell-per-dimension structure.

    Boundaries: d e1 = (t - 1) e0, d e2 = (1 + t + ... + t^{p-1}) e1,
    d e3 = (t^{q*} - 1) e2 with q* the inverse of q mod p.
    """
    if math.gcd(p, q) != 1:
        raise InputValidationError("p and q must be coprime")
    qstar = pow(q, -1, p)
    pi = finite_pi(cyclic_group_table(p))
    cells = {"e0": 0, "e1": 1, "e2": 2, "e3": 3}
    norm = tuple((j, 1) for j in range(p))
    boundaries = {
        "e1": (("e0", ((1, 1), (0, -1))),),
        "e2": (("e1", norm),),
        "e3": (("e2", ((qstar, 1), (0, -1))),),
    }
    return CellComplex(cells, boundaries, pi)


def cyclic_character_representation(p: int, k: int = 1) -> Representation:
    """One-dimensional representation of Z/p sending the generator to
    exp(2 pi i k / p)."""
    pi = finite_pi(cyclic_group_table(p))
    zeta = np.exp(2j * np.pi * k / p)
    images = [np.array([[zeta**j]]) for j in range(p)]
    return matrix_representation(pi, images, descriptor={"character": [p, k]})


def circle_unit_representation(lam: complex) -> Representation:
    """Matrix representation of the infinite cyclic group, t -> lam in U(1)."""
    if abs(abs(lam) - 1.0) > 1e-12:
        raise NotUnimodularError("the image of t must lie on the unit circle")
    return matrix_representation(
        infinite_cyclic_pi(), {1: np.array([[lam]])},
        descriptor={"t": [lam.real, lam.imag]},
    )
