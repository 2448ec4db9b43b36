"""Extended category objects, chain complexes and extended cohomology.

An extended object is (the class of) a morphism alpha: A' -> A. Its
projective part is the orthocomplement of the image closure in A (reduced
cohomology, when alpha is a differential) and its torsion part is alpha
viewed as a map onto the image closure -- an injective, dense-image map
whose spectral density near zero carries the interesting analytic data.

Chain complexes live here too: extended cohomology in each degree is the
extended object (d: C^{i-1} -> ker d_i), its projective dimension is the
trace-Betti number, and the determinant-class test asks every degree's
torsion part to have a convergent log spectral moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backends import (
    DEFAULT_RANK_TOL,
    CategoryBackend,
    HObject,
    Morphism,
    SubObject,
    adjoint,
    add,
    compose,
    direct_sum_objects,
    kernel_and_image_closure,
    orthocomplement,
    scale_morphism,
    zero_morphism,
)
from .detline import (
    DetLineElement,
    Frame,
    check_exactness,
    exact_sequence_iso,
    rebase_products,
)
from .errors import (
    InconclusiveVerdictError,
    NoCanonicalElementError,
    NotAChainComplexError,
    NotAnIsomorphismError,
    ShapeMismatchError,
)
from .spectral import (
    DetClassVerdict,
    SpectralDensity,
    classify_determinant,
    ns_exponent,
    singular_density,
    spectral_density,
)


def zero_object(backend: CategoryBackend) -> HObject:
    return HObject(backend, tuple(0 for _ in range(backend.n_fibers)))


@dataclass(eq=False)
class ExtendedObject:
    """Normalized extended object with its projective/torsion split.

    ``alpha`` is injective (the kernel of the defining morphism is quotiented
    away on construction); ``projective`` spans the orthocomplement of
    cl(im alpha) in the target; ``torsion_map`` is alpha corestricted onto
    cl(im alpha), an injective map with dense image.
    """

    alpha: Morphism
    projective: SubObject
    torsion_map: Morphism
    torsion_profile: SpectralDensity
    verdict: DetClassVerdict

    @property
    def target(self) -> HObject:
        return self.alpha.target

    @property
    def source(self) -> HObject:
        return self.alpha.source

    @property
    def projective_dim(self) -> float:
        return self.projective.dim_tau

    @property
    def tau_trivial(self) -> bool:
        """True when the torsion part is certified trivial in the trace sense."""
        return self.projective_dim <= 1e-10 and self.verdict.convergent

    @property
    def is_projective(self) -> bool:
        return self.source.dim_tau <= 1e-12

    def ns_exponent(self) -> float | None:
        return ns_exponent(self.torsion_profile)


def extended_object(alpha: Morphism, tol: float = DEFAULT_RANK_TOL) -> ExtendedObject:
    """Normalize a morphism into an extended object.

    The kernel of alpha is removed from the source (the class of the object
    does not change), the target splits orthogonally into cl(im alpha) and
    the projective part, and the spectral density of the corestriction is
    classified.
    """
    ker, im = kernel_and_image_closure(alpha, tol)
    coker = orthocomplement(im)
    src_core = orthocomplement(ker)
    alpha_inj = compose(alpha, src_core.include())
    torsion_map = im.compress(alpha_inj, _identity_sub(src_core.space))
    density = singular_density(torsion_map, tol)
    verdict = classify_determinant(density)
    return ExtendedObject(alpha_inj, coker, torsion_map, density, verdict)


def _identity_sub(obj: HObject) -> SubObject:
    from .backends import full_subobject

    return full_subobject(obj)


def det_line_of_extended(
    x: ExtendedObject, target_label: str = "target", source_label: str = "source"
) -> DetLineElement:
    """Unit element of det(X) = det(A) (x) det(A')^* in the declared frames.

    For projective objects (zero source) only the target frame survives, so
    the line reduces to det(A).
    """
    word = []
    if x.target.dim_tau > 0:
        word.append((Frame(x.target, target_label), 1))
    if x.source.dim_tau > 0:
        word.append((Frame(x.source, source_label), -1))
    return DetLineElement(tuple(word), 0.0)


def canonical_trivialization(x: ExtendedObject) -> DetLineElement:
    """Canonical scalar trivialization of a tau-trivial torsion object.

    The determinant line of a torsion object with convergent certificate
    contains a canonical nonzero element; relative to the declared frames of
    target and source its coefficient is the extended determinant of alpha.
    Returns that coefficient as an element of the scalar line.
    """
    if x.projective_dim > 1e-10:
        raise NoCanonicalElementError("object has a nonzero projective part")
    if x.verdict.status == "Divergent":
        raise NoCanonicalElementError("divergent spectral certificate")
    if x.verdict.status == "Inconclusive":
        raise InconclusiveVerdictError(
            "spectral certificate inconclusive; refusing to trivialize"
        )
    return DetLineElement((), x.torsion_profile.log_moment())


# ---------------------------------------------------------------------------
# chain complexes


@dataclass(eq=False)
class ChainComplexC:
    """Cochain complex C^0 -> C^1 -> ... -> C^n of backend objects.

    ``objects[i]`` is C^i and ``diffs[i]`` is the differential C^i -> C^{i+1}
    (so there are len(objects) - 1 of them). The composition of consecutive
    differentials must vanish numerically.
    """

    objects: tuple
    diffs: tuple
    check_scale: float = 0.0  # extra absolute scale for the d^2 = 0 check,
    # used when the differentials were compressed out of a larger complex
    # and their own norms understate the rounding noise inherited from it

    def fiber_scales(self) -> np.ndarray:
        """Per-fiber magnitude: largest standardized differential block norm.

        Used as the reference scale for rank decisions so that a
        differential which is negligible within its own fiber is treated as
        zero, while tiny fibers of a Family stay untouched.
        """
        out = np.zeros(self.backend.n_fibers)
        for d in self.diffs:
            for f, b in enumerate(d.standardized_blocks()):
                if b.size:
                    out[f] = max(out[f], float(np.linalg.norm(b)))
        return out

    def __post_init__(self) -> None:
        self.objects = tuple(self.objects)
        self.diffs = tuple(self.diffs)
        if len(self.diffs) != max(len(self.objects) - 1, 0):
            raise ShapeMismatchError("need exactly one differential per gap")
        for i, d in enumerate(self.diffs):
            if not (
                d.source.same_space(self.objects[i])
                and d.target.same_space(self.objects[i + 1])
            ):
                raise ShapeMismatchError(f"differential {i} does not fit the grading")
        for i in range(len(self.diffs) - 1):
            a, b = self.diffs[i + 1], self.diffs[i]
            bound = max(a.norm() * b.norm(), self.check_scale, 1e-300)
            comp = compose(a, b)
            if max(np.linalg.norm(blk) for blk in comp.blocks) > 1e-10 * bound:
                raise NotAChainComplexError(
                    f"differentials {i} and {i + 1} do not compose to zero"
                )

    @property
    def length(self) -> int:
        return len(self.objects)

    @property
    def backend(self) -> CategoryBackend:
        return self.objects[0].backend

    def differential(self, i: int) -> Morphism:
        """d_i: C^i -> C^{i+1}; zero maps outside the support."""
        if 0 <= i < len(self.diffs):
            return self.diffs[i]
        zero = zero_object(self.backend)
        if i < 0:
            return zero_morphism(zero, self.objects[0])
        return zero_morphism(self.objects[-1], zero)

    def laplacian(self, i: int) -> Morphism:
        """Delta_i = d_i^* d_i + d_{i-1} d_{i-1}^* on C^i."""
        up = self.differential(i)
        down = self.differential(i - 1)
        lap = compose(adjoint(up), up)
        if down.source.dim_tau > 0:
            lap = add(lap, compose(down, adjoint(down)))
        return lap

    @property
    def euler_characteristic(self) -> float:
        return float(
            sum((-1) ** i * o.dim_tau for i, o in enumerate(self.objects))
        )

    def shift(self) -> "ChainComplexC":
        """Degree shift by one: a zero object is prepended, all degrees move up."""
        zero = zero_object(self.backend)
        return ChainComplexC(
            (zero,) + self.objects,
            (zero_morphism(zero, self.objects[0]),) + self.diffs,
        )

    def negate_differentials(self) -> "ChainComplexC":
        return ChainComplexC(
            self.objects, tuple(scale_morphism(d, -1.0) for d in self.diffs)
        )


def direct_sum_complexes(a: ChainComplexC, b: ChainComplexC) -> ChainComplexC:
    """Degreewise direct sum (the shorter complex is padded with zeros)."""
    from .backends import direct_sum_morphisms

    n = max(a.length, b.length)
    zero = zero_object(a.backend)

    def obj(c, i):
        return c.objects[i] if i < c.length else zero

    objects = tuple(direct_sum_objects(obj(a, i), obj(b, i)) for i in range(n))
    diffs = []
    for i in range(n - 1):
        da = a.differential(i) if i < a.length - 1 else zero_morphism(obj(a, i), obj(a, i + 1))
        db = b.differential(i) if i < b.length - 1 else zero_morphism(obj(b, i), obj(b, i + 1))
        diffs.append(direct_sum_morphisms(da, db))
    return ChainComplexC(objects, tuple(diffs))


@dataclass
class DegreeCohomology:
    """Extended cohomology data of one degree."""

    degree: int
    betti: float
    extended: ExtendedObject
    harmonic: SubObject
    verdict: DetClassVerdict
    ns: float | None

    @property
    def tau_trivial(self) -> bool:
        return self.verdict.convergent


@dataclass
class CohomologyProfile:
    degrees: list

    def betti(self, i: int) -> float:
        return self.degrees[i].betti

    @property
    def total_betti(self) -> float:
        return sum(d.betti for d in self.degrees)

    @property
    def determinant_class(self) -> bool:
        return all(d.verdict.convergent for d in self.degrees)


def cohomology(c: ChainComplexC, tol: float = DEFAULT_RANK_TOL) -> CohomologyProfile:
    """Extended cohomology of the complex, degree by degree.

    In degree i the extended object is (d: C^{i-1} -> ker d_i); its
    projective dimension is the trace-Betti number, which is cross-checked
    against the kernel of the Laplacian (harmonic route).
    """
    scale = c.fiber_scales()
    degrees = []
    for i in range(c.length):
        up = c.differential(i) if i < c.length - 1 else None
        if up is not None:
            ker_up, _ = kernel_and_image_closure(up, tol, scale)
        else:
            ker_up = _identity_sub(c.objects[i])
        down = c.differential(i - 1)
        alpha = ker_up.compress(down, _identity_sub(down.source))
        ext = extended_object(alpha, tol)
        harmonic, _ = kernel_and_image_closure(c.laplacian(i), tol)
        degrees.append(
            DegreeCohomology(
                degree=i,
                betti=harmonic.dim_tau,
                extended=ext,
                harmonic=harmonic,
                verdict=ext.verdict,
                ns=ext.ns_exponent(),
            )
        )
    return CohomologyProfile(degrees)


def determinant_class_test(c: ChainComplexC, tol: float = DEFAULT_RANK_TOL) -> list:
    """Per-degree determinant-class verdicts for the complex.

    Degree i classifies the corestriction of d_{i-1} onto the closure of its
    image; the complex is of determinant class iff every degree is
    Convergent.
    """
    scale = c.fiber_scales()
    verdicts = []
    for i in range(c.length):
        down = c.differential(i - 1)
        if down.source.dim_tau == 0:
            verdicts.append(
                DetClassVerdict("Convergent", 0.0, [], 0.0, 0.0)
            )
            continue
        ker, im = kernel_and_image_closure(down, tol, scale)
        core = orthocomplement(ker)
        restricted = im.compress(down, core)
        density = singular_density(restricted, tol)
        verdicts.append(classify_determinant(density))
    return verdicts


# ---------------------------------------------------------------------------
# morphisms of extended objects


def check_extended_morphism(
    x: ExtendedObject, y: ExtendedObject, f: Morphism, fprime: Morphism
) -> None:
    lhs = compose(f, x.alpha)
    rhs = compose(y.alpha, fprime)
    bound = max(f.norm() * x.alpha.norm(), y.alpha.norm() * fprime.norm(), 1e-300)
    diff = add(lhs, scale_morphism(rhs, -1.0))
    if max(np.linalg.norm(b) for b in diff.blocks) > 1e-8 * bound:
        raise ShapeMismatchError("the pair (f, f') does not intertwine alpha, beta")


def _graph_map(x: ExtendedObject, y: ExtendedObject, f: Morphism, fprime: Morphism):
    """The two maps of the mapping sequence A' -> B' (+) A -> B."""
    src = x.source
    mid = direct_sum_objects(y.source, x.target)
    blocks_g = []
    for i in range(len(src.dims)):
        blocks_g.append(np.vstack([fprime.blocks[i], x.alpha.blocks[i]]))
    g = Morphism(src, mid, tuple(blocks_g))
    blocks_h = []
    for i in range(len(mid.dims)):
        blocks_h.append(np.hstack([y.alpha.blocks[i], -f.blocks[i]]))
    h = Morphism(mid, y.target, tuple(blocks_h))
    return g, h


def extended_pushforward(
    x: ExtendedObject,
    y: ExtendedObject,
    f: Morphism,
    fprime: Morphism,
    element: DetLineElement,
    labels=("target", "source"),
    new_labels=("target", "source"),
    tol: float = DEFAULT_RANK_TOL,
) -> DetLineElement:
    """Push an element of det(X) to det(Y) along an extended-category iso [f].

    The mapping sequence A' -> B'(+)A -> B must be exact (that is what makes
    [f] invertible); the determinant line map is then computed from the
    exact-sequence isomorphism det(B'(+)A) = det(A') (x) det(B), rebased to
    the native frames. The result depends only on the class [f]: changing f
    by beta composed with anything leaves it unchanged.
    """
    check_extended_morphism(x, y, f, fprime)
    g, h = _graph_map(x, y, f, fprime)
    try:
        mid = g.target
        start = DetLineElement(((Frame(mid, "__mid__"), 1),), 0.0)
        split = exact_sequence_iso(
            g, h, start, total_label="__mid__", sub_label="__sub__",
            quot_label="__quot__", tol=tol,
        )
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise NotAnIsomorphismError(
            f"mapping sequence of [f] is not exact: {exc}"
        ) from exc
    split = rebase_products(split, "__sub__", x.source)
    split = rebase_products(split, "__quot__", y.target)
    log_factor = split.log_coeff  # gen(B')gen(A) = exp(log_factor) gen(A')gen(B)

    word = []
    log_coeff = element.log_coeff + log_factor
    seen = {labels[0]: False, labels[1]: x.source.dim_tau == 0}
    for frame, e in element.word:
        if frame.label == labels[0] and frame.obj.same_space(x.target):
            if y.target.dim_tau > 0:
                word.append((Frame(y.target, new_labels[0]), e))
            seen[labels[0]] = True
        elif frame.label == labels[1] and frame.obj.same_space(x.source):
            if y.source.dim_tau > 0:
                word.append((Frame(y.source, new_labels[1]), e))
            seen[labels[1]] = True
        else:
            word.append((frame, e))
    if not all(seen.values()):
        raise ShapeMismatchError("element does not carry the frames of det(X)")
    return DetLineElement(tuple(word), log_coeff)


@dataclass
class KernelCokernelLines:
    """Kernel and cokernel of an extended morphism with their line data.

    The factorization det(Y) (x) det(X)^* = det(coker) (x) det(ker)^* holds
    with zero correction in these frames because all subobject frames are
    chosen orthonormal; the scalar content lives in the canonical
    trivializations of the two sides.
    """

    kernel: ExtendedObject
    cokernel: ExtendedObject
    log_factor: float = 0.0


def kernel_cokernel_lines(
    x: ExtendedObject,
    y: ExtendedObject,
    f: Morphism,
    fprime: Morphism,
    tol: float = DEFAULT_RANK_TOL,
) -> KernelCokernelLines:
    """Kernel and cokernel of [f]: X -> Y in the extended category.

    coker([f]) is presented by (beta, -f): B'(+)A -> B and ker([f]) by the
    map a' -> (f'(a'), alpha(a')) into the kernel of (beta, -f).
    """
    check_extended_morphism(x, y, f, fprime)
    g, h = _graph_map(x, y, f, fprime)
    coker = extended_object(h, tol)
    p_sub, _ = kernel_and_image_closure(h, tol)
    iota = p_sub.compress(g, _identity_sub(g.source))
    kernel = extended_object(iota, tol)
    return KernelCokernelLines(kernel, coker)
