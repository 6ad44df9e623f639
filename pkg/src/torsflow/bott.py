"""Critical-block model of an isoenergy 3-manifold and its torsion pipeline.

The manifold is described combinatorially: a list of critical blocks of a
Bott function (circles, tori, Klein bottles) in the canonical order

    minimum circles, minimum tori / Klein bottles, saddle circles,
    maximum tori / Klein bottles, maximum circles,

a unitary representation of the fundamental group, and the gradient
connection data between consecutive-index Morse points, each connection a
list of orbits (intersection sign, holonomy word). Connections are input
data: reproducing the smooth gradient flow they summarize is out of scope.

From this a three-step filtration of the Morse cochain complex is built.
Level 0 collects the minimum blocks, level 1 the saddle circles, level 2
the maximum blocks. The first page of the associated spectral sequence
decomposes block by block; each block contributes kernels and cokernels
of a small matrix built from its holonomies:

    circle of index u, separatrix sign delta:
        D = I - delta * rho(gamma), cohomology ker D in degrees u, u+1,
        torsion factor tau(D)^((-1)^u);
    torus / Klein bottle (minimal: middle degree n = 1, maximal: n = 2):
        D  = [I - rho(alpha) ; I -/+ rho(beta)]   (+ exactly for Klein)
        D* = [I -/+ rho(beta) , rho(alpha) - I]
        cohomology ker D, ker D* /\\ (im D)^perp, coker D* in degrees
        n-1, n, n+1, torsion factor 1.

The differentials of the first and second pages are assembled from the
connection orbit sums Sum_q I_q rho(alpha_q) between the licensed point
pairs, conjugated onto the block cohomology bases. The total torsion
modulus is the product of the block factors with the page torsions, and
for all-circle acyclic models it collapses to the determinant product
prod |det D_i|^((-1)^u_i), available as the fast path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .complexes import (
    ACYCLIC_NOTE,
    RELATIVE_NOTE,
    BasedComplex,
    TorsionScalar,
    complex_torsion,
    map_torsion,
)
from .errors import (
    AssumptionViolated,
    FastPathUnavailable,
    IllegalConnection,
    InvalidInput,
    ModelOrderError,
    NotAComplex,
    TorsionError,
)
from .linalg import DEFAULT_TOL, det_modulus, range_basis, rank_nullspace
from .representation import Representation, parse_word
from .spectral import FilteredComplex

CIRCLE = "circle"
TORUS = "torus"
KLEIN = "klein"

# list-order tiers realizing the canonical block ordering
_TIER_MIN_CIRCLE = 0
_TIER_MIN_EXTREMAL = 1
_TIER_SADDLE = 2
_TIER_MAX_EXTREMAL = 3
_TIER_MAX_CIRCLE = 4

_TIER_NAMES = {
    _TIER_MIN_CIRCLE: "minimum circle",
    _TIER_MIN_EXTREMAL: "minimum torus/Klein bottle",
    _TIER_SADDLE: "saddle circle",
    _TIER_MAX_EXTREMAL: "maximum torus/Klein bottle",
    _TIER_MAX_CIRCLE: "maximum circle",
}

#: filtration level of each tier (minima, saddles, maxima)
_TIER_LEVEL = {0: 0, 1: 0, 2: 1, 3: 2, 4: 2}

_CIRCLE_LABELS = ("w", "z")
_EXTREMAL_LABELS = ("p", "q", "r", "s")


@dataclass(frozen=True)
class CriticalBlock:
    """One critical submanifold of the Bott function.

    Circles carry a normal Morse index (0 minimum, 1 saddle, 2 maximum),
    the separatrix orientability sign delta, and the holonomy word of the
    circle itself. Tori and Klein bottles are extremal ("min" or "max")
    and carry holonomy words of their two fundamental group generators.
    """

    id: str
    kind: str
    critical_value: float = 0.0
    index: Optional[int] = None
    delta: Optional[int] = None
    holonomy: tuple = ()
    extremal: Optional[str] = None
    alpha: tuple = ()
    beta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "holonomy", parse_word(self.holonomy))
        object.__setattr__(self, "alpha", parse_word(self.alpha))
        object.__setattr__(self, "beta", parse_word(self.beta))
        if self.kind not in (CIRCLE, TORUS, KLEIN):
            raise InvalidInput(f"block {self.id}: unknown kind {self.kind!r}")
        if self.kind == CIRCLE:
            if self.index not in (0, 1, 2):
                raise InvalidInput(f"block {self.id}: circle index must be 0, 1 or 2")
            if self.delta not in (1, -1):
                raise InvalidInput(f"block {self.id}: delta must be +1 or -1")
        else:
            if self.extremal not in ("min", "max"):
                raise InvalidInput(f"block {self.id}: extremal must be 'min' or 'max'")
            if self.delta is not None:
                raise InvalidInput(f"block {self.id}: tori and Klein bottles carry no delta")

    @property
    def tier(self) -> int:
        if self.kind == CIRCLE:
            return {0: _TIER_MIN_CIRCLE, 1: _TIER_SADDLE, 2: _TIER_MAX_CIRCLE}[self.index]
        return _TIER_MIN_EXTREMAL if self.extremal == "min" else _TIER_MAX_EXTREMAL

    @property
    def level(self) -> int:
        """Filtration level: 0 minima, 1 saddles, 2 maxima."""
        return _TIER_LEVEL[self.tier]

    @property
    def middle_degree(self) -> int:
        """The block's own degree parameter: u for circles, 1 or 2 for extremals."""
        if self.kind == CIRCLE:
            return self.index
        return 1 if self.extremal == "min" else 2

    def labels(self) -> tuple:
        return _CIRCLE_LABELS if self.kind == CIRCLE else _EXTREMAL_LABELS

    def point_index(self, label: str) -> int:
        if self.kind == CIRCLE:
            if label == "w":
                return self.index
            if label == "z":
                return self.index + 1
        else:
            base = 0 if self.extremal == "min" else 1
            offset = {"p": 0, "q": 1, "r": 1, "s": 2}.get(label)
            if offset is not None:
                return base + offset
        raise InvalidInput(f"block {self.id} ({self.kind}) has no point labelled {label!r}")


@dataclass(frozen=True)
class MorsePoint:
    block_id: str
    label: str
    index: int


@dataclass(frozen=True)
class Orbit:
    """One gradient orbit: intersection sign and the holonomy word along it."""

    sign: int
    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "word", parse_word(self.word))
        if self.sign not in (1, -1):
            raise InvalidInput(f"orbit sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class GradientConnection:
    """Orbits from a Morse point of index k+1 down to one of index k.

    from_point / to_point are (block_id, label) pairs; the induced cochain
    component runs to_point -> from_point.
    """

    from_point: tuple
    to_point: tuple
    orbits: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "from_point", (str(self.from_point[0]), str(self.from_point[1])))
        object.__setattr__(self, "to_point", (str(self.to_point[0]), str(self.to_point[1])))
        object.__setattr__(self, "orbits", tuple(self.orbits))

    def matrix(self, rep: Representation) -> np.ndarray:
        """Sum of sign * rho(word) over the orbits."""
        out = np.zeros((rep.dim, rep.dim), dtype=complex)
        for orbit in self.orbits:
            out = out + orbit.sign * rep.evaluate(orbit.word)
        return out


@dataclass(frozen=True)
class BottModel:
    representation: Representation
    blocks: tuple
    connections: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "connections", tuple(self.connections))

    def block_map(self) -> dict:
        return {b.id: b for b in self.blocks}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str


_DIAG_ERRORS = {
    "ModelOrderError": ModelOrderError,
    "AssumptionViolated": AssumptionViolated,
    "IllegalConnection": IllegalConnection,
    "InvalidInput": InvalidInput,
}

# licensed cochain components (source point -> target point, index rising by 1),
# keyed by ((source tier, label), (target tier, label)); value "d1" or "d2"
_LICENSED = {}
for _src, _dst in [
    ((_TIER_MIN_CIRCLE, "w"), (_TIER_SADDLE, "w")),
    ((_TIER_MIN_CIRCLE, "z"), (_TIER_SADDLE, "z")),
    ((_TIER_SADDLE, "w"), (_TIER_MAX_CIRCLE, "w")),
    ((_TIER_SADDLE, "z"), (_TIER_MAX_CIRCLE, "z")),
    ((_TIER_MIN_EXTREMAL, "p"), (_TIER_SADDLE, "w")),
    ((_TIER_MIN_EXTREMAL, "q"), (_TIER_SADDLE, "z")),
    ((_TIER_MIN_EXTREMAL, "r"), (_TIER_SADDLE, "z")),
    ((_TIER_SADDLE, "w"), (_TIER_MAX_EXTREMAL, "q")),
    ((_TIER_SADDLE, "w"), (_TIER_MAX_EXTREMAL, "r")),
    ((_TIER_SADDLE, "z"), (_TIER_MAX_EXTREMAL, "s")),
]:
    _LICENSED[(_src, _dst)] = "d1"
for _src, _dst in [
    ((_TIER_MIN_CIRCLE, "w"), (_TIER_MAX_EXTREMAL, "p")),
    ((_TIER_MIN_EXTREMAL, "p"), (_TIER_MAX_EXTREMAL, "p")),
    ((_TIER_MIN_CIRCLE, "z"), (_TIER_MAX_CIRCLE, "w")),
    ((_TIER_MIN_CIRCLE, "z"), (_TIER_MAX_EXTREMAL, "q")),
    ((_TIER_MIN_CIRCLE, "z"), (_TIER_MAX_EXTREMAL, "r")),
    ((_TIER_MIN_EXTREMAL, "q"), (_TIER_MAX_CIRCLE, "w")),
    ((_TIER_MIN_EXTREMAL, "q"), (_TIER_MAX_EXTREMAL, "q")),
    ((_TIER_MIN_EXTREMAL, "q"), (_TIER_MAX_EXTREMAL, "r")),
    ((_TIER_MIN_EXTREMAL, "r"), (_TIER_MAX_CIRCLE, "w")),
    ((_TIER_MIN_EXTREMAL, "r"), (_TIER_MAX_EXTREMAL, "q")),
    ((_TIER_MIN_EXTREMAL, "r"), (_TIER_MAX_EXTREMAL, "r")),
    ((_TIER_MIN_EXTREMAL, "s"), (_TIER_MAX_EXTREMAL, "s")),
    ((_TIER_MIN_EXTREMAL, "s"), (_TIER_MAX_CIRCLE, "z")),
]:
    _LICENSED[(_src, _dst)] = "d2"


def connection_kind(model: BottModel, conn: GradientConnection) -> str:
    """Classify a connection as a d1 or d2 component, or raise IllegalConnection."""
    blocks = model.block_map()
    lo_block = blocks[conn.to_point[0]]
    hi_block = blocks[conn.from_point[0]]
    key = (
        (lo_block.tier, conn.to_point[1]),
        (hi_block.tier, conn.from_point[1]),
    )
    kind = _LICENSED.get(key)
    if kind is None:
        raise IllegalConnection(
            f"connection {conn.from_point[0]}.{conn.from_point[1]} -> "
            f"{conn.to_point[0]}.{conn.to_point[1]}: no differential component is "
            f"induced between a {_TIER_NAMES[lo_block.tier]} point "
            f"'{conn.to_point[1]}' and a {_TIER_NAMES[hi_block.tier]} point "
            f"'{conn.from_point[1]}'"
        )
    return kind


def validate_model(model: BottModel) -> list[Diagnostic]:
    """Structural diagnostics for a model; empty list means valid.

    Checks the tier ordering of the block list, id uniqueness, non-decreasing
    critical values (ties within a tier are fine, list order breaks them),
    generator unitarity, word well-formedness, and connection index
    arithmetic including the no-saddle-to-saddle assumption.
    """
    diags: list[Diagnostic] = []
    rep = model.representation

    seen = set()
    last_tier = -1
    last_value = -math.inf
    for b in model.blocks:
        if b.id in seen:
            diags.append(Diagnostic("InvalidInput", b.id, f"duplicate block id {b.id!r}"))
        seen.add(b.id)
        if b.tier < last_tier:
            diags.append(
                Diagnostic(
                    "ModelOrderError",
                    b.id,
                    f"block {b.id} ({_TIER_NAMES[b.tier]}) listed after a "
                    f"{_TIER_NAMES[last_tier]}",
                )
            )
        if b.critical_value < last_value - 1e-12:
            diags.append(
                Diagnostic(
                    "ModelOrderError",
                    b.id,
                    f"block {b.id}: critical value {b.critical_value} decreases in list order",
                )
            )
        last_tier = max(last_tier, b.tier)
        last_value = max(last_value, b.critical_value)
        words = [b.holonomy] if b.kind == CIRCLE else [b.alpha, b.beta]
        for word in words:
            for msg in rep.word_errors(word):
                diags.append(Diagnostic("InvalidInput", b.id, f"block {b.id}: {msg}"))

    from .representation import unitary_defect

    for name, mat in rep.generators.items():
        defect = unitary_defect(mat)
        if defect > 1e-9:
            diags.append(
                Diagnostic("InvalidInput", name, f"generator {name} unitarity defect {defect:.2e}")
            )

    blocks = model.block_map()
    for c, conn in enumerate(model.connections):
        subject = f"connection[{c}]"
        ok = True
        for end, point in (("from", conn.from_point), ("to", conn.to_point)):
            bid, label = point
            if bid not in blocks:
                diags.append(Diagnostic("InvalidInput", subject, f"{end} references unknown block {bid!r}"))
                ok = False
            elif label not in blocks[bid].labels():
                diags.append(
                    Diagnostic(
                        "InvalidInput",
                        subject,
                        f"{end} point {bid}.{label}: {blocks[bid].kind} blocks have labels "
                        f"{'/'.join(blocks[bid].labels())}",
                    )
                )
                ok = False
        if not ok:
            continue
        hi = blocks[conn.from_point[0]]
        lo = blocks[conn.to_point[0]]
        hi_index = hi.point_index(conn.from_point[1])
        lo_index = lo.point_index(conn.to_point[1])
        if hi_index != lo_index + 1:
            diags.append(
                Diagnostic(
                    "IllegalConnection",
                    subject,
                    f"{conn.from_point[0]}.{conn.from_point[1]} (index {hi_index}) -> "
                    f"{conn.to_point[0]}.{conn.to_point[1]} (index {lo_index}): gradient "
                    f"orbits join points of consecutive index",
                )
            )
        if hi.tier == _TIER_SADDLE and lo.tier == _TIER_SADDLE:
            diags.append(
                Diagnostic(
                    "AssumptionViolated",
                    subject,
                    f"connection between saddle circles {hi.id} and {lo.id}",
                )
            )
        for orbit in conn.orbits:
            for msg in rep.word_errors(orbit.word):
                diags.append(Diagnostic("InvalidInput", subject, msg))
    return diags


def ensure_valid(model: BottModel) -> None:
    """Raise the error class of the first diagnostic, message listing them all."""
    diags = validate_model(model)
    if not diags:
        return
    messages = "; ".join(f"[{d.subject}] {d.message}" for d in diags)
    raise _DIAG_ERRORS.get(diags[0].code, InvalidInput)(messages)


# ---------------------------------------------------------------------------
# per-block cohomology


@dataclass
class BlockCohomology:
    """Cohomology data of one block pair (N_j, N_{j-1}).

    dims maps ambient degree to dimension; bases maps ambient degree to an
    orthonormal basis of the block's cohomology realized in the fibers of
    its Morse points (circle: w then z fiber; extremal blocks: p, (q, r)
    stacked, s fibers).
    """

    block_id: str
    kind: str
    level: int
    middle: int
    D: np.ndarray
    D_star: Optional[np.ndarray]
    dims: dict
    bases: dict
    torsion_factor: TorsionScalar
    acyclic: bool
    warnings: list = field(default_factory=list)


def block_cohomology(
    block: CriticalBlock,
    rep: Representation,
    n: Optional[int] = None,
    tol_rel: float = DEFAULT_TOL,
) -> BlockCohomology:
    """Cohomology and torsion factor of one critical block."""
    middle = block.middle_degree
    if n is not None and n != middle:
        raise InvalidInput(
            f"block {block.id}: degree parameter {n} does not match the block ({middle})"
        )
    n = middle
    warn: list[str] = []
    eye = rep.identity()

    if block.kind == CIRCLE:
        d = eye - block.delta * rep.evaluate(block.holonomy)
        # unit-scale anchor: D is built from unitaries, so a holonomy that
        # reduces to the identity must give an honest zero matrix
        res = rank_nullspace(d, tol_rel, scale=1.0)
        ker = res.kernel_basis
        coker = res.cokernel_basis
        k = ker.shape[1]
        dims = {n: k, n + 1: k} if k else {}
        bases = {n: ker, n + 1: coker}
        tau = map_torsion(d, ker, coker, tol_rel, scale=1.0)
        factor = TorsionScalar(tau.modulus ** ((-1) ** n), tau.basis_note)
        return BlockCohomology(
            block_id=block.id,
            kind=block.kind,
            level=block.level,
            middle=n,
            D=d,
            D_star=None,
            dims=dims,
            bases=bases,
            torsion_factor=factor,
            acyclic=(k == 0),
            warnings=warn,
        )

    # torus / Klein bottle: the beta sign is + exactly for the Klein bottle
    a = rep.evaluate(block.alpha)
    b = rep.evaluate(block.beta)
    sign = 1.0 if block.kind == KLEIN else -1.0
    da = eye - a
    db = eye + sign * b
    comm = float(np.abs(a @ b - b @ a).max())
    if comm > 1e-9:
        warn.append(
            f"block {block.id}: rho(alpha) and rho(beta) do not commute "
            f"(max defect {comm:.2e}); the block formulas assume they do"
        )
    d = np.concatenate([da, db], axis=0)            # C^m p -> C^m q (+) C^m r
    d_star = np.concatenate([db, a - eye], axis=1)  # C^m q (+) C^m r -> C^m s
    ker = rank_nullspace(d, tol_rel, scale=1.0).kernel_basis
    top = rank_nullspace(d_star.conj().T, tol_rel, scale=1.0).kernel_basis  # coker D*
    middle_basis = rank_nullspace(
        np.concatenate([d_star, d.conj().T], axis=0), tol_rel, scale=1.0
    ).kernel_basis  # ker D* orthogonal to im D
    dims = {}
    for degree, basis in ((n - 1, ker), (n, middle_basis), (n + 1, top)):
        if basis.shape[1]:
            dims[degree] = basis.shape[1]
    bases = {n - 1: ker, n: middle_basis, n + 1: top}
    acyclic = not dims
    return BlockCohomology(
        block_id=block.id,
        kind=block.kind,
        level=block.level,
        middle=n,
        D=d,
        D_star=d_star,
        dims=dims,
        bases=bases,
        torsion_factor=TorsionScalar(1.0, ACYCLIC_NOTE if acyclic else RELATIVE_NOTE),
        acyclic=acyclic,
        warnings=warn,
    )


# ---------------------------------------------------------------------------
# Morse expansion and the assembled cochain complex


@dataclass
class MorseData:
    """Morse points of the perturbed Bott function, grouped by index.

    points[k] lists the index-k critical points in the canonical layout
    (blocks in model order, circle points w/z, extremal points p/q/r/s);
    slot[(block_id, label)] = (index, position within points[index]).
    """

    points: tuple
    slot: dict

    def fiber(self, dim: int, block_id: str, label: str) -> tuple:
        """(degree, row slice) of the point's fiber in the assembled complex."""
        index, pos = self.slot[(block_id, label)]
        return index, slice(pos * dim, (pos + 1) * dim)


def expand_morse(model: BottModel) -> MorseData:
    """Replace every block by nondegenerate Morse points.

    A circle of index u yields w (index u) and z (index u + 1); a torus or
    Klein bottle yields p, q, r, s of indices 0, 1, 1, 2 (minimal) or
    1, 2, 2, 3 (maximal).
    """
    ensure_valid(model)
    points: list[list[MorsePoint]] = [[], [], [], []]
    slot: dict = {}
    for block in model.blocks:
        for label in block.labels():
            index = block.point_index(label)
            slot[(block.id, label)] = (index, len(points[index]))
            points[index].append(MorsePoint(block.id, label, index))
    return MorseData(points=tuple(tuple(p) for p in points), slot=slot)


def _block_internal_components(block: CriticalBlock, coh: BlockCohomology):
    """Within-block cochain components as (src label, dst label, matrix)."""
    if block.kind == CIRCLE:
        return [("w", "z", coh.D)]
    half = coh.D.shape[1]
    return [
        ("p", "q", coh.D[:half]),
        ("p", "r", coh.D[half:]),
        ("q", "s", coh.D_star[:, :half]),
        ("r", "s", coh.D_star[:, half:]),
    ]


def assemble_complex(
    model: BottModel,
    morse: Optional[MorseData] = None,
    cohomologies: Optional[Sequence[BlockCohomology]] = None,
    tol_rel: float = DEFAULT_TOL,
) -> FilteredComplex:
    """The explicit Morse cochain complex of the model with its filtration.

    Degree k is the direct sum of one C^m fiber per index-k point; the
    differential carries the within-block matrices plus the connection orbit
    sums; the filtration level of a fiber is its block's level.
    """
    if morse is None:
        morse = expand_morse(model)
    rep = model.representation
    m = rep.dim
    if cohomologies is None:
        cohomologies = [block_cohomology(b, rep, tol_rel=tol_rel) for b in model.blocks]
    dims = [m * len(morse.points[k]) for k in range(4)]
    diffs = [np.zeros((dims[k + 1], dims[k]), dtype=complex) for k in range(3)]
    blocks = model.block_map()

    for block, coh in zip(model.blocks, cohomologies):
        for src, dst, mat in _block_internal_components(block, coh):
            ks, rows_s = morse.fiber(m, block.id, src)
            kd, rows_d = morse.fiber(m, block.id, dst)
            diffs[ks][rows_d, rows_s] += mat
    for conn in model.connections:
        connection_kind(model, conn)
        ks, cols = morse.fiber(m, *conn.to_point)
        kd, rows = morse.fiber(m, *conn.from_point)
        diffs[ks][rows, cols] += conn.matrix(rep)

    anchor = 1.0
    for d in diffs:
        if d.size:
            anchor = max(anchor, float(np.linalg.norm(d, 2)))
    try:
        base = BasedComplex(dims, diffs, rank_scale=anchor)
    except NotAComplex as err:
        hints = [w for coh in cohomologies for w in coh.warnings]
        hint = f" ({'; '.join(hints)})" if hints else ""
        raise NotAComplex(
            f"assembled Morse differential fails d*d = 0: {err}{hint}; "
            f"the supplied connection orbits are not consistent gradient data"
        ) from err
    levels = []
    for k in range(4):
        lv = np.zeros(dims[k], dtype=int)
        for j, point in enumerate(morse.points[k]):
            lv[j * m : (j + 1) * m] = blocks[point.block_id].level
        levels.append(lv)
    return FilteredComplex(base, levels, 3)


# ---------------------------------------------------------------------------
# first-page structure and the d1 / d2 assembly


@dataclass
class E1Data:
    """First page assembled from the block cohomologies.

    basis[(level, degree)] is an ambient-coordinate orthonormal basis of
    E_1 at that slot (shape: dim of Morse degree x page dimension), the
    columns grouped by block in model order; segments[(level, degree)]
    lists (block_id, start, stop) column ranges.
    """

    basis: dict
    segments: dict
    anchor: float

    def dim(self, level: int, q: int) -> int:
        mat = self.basis.get((level, level + q))
        return 0 if mat is None else mat.shape[1]


def _build_e1(model, morse, cohomologies, complex_dims) -> E1Data:
    m = model.representation.dim
    basis = {}
    segments = {}
    for level in range(3):
        for k in range(4):
            cols = []
            segs = []
            start = 0
            for block, coh in zip(model.blocks, cohomologies):
                if block.level != level or k not in coh.bases:
                    continue
                b = coh.bases[k]
                if b.shape[1] == 0:
                    continue
                ambient = np.zeros((complex_dims[k], b.shape[1]), dtype=complex)
                if block.kind == CIRCLE:
                    label = "w" if k == coh.middle else "z"
                    _, rows = morse.fiber(m, block.id, label)
                    ambient[rows] = b
                else:
                    if k == coh.middle - 1:
                        _, rows = morse.fiber(m, block.id, "p")
                        ambient[rows] = b
                    elif k == coh.middle + 1:
                        _, rows = morse.fiber(m, block.id, "s")
                        ambient[rows] = b
                    else:
                        _, rows_q = morse.fiber(m, block.id, "q")
                        _, rows_r = morse.fiber(m, block.id, "r")
                        ambient[rows_q] = b[:m]
                        ambient[rows_r] = b[m:]
                cols.append(ambient)
                segs.append((block.id, start, start + b.shape[1]))
                start += b.shape[1]
            basis[(level, k)] = (
                np.concatenate(cols, axis=1)
                if cols
                else np.zeros((complex_dims[k], 0), dtype=complex)
            )
            segments[(level, k)] = segs
    return E1Data(basis=basis, segments=segments, anchor=0.0)


@dataclass
class D1Data:
    """First-page differential blocks, E_1^(n,q) -> E_1^(n+1,q)."""

    blocks: dict
    e1: E1Data
    filtered: FilteredComplex
    cohomologies: list
    warnings: list


def _missing_connection_warnings(model, supplied) -> list[str]:
    """Licensed block point pairs with no connection data, in model order."""
    out = []
    for lo in model.blocks:
        for hi in model.blocks:
            for (src, dst), kind in _LICENSED.items():
                if (lo.tier, hi.tier) != (src[0], dst[0]):
                    continue
                pair = ((lo.id, src[1]), (hi.id, dst[1]))
                if pair not in supplied:
                    out.append(
                        f"missing connection for {kind} pair "
                        f"{hi.id}.{dst[1]} -> {lo.id}.{src[1]} (component set to zero)"
                    )
    return out


def assemble_d1(
    model: BottModel, morse: Optional[MorseData] = None, tol_rel: float = DEFAULT_TOL
) -> D1Data:
    """First-page differentials from the licensed connection components.

    Components between blocks at consecutive filtration levels are the
    orbit sums of the supplied connections, restricted and projected onto
    the block cohomology bases. Licensed pairs with no connection default
    to zero, with one warning each.
    """
    if morse is None:
        morse = expand_morse(model)
    cohomologies = [block_cohomology(b, model.representation, tol_rel=tol_rel) for b in model.blocks]
    fc = assemble_complex(model, morse, cohomologies, tol_rel=tol_rel)
    e1 = _build_e1(model, morse, cohomologies, fc.base.dims)
    e1.anchor = fc.base.operator_scale()

    supplied = {(conn.to_point, conn.from_point) for conn in model.connections}
    warnings = [w for coh in cohomologies for w in coh.warnings]
    warnings += _missing_connection_warnings(model, supplied)

    blocks = {}
    for level in range(2):
        for k in range(4):
            src = e1.basis[(level, k)]
            tgt = e1.basis.get((level + 1, k + 1))
            if tgt is None:
                tgt = np.zeros((0, 0), dtype=complex)
            blocks[(level, k - level)] = tgt.conj().T @ fc.base.diff(k) @ src
    return D1Data(blocks=blocks, e1=e1, filtered=fc, cohomologies=cohomologies, warnings=warnings)


@dataclass
class PageTwo:
    """Second page: orthonormal bases of ker d1 / im d1 in E_1 coordinates."""

    bases: dict
    d1: D1Data

    def dim(self, level: int, q: int) -> int:
        mat = self.bases.get((level, q))
        return 0 if mat is None else mat.shape[1]


def page_two(d1: D1Data, tol_rel: float = DEFAULT_TOL) -> PageTwo:
    e1 = d1.e1
    anchor = max(1.0, e1.anchor)
    bases = {}
    for level in range(3):
        for k in range(4):
            q = k - level
            dim = e1.dim(level, q)
            if dim == 0:
                bases[(level, q)] = np.zeros((0, 0), dtype=complex)
                continue
            out = d1.blocks.get((level, q))
            into = d1.blocks.get((level - 1, q))
            if level < 2 and out is not None and out.shape[0]:
                span = rank_nullspace(out, tol_rel, scale=anchor).kernel_basis
            else:
                span = np.eye(dim, dtype=complex)
            if level > 0 and into is not None and into.shape[1]:
                image = range_basis(into, tol_rel, scale=anchor)
                coeff = rank_nullspace(image.conj().T @ span, tol_rel, scale=1.0).kernel_basis
                span = span @ coeff
            bases[(level, q)] = span
    return PageTwo(bases=bases, d1=d1)


def assemble_d2(
    model: BottModel, morse: MorseData, page2: PageTwo, tol_rel: float = DEFAULT_TOL
) -> dict:
    """Second-page differentials d2 : E_2^(0,q) -> E_2^(2,q-1), q = 0, 1, 2.

    The component is the connection orbit sum between the level-0 and
    level-2 fibers, conjugated onto the second-page subquotient bases.
    """
    e1 = page2.d1.e1
    base = page2.d1.filtered.base
    for conn in model.connections:
        connection_kind(model, conn)
    out = {}
    for q in range(3):
        k = q
        src2 = page2.bases.get((0, q))
        tgt2 = page2.bases.get((2, q - 1))
        src_amb = e1.basis[(0, k)]
        tgt_amb = e1.basis.get((2, k + 1))
        if tgt_amb is None or src2 is None or tgt2 is None:
            out[q] = np.zeros((0, 0), dtype=complex)
            continue
        component = tgt_amb.conj().T @ base.diff(k) @ src_amb
        out[q] = tgt2.conj().T @ component @ src2
    return out


# ---------------------------------------------------------------------------
# the end-to-end pipeline


@dataclass
class TorsionReport:
    """Everything total_torsion computed, ready for rendering."""

    per_block: list
    e1_dims: dict
    e2_dims: dict
    einf_dims: dict
    tau_d0: TorsionScalar
    tau_d1: TorsionScalar
    tau_d2: TorsionScalar
    total: TorsionScalar
    acyclic: bool
    warnings: list
    mode: str
    fast_total: Optional[float] = None
    tolerance: float = DEFAULT_TOL


def _page_complex_torsion(dims_by_slot, blocks_by_slot, next_bases, anchor, tol_rel):
    """Torsion of a page (slots (level, q), differential level -> level + step)
    relative to the next page's bases, graded by total degree."""
    degrees = range(4)
    offsets = {}
    dims = []
    for k in degrees:
        pos = 0
        for level in range(3):
            offsets[(level, k)] = pos
            pos += dims_by_slot.get((level, k - level), 0)
        dims.append(pos)

    step = blocks_by_slot["step"]
    diffs = []
    for k in range(3):
        mat = np.zeros((dims[k + 1], dims[k]), dtype=complex)
        for level in range(3 - step):
            block = blocks_by_slot.get((level, k - level))
            if block is None or block.size == 0:
                continue
            r0 = offsets[(level + step, k + 1)]
            c0 = offsets[(level, k)]
            mat[r0 : r0 + block.shape[0], c0 : c0 + block.shape[1]] = block
        diffs.append(mat)
    page = BasedComplex(dims, diffs, rank_scale=anchor)

    h = {}
    for k in degrees:
        cols = []
        for level in range(3):
            nxt = next_bases.get((level, k - level))
            if nxt is None:
                nxt = np.zeros((dims_by_slot.get((level, k - level), 0), 0), dtype=complex)
            lifted = np.zeros((dims[k], nxt.shape[1]), dtype=complex)
            if nxt.size:
                off = offsets[(level, k)]
                lifted[off : off + nxt.shape[0]] = nxt
            cols.append(lifted)
        h[k] = np.concatenate(cols, axis=1) if cols else np.zeros((dims[k], 0), dtype=complex)
    return complex_torsion(page, h, tol_rel=tol_rel)


def total_torsion(model: BottModel, mode: str = "auto", tol_rel: float = DEFAULT_TOL) -> TorsionReport:
    """Torsion of the isoenergy surface from the block data.

    mode "fast" uses the determinant product prod |det D_i|^((-1)^u_i),
    legal only when every block is a circle with nonsingular D. mode
    "full" runs the page-by-page pipeline. mode "auto" runs the full
    pipeline and cross-checks the fast product whenever it is legal.
    """
    if mode not in ("auto", "fast", "full"):
        raise InvalidInput(f"mode must be auto, fast or full, got {mode!r}")
    ensure_valid(model)
    cohomologies = [block_cohomology(b, model.representation, tol_rel=tol_rel) for b in model.blocks]
    fast_legal = all(
        b.kind == CIRCLE and coh.acyclic for b, coh in zip(model.blocks, cohomologies)
    )
    if mode == "fast" and not fast_legal:
        offenders = [
            f"{b.id} ({'non-circle' if b.kind != CIRCLE else 'singular D'})"
            for b, coh in zip(model.blocks, cohomologies)
            if b.kind != CIRCLE or not coh.acyclic
        ]
        raise FastPathUnavailable(
            "fast path needs all blocks to be circles with nonsingular D; "
            "offending blocks: " + ", ".join(offenders)
        )

    fast_value = None
    if fast_legal:
        log_fast = 0.0
        for b, coh in zip(model.blocks, cohomologies):
            det = det_modulus(coh.D)
            if det == 0.0:
                raise FastPathUnavailable(f"block {b.id}: D is singular")
            log_fast += (-1) ** b.index * math.log(det)
        fast_value = math.exp(log_fast)

    if mode == "fast":
        tau_d0 = TorsionScalar(fast_value, ACYCLIC_NOTE)
        return TorsionReport(
            per_block=cohomologies,
            e1_dims={},
            e2_dims={},
            einf_dims={},
            tau_d0=tau_d0,
            tau_d1=TorsionScalar(1.0),
            tau_d2=TorsionScalar(1.0),
            total=TorsionScalar(fast_value, ACYCLIC_NOTE),
            acyclic=True,
            warnings=[w for coh in cohomologies for w in coh.warnings],
            mode="fast",
            fast_total=fast_value,
            tolerance=tol_rel,
        )

    morse = expand_morse(model)
    d1 = assemble_d1(model, morse, tol_rel=tol_rel)
    page2 = page_two(d1, tol_rel=tol_rel)
    anchor = max(1.0, d1.e1.anchor)

    e1_dims = {
        (level, k - level): d1.e1.dim(level, k - level)
        for level in range(3)
        for k in range(4)
        if d1.e1.dim(level, k - level)
    }
    e2_dims = {key: b.shape[1] for key, b in page2.bases.items() if b.shape[1]}

    tau_d0_mod = 1.0
    all_blocks_acyclic = True
    for coh in cohomologies:
        tau_d0_mod *= coh.torsion_factor.modulus
        all_blocks_acyclic = all_blocks_acyclic and coh.acyclic
    tau_d0 = TorsionScalar(tau_d0_mod, ACYCLIC_NOTE if all_blocks_acyclic else RELATIVE_NOTE)

    d1_slots = dict(d1.blocks)
    d1_slots["step"] = 1
    e1_dims_full = {
        (level, k - level): d1.e1.dim(level, k - level) for level in range(3) for k in range(4)
    }
    tau_d1 = _page_complex_torsion(e1_dims_full, d1_slots, page2.bases, anchor, tol_rel)

    d2 = assemble_d2(model, morse, page2, tol_rel=tol_rel)
    e2_dims_full = {key: b.shape[1] for key, b in page2.bases.items()}
    d2_slots = {"step": 2}
    for q in range(3):
        d2_slots[(0, q)] = d2[q]

    # third page: cohomology of (E_2, d_2); levels 0 and 2 move, level 1 is stable
    page3 = {}
    for level in range(3):
        for k in range(4):
            q = k - level
            dim = e2_dims_full.get((level, q), 0)
            if dim == 0:
                page3[(level, q)] = np.zeros((0, 0), dtype=complex)
                continue
            span = np.eye(dim, dtype=complex)
            if level == 0:
                out = d2.get(q)
                if out is not None and out.shape[0]:
                    span = rank_nullspace(out, tol_rel, scale=anchor).kernel_basis
            if level == 2:
                into = d2.get(q + 1)
                if into is not None and into.shape[1]:
                    image = range_basis(into, tol_rel, scale=anchor)
                    coeff = rank_nullspace(image.conj().T @ span, tol_rel, scale=1.0).kernel_basis
                    span = span @ coeff
            page3[(level, q)] = span
    tau_d2 = _page_complex_torsion(e2_dims_full, d2_slots, page3, anchor, tol_rel)

    einf_dims = {key: b.shape[1] for key, b in page3.items() if b.shape[1]}
    acyclic = not einf_dims

    total_mod = tau_d0_mod * tau_d1.modulus * tau_d2.modulus
    total = TorsionScalar(total_mod, ACYCLIC_NOTE if acyclic else RELATIVE_NOTE)

    warnings = list(d1.warnings)
    if not acyclic:
        warnings.append(
            "limit page is nonzero: reported torsions are relative to the computed "
            "cohomology bases"
        )

    mode_used = "full"
    if mode == "auto" and fast_legal:
        mode_used = "auto"
        rel = abs(fast_value - total_mod) / max(abs(fast_value), 1e-300)
        if rel > 1e-8:
            raise TorsionError(
                f"fast path {fast_value:.12g} and full pipeline {total_mod:.12g} "
                f"disagree (rel {rel:.3e})"
            )

    return TorsionReport(
        per_block=cohomologies,
        e1_dims=e1_dims,
        e2_dims=e2_dims,
        einf_dims=einf_dims,
        tau_d0=tau_d0,
        tau_d1=tau_d1,
        tau_d2=tau_d2,
        total=total,
        acyclic=acyclic,
        warnings=warnings,
        mode=mode_used,
        fast_total=fast_value,
        tolerance=tol_rel,
    )
