"""Measurement instruments, the repeatable-update rule, and ray-coloring search.

A measurement asks one context's question of an elementary state.  The
update rule keeps the acting context's character untouched (so immediate
repeats agree), pins the measured observable (so any instrument sharing
it reproduces the value), and wipes everything else for lazy
re-draw — the controlled part of the state survives, the rest does not.

The module also hosts the spin-1 squared-projection observables and an
exhaustive search for noncontextual {0,1} assignments on ray sets, which
certifies that no context-independent valuation exists for the bundled
33-ray set while the contextual state model happily reproduces the
quantum statistics on the same observables.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .algebra import AlgebraDescriptor, AlgebraElement, element_fingerprint, spectral_decomposition
from .contexts import Context, IncompatibleObservableError, contains
from .states import ElementaryState, StableRecord

__all__ = [
    "Instrument",
    "MeasurementRecord",
    "KsSearchResult",
    "measure",
    "run_sequence",
    "pauli_matrices",
    "spin_axis_observable",
    "spin1_matrices",
    "spin1_squared_observables",
    "rotated_squared_family",
    "ks_noncontextual_search",
    "load_ray_csv",
    "peres33_rays",
    "transcript_to_json_dict",
]

ORTHOGONALITY_TOL = 1e-9

# sha256 of the bundled 33-ray coordinate file; refuse to run on a
# corrupted or edited copy
PERES33_SHA256 = "ffdfdbc67cd6952becf91d82aa2f15cff76367156d8ea5c4c9db09e0465c05a6"


@dataclass(frozen=True)
class Instrument:
    """A measuring device: it can probe exactly one context."""

    context: Context
    label: str = ""

    @property
    def type_id(self) -> str:
        return self.context.id


@dataclass(frozen=True)
class MeasurementRecord:
    step: int
    instrument_type: str
    instrument_label: str
    observable_fingerprint: str
    value: float
    post_stable: frozenset


def measure(phi: ElementaryState, inst: Instrument, element: AlgebraElement, rng=None):
    """Measure one observable with one instrument; returns (value, phi).

    The state is updated in place:

    * the acting context's character is unchanged (repeats are exact);
    * the measured observable joins the stable records, so every future
      layer — whatever the instrument — reproduces the value bit-for-bit;
    * stable records for other observables survive only if the acting
      context contains them;
    * all other layers are dropped; they are re-drawn lazily, conditioned
      on the surviving records and on the attached state vector, which is
      projected onto the eigenspace of the observed value.
    """
    ctx = inst.context
    if not contains(ctx, element):
        raise IncompatibleObservableError(
            f"instrument {inst.label or inst.type_id} cannot measure this observable"
        )
    fingerprint = element_fingerprint(element)
    acting = phi.ensure_layer(ctx, rng)

    record = phi.stable.get(fingerprint)
    value = record.value if record is not None else acting.value(element)

    phi.layers = {ctx.id: acting}
    kept = {
        fp: rec for fp, rec in phi.stable.items() if contains(ctx, rec.element)
    }
    kept[fingerprint] = StableRecord(fingerprint, element, value)
    phi.stable = kept

    if phi.attached_vector is not None:
        pairs = spectral_decomposition(element).pairs
        _, projector = min(pairs, key=lambda pair: abs(pair[0] - value))
        projected = projector.matrix @ phi.attached_vector
        weight = np.linalg.norm(projected)
        if weight > 1e-12:
            phi.attached_vector = projected / weight

    return value, phi


def run_sequence(phi0: ElementaryState, plan, rng=None) -> list[MeasurementRecord]:
    """Execute a measurement plan, returning the transcript.

    ``plan`` is a sequence of (Instrument, AlgebraElement) pairs.  The
    state is mutated step by step; the transcript snapshot records the
    stable set after each step.
    """
    plan = list(plan)
    if not plan:
        raise ValueError("measurement plan is empty")
    records = []
    for step, (inst, element) in enumerate(plan):
        value, phi0 = measure(phi0, inst, element, rng)
        records.append(
            MeasurementRecord(
                step=step,
                instrument_type=inst.type_id,
                instrument_label=inst.label,
                observable_fingerprint=element_fingerprint(element),
                value=value,
                post_stable=frozenset(phi0.stable),
            )
        )
    return records


def transcript_to_json_dict(records) -> dict:
    return {
        "steps": [
            {
                "step": r.step,
                "instrument_type": r.instrument_type,
                "instrument_label": r.instrument_label,
                "observable": r.observable_fingerprint,
                "value": r.value,
                "stable_count": len(r.post_stable),
            }
            for r in records
        ]
    }


# ---------------------------------------------------------------------------
# spin observables
# ---------------------------------------------------------------------------


def pauli_matrices(algebra: AlgebraDescriptor | None = None):
    """(sigma_x, sigma_y, sigma_z) on the 2x2 full algebra."""
    algebra = algebra or AlgebraDescriptor(2)
    sx = AlgebraElement([[0, 1], [1, 0]], algebra)
    sy = AlgebraElement([[0, -1j], [1j, 0]], algebra)
    sz = AlgebraElement([[1, 0], [0, -1]], algebra)
    return sx, sy, sz


def spin_axis_observable(theta: float, algebra: AlgebraDescriptor | None = None) -> AlgebraElement:
    """Spin component (eigenvalues +1/-1) along the axis at angle theta
    from the x-axis, in the x-z plane.

    The +1 eigenvector at theta = 0 is the x-polarized state, so a state
    polarized along x answers +1 with probability cos(theta/2)**2.
    """
    sx, _, sz = pauli_matrices(algebra)
    return np.cos(theta) * sx + np.sin(theta) * sz


def spin1_matrices(algebra: AlgebraDescriptor | None = None):
    """Spin-1 component operators (S_x, S_y, S_z), hbar = 1."""
    algebra = algebra or AlgebraDescriptor(3)
    s = 1.0 / np.sqrt(2.0)
    sx = AlgebraElement([[0, s, 0], [s, 0, s], [0, s, 0]], algebra)
    sy = AlgebraElement([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]], algebra)
    sz = AlgebraElement([[1, 0, 0], [0, 0, 0], [0, 0, -1]], algebra)
    return sx, sy, sz


def spin1_squared_observables():
    """The three squared spin-1 components along the coordinate axes.

    They commute pairwise, each has spectrum {0, 1}, and they sum to
    twice the identity — the structure behind both the sum rule of the
    ray-coloring search and the compatible-triple measurements.
    """
    sx, sy, sz = spin1_matrices()
    return sx * sx, sy * sy, sz * sz


def rotated_squared_family(axis_frame) -> tuple:
    """Squared spin-1 projections along an orthonormal frame of axes.

    ``axis_frame`` holds three real unit 3-vectors as rows.  Families of
    different frames sharing an axis share that axis's squared
    projection; the rest are generally incompatible.
    """
    frame = np.asarray(axis_frame, dtype=float)
    if frame.shape != (3, 3):
        raise ValueError("axis_frame must be three 3-vectors")
    if np.abs(frame @ frame.T - np.eye(3)).max() > 1e-10:
        raise ValueError("axis frame is not orthonormal")
    sx, sy, sz = spin1_matrices()
    squares = []
    for axis in frame:
        s_axis = axis[0] * sx + axis[1] * sy + axis[2] * sz
        squares.append(s_axis * s_axis)
    return tuple(squares)


# ---------------------------------------------------------------------------
# noncontextual-assignment search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KsSearchResult:
    """Outcome of the exhaustive {0,1}-assignment search.

    ``assignment`` maps ray index to the value of the squared projection
    along that ray; ``None`` together with ``exhausted=True`` is the
    proof-of-exhaustion marker.
    """

    assignment: dict | None
    exhausted: bool
    nodes: int
    ray_count: int
    triad_count: int
    pair_count: int

    @property
    def satisfiable(self) -> bool:
        return self.assignment is not None

    def to_json_dict(self) -> dict:
        return {
            "satisfiable": self.satisfiable,
            "assignment": None
            if self.assignment is None
            else {str(k): int(v) for k, v in sorted(self.assignment.items())},
            "exhausted": self.exhausted,
            "nodes": self.nodes,
            "ray_count": self.ray_count,
            "triad_count": self.triad_count,
            "pair_count": self.pair_count,
        }


def _orthogonal_structure(rays: np.ndarray):
    m = len(rays)
    dots = np.abs(rays @ rays.T)
    pairs = [
        (i, j)
        for i in range(m)
        for j in range(i + 1, m)
        if dots[i, j] <= ORTHOGONALITY_TOL
    ]
    orth = {i: set() for i in range(m)}
    for i, j in pairs:
        orth[i].add(j)
        orth[j].add(i)
    triads = [
        (i, j, k)
        for i, j in pairs
        for k in orth[i] & orth[j]
        if k > j
    ]
    return pairs, triads


def ks_noncontextual_search(rays, pair_rule: bool = True) -> KsSearchResult:
    """Exhaustive search for a context-independent valuation of a ray set.

    Values are those of the squared spin projection along each ray.  In
    every complete orthogonal triad the three squares sum to 2, so
    exactly one value is 0.  Two orthogonal rays can never both carry 0:
    completing them to a triad would force the third square to 2, outside
    its spectrum — this pair constraint is implied physics and is applied
    by default so partial triads bind too.

    Plain depth-first backtracking with unit propagation; ``nodes``
    counts decision points.  Exhaustion without a model certifies that no
    assignment exists.
    """
    rays = np.asarray(rays, dtype=float)
    if rays.ndim != 2 or rays.shape[1] != 3 or len(rays) == 0:
        raise ValueError("rays must be a nonempty list of 3-vectors")
    norms = np.linalg.norm(rays, axis=1)
    if np.abs(norms - 1.0).max() > 1e-9:
        raise ValueError("rays must be normalized")

    pairs, triads = _orthogonal_structure(rays)
    if not triads:
        raise ValueError("ray set contains no complete orthogonal triad")

    m = len(rays)
    values = [None] * m
    pair_partners = {i: set() for i in range(m)}
    if pair_rule:
        for i, j in pairs:
            pair_partners[i].add(j)
            pair_partners[j].add(i)
    triads_of = {i: [] for i in range(m)}
    for t, triad in enumerate(triads):
        for i in triad:
            triads_of[i].append(t)

    nodes = 0

    def consistent(i) -> bool:
        """Local constraint check after ray i got a value."""
        if values[i] == 0:
            for j in pair_partners[i]:
                if values[j] == 0:
                    return False
        for t in triads_of[i]:
            assigned = [values[k] for k in triads[t] if values[k] is not None]
            zeros = assigned.count(0)
            if zeros > 1:
                return False
            if len(assigned) == 3 and zeros != 1:
                return False
        return True

    def propagate(i, trail) -> bool:
        """Force values implied by ray i's assignment; record them on trail."""
        queue = [i]
        while queue:
            current = queue.pop()
            if values[current] == 0 and pair_partners[current]:
                for j in pair_partners[current]:
                    if values[j] is None:
                        values[j] = 1
                        trail.append(j)
                        if not consistent(j):
                            return False
                        queue.append(j)
            for t in triads_of[current]:
                triad = triads[t]
                assigned = [k for k in triad if values[k] is not None]
                if len(assigned) == 2:
                    (free,) = (k for k in triad if values[k] is None)
                    zeros = sum(1 for k in assigned if values[k] == 0)
                    forced = 1 if zeros == 1 else 0
                    values[free] = forced
                    trail.append(free)
                    if not consistent(free):
                        return False
                    queue.append(free)
        return True

    def search() -> bool:
        nonlocal nodes
        try:
            pivot = values.index(None)
        except ValueError:
            return True
        for candidate in (0, 1):
            nodes += 1
            trail = [pivot]
            values[pivot] = candidate
            if consistent(pivot) and propagate(pivot, trail) and search():
                return True
            for k in trail:
                values[k] = None
        return False

    if search():
        return KsSearchResult(
            assignment={i: int(values[i]) for i in range(m)},
            exhausted=False,
            nodes=nodes,
            ray_count=m,
            triad_count=len(triads),
            pair_count=len(pairs),
        )
    return KsSearchResult(
        assignment=None,
        exhausted=True,
        nodes=nodes,
        ray_count=m,
        triad_count=len(triads),
        pair_count=len(pairs),
    )


# ---------------------------------------------------------------------------
# ray-set I/O
# ---------------------------------------------------------------------------


def load_ray_csv(path) -> np.ndarray:
    """Read rays from CSV lines "x,y,z"; '#' starts a comment; normalizes."""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"malformed ray line: {line!r}")
            rows.append([float(p) for p in parts])
    if not rows:
        raise ValueError("ray file contains no rays")
    rays = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(rays, axis=1)
    if norms.min() < 1e-12:
        raise ValueError("ray file contains a zero vector")
    return rays / norms[:, None]


def peres33_rays() -> np.ndarray:
    """The bundled 33-ray set, checksum-verified on every load."""
    ref = resources.files("contextqm.data").joinpath("peres33.csv")
    raw = ref.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != PERES33_SHA256:
        raise RuntimeError(
            f"bundled ray file failed its checksum ({digest}); refusing to use it"
        )
    rows = []
    for line in raw.decode("utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([float(p) for p in line.split(",")])
    rays = np.asarray(rows, dtype=float)
    return rays / np.linalg.norm(rays, axis=1)[:, None]
