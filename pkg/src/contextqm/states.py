"""Elementary states: one character per context, with stability tracking.

An elementary state answers every measurement question by holding, for
each context it has ever been asked about, a single selected joint
eigenvector (a character of that commutative subalgebra).  Different
contexts need not agree; agreement on a shared observable is the
*stability* property, tracked explicitly through records so that layers
materialized later can be conditioned on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, element_fingerprint, spectrum
from .contexts import Context, ContextRegistry, IncompatibleObservableError, contains

__all__ = [
    "Character",
    "StableRecord",
    "ElementaryState",
    "evaluate",
    "construct_state",
    "construct_stable_on",
    "is_stable",
    "check_character_properties",
]

# cross-context agreement threshold for stability
STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class Character:
    """Selection of joint eigenvector ``index`` in context ``context``."""

    context: Context
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.context.dimension:
            raise ValueError(
                f"index {self.index} out of range for {self.context.dimension}-dim context"
            )

    def value(self, element: AlgebraElement) -> float:
        """Eigenvalue read-off <e_k, A e_k> at the selected eigenvector."""
        v = self.context.vector(self.index)
        return float(np.real(np.vdot(v, element.matrix @ v)))


@dataclass(frozen=True)
class StableRecord:
    """An observable the state is pinned on, with its agreed value."""

    fingerprint: str
    element: AlgebraElement
    value: float


class ElementaryState:
    """A multilayer functional under construction.

    Layers are created lazily: querying a context the state has never
    seen draws a character index, restricted to indices consistent with
    all stable records contained in that context, weighted by the Born
    distribution of the attached unit vector when one is present and
    uniformly otherwise.  Mutable; a simulation run must own it
    exclusively.
    """

    def __init__(self, rng=None, attached_vector: np.ndarray | None = None):
        self.layers: dict[str, Character] = {}
        self.stable: dict[str, StableRecord] = {}
        self.rng = rng
        self.attached_vector = None
        self.stability_reset_count = 0
        if attached_vector is not None:
            vec = np.asarray(attached_vector, dtype=np.complex128)
            self.attached_vector = vec / np.linalg.norm(vec)

    # -- stability records ------------------------------------------------

    def add_stable_record(self, element: AlgebraElement, value: float):
        fp = element_fingerprint(element)
        self.stable[fp] = StableRecord(fp, element, float(value))

    def stable_fingerprints(self) -> set[str]:
        return set(self.stable)

    def attach_state(self, vector: np.ndarray):
        """Attach (or replace) the quantum state driving lazy layer draws.

        Attaching resets all stability records: stability certified under
        one ensemble is not carried into another.  The reset is counted so
        report metadata can flag it.
        """
        vec = np.asarray(vector, dtype=np.complex128)
        self.attached_vector = vec / np.linalg.norm(vec)
        if self.stable:
            self.stable = {}
        self.stability_reset_count += 1

    # -- layers -------------------------------------------------------------

    def _admissible_indices(self, ctx: Context) -> np.ndarray:
        """Indices consistent with every stable record contained in ctx."""
        ok = np.ones(ctx.dimension, dtype=bool)
        for record in self.stable.values():
            if not contains(ctx, record.element):
                continue
            reads = ctx.diagonal_values(record.element)
            ok &= np.abs(reads - record.value) <= STABILITY_TOL * max(
                1.0, abs(record.value)
            )
        return np.flatnonzero(ok)

    def ensure_layer(self, ctx: Context, rng=None) -> Character:
        """Return the character for ctx, drawing one if absent."""
        layer = self.layers.get(ctx.id)
        if layer is not None:
            return layer
        rng = rng if rng is not None else self.rng
        admissible = self._admissible_indices(ctx)
        if admissible.size == 0:
            raise ValueError(
                f"no character index in context {ctx.id} is consistent "
                "with the state's stable records"
            )
        if self.attached_vector is not None:
            amplitudes = ctx.basis.conj().T @ self.attached_vector
            weights = np.abs(amplitudes[admissible]) ** 2
            total = weights.sum()
            if total <= 1e-30:
                raise ValueError(
                    f"attached state has no weight on admissible indices of {ctx.id}"
                )
            weights = weights / total
        else:
            weights = np.full(admissible.size, 1.0 / admissible.size)
        if admissible.size == 1:
            index = int(admissible[0])
        else:
            if rng is None:
                raise ValueError(
                    f"layer for context {ctx.id} is absent and the state has "
                    "no randomness source to draw it"
                )
            index = int(admissible[rng.choice(admissible.size, p=weights)])
        layer = Character(ctx, index)
        self.layers[ctx.id] = layer
        return layer

    def set_layer(self, ctx: Context, index: int):
        self.layers[ctx.id] = Character(ctx, index)

    # -- export --------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "layers": sorted(
                (layer.context.id, layer.index) for layer in self.layers.values()
            ),
            "stable_records": sorted(
                (fp, record.value) for fp, record in self.stable.items()
            ),
            "stability_reset_on_attach": True,
            "stability_reset_count": self.stability_reset_count,
            "has_attached_state": self.attached_vector is not None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def __repr__(self):
        return (
            f"ElementaryState(layers={len(self.layers)}, stable={len(self.stable)})"
        )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def evaluate(phi: ElementaryState, ctx: Context, element: AlgebraElement) -> float:
    """Value of the state on an observable of the given context.

    The result is the eigenvalue of the observable at the selected joint
    eigenvector, so it always lies in the observable's spectrum.  Raises
    when the observable does not belong to the context; materializes the
    layer lazily when the context is new.
    """
    if not contains(ctx, element):
        raise IncompatibleObservableError(
            f"observable is not contained in context {ctx.id}"
        )
    layer = phi.ensure_layer(ctx)
    return layer.value(element)


def construct_state(
    assignments: dict[str, int],
    registry: ContextRegistry,
    rng=None,
) -> ElementaryState:
    """Build a state with explicitly chosen character indices.

    ``assignments`` maps context ids (already registered) to indices.
    Contexts not mentioned stay unset and will be drawn lazily.  Nothing
    about cross-context consistency is checked or enforced here: states
    with conflicting layers are legal and simply fail ``is_stable`` on
    the conflicted observables.
    """
    phi = ElementaryState(rng=rng)
    for context_id, index in assignments.items():
        ctx = registry.get(context_id)
        phi.set_layer(ctx, int(index))
    return phi


def _overlap_component(ctx: Context, other: Context, index: int) -> np.ndarray:
    """Indices of ``other`` in the same overlap component as ``index``.

    Basis vectors of the two contexts form a bipartite graph with edges
    where |<e_i, f_j>| is appreciable; connected components correspond to
    the joint eigenspaces of all shared observables.  Stability forces the
    other context's index into the component of the seed index.
    """
    overlap = np.abs(ctx.basis.conj().T @ other.basis) ** 2
    n, m = overlap.shape
    edge = overlap > 1e-12
    seen_left = {index}
    seen_right: set[int] = set()
    frontier_left = {index}
    while frontier_left:
        reached_right = set()
        for i in frontier_left:
            reached_right.update(int(j) for j in np.flatnonzero(edge[i]))
        reached_right -= seen_right
        seen_right |= reached_right
        frontier_left = set()
        for j in reached_right:
            for i in (int(i) for i in np.flatnonzero(edge[:, j])):
                if i not in seen_left:
                    seen_left.add(i)
                    frontier_left.add(i)
    return np.array(sorted(seen_right), dtype=int)


def construct_stable_on(
    ctx: Context,
    index: int,
    other_contexts,
    rng=None,
) -> ElementaryState:
    """Seeded construction: stable on every observable of ``ctx``.

    The seed context gets the given index.  Every other context receives an
    index from the overlap component of the seed vector, which is exactly
    the set of choices agreeing with the seed on all shared observables;
    within the component the choice is free (drawn from ``rng`` when
    given, lowest index otherwise).
    """
    phi = ElementaryState(rng=rng)
    phi.set_layer(ctx, int(index))
    for other in other_contexts:
        if other.id == ctx.id:
            continue
        component = _overlap_component(ctx, other, int(index))
        if component.size == 0:
            raise ValueError("contexts share no overlap component")
        if rng is not None and component.size > 1:
            choice = int(component[rng.choice(component.size)])
        else:
            choice = int(component[0])
        phi.set_layer(other, choice)
    return phi


def is_stable(phi: ElementaryState, element: AlgebraElement) -> bool:
    """True iff all stored layers containing the observable agree.

    A state with no layer containing the observable is vacuously stable
    on it.  Agreement threshold matches the stability tolerance used for
    lazy conditioning.
    """
    values = [
        layer.value(element)
        for layer in phi.layers.values()
        if contains(layer.context, element)
    ]
    if len(values) < 2:
        return True
    scale = max(1.0, max(abs(v) for v in values))
    return (max(values) - min(values)) <= STABILITY_TOL * scale


def check_character_properties(
    phi: ElementaryState,
    ctx: Context,
    samples: int = 20,
    rng=None,
) -> dict:
    """Verify the defining character properties on random context elements.

    Draws random observables diagonal in the context and reports maximum
    residuals for: zero preservation, unit preservation, positivity on
    squares, spectrum membership of values, spectrum exhaustion across
    the context's character indices, multiplicativity and linearity.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    layer = phi.ensure_layer(ctx)
    n = ctx.dimension
    algebra = ctx.algebra
    basis = ctx.basis

    def random_context_element():
        diag = rng.normal(size=n) * rng.choice([0.5, 1.0, 2.0])
        return AlgebraElement(
            (basis * diag) @ basis.conj().T, algebra
        )

    zero = AlgebraElement.zero(algebra)
    identity = AlgebraElement.identity(algebra)
    report = {
        "zero_residual": abs(evaluate(phi, ctx, zero)),
        "unit_residual": abs(evaluate(phi, ctx, identity) - 1.0),
        "square_negativity": 0.0,
        "spectrum_membership_residual": 0.0,
        "spectrum_exhaustion_residual": 0.0,
        "multiplicativity_residual": 0.0,
        "linearity_residual": 0.0,
    }
    for _ in range(samples):
        a = random_context_element()
        b = random_context_element()
        va, vb = evaluate(phi, ctx, a), evaluate(phi, ctx, b)

        v_square = evaluate(phi, ctx, a * a)
        report["square_negativity"] = max(report["square_negativity"], -v_square)

        points = spectrum(a)
        report["spectrum_membership_residual"] = max(
            report["spectrum_membership_residual"],
            min(abs(va - p) for p in points),
        )
        reads = ctx.diagonal_values(a)
        report["spectrum_exhaustion_residual"] = max(
            report["spectrum_exhaustion_residual"],
            max(min(abs(p - r) for r in reads) for p in points),
        )

        report["multiplicativity_residual"] = max(
            report["multiplicativity_residual"],
            abs(evaluate(phi, ctx, a * b) - va * vb),
        )
        s, t = rng.normal(size=2)
        report["linearity_residual"] = max(
            report["linearity_residual"],
            abs(evaluate(phi, ctx, s * a + t * b) - (s * va + t * vb)),
        )

    report["max_residual"] = max(report.values())
    report["ok"] = report["max_residual"] <= STABILITY_TOL
    report["context_id"] = ctx.id
    report["character_index"] = layer.index
    report["samples"] = samples
    return report
