"""Born-consistent ensembles of elementary states and quantum averages.

A quantum state (unit vector tau, equivalently its rank-one projector)
labels an ensemble of elementary states.  Sampling a member draws each
requested context's character index from the Born weights |<e_k, tau>|^2,
independently per context: the model never defines — deliberately — a
joint law across incompatible contexts, only the per-context marginals.
Averages over samples converge to the exact functional trace(p_tau A).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraDescriptor, AlgebraElement, element_fingerprint, spectrum
from .contexts import Context, IncompatibleObservableError, contains
from .states import ElementaryState

__all__ = [
    "QuantumState",
    "EnsembleReport",
    "born_distribution",
    "sample_elementary_state",
    "ensemble_average",
    "quantum_average_exact",
    "linearity_residual",
    "instrument_independence_report",
    "x_polarized",
]


class QuantumState:
    """Unit vector tau with its rank-one projector p_tau.

    ``home_context`` marks the context on which members of the ensemble
    are stable by definition of the equivalence class; leave it unset for
    plain per-context Born sampling.
    """

    __slots__ = ("vector", "algebra", "home_context")

    def __init__(self, vector, algebra: AlgebraDescriptor, home_context: Context | None = None):
        vec = np.array(vector, dtype=np.complex128).reshape(-1)
        if vec.shape[0] != algebra.dimension:
            raise ValueError(
                f"vector length {vec.shape[0]} does not match dimension {algebra.dimension}"
            )
        length = np.linalg.norm(vec)
        if abs(length - 1.0) > 1e-6:
            raise ValueError(f"state vector is not normalized (norm {length:.3e})")
        if abs(length - 1.0) > 0:
            vec = vec / length
        vec.flags.writeable = False
        self.vector = vec
        self.algebra = algebra
        self.home_context = home_context

    @property
    def projector(self) -> AlgebraElement:
        return AlgebraElement(np.outer(self.vector, self.vector.conj()), self.algebra)

    def expectation(self, element: AlgebraElement) -> complex:
        """<tau, S tau> for arbitrary (not necessarily Hermitian) S."""
        return complex(np.vdot(self.vector, element.matrix @ self.vector))

    def __repr__(self):
        return f"QuantumState(dim={self.algebra.dimension})"


def x_polarized() -> QuantumState:
    """Spin-1/2 state polarized along +x (equal superposition)."""
    return QuantumState(np.array([1.0, 1.0]) / np.sqrt(2.0), AlgebraDescriptor(2))


@dataclass
class EnsembleReport:
    """Empirical-vs-exact summary of one sampled observable.

    ``histogram`` counts samples per spectrum point.  Reports merge
    associatively (parallel-variance combination), so partitioned runs
    reduce to the same result.
    """

    observable_fingerprint: str
    sample_count: int
    empirical_mean: float
    exact_mean: float
    sample_variance: float
    histogram: dict = field(default_factory=dict)

    @property
    def standard_error(self) -> float:
        if self.sample_count <= 0:
            return float("inf")
        return float(np.sqrt(self.sample_variance / self.sample_count))

    def merge(self, other: "EnsembleReport") -> "EnsembleReport":
        if self.observable_fingerprint != other.observable_fingerprint:
            raise ValueError("cannot merge reports for different observables")
        n1, n2 = self.sample_count, other.sample_count
        n = n1 + n2
        delta = other.empirical_mean - self.empirical_mean
        mean = self.empirical_mean + delta * n2 / n
        m2 = (
            self.sample_variance * max(n1 - 1, 0)
            + other.sample_variance * max(n2 - 1, 0)
            + delta**2 * n1 * n2 / n
        )
        hist = dict(self.histogram)
        for key, count in other.histogram.items():
            hist[key] = hist.get(key, 0) + count
        return EnsembleReport(
            observable_fingerprint=self.observable_fingerprint,
            sample_count=n,
            empirical_mean=mean,
            exact_mean=self.exact_mean,
            sample_variance=m2 / max(n - 1, 1),
            histogram=hist,
        )

    def to_json_dict(self) -> dict:
        return {
            "observable": self.observable_fingerprint,
            "sample_count": self.sample_count,
            "empirical_mean": self.empirical_mean,
            "exact_mean": self.exact_mean,
            "standard_error": self.standard_error,
            "histogram": {str(k): int(v) for k, v in sorted(self.histogram.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    CSV_HEADER = "observable,sample_count,empirical_mean,exact_mean,standard_error"

    def to_csv_row(self) -> str:
        return (
            f"{self.observable_fingerprint},{self.sample_count},"
            f"{self.empirical_mean!r},{self.exact_mean!r},{self.standard_error!r}"
        )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def born_distribution(psi: QuantumState, ctx: Context) -> np.ndarray:
    """Probabilities |<e_k, tau>|^2 of the context's character indices."""
    if ctx.dimension != psi.algebra.dimension:
        raise ValueError("state and context dimensions differ")
    amplitudes = ctx.basis.conj().T @ psi.vector
    return np.abs(amplitudes) ** 2


def sample_elementary_state(psi: QuantumState, contexts, rng) -> ElementaryState:
    """Draw one member of the ensemble labeled by ``psi``.

    Every context in ``contexts`` gets a layer immediately; unseen
    contexts will be drawn lazily from the same attached vector.  When
    the state has a home context, its layer is drawn first and the basis
    projectors of the home context become stable records, so any other
    context containing them is conditioned accordingly.
    """
    phi = ElementaryState(rng=rng, attached_vector=psi.vector)
    if psi.home_context is not None:
        home = psi.home_context
        layer = phi.ensure_layer(home)
        for k in range(home.dimension):
            phi.add_stable_record(
                home.basis_projector(k), 1.0 if k == layer.index else 0.0
            )
    for ctx in contexts:
        phi.ensure_layer(ctx)
    return phi


def ensemble_average(
    psi: QuantumState,
    element: AlgebraElement,
    ctx: Context,
    sample_count: int,
    rng,
) -> EnsembleReport:
    """Empirical mean of an observable over a fresh sample of the ensemble.

    Each sample is an independent elementary state; only its character
    index in ``ctx`` matters for this observable, so the draw is
    vectorized over indices rather than materializing states one by one.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    if not contains(ctx, element):
        raise IncompatibleObservableError("observable is not contained in the context")
    probs = born_distribution(psi, ctx)
    reads = ctx.diagonal_values(element)
    indices = rng.choice(ctx.dimension, size=sample_count, p=probs / probs.sum())
    values = reads[indices]

    points = spectrum(element)
    histogram: dict = {}
    for point in points:
        hits = int(np.count_nonzero(np.abs(values - point) <= 1e-9 * max(1.0, abs(point))))
        if hits:
            histogram[round(float(point), 12)] = hits

    return EnsembleReport(
        observable_fingerprint=element_fingerprint(element),
        sample_count=sample_count,
        empirical_mean=float(values.mean()),
        exact_mean=float(np.real(psi.expectation(element))),
        sample_variance=float(values.var(ddof=1)) if sample_count > 1 else 0.0,
        histogram=histogram,
    )


# ---------------------------------------------------------------------------
# exact functionals
# ---------------------------------------------------------------------------


def quantum_average_exact(psi: QuantumState, element: AlgebraElement) -> float:
    """The ensemble average extracted from the compression identity.

    p_tau A p_tau is proportional to p_tau; the coefficient is
    trace(p_tau A), which this returns.  It coincides with <tau, A tau>
    to machine precision — both forms are exercised by the test suite.
    """
    return float(np.real(np.trace(psi.projector.matrix @ element.matrix)))


def linearity_residual(
    psi: QuantumState, a: AlgebraElement, b: AlgebraElement
) -> float:
    """|Psi(A+B) - Psi(A) - Psi(B)|, meaningful precisely because it is
    checked on non-commuting pairs: additivity of the ensemble average
    does not require compatibility."""
    return abs(
        quantum_average_exact(psi, a + b)
        - quantum_average_exact(psi, a)
        - quantum_average_exact(psi, b)
    )


def instrument_independence_report(
    psi: QuantumState,
    element: AlgebraElement,
    ctx1: Context,
    ctx2: Context,
    sample_count: int,
    rng,
) -> dict:
    """Compare an observable's distribution measured via two contexts.

    Both contexts must contain the observable.  The exact marginals are
    computed from the Born weights (they agree identically, being sums of
    the same eigenprojector expectations); the empirical cumulative
    distributions at every spectrum threshold are compared against the
    4-pooled-standard-error band.
    """
    for ctx in (ctx1, ctx2):
        if not contains(ctx, element):
            raise IncompatibleObservableError(
                f"observable is not shared by context {ctx.id}"
            )
    points = sorted(spectrum(element))

    def exact_cdf(ctx):
        probs = born_distribution(psi, ctx)
        reads = ctx.diagonal_values(element)
        return [float(probs[reads <= point + 1e-9].sum()) for point in points]

    def empirical_values(ctx):
        probs = born_distribution(psi, ctx)
        reads = ctx.diagonal_values(element)
        idx = rng.choice(ctx.dimension, size=sample_count, p=probs / probs.sum())
        return reads[idx]

    exact1, exact2 = exact_cdf(ctx1), exact_cdf(ctx2)
    values1, values2 = empirical_values(ctx1), empirical_values(ctx2)

    thresholds = []
    max_exact_diff = 0.0
    worst_band_ratio = 0.0
    for i, point in enumerate(points):
        f1 = float(np.mean(values1 <= point + 1e-9))
        f2 = float(np.mean(values2 <= point + 1e-9))
        pooled = (f1 * sample_count + f2 * sample_count) / (2 * sample_count)
        pooled_se = float(
            np.sqrt(max(pooled * (1 - pooled), 0.0) * (2.0 / sample_count))
        )
        diff = abs(f1 - f2)
        band = 4.0 * pooled_se
        # degenerate thresholds (pooled 0 or 1) have zero variance and must
        # agree exactly
        ratio = diff / band if band > 0 else (0.0 if diff == 0 else np.inf)
        worst_band_ratio = max(worst_band_ratio, ratio)
        max_exact_diff = max(max_exact_diff, abs(exact1[i] - exact2[i]))
        thresholds.append(
            {
                "threshold": float(point),
                "empirical_cdf_1": f1,
                "empirical_cdf_2": f2,
                "exact_cdf": exact1[i],
                "pooled_se": pooled_se,
                "within_band": bool(diff <= band) if band > 0 else diff == 0.0,
            }
        )

    return {
        "context_1": ctx1.id,
        "context_2": ctx2.id,
        "sample_count": sample_count,
        "thresholds": thresholds,
        "max_exact_marginal_diff": max_exact_diff,
        "worst_band_ratio": float(worst_band_ratio),
        "ok": bool(max_exact_diff <= 1e-12 and worst_band_ratio <= 1.0),
    }
