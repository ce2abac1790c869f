"""Truncated-ladder harmonic oscillator and its time-ordered correlations.

Vacuum expectations of products of position operators are computed along
two independent routes — explicit matrix products on a finite Fock
truncation, and the pairing expansion over the closed-form two-point
kernel — and the library trusts the closed form only because the routes
agree.  On top sit the damped-projector limits, the Gaussian generating
functional of a classical source, and its finite-difference functional
derivatives.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .algebra import AlgebraElement
from .gns import StateFunctional

__all__ = [
    "CoarseGridWarning",
    "FockTruncation",
    "TimeGrid",
    "SourceFunction",
    "two_point",
    "perfect_matchings",
    "wick_green",
    "fock_oracle_green",
    "propagator_quadrature",
    "ground_projector_limit",
    "hamiltonian_sandwich_residual",
    "damped_ladder_magnitude",
    "generating_functional",
    "functional_derivative_green",
]

# pairing expansion is factorially bounded; (12-1)!! = 10395 terms
MAX_WICK_ORDER = 12


class CoarseGridWarning(UserWarning):
    """The source grid step resolves the oscillation poorly."""


class FockTruncation:
    """Ladder operators on the lowest ``cutoff`` levels.

    The lowering operator annihilates level 0 and maps level k to
    sqrt(k) times level k-1; the canonical commutator holds exactly
    except in the very top diagonal entry, which truncation spoils.
    """

    def __init__(self, cutoff: int, omega: float = 1.0):
        if cutoff < 2:
            raise ValueError("cutoff must be at least 2")
        if omega <= 0:
            raise ValueError("omega must be positive")
        self.cutoff = int(cutoff)
        self.omega = float(omega)
        self.lowering = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(
            np.complex128
        )
        self.raising = self.lowering.conj().T
        self.number = self.raising @ self.lowering
        self.hamiltonian = omega * (self.number + 0.5 * np.eye(cutoff))

    def position_operator(self, t: float = 0.0) -> np.ndarray:
        """Heisenberg position at time t."""
        phase = np.exp(-1j * self.omega * t)
        return (self.lowering * phase + self.raising * np.conj(phase)) / np.sqrt(
            2.0 * self.omega
        )

    def commutator_defect(self) -> np.ndarray:
        """[a-, a+] minus the identity: zero everywhere except the top level."""
        comm = self.lowering @ self.raising - self.raising @ self.lowering
        return comm - np.eye(self.cutoff)


def two_point(t1: float, t2: float, omega: float) -> complex:
    """Time-ordered vacuum two-point function of the position operator.

    Closed form exp(-i omega |t1 - t2|) / (2 omega), symmetric in its
    time arguments.  Its validity rests on the agreement of the
    energy-integral quadrature and the Fock-truncation oracle, both kept
    in this module and compared in the test suite.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    return complex(np.exp(-1j * omega * abs(t1 - t2)) / (2.0 * omega))


def perfect_matchings(indices) -> list[list[tuple]]:
    """All perfect matchings of an even index set (smallest-first recursion)."""
    indices = list(indices)
    if len(indices) % 2:
        raise ValueError("perfect matchings need an even number of indices")
    if not indices:
        return [[]]
    first, rest = indices[0], indices[1:]
    matchings = []
    for pick in range(len(rest)):
        partner = rest[pick]
        remaining = rest[:pick] + rest[pick + 1 :]
        for tail in perfect_matchings(remaining):
            matchings.append([(first, partner)] + tail)
    return matchings


def wick_green(times, omega: float) -> complex:
    """n-point vacuum correlation as a sum over pairings.

    Odd orders vanish identically; even orders sum the product of
    two-point kernels over all (n-1)!! perfect matchings of the time
    arguments.  Orders above 12 are rejected to keep the enumeration
    desk-scale.
    """
    times = [float(t) for t in times]
    n = len(times)
    if n > MAX_WICK_ORDER:
        raise ValueError(f"order {n} exceeds the pairing-enumeration cap {MAX_WICK_ORDER}")
    if n % 2:
        return 0.0 + 0.0j
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for matching in perfect_matchings(range(n)):
        term = 1.0 + 0.0j
        for i, j in matching:
            term *= two_point(times[i], times[j], omega)
        total += term
    return total


def fock_oracle_green(times, omega: float, cutoff: int | None = None) -> complex:
    """n-point correlation by explicit truncated matrix products.

    Times are applied latest-leftmost (chronological ordering); the
    result is the vacuum-vacuum matrix element, i.e. the coefficient
    multiplying the ground projector after compressing the ordered
    product.  Position couples adjacent levels only, so any cutoff above
    the order is exact; the default keeps a margin of 6.
    """
    times = [float(t) for t in times]
    n = len(times)
    if cutoff is None:
        cutoff = n + 6
    if cutoff < n + 2:
        raise ValueError(f"cutoff {cutoff} too small for an order-{n} correlation")
    if n == 0:
        return 1.0 + 0.0j
    fock = FockTruncation(cutoff, omega)
    product = np.eye(cutoff, dtype=np.complex128)
    for t in sorted(times, reverse=True):
        product = product @ fock.position_operator(t)
    return complex(product[0, 0])


def propagator_quadrature(
    t1: float, t2: float, omega: float, epsilon: float = 1e-6
) -> complex:
    """Energy-integral route to the two-point kernel, for validation only.

    Evaluates (1/2pi) * integral dE exp(-iE(t1-t2)) / (omega^2 - E^2 - i eps)
    by real-axis quadrature with a small finite regulator.  The integrand
    is even in E, so only the cosine part survives; the Lorentzian spike
    at E = omega is resolved by splitting the axis and hinting the peak.
    Returns the regulated kernel, which tends to i/(2 omega) *
    exp(-i omega |t|) as the regulator vanishes.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    t = abs(t1 - t2)
    delta = 1e-2 * omega

    def base_real(e):
        d = omega * omega - e * e
        return d / (d * d + epsilon * epsilon)

    def base_imag(e):
        d = omega * omega - e * e
        return epsilon / (d * d + epsilon * epsilon)

    quad_opts = dict(limit=400, epsabs=1e-13, epsrel=1e-11)
    total = 0.0 + 0.0j
    for base, unit in ((base_real, 1.0 + 0.0j), (base_imag, 0.0 + 1.0j)):
        inner, _ = integrate.quad(
            lambda e: base(e) * math.cos(e * t), 0.0, omega - delta, **quad_opts
        )
        with warnings.catch_warnings():
            # the regulator spike is 1e6 tall and 1e-6 wide: roundoff noise
            # beyond the requested tolerance is expected and harmless there
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            spike, _ = integrate.quad(
                lambda e: base(e) * math.cos(e * t),
                omega - delta,
                omega + delta,
                points=[omega],
                **quad_opts,
            )
        if t > 0:
            tail, _ = integrate.quad(
                base, omega + delta, np.inf, weight="cos", wvar=t, limit=400
            )
        else:
            tail, _ = integrate.quad(base, omega + delta, np.inf, **quad_opts)
        total += unit * (inner + spike + tail)
    # even integrand: the half-axis doubles; 1/(2 pi) normalization
    return complex(total / np.pi)


# ---------------------------------------------------------------------------
# damped projector limits
# ---------------------------------------------------------------------------


def ground_projector_limit(r: float, cutoff: int) -> tuple[np.ndarray, float]:
    """exp(-r a+ a-) on the truncation, and its distance to the ground projector.

    Both operators are diagonal, so the operator-norm distance is the
    largest suppressed entry, exactly exp(-r) for positive r — no
    eigensolver is involved, keeping the identity sharp to the last bit.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    levels = np.arange(cutoff, dtype=float)
    damped = np.diag(np.exp(-r * levels)).astype(np.complex128)
    target = np.zeros(cutoff)
    target[0] = 1.0
    deviation = float(np.max(np.abs(np.exp(-r * levels) - target)))
    return damped, deviation


def hamiltonian_sandwich_residual(r: float, omega: float, cutoff: int) -> float:
    """Norm of exp(-rN) H exp(-rN) - (omega/2) exp(-2rN).

    The compressed energy tends to the ground energy times the compressed
    identity as the damping grows; on the truncation the residual is
    omega * max_k k exp(-2rk), dominated by the first excited level once
    r is order one.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    levels = np.arange(cutoff, dtype=float)
    sandwich = np.exp(-r * levels) * (omega * (levels + 0.5)) * np.exp(-r * levels)
    compressed_identity = 0.5 * omega * np.exp(-2.0 * r * levels)
    return float(np.max(np.abs(sandwich - compressed_identity)))


def damped_ladder_magnitude(
    k: int,
    l: int,
    r1: float,
    r2: float,
    cutoff: int,
    functional: StateFunctional,
) -> float:
    """|Psi(exp(-r1 N) (a+)^k (a-)^l exp(-r2 N))| on the truncation.

    The damping factors suppress the ladder words by exp(-r1 k - r2 l)
    up to a cutoff-dependent constant; the decay is what lets weak limits
    of damped words vanish level by level.  k = l = 0 is excluded — there
    is nothing to suppress.
    """
    if k < 0 or l < 0:
        raise ValueError("ladder powers must be nonnegative")
    if k == 0 and l == 0:
        raise ValueError("k + l must be positive")
    if functional.algebra.dimension != cutoff:
        raise ValueError("functional is not defined on this truncation size")
    fock = FockTruncation(cutoff)
    damp1 = np.diag(np.exp(-r1 * np.arange(cutoff, dtype=float)))
    damp2 = np.diag(np.exp(-r2 * np.arange(cutoff, dtype=float)))
    word = np.linalg.matrix_power(fock.raising, k) @ np.linalg.matrix_power(
        fock.lowering, l
    )
    sandwiched = AlgebraElement(damp1 @ word @ damp2, functional.algebra)
    return abs(functional.value(sandwiched))


# ---------------------------------------------------------------------------
# sources and the generating functional
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [t_min, t_max] with ``steps`` nodes."""

    t_min: float
    t_max: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("a grid needs at least 2 nodes")
        if not self.t_max > self.t_min:
            raise ValueError("grid must be strictly increasing")

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.steps - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.steps)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.steps, self.dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def node_index(self, t: float) -> int:
        """Index of the node at time t; rejects off-grid times."""
        position = (t - self.t_min) / self.dt
        index = int(round(position))
        if index < 0 or index >= self.steps or abs(position - index) > 1e-9:
            raise ValueError(f"time {t} is not a node of the grid")
        return index


@dataclass(frozen=True)
class SourceFunction:
    """Real source j(t) sampled on a uniform grid."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (self.grid.steps,):
            raise ValueError("sample count does not match the grid")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_callable(cls, fn, grid: TimeGrid) -> "SourceFunction":
        return cls(grid, np.array([fn(t) for t in grid.nodes()], dtype=float))

    @classmethod
    def from_csv(cls, path) -> "SourceFunction":
        """Read "t,j" lines ('#' comments); the times must be uniform."""
        times, values = [], []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                t_text, j_text = line.split(",")
                times.append(float(t_text))
                values.append(float(j_text))
        if len(times) < 2:
            raise ValueError("source file needs at least 2 samples")
        times = np.asarray(times)
        deltas = np.diff(times)
        if deltas.min() <= 0 or np.abs(deltas - deltas[0]).max() > 1e-9 * abs(deltas[0]):
            raise ValueError("source grid must be uniform and increasing")
        grid = TimeGrid(float(times[0]), float(times[-1]), len(times))
        return cls(grid, np.asarray(values, dtype=float))


def _causal_kernel(delta_t: np.ndarray, omega: float) -> np.ndarray:
    """The time-ordered kernel i exp(-i omega |t|) / (2 omega)."""
    return 1j * np.exp(-1j * omega * np.abs(delta_t)) / (2.0 * omega)


def generating_functional(source: SourceFunction, omega: float) -> complex:
    """Z(j) = exp((i/2) double-integral of j D j), by trapezoid quadrature.

    D is the time-ordered kernel of ``two_point`` (times i); the kernel
    normalization is pinned by the finite-difference route reproducing
    the two-point function, not by convention.  A grid step above
    0.1/omega triggers a CoarseGridWarning.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    grid = source.grid
    if grid.dt > 0.1 / omega:
        warnings.warn(
            f"grid step {grid.dt:.3g} exceeds 0.1/omega = {0.1 / omega:.3g}; "
            "quadrature of the oscillating kernel will be coarse",
            CoarseGridWarning,
            stacklevel=2,
        )
    nodes = grid.nodes()
    weights = grid.trapezoid_weights()
    weighted = weights * source.samples
    kernel = _causal_kernel(nodes[:, None] - nodes[None, :], omega)
    exponent = 0.5j * (weighted @ kernel @ weighted)
    return complex(np.exp(exponent))


def functional_derivative_green(
    grid: TimeGrid,
    times,
    omega: float,
    h: float = 1e-3,
) -> complex:
    """n-point function from finite differences of the generating functional.

    Each requested time carries a delta source realized as a single-node
    spike whose height compensates the node's trapezoid weight, so its
    integral is the source strength exactly.  Central differences in the
    strengths give the mixed n-th derivative at zero source, and the
    (1/i)^n prefactor converts it to the correlation function; the error
    is O(h^2) plus the quadrature error of the kernel integral.
    """
    times = [float(t) for t in times]
    n = len(times)
    if n == 0:
        return 1.0 + 0.0j
    node_indices = [grid.node_index(t) for t in times]
    weights = grid.trapezoid_weights()

    total = 0.0 + 0.0j
    for signs_code in range(2**n):
        signs = [1.0 if (signs_code >> m) & 1 == 0 else -1.0 for m in range(n)]
        samples = np.zeros(grid.steps)
        for sign, index in zip(signs, node_indices):
            samples[index] += sign * h / weights[index]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CoarseGridWarning)
            z = generating_functional(SourceFunction(grid, samples), omega)
        parity = 1.0 if sum(1 for s in signs if s < 0) % 2 == 0 else -1.0
        total += parity * z
    derivative = total / (2.0 * h) ** n
    return complex(derivative * (1.0 / 1j) ** n)
