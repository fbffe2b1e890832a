"""Phased pair-contraction engine for Gaussian-state expectation values.

Evaluates ``<Psi| exp(i sum_j alpha(j) n_j) c+_{j1} ... c_{kb} |Psi>`` for a
pure Gaussian state with covariance ``gamma``: the scalar coefficient comes
from a Pfaffian, the pair contractions from the skew matrix ``G^[alpha]``,
and arbitrary even operator strings from the signed sum over perfect
pairings.  For ``alpha = 0`` the machinery reduces to the ordinary Wick
factorization built from ``gamma + Upsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import (
    DimensionError,
    ParityError,
    SingularContractionError,
    ValidationError,
)
from .gaussian import _as_gamma, upsilon
from .linalg import BlockContractionKind, block_contract_all, miller_inverse

MAX_STRING_LENGTH = 12
FAST_PATH_MIN_PHASE = 1e-12
COND_LIMIT = 1e12
DEGENERATE_COEFF = 1e-13


def wrap_angles(values: np.ndarray) -> np.ndarray:
    """Wrap angles into (-pi, pi]."""
    out = np.mod(np.asarray(values, dtype=float), 2.0 * np.pi)
    return np.where(out > np.pi, out - 2.0 * np.pi, out)


@dataclass(frozen=True)
class PhaseVector:
    """Per-mode phases of the number-operator exponential, wrapped to (-pi, pi]."""

    alpha: np.ndarray

    def __post_init__(self):
        a = wrap_angles(np.atleast_1d(np.asarray(self.alpha, dtype=float)))
        if a.ndim != 1:
            raise DimensionError(f"phase vector must be 1-D, got shape {a.shape}")
        a = np.ascontiguousarray(a)
        a.flags.writeable = False
        object.__setattr__(self, "alpha", a)

    @property
    def n_modes(self) -> int:
        return self.alpha.shape[0]


class PairKind(Enum):
    """The three pair types occurring in daggers-first strings."""

    DAG_PLAIN = "dag_plain"
    DAG_DAG = "dag_dag"
    PLAIN_PLAIN = "plain_plain"


@dataclass(frozen=True)
class OperatorString:
    """Ordered product of ladder operators: (mode, dagger) pairs, even length."""

    factors: tuple[tuple[int, bool], ...]

    def __post_init__(self):
        factors = tuple((int(m), bool(d)) for m, d in self.factors)
        if len(factors) % 2 != 0:
            raise ParityError(f"operator string must have even length, got {len(factors)}")
        if len(factors) > MAX_STRING_LENGTH:
            raise ValidationError(
                f"operator strings longer than {MAX_STRING_LENGTH} are unsupported"
            )
        if any(m < 0 for m, _ in factors):
            raise ValidationError("mode indices must be non-negative")
        object.__setattr__(self, "factors", factors)

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class Pairing:
    """One perfect pairing of string positions with its permutation sign."""

    pairs: tuple[tuple[int, int], ...]
    sign: int


@lru_cache(maxsize=None)
def enumerate_pairings(length: int) -> tuple[Pairing, ...]:
    """All (length-1)!! perfect pairings of positions 0..length-1.

    Each pairing keeps the first element of every pair smaller and orders
    pairs by their first element; the sign is the parity of the permutation
    that restores the original position order.
    """
    if length % 2 != 0:
        raise ParityError(f"cannot pair an odd number of operators ({length})")
    if length > MAX_STRING_LENGTH:
        raise ValidationError(f"pairings beyond length {MAX_STRING_LENGTH} are unsupported")
    if length == 0:
        return (Pairing((), 1),)

    out: list[Pairing] = []

    def build(avail: tuple[int, ...], acc: tuple[tuple[int, int], ...], sign: int):
        if not avail:
            out.append(Pairing(acc, sign))
            return
        first = avail[0]
        for idx in range(1, len(avail)):
            partner = avail[idx]
            crossings = idx - 1
            build(
                avail[1:idx] + avail[idx + 1:],
                acc + ((first, partner),),
                sign * (-1) ** crossings,
            )

    build(tuple(range(length)), (), 1)
    return tuple(out)


def _as_alpha(alpha, n_modes: int) -> np.ndarray:
    a = alpha.alpha if isinstance(alpha, PhaseVector) else wrap_angles(np.asarray(alpha, dtype=float))
    if a.shape != (n_modes,):
        raise DimensionError(f"phase vector has shape {a.shape}, expected ({n_modes},)")
    return a


def sign_prefactor(n_modes: int) -> int:
    """Mode-parity sign in the Pfaffian coefficient formula."""
    if n_modes % 2 == 0:
        return (-1) ** (n_modes // 2)
    return (-1) ** ((n_modes + 1) // 2)


def gamma_F(gamma, alpha) -> np.ndarray:
    """Phase-dressed covariance whose Pfaffian gives the scalar coefficient."""
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    a = _as_alpha(alpha, n)
    phase = np.exp(1j * a)
    sq = np.sqrt(1.0 - phase)  # values lie in the right half-plane
    sq2 = np.concatenate([sq, sq])
    diag = 1.0 + phase
    zero = np.zeros((n, n), dtype=complex)
    second = np.block([[zero, np.diag(diag)], [-np.diag(diag), zero]])
    return sq2[:, None] * g * sq2[None, :] - second


def a_coeff(gamma, alpha) -> complex:
    """<exp(i sum alpha(j) n_j)> over the Gaussian state: sign * 2^-N * Pf."""
    from .linalg import pfaffian

    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    gf = gamma_F(g, alpha)
    gf = 0.5 * (gf - gf.T)
    return sign_prefactor(n) * (0.5 ** n) * pfaffian(gf)


def _phase_ok_for_rank1(alpha: np.ndarray) -> bool:
    return bool(np.all(np.abs(1.0 - np.exp(1j * alpha)) > FAST_PATH_MIN_PHASE))


def _g_denominator(g: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    n = g.shape[0] // 2
    ups = upsilon(n)
    one_minus = np.concatenate([1.0 - np.exp(1j * alpha)] * 2)
    return np.eye(2 * n) + 0.5 * one_minus[:, None] * (ups @ g - np.eye(2 * n))


def g_matrix(gamma, alpha, method: str = "auto") -> np.ndarray:
    """Skew contraction matrix (gamma + Upsilon) / (1 + (1-e^{i a})(Y gamma - 1)/2).

    ``method`` selects the inversion path: "direct" solves the linear system,
    "rank1" assembles the inverse by iterative rank-1 updates (requires every
    |1 - e^{i alpha(j)}| > 1e-12), and "auto" tries the rank-1 path when
    eligible and falls back to the direct solve whenever the assembled
    inverse fails a residual check.
    """
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    a = _as_alpha(alpha, n)
    if method == "direct":
        return _g_direct(g, a)
    if method == "rank1":
        if not _phase_ok_for_rank1(a):
            raise ValidationError(
                "rank-1 assembly needs all |1 - e^{i alpha(j)}| > 1e-12"
            )
        return _g_rank1(g, a)
    if method != "auto":
        raise ValidationError(f"unknown g_matrix method {method!r}")
    if _phase_ok_for_rank1(a):
        try:
            cand = _g_rank1(g, a)
        except (SingularContractionError, np.linalg.LinAlgError):
            cand = None
        if cand is not None and _g_residual_ok(cand, g, a):
            return cand
    return _g_direct(g, a)


def _g_direct(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    n = g.shape[0] // 2
    denom = _g_denominator(g, a)
    cond = np.linalg.cond(denom)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularContractionError(
            f"contraction denominator condition number {cond:.3e} exceeds {COND_LIMIT:.0e}",
            alpha=a,
        )
    numer = g + upsilon(n)
    out = np.linalg.solve(denom.T, numer.T).T
    return 0.5 * (out - out.T)


def _g_rank1(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    n = g.shape[0] // 2
    ups = upsilon(n)
    base_inverse = ups @ (g + ups)
    betas = 0.5 * (1.0 - np.exp(1j * np.concatenate([a, a])))
    eye = np.eye(2 * n)
    updates = [
        (betas[k], eye[:, k], eye[:, k])
        for k in range(2 * n)
        if abs(betas[k]) > 0.0
    ]
    inv, _ = miller_inverse(base_inverse, updates, fallback_matrix=None)
    out = -ups @ inv
    return 0.5 * (out - out.T)


def _g_residual_ok(cand: np.ndarray, g: np.ndarray, a: np.ndarray, tol: float = 1e-8) -> bool:
    n = g.shape[0] // 2
    denom = _g_denominator(g, a)
    residual = cand @ denom - (g + upsilon(n))
    scale = max(1.0, float(np.max(np.abs(cand))))
    return np.max(np.abs(residual)) <= tol * scale


def q_matrix(gamma, alpha, method: str = "auto") -> np.ndarray:
    """Scaled inverse of the phase-dressed covariance driving d(coeff)/d(gamma).

    Defined as -(1/2) sqrt(1-e^{ia}) Gamma_F^{-1} sqrt(1-e^{ia}); the rank-1
    path additionally needs a pure ``gamma`` (it seeds the iteration with
    -gamma as the base inverse).
    """
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    a = _as_alpha(alpha, n)
    if method == "direct":
        return _q_direct(g, a)
    if method == "rank1":
        if not _phase_ok_for_rank1(a):
            raise ValidationError(
                "rank-1 assembly needs all |1 - e^{i alpha(j)}| > 1e-12"
            )
        return _q_rank1(g, a)
    if method != "auto":
        raise ValidationError(f"unknown q_matrix method {method!r}")
    if _phase_ok_for_rank1(a):
        try:
            cand = _q_rank1(g, a)
        except (SingularContractionError, np.linalg.LinAlgError):
            cand = None
        if cand is not None and _q_residual_ok(cand, g, a):
            return cand
    return _q_direct(g, a)


def _q_direct(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    gf = gamma_F(g, a)
    cond = np.linalg.cond(gf)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularContractionError(
            f"phase-dressed covariance condition number {cond:.3e} exceeds {COND_LIMIT:.0e}",
            alpha=a,
        )
    sq = np.sqrt(1.0 - np.exp(1j * a))
    sq2 = np.concatenate([sq, sq])
    inv = np.linalg.inv(gf)
    out = -0.5 * (sq2[:, None] * inv * sq2[None, :])
    return 0.5 * (out - out.T)


def _q_rank1(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    n = g.shape[0] // 2
    phase = np.exp(1j * a)
    coeff = (1.0 + phase) / (1.0 - phase)
    eye = np.eye(2 * n)
    updates = []
    for j in range(n):
        if abs(coeff[j]) > 0.0:
            updates.append((-coeff[j], eye[:, j], eye[:, n + j]))
    for j in range(n):
        if abs(coeff[j]) > 0.0:
            updates.append((coeff[j], eye[:, n + j], eye[:, j]))
    inv, _ = miller_inverse(-g.astype(complex), updates, fallback_matrix=None)
    out = -0.5 * inv
    return 0.5 * (out - out.T)


def _q_residual_ok(cand: np.ndarray, g: np.ndarray, a: np.ndarray, tol: float = 1e-8) -> bool:
    n = g.shape[0] // 2
    phase = np.exp(1j * a)
    coeff = (1.0 + phase) / (1.0 - phase)
    zero = np.zeros((n, n), dtype=complex)
    shifted = g - np.block([[zero, np.diag(coeff)], [-np.diag(coeff), zero]])
    residual = (-2.0 * cand) @ shifted - np.eye(2 * n)
    scale = max(1.0, float(np.max(np.abs(cand))))
    return np.max(np.abs(residual)) <= tol * scale


def l_matrix(gamma, alpha, g_mat: np.ndarray | None = None) -> np.ndarray:
    """Left factor of the structured derivative of the contraction matrix."""
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    a = _as_alpha(alpha, n)
    if g_mat is None:
        g_mat = g_matrix(g, a)
    one_minus = np.concatenate([1.0 - np.exp(1j * a)] * 2)
    return np.eye(2 * n) - 0.5 * (g_mat * one_minus[None, :]) @ upsilon(n)


class Contraction:
    """All phase-dependent quantities for one (gamma, alpha) pair, built lazily.

    Heavy pieces (the Pfaffian coefficient, the contraction matrix and its
    blocks, the derivative factors) are computed on first access and reused
    across the many index tuples of an energy or gradient sum.
    """

    def __init__(self, gamma, alpha, method: str = "auto"):
        self._gamma = _as_gamma(gamma)
        self.n_modes = self._gamma.shape[0] // 2
        self.alpha = _as_alpha(alpha, self.n_modes)
        self._method = method
        self._cache: dict[str, np.ndarray | complex] = {}

    def _get(self, key: str, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    @property
    def coeff(self) -> complex:
        return self._get("coeff", lambda: a_coeff(self._gamma, self.alpha))

    @property
    def g(self) -> np.ndarray:
        return self._get("g", lambda: g_matrix(self._gamma, self.alpha, self._method))

    @property
    def phase(self) -> np.ndarray:
        return self._get("phase", lambda: np.exp(1j * self.alpha))

    @property
    def g_dag_plain(self) -> np.ndarray:
        return self._get(
            "g_dag_plain",
            lambda: block_contract_all(self.g, BlockContractionKind.PLUS_MINUS),
        )

    @property
    def g_dag_dag(self) -> np.ndarray:
        return self._get(
            "g_dag_dag",
            lambda: block_contract_all(self.g, BlockContractionKind.PLUS_PLUS),
        )

    @property
    def g_plain_plain(self) -> np.ndarray:
        return self._get(
            "g_plain_plain",
            lambda: block_contract_all(self.g, BlockContractionKind.MINUS_MINUS),
        )

    @property
    def q(self) -> np.ndarray:
        return self._get("q", lambda: q_matrix(self._gamma, self.alpha, self._method))

    @property
    def l(self) -> np.ndarray:
        return self._get("l", lambda: l_matrix(self._gamma, self.alpha, self.g))

    @property
    def lt_plus(self) -> np.ndarray:
        """Columns are L^T (1_q, +i_q); used for "-" row slots of derivatives."""
        return self._get(
            "lt_plus", lambda: (self.l[: self.n_modes, :] + 1j * self.l[self.n_modes:, :]).T
        )

    @property
    def lt_minus(self) -> np.ndarray:
        """Columns are L^T (1_p, -i_p); used for "+" column slots of derivatives."""
        return self._get(
            "lt_minus", lambda: (self.l[: self.n_modes, :] - 1j * self.l[self.n_modes:, :]).T
        )

    # -- normalized pair values (with the scalar coefficient divided out) --

    def pair_dag_plain(self, p: int, q: int) -> complex:
        return 0.25j * self.phase[p] * self.g_dag_plain[p, q]

    def pair_dag_dag(self, p: int, q: int) -> complex:
        return 0.25j * self.phase[p] * self.phase[q] * self.g_dag_dag[p, q]

    def pair_plain_plain(self, p: int, q: int) -> complex:
        return 0.25j * self.g_plain_plain[p, q]

    def pair_normalized(self, first: tuple[int, bool], second: tuple[int, bool]) -> complex:
        """Two-point function of ordered factors, divided by the coefficient."""
        (m1, d1), (m2, d2) = first, second
        if d1 and not d2:
            return self.pair_dag_plain(m1, m2)
        if d1 and d2:
            return self.pair_dag_dag(m1, m2)
        if not d1 and not d2:
            return self.pair_plain_plain(m1, m2)
        # plain before dagger: anticommute, c_p c+_q = delta_pq - c+_q c_p
        delta = 1.0 if m1 == m2 else 0.0
        return delta - self.pair_dag_plain(m2, m1)


def contract(gamma, alpha, method: str = "auto") -> Contraction:
    """Build the lazy contraction bundle for one (gamma, alpha) pair."""
    return Contraction(gamma, alpha, method=method)


def pair_expectation(gamma, alpha, kind: PairKind, p: int, q: int) -> complex:
    """Phased two-operator expectation value (includes the scalar coefficient)."""
    c = contract(gamma, alpha)
    if not (0 <= p < c.n_modes and 0 <= q < c.n_modes):
        raise DimensionError(f"mode indices ({p}, {q}) out of range")
    if kind is PairKind.DAG_PLAIN:
        return c.coeff * c.pair_dag_plain(p, q)
    if kind is PairKind.DAG_DAG:
        return c.coeff * c.pair_dag_dag(p, q)
    return c.coeff * c.pair_plain_plain(p, q)


def expectation_from(contraction: Contraction, string: OperatorString | tuple) -> complex:
    """Phased expectation of an even operator string from a prebuilt bundle."""
    factors = string.factors if isinstance(string, OperatorString) else OperatorString(tuple(string)).factors
    if any(m >= contraction.n_modes for m, _ in factors):
        raise DimensionError("operator string addresses modes outside the state")
    if not factors:
        return contraction.coeff
    n_pairs = len(factors) // 2
    coeff = contraction.coeff
    if n_pairs > 1 and abs(coeff) < DEGENERATE_COEFF:
        raise SingularContractionError(
            f"scalar coefficient {abs(coeff):.2e} too small to factor a "
            f"{len(factors)}-operator string",
            alpha=contraction.alpha,
        )
    total = 0.0 + 0.0j
    for pairing in enumerate_pairings(len(factors)):
        prod = 1.0 + 0.0j
        for i, j in pairing.pairs:
            prod *= contraction.pair_normalized(factors[i], factors[j])
            if prod == 0.0:
                break
        total += pairing.sign * prod
    return coeff * total


def expectation(gamma, alpha, string: OperatorString | tuple) -> complex:
    """Phased expectation of an even operator string over the Gaussian state."""
    return expectation_from(contract(gamma, alpha), string)
