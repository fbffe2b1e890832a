"""Many-body Hamiltonians: representation, rotation, energy and derivatives.

The Hamiltonian is H = sum f_pq c+_p c_q + (1/2) sum h_pqrs c+_p c+_q c_r c_s
with Hermitian ``f`` and a real two-body tensor ``h`` carrying the
antisymmetrized index symmetries.  Conjugating H with the flux-attachment
unitary exp((i/2) sum omega_jk :n_j n_k:) turns every term into a phased
operator string over the Gaussian state, which the wick module evaluates.

All mode indices are 0-based in code; the text file format is 1-based.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    FormatError,
    NumericsError,
    SingularContractionError,
    ValidationError,
)
from .gaussian import _as_gamma, upsilon
from .wick import Contraction, contract, expectation_from, wrap_angles

SYMMETRY_TOL = 1e-10
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class NonGaussianParams:
    """Flux-attachment couplings: real symmetric with zero diagonal."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"omega must be square, got {w.shape}")
        if np.max(np.abs(w - w.T), initial=0.0) > SYMMETRY_TOL:
            raise ValidationError("omega must be symmetric")
        if np.max(np.abs(np.diag(w)), initial=0.0) > SYMMETRY_TOL:
            raise ValidationError("omega must have zero diagonal")
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        w = np.ascontiguousarray(w)
        w.flags.writeable = False
        object.__setattr__(self, "omega", w)

    @property
    def n_modes(self) -> int:
        return self.omega.shape[0]

    def wrapped(self) -> "NonGaussianParams":
        """Couplings wrapped into (-pi, pi]; the generated unitary is unchanged."""
        w = wrap_angles(self.omega)
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        return NonGaussianParams(w)


def _as_omega(omega, n_modes: int | None = None) -> np.ndarray:
    w = omega.omega if isinstance(omega, NonGaussianParams) else NonGaussianParams(np.asarray(omega)).omega
    if n_modes is not None and w.shape[0] != n_modes:
        raise DimensionError(f"omega has {w.shape[0]} modes, expected {n_modes}")
    return w


def check_two_body_symmetries(h: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    """Validate h_pqrs = -h_qprs = -h_pqsr = h_qpsr and h_pqrs = h_srqp."""
    checks = [
        (h + np.transpose(h, (1, 0, 2, 3)), "h_pqrs = -h_qprs"),
        (h + np.transpose(h, (0, 1, 3, 2)), "h_pqrs = -h_pqsr"),
        (h - np.transpose(h, (3, 2, 1, 0)), "h_pqrs = h_srqp"),
    ]
    for dev, label in checks:
        worst = float(np.max(np.abs(dev), initial=0.0))
        if worst > tol:
            p, q, r, s = np.unravel_index(int(np.argmax(np.abs(dev))), dev.shape)
            raise ValidationError(
                f"two-body symmetry {label} violated by {worst:.3e} at "
                f"(p,q,r,s)=({p},{q},{r},{s}) [0-based]"
            )


@dataclass(frozen=True)
class ManyBodyHamiltonian:
    """One-body matrix f (Hermitian) and antisymmetrized real two-body tensor h."""

    n_modes: int
    f: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        n = int(self.n_modes)
        if n <= 0:
            raise DimensionError("need at least one mode")
        f = np.asarray(self.f, dtype=complex)
        h = np.asarray(self.h, dtype=float)
        if f.shape != (n, n):
            raise DimensionError(f"f must be {n}x{n}, got {f.shape}")
        if h.shape != (n, n, n, n):
            raise DimensionError(f"h must be {n}^4, got {h.shape}")
        if np.max(np.abs(f - f.conj().T), initial=0.0) > SYMMETRY_TOL:
            raise ValidationError("one-body matrix must be Hermitian")
        check_two_body_symmetries(h)
        f = f.copy()  # never freeze caller-owned memory
        h = h.copy()
        f.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "n_modes", n)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h", h)

    def two_body_entries(self) -> np.ndarray:
        """Indices (p,q,r,s) of nonzero two-body entries, shape (k, 4)."""
        return np.argwhere(self.h != 0.0)


@dataclass(frozen=True)
class RotatedCoefficients:
    """Coefficients of the flux-rotated Hamiltonian.

    ``f_fa[p, q] = f_pq e^{-i omega_pq}`` and

    ``h_fa[p,q,r,s] = h_pqrs exp(i (omega_rs + omega_pq - omega_pr - omega_ps
    - omega_qr - omega_qs))``

    so that each rotated term is exactly ``coeff * exp(i sum_k phase(k) n_k) *
    (operator string)`` with the per-mode phases from :meth:`alpha` and
    :meth:`beta`.  The two-body coefficient carries the full scalar phase of
    the operator rotation, which is the product of the pair-exponent factor
    e^{-i(beta(p)+beta(q))} and the reordering phase e^{i(omega_rs-omega_pq)}.
    """

    n_modes: int
    omega: np.ndarray
    f_fa: np.ndarray
    h_fa: np.ndarray

    def alpha(self, p: int, q: int) -> np.ndarray:
        """Per-mode phases of the rotated one-body term: alpha(k) = w_kq - w_kp."""
        return self.omega[:, q] - self.omega[:, p]

    def beta(self, p: int, q: int, r: int, s: int) -> np.ndarray:
        """Per-mode phases of the rotated two-body term."""
        w = self.omega
        return w[:, r] + w[:, s] - w[:, p] - w[:, q]


def rotate_coefficients(hamil: ManyBodyHamiltonian, omega) -> RotatedCoefficients:
    """Coefficients and phase vectors of the flux-rotated Hamiltonian."""
    w = _as_omega(omega, hamil.n_modes)
    f_fa = hamil.f * np.exp(-1j * w)
    phase4 = (
        w[None, None, :, :]
        + w[:, :, None, None]
        - w[:, None, :, None]
        - w[:, None, None, :]
        - w[None, :, :, None]
        - w[None, :, None, :]
    )
    h_fa = hamil.h * np.exp(1j * phase4)
    return RotatedCoefficients(hamil.n_modes, w, f_fa, h_fa)


class _ContractionCache:
    """Per-evaluation cache of contraction bundles keyed by phase vector.

    One instance lives inside a single energy/gradient/mean-field call, so
    there is no shared mutable state across threads; identical phase vectors
    always reuse the same bundle within an evaluation.
    """

    def __init__(self, gamma: np.ndarray):
        self.gamma = gamma
        self._store: dict[bytes, Contraction] = {}

    def get(self, alpha: np.ndarray) -> Contraction:
        key = np.round(wrap_angles(alpha), 14).tobytes()
        bundle = self._store.get(key)
        if bundle is None:
            bundle = contract(self.gamma, alpha)
            self._store[key] = bundle
        return bundle


def energy(gamma, omega, hamil: ManyBodyHamiltonian) -> tuple[float, float, float]:
    """One-body, two-body and total energy of the flux-attached Ansatz.

    Returns ``(E1, E2, E1 + E2)``.  The imaginary residue of each part must
    stay below 1e-9 or :class:`NumericsError` is raised.
    """
    g = _as_gamma(gamma)
    w = _as_omega(omega, hamil.n_modes)
    cache = _ContractionCache(g)
    e1 = _energy_one_body(cache, w, hamil)
    e2 = _energy_two_body(cache, w, hamil)
    for label, val in (("one-body", e1), ("two-body", e2)):
        if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
            raise NumericsError(
                f"{label} energy has imaginary residue {val.imag:.3e}"
            )
    return e1.real, e2.real, e1.real + e2.real


def _energy_one_body(cache: _ContractionCache, w: np.ndarray, hamil: ManyBodyHamiltonian) -> complex:
    # f_fa[p,q] * e^{i alpha_pq(p)} = f_pq, so the pair phase cancels exactly.
    total = 0.0 + 0.0j
    for p, q in np.argwhere(hamil.f != 0.0):
        c = cache.get(w[:, q] - w[:, p])
        try:
            total += hamil.f[p, q] * 0.25j * c.coeff * c.g_dag_plain[p, q]
        except SingularContractionError as exc:
            raise SingularContractionError(
                f"one-body term (p,q)=({p},{q}): {exc}", alpha=exc.alpha
            ) from exc
    return total


def _energy_two_body(cache: _ContractionCache, w: np.ndarray, hamil: ManyBodyHamiltonian) -> complex:
    total = 0.0 + 0.0j
    for p, q, r, s in hamil.two_body_entries():
        c = cache.get(w[:, r] + w[:, s] - w[:, p] - w[:, q])
        try:
            gpm = c.g_dag_plain
            quartic = (
                gpm[p, s] * gpm[q, r]
                - gpm[p, r] * gpm[q, s]
                + c.g_dag_dag[p, q] * c.g_plain_plain[r, s]
            )
        except SingularContractionError as exc:
            raise SingularContractionError(
                f"two-body term (p,q,r,s)=({p},{q},{r},{s}): {exc}", alpha=exc.alpha
            ) from exc
        total += (
            -(1.0 / 32.0)
            * hamil.h[p, q, r, s]
            * np.exp(1j * (w[r, s] - w[p, q]))
            * c.coeff
            * quartic
        )
    return total


def energy_gradient_omega(gamma, omega, hamil: ManyBodyHamiltonian) -> np.ndarray:
    """Gradient of the energy with respect to the flux couplings.

    Built from the commutator of the rotated Hamiltonian with the
    normal-ordered pair-number operator; only operator strings of length four
    and six appear.  The result is real symmetric with zero diagonal, with
    the (i, j) and (j, i) entries treated as independent parameters of equal
    value (matching the convention used by the flow tensor).
    """
    g = _as_gamma(gamma)
    w = _as_omega(omega, hamil.n_modes)
    n = hamil.n_modes
    rot = rotate_coefficients(hamil, w)
    cache = _ContractionCache(g)
    nz = hamil.two_body_entries()
    grad = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            val = _gradient_entry(cache, rot, hamil, nz, i, j)
            grad[i, j] = val
            grad[j, i] = val
    return grad


def _gradient_entry(
    cache: _ContractionCache,
    rot: RotatedCoefficients,
    hamil: ManyBodyHamiltonian,
    nz: np.ndarray,
    i: int,
    j: int,
) -> float:
    total = 0.0
    # one-body contributions, strings c+_i c+_j c_j c_p (and i <-> j)
    for a, b in ((i, j), (j, i)):
        acc = 0.0 + 0.0j
        for p in range(hamil.n_modes):
            if hamil.f[a, p] == 0.0:
                continue
            c = cache.get(rot.alpha(a, p))
            string = ((a, True), (b, True), (b, False), (p, False))
            acc += rot.f_fa[a, p] * expectation_from(c, string)
        total += acc.imag
    # pair-annihilation contribution, strings c+_i c+_j c_p c_q with p < q
    acc = 0.0 + 0.0j
    for p, q, r, s in nz:
        if p != i or q != j or r >= s:
            continue
        c = cache.get(rot.beta(p, q, r, s))
        string = ((i, True), (j, True), (r, False), (s, False))
        acc += rot.h_fa[p, q, r, s] * expectation_from(c, string)
    total += 2.0 * acc.imag
    # six-operator contribution, strings c+_j c+_i c+_p c_j c_q c_r (and i <-> j)
    for a, b in ((i, j), (j, i)):
        acc = 0.0 + 0.0j
        for t, p, q, r in nz:
            if t != a or q >= r:
                continue
            c = cache.get(rot.beta(a, p, q, r))
            string = (
                (b, True),
                (a, True),
                (p, True),
                (b, False),
                (q, False),
                (r, False),
            )
            acc += rot.h_fa[a, p, q, r] * expectation_from(c, string)
        total += 2.0 * acc.imag
    return total


def _rank2_skew(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.outer(a, b) - np.outer(b, a)


def mean_field_h(gamma, omega, hamil: ManyBodyHamiltonian) -> np.ndarray:
    """Mean-field matrix of the rotated Hamiltonian: 4 dE/d(gamma).

    The derivative follows the ordered-entry convention for structured skew
    matrices: dE = sum_{ij} (dE/dGamma_ij) dGamma_ij over all ordered (i, j).
    Output is real skew-symmetric (2N x 2N).
    """
    g = _as_gamma(gamma)
    w = _as_omega(omega, hamil.n_modes)
    n = hamil.n_modes
    cache = _ContractionCache(g)
    out = np.zeros((2 * n, 2 * n), dtype=complex)

    for p, q in np.argwhere(hamil.f != 0.0):
        c = cache.get(w[:, q] - w[:, p])
        deriv = _rank2_skew(c.lt_plus[:, q], c.lt_minus[:, p])
        out += (1j * hamil.f[p, q] * c.coeff) * (
            c.g_dag_plain[p, q] * c.q + 0.5 * deriv
        )

    for p, q, r, s in hamil.two_body_entries():
        c = cache.get(w[:, r] + w[:, s] - w[:, p] - w[:, q])
        gpm = c.g_dag_plain
        gpp = c.g_dag_dag
        gmm = c.g_plain_plain
        coeff = (
            -(1.0 / 16.0)
            * hamil.h[p, q, r, s]
            * np.exp(1j * (w[r, s] - w[p, q]))
            * c.coeff
        )
        term = (4.0 * gpm[p, s] * gpm[q, r] + 2.0 * gpp[p, q] * gmm[r, s]) * c.q
        term += 4.0 * gpm[q, r] * _rank2_skew(c.lt_plus[:, s], c.lt_minus[:, p])
        term += gmm[r, s] * _rank2_skew(c.lt_minus[:, q], c.lt_minus[:, p])
        term += gpp[p, q] * _rank2_skew(c.lt_plus[:, s], c.lt_plus[:, r])
        out += coeff * term

    scale = max(1.0, float(np.max(np.abs(out.real))))
    imag_dev = float(np.max(np.abs(out.imag)))
    if imag_dev > IMAG_TOL * scale:
        raise NumericsError(f"mean-field matrix has imaginary residue {imag_dev:.3e}")
    real = out.real
    return 0.5 * (real - real.T)


def mean_field_o(gamma, dtau_omega) -> np.ndarray:
    """Mean-field matrix of the flux-coupling flow term; i * result is real skew.

    Built from diag(d_omega . g) blocks and Hadamard products of d_omega with
    the blocks of gamma + Upsilon, where g holds the diagonal of the
    upper-right covariance block shifted by one (twice the mode occupations).
    """
    g = _as_gamma(gamma)
    n = g.shape[0] // 2
    dw = np.asarray(dtau_omega, dtype=float)
    if dw.shape != (n, n):
        raise DimensionError(f"dtau_omega must be {n}x{n}, got {dw.shape}")
    if np.max(np.abs(dw - dw.T), initial=0.0) > SYMMETRY_TOL:
        raise ValidationError("dtau_omega must be symmetric")
    gvec = np.diag(g[:n, n:]) + 1.0
    gw = np.diag(dw @ gvec)
    zero = np.zeros((n, n))
    part_one = 0.5j * np.block([[zero, gw], [-gw, zero]])
    g0 = g + upsilon(n)
    g11 = g0[:n, :n]
    g12 = g0[:n, n:]
    g21 = g0[n:, :n]
    g22 = g0[n:, n:]
    part_two = 0.5j * np.block(
        [[dw * (-g22), dw * g21], [dw * g12, dw * (-g11)]]
    )
    return part_one + part_two


def hubbard_model(
    n_sites: int, t: float, u: float, mu: float, periodic: bool = False
) -> ManyBodyHamiltonian:
    """Fermi-Hubbard chain with 2*n_sites spin-orbitals (up block first).

    f carries -t nearest-neighbour hopping per spin and -mu on every
    spin-orbital; h carries the on-site repulsion u, antisymmetrized.  For
    two sites the periodic flag adds no second bond (the ring and the chain
    coincide as undirected graphs).
    """
    if n_sites < 2:
        raise ValidationError("hubbard_model needs at least 2 sites")
    n = 2 * n_sites
    f = np.zeros((n, n), dtype=complex)
    bonds = {tuple(sorted((i, (i + 1) % n_sites))) for i in range(n_sites - 1 + int(periodic))}
    for a, b in sorted(bonds):
        if a == b:
            continue
        for spin in (0, n_sites):
            f[a + spin, b + spin] = -t
            f[b + spin, a + spin] = -t
    f -= mu * np.eye(n)
    h = np.zeros((n, n, n, n))
    for site in range(n_sites):
        a, b = site, n_sites + site
        h[a, b, b, a] = h[b, a, a, b] = 0.5 * u
        h[a, b, a, b] = h[b, a, b, a] = -0.5 * u
    return ManyBodyHamiltonian(n, f, h)


def save_hamiltonian(hamil: ManyBodyHamiltonian, path) -> None:
    """Write the text format: NMODES header, F/H lines with 1-based indices.

    Every nonzero entry is listed explicitly (including all symmetry images);
    values use 17 significant digits so the round trip is bit exact.
    """
    buf = io.StringIO()
    buf.write(f"NMODES {hamil.n_modes}\n")
    for p, q in np.argwhere(hamil.f != 0.0):
        val = hamil.f[p, q]
        buf.write(f"F {p + 1} {q + 1} {val.real:.17g} {val.imag:.17g}\n")
    for p, q, r, s in hamil.two_body_entries():
        buf.write(
            f"H {p + 1} {q + 1} {r + 1} {s + 1} {hamil.h[p, q, r, s]:.17g}\n"
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(buf.getvalue())


def load_hamiltonian(path) -> ManyBodyHamiltonian:
    """Parse the text format and validate all declared symmetries.

    The loader never symmetrizes: files must list every symmetry-related
    entry explicitly, and violations are rejected naming the indices.
    """
    n = None
    f = None
    h = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                if tokens[0] == "NMODES":
                    if n is not None:
                        raise FormatError("duplicate NMODES header", lineno)
                    n = int(tokens[1])
                    if n <= 0:
                        raise FormatError("NMODES must be positive", lineno)
                    f = np.zeros((n, n), dtype=complex)
                    h = np.zeros((n, n, n, n))
                elif tokens[0] == "F":
                    if f is None:
                        raise FormatError("F line before NMODES", lineno)
                    p, q = (int(x) - 1 for x in tokens[1:3])
                    re_part, im_part = float(tokens[3]), float(tokens[4])
                    _check_range(lineno, n, p, q)
                    if f[p, q] != 0.0:
                        raise FormatError(f"duplicate F entry ({p + 1}, {q + 1})", lineno)
                    f[p, q] = complex(re_part, im_part)
                elif tokens[0] == "H":
                    if h is None:
                        raise FormatError("H line before NMODES", lineno)
                    p, q, r, s = (int(x) - 1 for x in tokens[1:5])
                    _check_range(lineno, n, p, q, r, s)
                    if h[p, q, r, s] != 0.0:
                        raise FormatError(
                            f"duplicate H entry ({p + 1}, {q + 1}, {r + 1}, {s + 1})",
                            lineno,
                        )
                    h[p, q, r, s] = float(tokens[5])
                else:
                    raise FormatError(f"unknown record {tokens[0]!r}", lineno)
            except (IndexError, ValueError) as exc:
                raise FormatError(f"malformed record: {exc}", lineno) from exc
    if n is None:
        raise FormatError("missing NMODES header")
    return ManyBodyHamiltonian(n, f, h)


def _check_range(lineno: int, n: int, *indices: int) -> None:
    for idx in indices:
        if not (0 <= idx < n):
            raise FormatError(f"index {idx + 1} outside 1..{n}", lineno)
