"""Generalized Wick theorem vs brute force, step by step.

Builds a random pure Gaussian state, dresses expectation values with
number-operator phases and compares the covariance-matrix evaluation against
the dense Fock-space computation, for operator strings of increasing length.
"""

import numpy as np

from ngfermi import gaussian, oracle, wick

rng = np.random.default_rng(7)
n = 4

# A pure Gaussian state from a random Hermitian-antisymmetric generator.
params = gaussian.random_generator(n, rng)
cov = gaussian.covariance_from_xi(params)
print(f"{n} modes, purity error |gamma^2 + 1| = {cov.purity_error:.2e}")
print(f"occupations: {np.round(gaussian.occupation_numbers(cov), 6)}")

# The same state as a dense vector (no flux couplings yet).
state = oracle.dense_state(params.xi, np.zeros((n, n)))

# Random per-mode phases of exp(i sum_j alpha(j) n_j).
alpha = rng.uniform(-np.pi, np.pi, size=n)
print(f"\nphases alpha = {np.round(alpha, 4)}")

# The scalar coefficient <e^{i alpha . n}> comes from a single Pfaffian.
coeff = wick.a_coeff(cov, alpha)
dense_coeff = oracle.dense_expectation(state, alpha, ())
print(f"coefficient: wick {coeff:.10f}  dense {dense_coeff:.10f}")

# Pair contractions and longer strings factor through the skew matrix G.
bundle = wick.contract(cov, alpha)
print("\nstring                                   wick          dense         |diff|")
for length in (2, 4, 6):
    for _ in range(3):
        string = tuple(
            (int(rng.integers(0, n)), bool(rng.integers(0, 2))) for _ in range(length)
        )
        fast = wick.expectation_from(bundle, string)
        dense = oracle.dense_expectation(state, alpha, string)
        label = " ".join(f"c{'+' if d else ' '}_{m}" for m, d in string)
        print(f"{label:<40} {fast: .6f} {dense: .6f}  {abs(fast - dense):.2e}")

# The pairing combinatorics behind the factorization: (2p-1)!! terms.
for length in (2, 4, 6):
    print(f"\nlength {length}: {len(wick.enumerate_pairings(length))} pairings")
