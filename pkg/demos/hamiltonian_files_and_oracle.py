"""The Hamiltonian text format and the dense Fock-space oracle.

Writes a Hubbard chain to the text format, reads it back, and uses the dense
oracle for exact diagonalization, occupations and the overlap between the
mean-field state and the exact ground state.
"""

import tempfile
from pathlib import Path

import numpy as np

from ngfermi import gaussian, oracle
from ngfermi import hamiltonian as ham

hamil = ham.hubbard_model(2, t=1.0, u=4.0, mu=2.0)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "hubbard2.txt"
    ham.save_hamiltonian(hamil, path)
    print(f"text format ({path.name}):")
    print(path.read_text())
    reloaded = ham.load_hamiltonian(path)
    print("round trip bit-exact:",
          np.array_equal(reloaded.f, hamil.f) and np.array_equal(reloaded.h, hamil.h))

# exact diagonalization
e0, ground = oracle.dense_ground(hamil)
print(f"\nexact ground energy: {e0:.10f}")
print(f"analytic value 2 - 2*sqrt(2) - 4 = {2 - 2*np.sqrt(2) - 4:.10f}")

# mean-field state: energy, occupations and overlap with the exact ground state
cov = gaussian.mean_field_covariance(hamil.f, 2)
print(f"\nmean-field occupations: {np.round(gaussian.occupation_numbers(cov), 6)}")
print(f"mean-field energy:      {ham.energy(cov, np.zeros((4, 4)), hamil)[2]:.6f}")

# the same Slater determinant as a dense vector, for the overlap:
# occupy the two lowest orbitals through dense ladder operators
vals, vecs = np.linalg.eigh(hamil.f)
ops = oracle.fock_operators(4)
psi = oracle.vacuum_state(4).amplitudes
for k in range(2):
    orbital_creator = sum(vecs[j, k] * ops.creator(j) for j in range(4))
    psi = orbital_creator @ psi
psi /= np.linalg.norm(psi)
mf_state = oracle.DenseState(psi)
print(f"overlap |<exact|mean-field>| = {oracle.overlap(ground, mf_state):.6f}")
