"""One reused apparatus or a fresh apparatus per measurement?

For non-demolition measurements the reduced state of the system only sees
the overlaps of the apparatus pointer states, so both pictures give the
same dynamics. Here a qubit is measured eight times with random
unitaries and random apparatus Hamiltonians, once with the dephasing map
and once with the full tensor product of eight apparatus qubits.
"""
import numpy as np

from qzeno.oracle import (pointer_overlaps, random_density_matrix, random_hermitian,
                          random_unitary, repeated_evolution)

rng = np.random.default_rng(20120101)
rho = random_density_matrix(2, rng)
u_free = random_unitary(2, rng)
hams = [random_hermitian(2, rng), random_hermitian(2, rng)]
pointer = np.array([1.0, 0.0], dtype=complex)
overlaps = pointer_overlaps(hams, pointer, 0.7)
print("pointer overlap <A_e|A_g> =", np.round(overlaps[0, 1], 4))

single = repeated_evolution(rho, u_free, overlaps, n=8)
many = repeated_evolution(rho, u_free, n=8, model="multi", hamiltonians=hams,
                          app_state=pointer, tau_M=0.7)
print("state after 8 cycles (single apparatus):")
print(np.round(single, 6))
print(f"largest entry difference to the 8-apparatus model: {np.max(np.abs(single - many)):.1e}")
