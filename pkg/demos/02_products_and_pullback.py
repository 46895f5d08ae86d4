#!/usr/bin/env python3
"""Window products, memory loss and pullback boundary states.

Two dephasing channels each preserve a classical bit, so kappa = 1 for both,
yet their composition forgets everything.  For a random sequence the
pullback from the distant past settles on a state that does not depend on
where the transport started.
"""

import numpy as np

from dobrushin import ChannelSequence, dephasing_x, dephasing_z, pullback_boundary, window_kappa
from dobrushin.linalg import trace_norm
from dobrushin.products import random_sequence

alt = ChannelSequence.periodic([dephasing_z(), dephasing_x()])
print("alternating dephasing")
for n in range(1, 5):
    print(f"  kappa of a window of length {n}: {window_kappa(alt, 0, n).value:.3e}")

seq = random_sequence(2, 120, seed=3)
print("\nrandom qubit sequence, kappa(Phi_{100:100-n})")
for n in (1, 5, 10, 20, 40):
    print(f"  n = {n:>3}: {window_kappa(seq, 100 - n, 100).value:.3e}")

a = pullback_boundary(seq, 100, tau=np.eye(2) / 2, tol=1e-10)
b = pullback_boundary(seq, 100, tau=np.diag([0.0, 1.0]), tol=1e-10)
print(f"\npullback from I/2 stopped at depth {a.depth_used} ({a.stop_reason})")
print(f"distance to the pullback from |1><1|: {trace_norm(a.rho_t - b.rho_t):.2e}")
