#!/usr/bin/env python3
"""Contraction coefficients of single channels.

Amplitude damping has a closed-form trace contraction yet no common lower
bound on its outputs, so minorisation-based estimates are vacuous.  The
depolarizing channel is the opposite case: every estimate agrees.
"""

import math

import numpy as np

from dobrushin import alpha_doeblin, alpha_md, amplitude_damping, depolarizing, kappa_tr, s0, werner_holevo_like
from dobrushin.contraction import kappa_upper_aggregate


def table(rows):
    print(f"{'channel':<24}{'kappa_tr':>10}{'1-alpha_MD':>12}{'sqrt(d) s0':>12}{'alpha_Doeb':>12}")
    for name, ch in rows:
        k = kappa_tr(ch).value
        md = alpha_md(ch, sampled_upper=False).alpha
        print(f"{name:<24}{k:>10.4f}{1 - md:>12.4f}{math.sqrt(ch.d) * s0(ch):>12.4f}{alpha_doeblin(ch).alpha:>12.4f}")


if __name__ == "__main__":
    table([
        ("amplitude_damping(0.36)", amplitude_damping(0.36)),
        ("depolarizing(0.5)", depolarizing(0.5)),
        ("werner_holevo_like(2)", werner_holevo_like(2)),
    ])

    # The aggregated certified upper bound is honest about amplitude damping:
    # no certificate beats the trivial value 1 although kappa = sqrt(0.5).
    up = kappa_upper_aggregate(amplitude_damping(0.5))
    print(f"\nAD(0.5): certified upper {up.value:.4f}, true kappa {math.sqrt(0.5):.4f}")

    # Werner-Holevo separates the state-level and CP-order Doeblin coefficients.
    wh = werner_holevo_like(2)
    print(f"Werner-Holevo B = {np.round(alpha_md(wh).B.real, 4).tolist()}, CP-order alpha = {alpha_doeblin(wh).alpha:.1e}")
