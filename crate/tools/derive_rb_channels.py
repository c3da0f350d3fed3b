"""Derive 87Rb 18s -> np contaminant channel constants for the bundled data file.

Radial matrix elements use the Coulomb approximation (Numerov integration of
the hydrogenic radial equation at the quantum-defect-corrected energy).
Quantum defects: Li et al., PRA 67, 052502 (2003). Radiative lifetimes use
the n*^gamma scaling fits tabulated in Gallagher, "Rydberg Atoms" (Rb nS:
1.43 ns, 2.94; nP: 2.76 ns, 3.02). Blackbody rates are summed explicitly over
Rydberg-Rydberg dipole transitions at 300 K.

Output: JSON array of {label, c3_abs_MHz_um3, branching, gamma_np_MHz} where
c3 includes the RMS angular factor 2/sqrt(5) and rates are ordinary
frequencies (rate / 2pi) in MHz.
"""
import json
import math
import sys

import numpy as np
from sympy.physics.wigner import wigner_3j, wigner_6j

# quantum defects (delta0, delta2)
QD = {
    (0, 0.5): (3.1311804, 0.1784),
    (1, 0.5): (2.6548849, 0.2900),
    (1, 1.5): (2.6416737, 0.2950),
    (2, 1.5): (1.34809171, -0.60286),
    (2, 2.5): (1.34646572, -0.59600),
}
RY_RB87 = 109736.605  # cm^-1
HARTREE_CM = 219474.6313705
A0_M = 5.29177210903e-11
AU_TIME_S = 2.4188843265857e-17
C_AU = 137.035999084
KB_CM_PER_K = 0.695034800  # cm^-1 / K
T = 300.0
GAMMA0_MHZ = 0.045  # 1 / (2 pi * 3.54 us)


def n_star(n, l, j):
    d0, d2 = QD.get((l, j), (0.0, 0.0))
    d = d0 + d2 / (n - d0) ** 2
    return n - d


def energy_cm(n, l, j):
    return -RY_RB87 / n_star(n, l, j) ** 2


def radial_wavefunction(ns, l, h=0.005):
    e = -0.5 / ns**2
    r_max = 2.0 * ns * (ns + 15.0)
    r = np.arange(r_max, 1.0, -h)
    g = l * (l + 1) / r**2 - 2.0 / r - 2.0 * e
    u = np.zeros_like(r)
    u[0] = 1e-12
    u[1] = 1e-12 * (1.0 + h * math.sqrt(max(g[0], 1e-12)))
    f = 1.0 - h * h * g / 12.0
    for i in range(1, len(r) - 1):
        u[i + 1] = ((12.0 - 10.0 * f[i]) * u[i] - f[i - 1] * u[i - 1]) / f[i + 1]
    # truncate where the inward solution starts diverging inside the inner turning point
    r_turn = (-1.0 + math.sqrt(max(1.0 + 2.0 * e * l * (l + 1), 0.0))) / (2.0 * e) if l > 0 else 0.0
    cut = len(r)
    for i in range(len(r) - 2, 0, -1):
        if r[i] > max(r_turn, 2.0):
            cut = i + 1
            break
    r, u = r[:cut], u[:cut]
    norm = -np.trapezoid(u * u, r)
    return r, u / math.sqrt(norm)


_cache = {}


def wf(n, l, j):
    key = (n, l, j)
    if key not in _cache:
        _cache[key] = radial_wavefunction(n_star(n, l, j), l)
    return _cache[key]


def radial_element(a, b):
    ra, ua = wf(*a)
    rb, ub = wf(*b)
    r = ra if len(ra) < len(rb) else rb
    fa = np.interp(r[::-1], ra[::-1], ua[::-1])
    fb = np.interp(r[::-1], rb[::-1], ub[::-1])
    return float(np.trapezoid(fa * r[::-1] * fb, r[::-1]))


def reduced_angular_sq(l1, j1, l2, j2):
    s = 0.5
    w3 = float(wigner_3j(l1, 1, l2, 0, 0, 0))
    w6 = float(wigner_6j(l1, j1, s, j2, l2, 1))
    return (2 * j1 + 1) * (2 * j2 + 1) * (2 * l1 + 1) * (2 * l2 + 1) * (w3 * w6) ** 2


def sublevel_angular_sq(l1, j1, m1, l2, j2, m2, q):
    w = float(wigner_3j(j1, 1, j2, -m1, q, m2))
    return w * w * reduced_angular_sq(l1, j1, l2, j2)


def rate_au(omega_au, d2_au):
    return 4.0 * abs(omega_au) ** 3 * d2_au / (3.0 * C_AU**3)


def occupation(omega_cm):
    return 1.0 / math.expm1(abs(omega_cm) / (KB_CM_PER_K * T))


def bbr_rate_s(state, partners):
    """Total blackbody-induced rate out of `state` (fine-structure resolved, m-averaged)."""
    n, l, j = state
    total = 0.0
    for p in partners:
        n2, l2, j2 = p
        w_cm = energy_cm(*p) - energy_cm(*state)
        if w_cm == 0.0:
            continue
        r = radial_element(state, p)
        ang = reduced_angular_sq(l, j, l2, j2) / (2 * j + 1)
        a = rate_au(w_cm / HARTREE_CM, r * r * ang) / AU_TIME_S
        total += a * occupation(w_cm)
    return total


def radiative_lifetime_s(n, l, j):
    tau0, gam = {0: (1.43e-9, 2.94), 1: (2.76e-9, 3.02)}[l]
    return tau0 * n_star(n, l, j) ** gam


def main():
    s_state = (18, 0, 0.5)
    m_s = -0.5
    hbar = 1.054571817e-34
    e = 1.602176634e-19
    eps0 = 8.8541878128e-12
    # (e a0)^2 / (4 pi eps0 h) in MHz um^3
    unit_mhz_um3 = (e * A0_M) ** 2 / (4 * math.pi * eps0) / (2 * math.pi * hbar) / 1e-18 / 1e6
    rms = 2.0 / math.sqrt(5.0)
    channels = []
    for n in (17, 18):
        for j in (0.5, 1.5):
            p = (n, 1, j)
            r = radial_element(s_state, p)
            w_cm = energy_cm(*p) - energy_cm(*s_state)
            wa = w_cm / HARTREE_CM
            nbar = occupation(w_cm)
            boost = nbar + (1.0 if w_cm < 0 else 0.0)
            partners = [(k, 0, 0.5) for k in range(8, 45)] + [
                (k, 2, jj) for k in range(8, 45) for jj in (1.5, 2.5)
            ]
            tau_rad = radiative_lifetime_s(*p)
            gamma_np_s = 1.0 / tau_rad + bbr_rate_s(p, partners)
            gamma_np_mhz = gamma_np_s / (2 * math.pi) / 1e6
            mjs = [m for m in np.arange(-j, j + 1.0)]
            for m_p in mjs:
                q = m_p - m_s
                if abs(q) > 1:
                    continue
                d2 = r * r * sublevel_angular_sq(1, j, m_p, 0, 0.5, m_s, q)
                rate = rate_au(wa, d2) / AU_TIME_S * boost
                b = rate / (2 * math.pi * GAMMA0_MHZ * 1e6)
                # root-sum-square over every resonant pair state reachable from
                # |s m_s; p m_p> while conserving total m (secular dipole part)
                acc = 0.0
                for m_f in mjs:
                    q1 = m_f - m_s
                    m_s_f = m_p - q1
                    if abs(q1) > 1 or abs(m_s_f) != 0.5:
                        continue
                    weight = 1.0 if q1 == 0 else 0.5
                    a1 = math.sqrt(sublevel_angular_sq(1, j, m_f, 0, 0.5, m_s, q1))
                    a2 = math.sqrt(sublevel_angular_sq(1, j, m_p, 0, 0.5, m_s_f, q1))
                    acc += (weight * r * r * a1 * a2) ** 2
                c3 = math.sqrt(acc) * unit_mhz_um3 * rms
                channels.append(
                    {
                        "label": f"{n}p{int(2*j)}/2 mj={m_p:+.1f}",
                        "c3_abs_MHz_um3": round(c3, 4),
                        "branching": round(b, 6),
                        "gamma_np_MHz": round(gamma_np_mhz, 6),
                    }
                )
            print(
                f"# {n}p{j}: R={r:.1f} a0, dE={w_cm:.2f} cm^-1, nbar={nbar:.2f}, "
                f"tau_rad={tau_rad*1e6:.2f} us, tau_eff={1e6/gamma_np_s:.2f} us",
                file=sys.stderr,
            )
    beta3 = sum(c["c3_abs_MHz_um3"] * c["branching"] / c["gamma_np_MHz"] for c in channels)
    btot = sum(c["branching"] for c in channels)
    tau18 = radiative_lifetime_s(18, 0, 0.5)
    print(f"# 18s tau_rad={tau18*1e6:.2f} us; sum b={btot:.3f}; beta3={beta3:.1f} um^3", file=sys.stderr)
    json.dump(channels, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
