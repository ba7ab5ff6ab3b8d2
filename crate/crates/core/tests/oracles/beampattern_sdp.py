"""Reference optimum of the 3 dB beampattern design via a generic SDP solver.

Same constraint set as the Rust solver: half-wavelength ULA, half-power
equalities relaxed to a +-band window, per-antenna power P_R/M, sidelobe
grid anchored at -90 deg with the given step.

    python3 beampattern_sdp.py M THETA0 WIDTH [BAND] [TRANSITION]
"""
import sys

import cvxpy as cp
import numpy as np


def steer(m, deg):
    return np.exp(1j * np.pi * np.arange(m) * np.sin(np.deg2rad(deg)))


def solve(m, theta0, width, band=0.02, transition=5.0, step=1.0, p_r=1.0):
    lo, hi = theta0 - width / 2, theta0 + width / 2
    grid = np.arange(-90.0, 90.0 + 1e-9, step)
    side = [t for t in grid if t <= lo - transition + 1e-9 or t >= hi + transition - 1e-9]
    R = cp.Variable((m, m), hermitian=True)
    t = cp.Variable()

    def p(deg):
        a = steer(m, deg)
        return cp.real(cp.trace(np.outer(a, a.conj()) @ R))

    p0 = p(theta0)
    cons = [R >> 0, cp.real(cp.diag(R)) == p_r / m]
    for th in (lo, hi):
        cons += [p(th) <= (0.5 + band) * p0, p(th) >= (0.5 - band) * p0]
    cons += [p0 - p(th) >= t for th in side]
    prob = cp.Problem(cp.Maximize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    return t.value, R.value


if __name__ == "__main__":
    m = int(sys.argv[1])
    theta0 = float(sys.argv[2])
    width = float(sys.argv[3])
    band = float(sys.argv[4]) if len(sys.argv) > 4 else 0.02
    transition = float(sys.argv[5]) if len(sys.argv) > 5 else 5.0
    t, R = solve(m, theta0, width, band, transition)
    print(f"margin {t:.10f}")
    print("eig", np.round(np.linalg.eigvalsh(R), 6))
