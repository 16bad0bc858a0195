"""Nodal-equation oracle for the small power-flow test networks.

Solves Y V = I(V) for the non-source buses with scipy's hybrid Powell root
finder on the real/imaginary split, then polishes with Newton steps using a
finite-difference Jacobian. Prints per-unit voltages to paste into the Rust
tests. No backward-forward sweep is involved.
"""
import numpy as np
from scipy.optimize import root

A = np.exp(2j * np.pi / 3)
BASE = 416 / np.sqrt(3)
SOURCE = BASE * np.array([1, A * A, A])


def zph(r1, x1, r0, x0, length_m):
    z1, z0 = complex(r1, x1), complex(r0, x0)
    m = np.full((3, 3), (z0 - z1) / 3)
    np.fill_diagonal(m, (z0 + 2 * z1) / 3)
    return m * length_m / 1000


CODE = (0.25, 0.08, 1.0, 0.3)


def load_va(kw, pf):
    return kw * 1000 * complex(1, np.sqrt(1 - pf * pf) / pf)


def solve(buses, segs, loads):
    idx = {b: i for i, b in enumerate(buses)}
    n = len(buses)
    Y = np.zeros((3 * n, 3 * n), complex)
    for a, b, length in segs:
        y = np.linalg.inv(zph(*CODE, length))
        i, j = 3 * idx[a], 3 * idx[b]
        Y[i:i + 3, i:i + 3] += y
        Y[j:j + 3, j:j + 3] += y
        Y[i:i + 3, j:j + 3] -= y
        Y[j:j + 3, i:i + 3] -= y
    S = np.zeros(3 * n, complex)
    for bus, phase, kw, pf in loads:
        S[3 * idx[bus] + phase] += load_va(kw, pf)
    Yns, Ynn = Y[3:, :3], Y[3:, 3:]

    def f(x):
        v = x[: 3 * (n - 1)] + 1j * x[3 * (n - 1):]
        r = Ynn @ v + Yns @ SOURCE + np.conj(S[3:] / v)
        return np.concatenate([r.real, r.imag])

    x0 = np.tile(SOURCE, n - 1)
    x = np.concatenate([x0.real, x0.imag])
    x = root(f, x, method="hybr", options={"xtol": 1e-14}).x
    for _ in range(5):
        h = 1e-6
        J = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(len(x))]).T
        x = x - np.linalg.solve(J, f(x))
    assert np.max(np.abs(f(x))) < 1e-9, np.max(np.abs(f(x)))
    v = x[: 3 * (n - 1)] + 1j * x[3 * (n - 1):]
    return np.concatenate([SOURCE, v]).reshape(n, 3) / BASE


NETWORKS = {
    "two_bus_balanced": (["1", "2"], [("1", "2", 200.0)], [("2", p, 10.0, 1.0) for p in range(3)]),
    "two_bus_single_phase": (["1", "2"], [("1", "2", 200.0)], [("2", 1, 8.0, 0.95)]),
    "four_bus_two_branch": (
        ["1", "2", "3", "4"],
        [("1", "2", 150.0), ("2", "3", 100.0), ("2", "4", 120.0)],
        [("3", 0, 6.0, 0.95), ("3", 1, 3.0, 1.0), ("4", 2, 9.0, 0.9), ("4", 0, 2.0, 1.0), ("2", 1, 4.0, 0.95)],
    ),
}

for name, (buses, segs, loads) in NETWORKS.items():
    v = solve(buses, segs, loads)
    print(name)
    for b, row in zip(buses, v):
        cells = ", ".join(f"({z.real:.15f}, {z.imag:.15f})" for z in row)
        print(f"  {b}: [{cells}]")
