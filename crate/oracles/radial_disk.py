"""Closed-form diagonal CGPTs of a disk and a concentric coated disk.

Solves the radial transmission problem symbolically for the harmonic
r^m cos(m t) and prints M_mm = -2 pi m D, where D is the coefficient of
r^-m in the exterior solution. Used to cross-check the numeric ODE oracle
in crates/core/tests/common/mod.rs.

    python3 oracles/radial_disk.py
"""

import sympy as sp

r, k, k1, k2, rho = sp.symbols("r k k1 k2 rho", positive=True)
m = sp.Symbol("m", positive=True, integer=True)


def homogeneous_disk():
    A, D = sp.symbols("A D")
    eqs = [sp.Eq(A, 1 + D), sp.Eq(k * m * A, m * (1 - D))]
    sol = sp.solve(eqs, [A, D], dict=True)[0]
    return sp.simplify(-2 * sp.pi * m * sol[D])


def coated_disk():
    A, B, C, D = sp.symbols("A B C D")
    eqs = [
        sp.Eq(B + C, 1 + D),
        sp.Eq(k1 * (B - C), 1 - D),
        sp.Eq(A * rho**m, B * rho**m + C * rho**-m),
        sp.Eq(k2 * A * rho**m, k1 * (B * rho**m - C * rho**-m)),
    ]
    sol = sp.solve(eqs, [A, B, C, D], dict=True)[0]
    return sp.simplify(-2 * sp.pi * m * sol[D])


if __name__ == "__main__":
    hom = homogeneous_disk()
    coat = coated_disk()
    print("disk M_mm =", hom)
    print("coated M_mm =", coat)
    for mm in (1, 2, 3):
        print(f"k=2 disk m={mm}: {sp.N(hom.subs({k: 2, m: mm}), 17)}")
        print(f"k1=2,k2=4,rho=0.5 m={mm}: {sp.N(coat.subs({k1: 2, k2: 4, rho: sp.Rational(1, 2), m: mm}), 17)}")
    t = coat.subs({k1: 2, k2: 4, rho: sp.Rational(1, 2), m: 1}) / (2 * sp.pi)
    print("k_eff =", sp.N((1 + t) / (1 - t), 17))
