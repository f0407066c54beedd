"""Generalized versus classical bound for the triangular/exponential pair and the optimal family."""

import math

from phifam import classical_crb_sides, crb_sides, fisher_matrix, g_matrix
from phifam.errors import DivergentIntegral
from phifam.fixtures import FIVE_E_MINUS_13, constant_family, triangular_exponential_pair


def main() -> None:
    pair = triangular_exponential_pair()
    est = pair.estimator()
    print("triangular base with exponential escort, estimator c = 3x")
    print(f"{'theta':>6} {'g theta^2/4':>14} {'lhs':>12} {'rhs':>12} {'rhs/theta^2':>12}")
    for t in (0.5, 1.0, 2.0):
        g = g_matrix(pair, t).entries[0, 0]
        lhs, rhs = crb_sides(pair, est, t, [1.0], [1.0])
        print(f"{t:>6g} {g * t * t / 4:>14.10f} {lhs:>12.6f} {rhs:>12.6f} {rhs / t / t:>12.6f}")
    print(f"reference 5e - 13 = {FIVE_E_MINUS_13:.10f}")
    print(f"Fisher information divergent: {fisher_matrix(pair, 1.0).divergent}")
    try:
        classical_crb_sides(pair, est, 1.0, [1.0], [1.0])
    except DivergentIntegral as err:
        print(f"classical bound: {err}")

    fam = constant_family()
    print("\nconstant deformer, c = 2x: the bound is attained")
    for Theta in (0.25, 1.0, 4.0):
        lhs, rhs = crb_sides(fam.pair(), fam.estimator, Theta, [1.0], [1.0])
        t = 1 / math.sqrt(Theta)
        print(f"Theta={Theta:<5g} lhs={lhs:.10f} rhs={rhs:.10f} 3/theta^4={3 / t**4:.10f}")


if __name__ == "__main__":
    main()
