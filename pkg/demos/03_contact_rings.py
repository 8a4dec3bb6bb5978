"""Contact maps, reduced germs, and the three rings of a tangent pair.

Two n-dimensional graphs through the origin that share a degenerate chord
direction define a contact map kappa.  Its class is invariant under the
contact group, and three local rings measure it: the ring of the projected
double point set, the ring of kappa, and the ring of the fully reduced
germ theta.  For finite contact all three have the same dimension.
"""

from fractions import Fraction

from equidistants import (
    GraphPair,
    MapGerm,
    format_poly,
    lambda_contact_from_pair,
    local_ring_dims,
    random_graph_pair,
    random_k_move,
    recognize,
    reduce_to_theta,
)

HALF = Fraction(1, 2)


def germ(polys, s):
    return MapGerm.from_polys(polys, s)


def show_pair(name, gp, lam):
    kappa = lambda_contact_from_pair(gp, lam)
    theta = reduce_to_theta(kappa, gp.n, gp.q)
    cls = recognize(kappa)
    print("{} (n={}, q={}, k={}), lambda = {}:".format(name, gp.n, gp.q, gp.k, lam))
    print("  kappa = [{}]".format("; ".join(format_poly(p) for p in kappa.polys())))
    print("  theta = [{}]".format("; ".join(format_poly(p) for p in theta.polys())))
    dims = local_ring_dims(gp, lam)
    print("  ring dimensions (pi, kappa, theta): {}".format(dims.dimensions))
    print("  contact class: {} with mu = {}".format(cls.label, cls.mu))
    print()
    return cls


def main():
    parabolas = GraphPair(
        1, 2, 1,
        phi=germ([{(2,): 1}], 1), psi=germ([], 1),
        eta=germ([], 1), zeta=germ([{(2,): 1}], 1),
    )
    show_pair("two parabolas, opposite bending", parabolas, HALF)

    cubic = GraphPair(
        1, 2, 1,
        phi=germ([{(2,): 1, (3,): 1}], 1), psi=germ([], 1),
        eta=germ([], 1), zeta=germ([{(2,): -2}], 1),
    )
    show_pair("parabola against a cubic graph, curvatures matched", cubic, Fraction(1, 3))

    surface = random_graph_pair(2, 4, 2, seed=11)
    cls = show_pair("seeded corank-2 surface pair in R^4", surface, HALF)

    kappa = lambda_contact_from_pair(surface, HALF)
    for i in range(3):
        kappa = random_k_move(kappa, seed=100 + i)
    print(
        "after three contact-group moves on kappa the class is still {}".format(
            recognize(kappa).label
        )
    )
    assert recognize(kappa).label == cls.label


if __name__ == "__main__":
    main()
