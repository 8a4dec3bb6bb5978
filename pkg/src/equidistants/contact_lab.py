"""Contact-side pipeline for affine equidistants.

A weakly parallel pair of submanifold germs is stored in adapted graph
coordinates as a GraphPair.  Everything else is derived from it: the
lambda-reflection, the contact map of the two germs, the local form of the
lambda-point projection restricted to their product, the contact map of the
first germ against the reflected second one, the rank-0 reduced germ, and
the three local rings whose agreement ties the projection's singularity
type to the contact class.

Coordinate blocks: y in R^k and z in R^(n-k) parametrize the first germ,
whose graph is u = phi(y,z), v = psi(y,z); the second germ is parametrized
by (ytilde, v) with z = eta(ytilde, v), u = zeta(ytilde, v).  Here
u in R^(q+k-2n) and all four component maps vanish to second order, so the
tangent spaces at the origin intersect in a k-dimensional direction after
translation.  The strongly parallel case k = n simply drops the z and v
blocks.

lambda is kept as an exact rational throughout so ring dimensions come out
of exact linear algebra rather than floating point.
"""

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from .germ_algebra import (
    INFINITE,
    REGULAR,
    LocalAlgebraReport,
    MapGerm,
    corank,
    default_order,
    local_algebra,
    mapgerm_to_dict,
    p_compose,
    rank0_reduce,
)

Poly = Dict[Tuple[int, ...], Fraction]


def _check_lambda(lam) -> Fraction:
    if lam is None:
        raise ValueError("no lambda given and the pair stores none")
    try:
        lam = Fraction(lam)
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise ValueError(f"cannot read lambda from {lam!r}") from err
    if lam == 0 or lam == 1:
        raise ValueError("lambda must avoid 0 and 1; those collapse the "
                         "reflection")
    return lam


# ---------------------------------------------------------------- GraphPair


@dataclass(frozen=True)
class GraphPair:
    """Two submanifold germs of dimension n in R^q, in adapted coordinates,
    with translated tangent spaces meeting in dimension k."""

    n: int
    q: int
    k: int
    phi: MapGerm
    psi: MapGerm
    eta: MapGerm
    zeta: MapGerm
    lam: Optional[Fraction] = None

    def __post_init__(self):
        n, q, k = self.n, self.q, self.k
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        if q > 2 * n:
            raise ValueError(f"need q <= 2n, got n={n}, q={q}")
        if q + k - 2 * n < 1:
            raise ValueError(
                "translated tangent spaces would span the ambient space: "
                f"need q+k-2n >= 1, got n={n}, q={q}, k={k}"
            )
        shapes = {
            "phi": (self.phi, self.u_dim),
            "psi": (self.psi, self.z_dim),
            "eta": (self.eta, self.z_dim),
            "zeta": (self.zeta, self.u_dim),
        }
        for name, (g, tdim) in shapes.items():
            if g.source_dim != n:
                raise ValueError(
                    f"{name} must depend on {n} variables, got {g.source_dim}"
                )
            if g.target_dim != tdim:
                raise ValueError(
                    f"{name} must have {tdim} components, got {g.target_dim}"
                )
            for p in g.polys():
                if any(sum(exp) < 2 for exp in p):
                    raise ValueError(
                        f"{name} must vanish to second order at the origin"
                    )
        if self.lam is not None:
            object.__setattr__(self, "lam", _check_lambda(self.lam))

    @property
    def u_dim(self) -> int:
        return self.q + self.k - 2 * self.n

    @property
    def z_dim(self) -> int:
        return self.n - self.k


def swap_pair(gp: GraphPair) -> GraphPair:
    """Exchange the two germs' roles.  The z and v blocks trade places, so
    the graph data swaps as (phi, psi, eta, zeta) -> (zeta, eta, psi, phi);
    the stored lambda flips to 1-lambda, the matching parameter value."""
    return GraphPair(
        gp.n, gp.q, gp.k,
        phi=gp.zeta, psi=gp.eta, eta=gp.psi, zeta=gp.phi,
        lam=None if gp.lam is None else 1 - gp.lam,
    )


# ------------------------------------------------------- polynomial helpers


def _unit(i: int, total: int) -> Tuple[int, ...]:
    e = [0] * total
    e[i] = 1
    return tuple(e)


def _embed(p: Poly, positions: Sequence[int], total: int) -> Poly:
    """Re-index a polynomial into a larger variable tuple."""
    out: Poly = {}
    for exp, c in p.items():
        e = [0] * total
        for pos, a in zip(positions, exp):
            e[pos] = a
        out[tuple(e)] = c
    return out


def _scale(p: Poly, c: Fraction) -> Poly:
    return {e: c * v for e, v in p.items()} if c else {}


def _merge(*parts: Poly) -> Poly:
    out: Poly = {}
    for p in parts:
        for e, c in p.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
    return out


def _work_order(gp: GraphPair, source_dim: int) -> int:
    top = max(g.max_degree()
              for g in (gp.phi, gp.psi, gp.eta, gp.zeta))
    return max(default_order(source_dim), top)


# ------------------------------------------------------------- reflections


def lambda_reflection(a: Sequence, lam, x: Sequence) -> tuple:
    """Image of x under the affine reflection through a with ratio lambda:
    (1/lambda) a - ((1-lambda)/lambda) x."""
    lam = _check_lambda(lam)
    if len(a) != len(x):
        raise ValueError("a and x must have the same length")
    inv = 1 / lam
    w = (1 - lam) / lam
    return tuple(inv * ai - w * xi for ai, xi in zip(a, x))


# ------------------------------------------------------------ contact maps


def contact_map(gp: GraphPair) -> MapGerm:
    """kappa(y,z) = (z - eta(y, psi(y,z)), phi(y,z) - zeta(y, psi(y,z))),
    a germ (R^n,0) -> (R^(q-n),0) whose corank equals k; truncated
    composition at the working jet order."""
    n, k = gp.n, gp.k
    order = _work_order(gp, n)
    inner = [{_unit(i, n): Fraction(1)} for i in range(k)] + list(
        gp.psi.polys()
    )
    comps: List[Poly] = []
    for j, eta_j in enumerate(gp.eta.polys()):
        comps.append(_merge(
            {_unit(k + j, n): Fraction(1)},
            _scale(p_compose(eta_j, inner, n, order), Fraction(-1)),
        ))
    for phi_i, zeta_i in zip(gp.phi.polys(), gp.zeta.polys()):
        comps.append(_merge(
            phi_i,
            _scale(p_compose(zeta_i, inner, n, order), Fraction(-1)),
        ))
    return MapGerm.from_polys(comps, n, order=order)


def lambda_contact_from_pair(gp: GraphPair, lam=None) -> MapGerm:
    """Contact map of the first germ against the lambda-reflection of the
    second: components z + ((1-lambda)/lambda) eta(s y, s psi(y,z)) and
    phi(y,z) + ((1-lambda)/lambda) zeta(s y, s psi(y,z)) where
    s = -lambda/(1-lambda); exact in lambda."""
    lam = _check_lambda(lam if lam is not None else gp.lam)
    n, k = gp.n, gp.k
    order = _work_order(gp, n)
    pref = (1 - lam) / lam
    s = -lam / (1 - lam)
    inner = [{_unit(i, n): s} for i in range(k)] + [
        _scale(p, s) for p in gp.psi.polys()
    ]
    comps: List[Poly] = []
    for j, eta_j in enumerate(gp.eta.polys()):
        comps.append(_merge(
            {_unit(k + j, n): Fraction(1)},
            _scale(p_compose(eta_j, inner, n, order), pref),
        ))
    for phi_i, zeta_i in zip(gp.phi.polys(), gp.zeta.polys()):
        comps.append(_merge(
            phi_i,
            _scale(p_compose(zeta_i, inner, n, order), pref),
        ))
    return MapGerm.from_polys(comps, n, order=order)


def reduce_to_theta(kappa: MapGerm, n: int, q: int) -> Union[MapGerm, str]:
    """Rank-0 reduction of a contact map (R^n,0) -> (R^(q-n),0).  The result
    has source dim corank(kappa) and target dim corank(kappa)-(2n-q);
    REGULAR when every component is eliminated."""
    if kappa.source_dim != n or kappa.target_dim != q - n:
        raise ValueError(
            f"contact map for (n,q)=({n},{q}) must be "
            f"(R^{n},0)->(R^{q - n},0), got "
            f"(R^{kappa.source_dim},0)->(R^{kappa.target_dim},0)"
        )
    return rank0_reduce(kappa)


# ---------------------------------------------------- projection local form


def pi_tilde_local(gp: GraphPair, lam=None) -> MapGerm:
    """The lambda-point projection restricted to the product of the two
    germs, in coordinates (y, z, ytilde, v) on (R^(2n),0):

        ( lambda y + (1-lambda) ytilde,
          lambda z + (1-lambda) eta(ytilde, v),
          lambda phi(y,z) + (1-lambda) zeta(ytilde, v),
          lambda psi(y,z) + (1-lambda) v )

    Its linear part has rank 2n-k, i.e. target corank q+k-2n."""
    lam = _check_lambda(lam if lam is not None else gp.lam)
    n, k = gp.n, gp.k
    total = 2 * n
    order = _work_order(gp, total)
    lam1 = 1 - lam
    plus = list(range(n))            # (y, z)
    minus = list(range(n, total))    # (ytilde, v)
    comps: List[Poly] = []
    for i in range(k):
        comps.append({_unit(i, total): lam, _unit(n + i, total): lam1})
    for j, eta_j in enumerate(gp.eta.polys()):
        comps.append(_merge(
            {_unit(k + j, total): lam},
            _scale(_embed(eta_j, minus, total), lam1),
        ))
    for phi_i, zeta_i in zip(gp.phi.polys(), gp.zeta.polys()):
        comps.append(_merge(
            _scale(_embed(phi_i, plus, total), lam),
            _scale(_embed(zeta_i, minus, total), lam1),
        ))
    for j, psi_j in enumerate(gp.psi.polys()):
        comps.append(_merge(
            _scale(_embed(psi_j, plus, total), lam),
            {_unit(n + k + j, total): lam1},
        ))
    return MapGerm.from_polys(comps, total, order=order)


# ------------------------------------------------------------- ring checks


class RingDims(NamedTuple):
    """Local algebra reports of the three rings that must agree."""

    pi: LocalAlgebraReport
    kappa: LocalAlgebraReport
    theta: LocalAlgebraReport

    @property
    def dimensions(self) -> tuple:
        return (self.pi.dimension, self.kappa.dimension,
                self.theta.dimension)

    @property
    def hilberts(self) -> tuple:
        return (self.pi.hilbert, self.kappa.hilbert, self.theta.hilbert)


def local_ring_dims(gp: GraphPair, lam=None,
                    order: Optional[int] = None) -> RingDims:
    """Reports for the quotients of E_2n, E_n and E_k by the component
    ideals of the projection local form, the lambda-contact map, and its
    rank-0 reduction.  The three agree (the first two always, the third
    whenever defined); INFINITE entries are reported per slot."""
    lam = _check_lambda(lam if lam is not None else gp.lam)
    pi = pi_tilde_local(gp, lam)
    kap = lambda_contact_from_pair(gp, lam)
    theta = rank0_reduce(kap)
    if theta is REGULAR:
        raise ValueError(
            "contact is transversal; no reduced germ exists for this pair"
        )
    return RingDims(
        local_algebra(pi, order=order),
        local_algebra(kap, order=order),
        local_algebra(theta, order=order),
    )


# ------------------------------------------------------------ serialization


def _polys_from_payload(payload, slots: int, n: int, name: str) -> List[Poly]:
    if not isinstance(payload, list) or len(payload) != slots:
        raise ValueError(f"{name} must list {slots} components")
    polys: List[Poly] = []
    for comp in payload:
        if not isinstance(comp, list):
            raise ValueError(f"{name} components must be lists of terms")
        p: Poly = {}
        for item in comp:
            try:
                exps = tuple(int(e) for e in item["exponents"])
                c = Fraction(item["coeff"])
            except (KeyError, TypeError, ValueError,
                    ZeroDivisionError) as err:
                raise ValueError(f"bad term in {name}: {item!r}") from err
            p[exps] = p.get(exps, Fraction(0)) + c
        polys.append(p)
    return polys


def graphpair_to_dict(gp: GraphPair) -> dict:
    out = {
        "n": gp.n, "q": gp.q, "k": gp.k,
        "lambda": None if gp.lam is None else
        f"{gp.lam.numerator}/{gp.lam.denominator}",
    }
    for name in ("phi", "psi", "eta", "zeta"):
        out[name] = mapgerm_to_dict(getattr(gp, name))["components"]
    return out


def graphpair_from_dict(payload: dict) -> GraphPair:
    try:
        n, q, k = (int(payload[key]) for key in ("n", "q", "k"))
    except (KeyError, TypeError, ValueError) as err:
        raise ValueError("payload must carry integer n, q, k") from err
    u_dim, z_dim = q + k - 2 * n, n - k
    germs = {}
    for name, slots in (("phi", u_dim), ("psi", z_dim),
                        ("eta", z_dim), ("zeta", u_dim)):
        if name not in payload:
            raise ValueError(f"payload lacks {name}")
        germs[name] = MapGerm.from_polys(
            _polys_from_payload(payload[name], slots, n, name), n
        )
    lam = payload.get("lambda")
    return GraphPair(n, q, k, lam=lam, **germs)


def graphpair_to_json(gp: GraphPair) -> str:
    return json.dumps(graphpair_to_dict(gp), indent=2, sort_keys=True)


def graphpair_from_json(text: str) -> GraphPair:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"not valid JSON: {err}") from err
    return graphpair_from_dict(payload)


# ----------------------------------------------------------- random pairs


def random_graph_pair(n: int, q: int, k: int, seed,
                      lam=None) -> GraphPair:
    """Deterministic pseudo-random GraphPair: sparse integer-coefficient
    quadratic and cubic terms in every block."""
    rng = random.Random(f"graphpair|{seed}|{n}|{q}|{k}")
    u_dim, z_dim = q + k - 2 * n, n - k

    def monomials(degree):
        if n == 1:
            return [(degree,)]
        out = []

        def rec(prefix, left, slots):
            if slots == 1:
                out.append(prefix + (left,))
                return
            for a in range(left + 1):
                rec(prefix + (a,), left - a, slots - 1)

        rec((), degree, n)
        return out

    quads, cubes = monomials(2), monomials(3)

    def rand_poly():
        p = {}
        for exp in quads:
            if rng.random() < 0.5:
                c = rng.randint(-2, 2)
                if c:
                    p[exp] = Fraction(c)
        for exp in cubes:
            if rng.random() < 0.25:
                c = rng.randint(-1, 1)
                if c:
                    p[exp] = Fraction(c)
        return p

    def rand_germ(slots):
        return MapGerm.from_polys([rand_poly() for _ in range(slots)], n)

    return GraphPair(
        n, q, k,
        phi=rand_germ(u_dim), psi=rand_germ(z_dim),
        eta=rand_germ(z_dim), zeta=rand_germ(u_dim),
        lam=lam,
    )
