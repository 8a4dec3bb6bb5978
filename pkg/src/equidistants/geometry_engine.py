"""Numerical side of the toolkit: parametrized closed submanifolds, location
of weakly parallel pairs, tracing of affine lambda-equidistants, singularity
detection on traced branches, and the bridge that turns a located pair into
an exact adapted-coordinate GraphPair for the algebra side.

Conventions.  Builtin families carry closed-form derivatives; sampled grids
differentiate a 7-point local Lagrange interpolant, whose node values are
the classical 4th-order central-difference stencils.  Numerical rank uses
singular values with the relative threshold TAU_RANK.  The float-to-exact
bridge snaps Taylor coefficients to rationals after zeroing entries below a
relative clip, so tangency-forced zeros survive roundoff.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .contact_lab import GraphPair, contact_map
from .germ_algebra import MapGerm, monomials_upto
from .normal_forms import GermClass, recognize

TAU_RANK = 1e-8
FRAME_COND_LIMIT = 1e8
COEFF_CLIP = 1e-9
SNAP_DENOMINATOR = 10 ** 12
TWO_PI = 2.0 * math.pi


class ImmersionError(ValueError):
    """The tangent frame dropped rank at an evaluated parameter."""


class FrameAlignmentError(ValueError):
    """The adapted frame at a pair is ill conditioned or misaligned."""


# --------------------------------------------------------------------------
# evaluators


def _shifted_cos(theta, m):
    return np.cos(theta + m * (math.pi / 2.0))


def _shifted_sin(theta, m):
    return np.sin(theta + m * (math.pi / 2.0))


class _Ellipse:
    def __init__(self, a: float, b: float):
        if a <= 0 or b <= 0:
            raise ValueError("ellipse axes must be positive")
        self.a, self.b = float(a), float(b)

    def derivative(self, params, alpha):
        (th,) = params
        (m,) = alpha
        return np.stack(
            [self.a * _shifted_cos(th, m), self.b * _shifted_sin(th, m)],
            axis=-1,
        )

    def payload(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


class _FourierOval:
    """Polar curve r(theta) = 1 + sum_j a_j cos(j theta) + b_j sin(j theta)."""

    def __init__(self, a: Sequence[float], b: Sequence[float]):
        self.a = tuple(float(c) for c in a)
        self.b = tuple(float(c) for c in b)

    def _r_deriv(self, th, m):
        out = np.ones_like(np.asarray(th, dtype=float)) if m == 0 else \
            np.zeros_like(np.asarray(th, dtype=float))
        for j, c in enumerate(self.a, start=1):
            if c:
                out = out + c * (j ** m) * _shifted_cos(j * th, m)
        for j, c in enumerate(self.b, start=1):
            if c:
                out = out + c * (j ** m) * _shifted_sin(j * th, m)
        return out

    def derivative(self, params, alpha):
        (th,) = params
        (m,) = alpha
        x = 0.0
        y = 0.0
        for i in range(m + 1):
            binom = math.comb(m, i)
            ri = self._r_deriv(th, i)
            x = x + binom * ri * _shifted_cos(th, m - i)
            y = y + binom * ri * _shifted_sin(th, m - i)
        return np.stack([np.asarray(x, dtype=float),
                         np.asarray(y, dtype=float)], axis=-1)

    def payload(self):
        return {"kind": "fourier_oval", "a": list(self.a), "b": list(self.b)}


class _Torus:
    def __init__(self, R: float, r: float):
        if R <= 0 or r <= 0:
            raise ValueError("torus radii must be positive")
        self.R, self.r = float(R), float(r)

    def derivative(self, params, alpha):
        u, v = params
        i, j = alpha
        R, r = self.R, self.r
        # x = R cos u + r cos v cos u, y = R sin u + r cos v sin u, z = r sin v
        cu_i = _shifted_cos(u, i)
        su_i = _shifted_sin(u, i)
        cv_j = _shifted_cos(v, j)
        x = (R * cu_i if j == 0 else 0.0) + r * cv_j * cu_i
        y = (R * su_i if j == 0 else 0.0) + r * cv_j * su_i
        z = r * _shifted_sin(v, j) if i == 0 else 0.0
        shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
        return np.stack(
            [np.broadcast_to(np.asarray(c, dtype=float), shape)
             for c in (x, y, z)],
            axis=-1,
        )

    def payload(self):
        return {"kind": "torus", "R": self.R, "r": self.r}


class _GraphSurface:
    """Graph (y1, y2, f_1(y), ..) over a box, extra components polynomial."""

    def __init__(self, components: Sequence[Dict[Tuple[int, int], float]],
                 halfwidth: float = 1.0):
        self.components = tuple(
            {tuple(int(x) for x in e): float(c) for e, c in comp.items()}
            for comp in components
        )
        self.halfwidth = float(halfwidth)

    def derivative(self, params, alpha):
        y1, y2 = (np.asarray(p, dtype=float) for p in params)
        i, j = alpha
        shape = np.broadcast(y1, y2).shape
        cols = []
        base = [y1, y2]
        for axis in range(2):
            if alpha == (0, 0):
                cols.append(np.broadcast_to(base[axis], shape))
            elif (i, j) == ((1, 0) if axis == 0 else (0, 1)):
                cols.append(np.ones(shape))
            else:
                cols.append(np.zeros(shape))
        for comp in self.components:
            acc = np.zeros(shape)
            for (e1, e2), c in comp.items():
                if e1 < i or e2 < j:
                    continue
                f = c * math.perm(e1, i) * math.perm(e2, j)
                acc = acc + f * y1 ** (e1 - i) * y2 ** (e2 - j)
            cols.append(acc)
        return np.stack(cols, axis=-1)

    def payload(self):
        comps = [
            [{"coeff": c, "exponents": list(e)} for e, c in sorted(p.items())]
            for p in self.components
        ]
        return {"kind": "graph_surface", "components": comps,
                "halfwidth": self.halfwidth}


def _lagrange_matrix() -> np.ndarray:
    # coefficients of the degree-6 interpolant through nodes -3..3
    nodes = np.arange(-3, 4, dtype=float)
    V = np.vander(nodes, 7, increasing=True)
    return np.linalg.inv(V)


_LAGRANGE_INV = _lagrange_matrix()


def _poly_eval_deriv(coeffs: np.ndarray, tau: float, m: int) -> np.ndarray:
    # coeffs indexed by power along axis 0
    out = np.zeros(coeffs.shape[1:])
    for p in range(m, coeffs.shape[0]):
        out = out + coeffs[p] * math.perm(p, m) * tau ** (p - m)
    return out


class _SampledCurve:
    def __init__(self, grid: np.ndarray, period: float = TWO_PI):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] < 7:
            raise ValueError("sampled curve needs at least 7 grid points")
        self.grid = grid
        self.period = float(period)
        self.h = self.period / grid.shape[0]

    def derivative(self, params, alpha):
        (th,) = params
        (m,) = alpha
        th = np.asarray(th, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        n = self.grid.shape[0]
        idx = np.rint(th / self.h).astype(int)
        tau = th / self.h - idx
        rows = (idx[:, None] + np.arange(-3, 4)[None, :]) % n
        window = self.grid[rows]                # (N, 7, q)
        coeffs = np.einsum("pk,nkq->pnq", _LAGRANGE_INV, window)
        out = np.empty((th.shape[0], self.grid.shape[1]))
        for i in range(th.shape[0]):
            out[i] = _poly_eval_deriv(coeffs[:, i, :], tau[i], m) / self.h ** m
        return out[0] if scalar else out

    def payload(self):
        return {"kind": "samples", "n": 1, "q": self.grid.shape[1],
                "grid": self.grid.tolist()}


class _SampledSurface:
    def __init__(self, grid: np.ndarray, periods=(TWO_PI, TWO_PI)):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 3 or grid.shape[0] < 7 or grid.shape[1] < 7:
            raise ValueError("sampled surface needs a 7x7 grid at least")
        self.grid = grid
        self.periods = tuple(float(p) for p in periods)
        self.h = (self.periods[0] / grid.shape[0],
                  self.periods[1] / grid.shape[1])

    def derivative(self, params, alpha):
        u, v = (np.asarray(p, dtype=float) for p in params)
        i, j = alpha
        scalar = u.ndim == 0 and v.ndim == 0
        u, v = np.atleast_1d(u), np.atleast_1d(v)
        u, v = np.broadcast_arrays(u, v)
        out = np.empty(u.shape + (self.grid.shape[2],))
        n0, n1 = self.grid.shape[:2]
        for pos in np.ndindex(u.shape):
            i0 = int(round(u[pos] / self.h[0]))
            j0 = int(round(v[pos] / self.h[1]))
            t0 = u[pos] / self.h[0] - i0
            t1 = v[pos] / self.h[1] - j0
            rows = (i0 + np.arange(-3, 4)) % n0
            cols = (j0 + np.arange(-3, 4)) % n1
            block = self.grid[np.ix_(rows, cols)]        # (7, 7, q)
            c1 = np.einsum("pk,akq->paq", _LAGRANGE_INV, block)
            line = np.stack(
                [_poly_eval_deriv(c1[:, a, :], t1, j) for a in range(7)])
            c0 = _LAGRANGE_INV @ line                    # (7, q)
            out[pos] = _poly_eval_deriv(c0, t0, i) / (
                self.h[0] ** i * self.h[1] ** j)
        return out[(0,) * (out.ndim - 1)] if scalar else out

    def payload(self):
        return {"kind": "samples", "n": 2, "q": self.grid.shape[2],
                "grid": self.grid.tolist()}


# --------------------------------------------------------------------------
# manifold front end


@dataclass
class ParametricManifold:
    """Closed parametrized submanifold with derivative access.

    `periods[i]` is the period of parameter i, or None on a box domain.
    `derivative(params, alpha)` returns the mixed partial of multi-index
    alpha; alpha = (0,..,0) is the position.  Components of `params` may be
    floats or broadcastable arrays.
    """

    n: int
    q: int
    kind: str
    periods: Tuple[Optional[float], ...]
    _ev: object

    def position(self, params):
        return self.derivative(params, (0,) * self.n)

    def derivative(self, params, alpha):
        params = _as_params(params, self.n)
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n or any(a < 0 for a in alpha):
            raise ValueError(f"bad derivative multi-index {alpha}")
        return self._ev.derivative(params, alpha)

    def to_dict(self) -> dict:
        return self._ev.payload()

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _as_params(params, n):
    if n == 1 and np.isscalar(params):
        return (float(params),)
    if isinstance(params, np.ndarray) and n == 1 and params.ndim >= 1 \
            and not isinstance(params, tuple):
        return (params,)
    params = tuple(params)
    if len(params) != n:
        raise ValueError(f"expected {n} parameters, got {len(params)}")
    return params


def ellipse(a: float = 2.0, b: float = 1.0) -> ParametricManifold:
    return ParametricManifold(1, 2, "ellipse", (TWO_PI,), _Ellipse(a, b))


def fourier_oval(a: Sequence[float] = (), b: Sequence[float] = ()) \
        -> ParametricManifold:
    return ParametricManifold(1, 2, "fourier_oval", (TWO_PI,),
                              _FourierOval(a, b))


def torus(R: float = 2.0, r: float = 0.5) -> ParametricManifold:
    return ParametricManifold(2, 3, "torus", (TWO_PI, TWO_PI), _Torus(R, r))


def graph_surface(components, halfwidth: float = 1.0) -> ParametricManifold:
    ev = _GraphSurface(components, halfwidth)
    return ParametricManifold(2, 2 + len(ev.components), "graph_surface",
                              (None, None), ev)


def sampled_curve(grid, q: Optional[int] = None) -> ParametricManifold:
    ev = _SampledCurve(np.asarray(grid, dtype=float))
    return ParametricManifold(1, ev.grid.shape[1], "samples", (TWO_PI,), ev)


def sampled_surface(grid) -> ParametricManifold:
    ev = _SampledSurface(np.asarray(grid, dtype=float))
    return ParametricManifold(2, ev.grid.shape[2], "samples",
                              (TWO_PI, TWO_PI), ev)


def manifold_from_dict(payload: dict) -> ParametricManifold:
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ValueError("manifold payload needs a 'kind' field")
    kind = payload["kind"]
    try:
        if kind == "ellipse":
            return ellipse(payload["a"], payload["b"])
        if kind == "fourier_oval":
            return fourier_oval(payload.get("a", ()), payload.get("b", ()))
        if kind == "torus":
            return torus(payload["R"], payload["r"])
        if kind == "graph_surface":
            comps = [
                {tuple(t["exponents"]): float(t["coeff"]) for t in comp}
                for comp in payload["components"]
            ]
            return graph_surface(comps, payload.get("halfwidth", 1.0))
        if kind == "samples":
            grid = np.asarray(payload["grid"], dtype=float)
            if int(payload.get("n", 1)) == 1:
                return sampled_curve(grid)
            return sampled_surface(grid)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed manifold payload: {exc}") from exc
    raise ValueError(f"unknown manifold kind {kind!r}")


def manifold_from_json(text: str) -> ParametricManifold:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    return manifold_from_dict(payload)


# --------------------------------------------------------------------------
# frames and parallelism


def tangent_frame(M: ParametricManifold, params) -> np.ndarray:
    """Rows are the first partial derivatives at `params` (an n x q frame)."""
    rows = [M.derivative(params, tuple(int(i == j) for j in range(M.n)))
            for i in range(M.n)]
    frame = np.stack(rows)
    sv = np.linalg.svd(frame, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= TAU_RANK * sv[0]:
        raise ImmersionError(
            f"tangent frame drops rank at {params}: singular values {sv}")
    return frame


def _toroidal_dist(a: float, b: float, period: Optional[float]) -> float:
    if period is None:
        return abs(a - b)
    d = math.fmod(abs(a - b), period)
    return min(d, period - d)


def _params_distinct(M, s, t) -> bool:
    ss, tt = _as_params(s, M.n), _as_params(t, M.n)
    return any(
        _toroidal_dist(a, b, M.periods[i]) > 1e-12
        for i, (a, b) in enumerate(zip(ss, tt))
    )


def parallelism(M: ParametricManifold, s, t) -> Tuple[int, int]:
    """Degree and codimension of (weak) parallelism of the pair (s, t).

    r is the numerical rank of the stacked 2n x q frame; the degree is
    2n - r and the codimension q - r, so 2n - deg = q - codim holds by
    construction and is asserted.  codim = 0 means not weakly parallel.
    """
    if not _params_distinct(M, s, t):
        raise ValueError("parallelism needs distinct parameters")
    stacked = np.vstack([tangent_frame(M, s), tangent_frame(M, t)])
    sv = np.linalg.svd(stacked, compute_uv=False)
    r = int(np.sum(sv > TAU_RANK * sv[0]))
    deg_k, codim = 2 * M.n - r, M.q - r
    assert 2 * M.n - deg_k == M.q - codim
    return deg_k, codim


@dataclass
class PairPoint:
    """A weakly parallel pair: parameters, points, and its degeneracy data."""

    s: object
    t: object
    a: np.ndarray
    b: np.ndarray
    deg_k: int
    codim: int
    residual: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        n = 1 if np.isscalar(self.s) else len(self.s)
        if 2 * n - self.deg_k != len(self.a) - self.codim:
            raise ValueError(
                f"parallelism identity violated: n={n}, q={len(self.a)}, "
                f"deg={self.deg_k}, codim={self.codim}")

    def lambda_point(self, lam: float) -> np.ndarray:
        lam = float(lam)
        return lam * self.a + (1.0 - lam) * self.b


def _pair_point(M, s, t, residual):
    deg_k, codim = parallelism(M, s, t)
    return PairPoint(s, t, M.position(s), M.position(t), deg_k, codim,
                     float(residual))


# --------------------------------------------------------------------------
# locating weakly parallel pairs


def _curve_tangents(M, thetas):
    return M.derivative((np.asarray(thetas, dtype=float),), (1,))


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _g_scalar(M, s, t):
    Ts = M.derivative(s, (1,))
    Tt = M.derivative(t, (1,))
    scale = np.linalg.norm(Ts) * np.linalg.norm(Tt)
    return _cross2(Ts, Tt), scale


def _g_grad(M, s, t):
    Ts, Tt = M.derivative(s, (1,)), M.derivative(t, (1,))
    As, At = M.derivative(s, (2,)), M.derivative(t, (2,))
    g = _cross2(Ts, Tt)
    return g, _cross2(As, Tt), _cross2(Ts, At), \
        np.linalg.norm(Ts) * np.linalg.norm(Tt)


def _bisect_root(f, lo, hi, flo, iters=80):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _pairs_curve(M, density, tol, delta):
    thetas = np.arange(density) * (TWO_PI / density)
    T = _curve_tangents(M, thetas)
    G = np.outer(T[:, 0], np.ones(density)) * T[:, 1][None, :] \
        - np.outer(T[:, 1], np.ones(density)) * T[:, 0][None, :]
    norms = np.linalg.norm(T, axis=1)
    G = G / (norms[:, None] * norms[None, :])
    spacing = TWO_PI / density
    didx = np.abs(np.subtract.outer(np.arange(density), np.arange(density)))
    didx = np.minimum(didx, density - didx)
    banned = didx * spacing < delta

    found = {}

    def record(s, t, res):
        key = (int(round(s / (spacing / 2))) % (2 * density),
               int(round(t / (spacing / 2))) % (2 * density))
        if key not in found:
            found[key] = (s % TWO_PI, t % TWO_PI, res)

    def refine_line(fixed, lo, hi, flo, along_t):
        if along_t:
            f = lambda x: _g_scalar(M, fixed, x)[0]
        else:
            f = lambda x: _g_scalar(M, x, fixed)[0]
        root = _bisect_root(f, lo, hi, flo)
        val, scale = (_g_scalar(M, fixed, root) if along_t
                      else _g_scalar(M, root, fixed))
        if abs(val) <= tol * scale:
            if along_t:
                record(fixed, root, abs(val) / scale)
            else:
                record(root, fixed, abs(val) / scale)

    Gr = np.roll(G, -1, axis=1)
    sign_t = (G * Gr < 0) & ~banned & ~np.roll(banned, -1, axis=1)
    for i, j in zip(*np.nonzero(sign_t)):
        refine_line(thetas[i], thetas[j], thetas[j] + spacing,
                    G[i, j], along_t=True)
    Gc = np.roll(G, -1, axis=0)
    sign_s = (G * Gc < 0) & ~banned & ~np.roll(banned, -1, axis=0)
    for i, j in zip(*np.nonzero(sign_s)):
        refine_line(thetas[j], thetas[i], thetas[i] + spacing,
                    G[i, j], along_t=False)

    pairs = [_pair_point(M, s, t, res)
             for s, t, res in sorted(found.values())]
    return [p for p in pairs if p.codim > 0]


def _pairs_torus(M, density, tol, delta):
    us = np.arange(density) * (TWO_PI / density)
    U, V = np.meshgrid(us, us, indexing="ij")
    Tu = M.derivative((U, V), (1, 0))
    Tv = M.derivative((U, V), (0, 1))
    N = np.cross(Tu, Tv)
    N = N / np.linalg.norm(N, axis=-1, keepdims=True)
    flat = N.reshape(-1, 3)
    P = flat.shape[0]
    spacing = TWO_PI / density
    coords = np.stack([U.ravel(), V.ravel()], axis=1)
    # blocked all-pairs scan keeps memory at O(block * P)
    block = max(1, 4_000_000 // P)
    cand_rows = []
    for lo_i in range(0, P, block):
        hi_i = min(lo_i + block, P)
        cross = np.cross(flat[lo_i:hi_i, None, :], flat[None, :, :])
        mis = np.linalg.norm(cross, axis=-1)
        du = np.abs(coords[lo_i:hi_i, None, 0] - coords[None, :, 0])
        dv = np.abs(coords[lo_i:hi_i, None, 1] - coords[None, :, 1])
        du = np.minimum(du, TWO_PI - du)
        dv = np.minimum(dv, TWO_PI - dv)
        near = np.maximum(du, dv) < delta
        hits = np.argwhere((mis < 2.0 * spacing) & ~near)
        hits[:, 0] += lo_i
        cand_rows.append(hits)
    cand = np.vstack(cand_rows) if cand_rows else np.empty((0, 2), dtype=int)
    cand = cand[cand[:, 0] < cand[:, 1]]
    if not len(cand):
        return []

    def normals(u, v):
        tu = M.derivative((u, v), (1, 0))
        tv = M.derivative((u, v), (0, 1))
        nn = np.cross(tu, tv)
        return nn / np.linalg.norm(nn, axis=-1, keepdims=True)

    def resid(Z):
        return np.cross(normals(Z[:, 0], Z[:, 1]), normals(Z[:, 2], Z[:, 3]))

    # Gauss-Newton on all candidates at once, finite-difference Jacobian
    Z = np.hstack([coords[cand[:, 0]], coords[cand[:, 1]]])
    h = 1e-6
    for _ in range(40):
        r = resid(Z)
        active = np.linalg.norm(r, axis=1) >= tol
        if not active.any():
            break
        cols = []
        for idx in range(4):
            Zp = Z.copy()
            Zp[:, idx] += h
            cols.append((resid(Zp) - r) / h)
        J = np.stack(cols, axis=2)
        step = -np.einsum("cij,cj->ci", np.linalg.pinv(J), r)
        step[~active] = 0.0
        sn = np.linalg.norm(step, axis=1)
        big = sn > 0.5
        step[big] *= (0.5 / sn[big])[:, None]
        Z = Z + step
    rn = np.linalg.norm(resid(Z), axis=1)
    Z = Z % TWO_PI

    found = {}
    for m in range(len(Z)):
        if rn[m] > tol:
            continue
        z = Z[m]
        if max(_toroidal_dist(z[0], z[2], TWO_PI),
               _toroidal_dist(z[1], z[3], TWO_PI)) < delta:
            continue
        key = tuple(int(round(x / (spacing / 4))) % (4 * density) for x in z)
        if key not in found:
            found[key] = ((float(z[0]), float(z[1])),
                          (float(z[2]), float(z[3])), float(rn[m]))
    return [
        _pair_point(M, s, t, res) for s, t, res in
        sorted(found.values(), key=lambda item: (item[0], item[1]))
    ]


def _graph_jac_entries(M, y1, y2):
    d10 = M.derivative((y1, y2), (1, 0))
    d01 = M.derivative((y1, y2), (0, 1))
    return d10[..., 2], d10[..., 3], d01[..., 2], d01[..., 3]


def _pairs_graph4(M, density, tol, delta):
    """The stacked frame rows are [I2 | A; I2 | B] with A, B the 2x2
    Jacobians of (f1, f2), so the 4x4 determinant collapses to det(B - A);
    its zero set is generically a 3-manifold in the 4 parameters, and this
    samples it along grid lines with vectorized bisection."""
    lo, hi = -M._ev.halfwidth, M._ev.halfwidth
    axis = np.linspace(lo, hi, density)
    step = axis[1] - axis[0]
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    a11, a12, a21, a22 = _graph_jac_entries(M, X1, X2)
    Jf = np.stack([x.ravel() for x in (a11, a12, a21, a22)], axis=1)
    pts = np.stack([X1.ravel(), X2.ravel()], axis=1)

    # brackets: for fixed s and one fixed t-coordinate, det changes sign
    # between consecutive grid nodes of the other t-coordinate
    br_s, br_fix, br_lo, br_hi, br_flo, br_axis = [], [], [], [], [], []
    for i in range(len(pts)):
        D = Jf - Jf[i]
        dets = (D[:, 0] * D[:, 3] - D[:, 1] * D[:, 2]).reshape(density,
                                                               density)
        for fixed_axis, grid in ((0, dets), (1, dets.T)):
            sign = np.signbit(grid)
            rows, cols = np.nonzero(sign[:, :-1] != sign[:, 1:])
            for a, b in zip(rows, cols):
                br_s.append(i)
                br_fix.append(axis[a])
                br_lo.append(axis[b])
                br_hi.append(axis[b + 1])
                br_flo.append(grid[a, b])
                br_axis.append(fixed_axis)
    if not br_s:
        return []
    si = np.array(br_s)
    fix = np.array(br_fix)
    lo_a = np.array(br_lo)
    hi_a = np.array(br_hi)
    flo = np.array(br_flo)
    fax = np.array(br_axis)
    sj = Jf[si]

    def det_at(x):
        t1 = np.where(fax == 0, fix, x)
        t2 = np.where(fax == 0, x, fix)
        b11, b12, b21, b22 = _graph_jac_entries(M, t1, t2)
        return ((b11 - sj[:, 0]) * (b22 - sj[:, 3])
                - (b12 - sj[:, 1]) * (b21 - sj[:, 2]))

    for _ in range(60):
        mid = 0.5 * (lo_a + hi_a)
        fm = det_at(mid)
        same = (fm > 0) == (flo > 0)
        lo_a = np.where(same, mid, lo_a)
        hi_a = np.where(same, hi_a, mid)
    root = 0.5 * (lo_a + hi_a)
    res = np.abs(det_at(root))
    T1 = np.where(fax == 0, fix, root)
    T2 = np.where(fax == 0, root, fix)

    found = {}
    for m in range(len(si)):
        if res[m] > tol:
            continue
        s = pts[si[m]]
        t = (float(T1[m]), float(T2[m]))
        if max(abs(s[0] - t[0]), abs(s[1] - t[1])) < delta:
            continue
        key = (si[m],
               int(round(t[0] / (step / 2))), int(round(t[1] / (step / 2))))
        if key not in found:
            found[key] = ((float(s[0]), float(s[1])), t, float(res[m]))

    out = []
    for s, t, r in sorted(found.values(), key=lambda item: (item[0],
                                                            item[1])):
        d = np.array(_graph_jac_entries(M, *t)) \
            - np.array(_graph_jac_entries(M, *s))
        rank = 0 if np.linalg.norm(d) <= TAU_RANK else 1
        deg_k = 2 - rank
        out.append(PairPoint(s, t, M.position(s), M.position(t),
                             deg_k, deg_k, r))
    return out


def find_parallel_pairs(M: ParametricManifold,
                        grid_density: Optional[int] = None,
                        tol: float = 1e-10,
                        delta_diag: Optional[float] = None) -> List[PairPoint]:
    """Sample the weakly parallel pairs of M off the diagonal band.

    Curves: sign changes of the stacked-tangent determinant on the grid,
    refined by bisection.  Torus: normal-alignment residual polished by
    Gauss-Newton.  Graph surfaces in R^4: sign changes of the reduced 2x2
    determinant along grid lines.  Duplicates merge by parameter distance;
    output is ordered lexicographically.  The default density is 256 for
    curves and 24 / 16 for the surface schemes, whose pair sets are two-
    and three-dimensional, so their sample counts grow with a power of the
    density instead of linearly.
    """
    if grid_density is None:
        grid_density = {(1, 2): 256, (2, 3): 24, (2, 4): 16}.get(
            (M.n, M.q), 16)
    if delta_diag is None:
        span = TWO_PI if M.periods[0] else 2 * getattr(M._ev, "halfwidth", 1.0)
        delta_diag = 10.0 * span / grid_density
    if M.n == 1 and M.q == 2:
        return _pairs_curve(M, grid_density, tol, delta_diag)
    if M.n == 2 and M.q == 3:
        return _pairs_torus(M, grid_density, tol, delta_diag)
    if M.n == 2 and M.q == 4:
        return _pairs_graph4(M, grid_density, tol, delta_diag)
    raise ValueError(f"no pair-location scheme for (n, q) = ({M.n}, {M.q})")


# --------------------------------------------------------------------------
# equidistant tracing


@dataclass
class Annotation:
    index: int
    label: str
    pair: Optional[PairPoint] = None
    x: Optional[np.ndarray] = None
    germ_class: Optional[GermClass] = None


@dataclass
class EquidistantBranch:
    """One connected piece of an affine lambda-equidistant.

    `samples` pairs each located PairPoint with its lambda-point
    x = lam*a + (1-lam)*b; `sigmas` is cumulative continuation arclength in
    parameter space.  `status` is closed | open | step_failure | cloud.
    """

    lam: float
    manifold: ParametricManifold
    samples: List[Tuple[PairPoint, np.ndarray]]
    sigmas: np.ndarray
    status: str
    degenerate: bool = False
    annotations: List[Annotation] = field(default_factory=list)

    def points(self) -> np.ndarray:
        return np.array([x for _, x in self.samples])

    def __len__(self):
        return len(self.samples)


def _step_direction(M, z, prev):
    _, gs, gt, _ = _g_grad(M, z[0], z[1])
    d = np.array([-gt, gs])
    nrm = np.linalg.norm(d)
    if nrm == 0:
        return None
    d = d / nrm
    if prev is not None and float(d @ prev) < 0:
        d = -d
    return d

def _project_to_zero(M, z, tol, iters=16):
    z = np.array(z, dtype=float)
    for _ in range(iters):
        g, gs, gt, scale = _g_grad(M, z[0], z[1])
        if abs(g) <= tol * scale:
            return z
        n2 = gs * gs + gt * gt
        if n2 == 0:
            return None
        z = z - g * np.array([gs, gt]) / n2
    g, _, _, scale = _g_grad(M, z[0], z[1])
    return z if abs(g) <= 10 * tol * scale else None


def _corrector(M, z, base, d, tol, iters=12):
    z = np.array(z, dtype=float)
    for _ in range(iters):
        g, gs, gt, scale = _g_grad(M, z[0], z[1])
        r2 = float((z - base) @ d)
        if abs(g) <= tol * scale and abs(r2) < 1e-13:
            return z
        J = np.array([[gs, gt], [d[0], d[1]]])
        try:
            delta = np.linalg.solve(J, np.array([g, r2]))
        except np.linalg.LinAlgError:
            return None
        z = z - delta
        if np.linalg.norm(delta) > 1.0:
            return None
    return None


def _march(M, z0, direction, step, delta, tol, max_steps):
    """March along {g = 0} from z0; returns (points, closed, failed)."""
    pts = [np.array(z0, dtype=float)]
    d = _step_direction(M, z0, None)
    if d is None:
        return pts, False, True
    d = d * direction
    z = np.array(z0, dtype=float)
    for _ in range(max_steps):
        h = step
        nxt = None
        for _ in range(5):
            base = z + h * d
            nxt = _corrector(M, base, base, d, tol)
            if nxt is not None:
                break
            h = h / 2
        if nxt is None:
            return pts, False, True
        if _toroidal_dist(nxt[0], nxt[1], TWO_PI) < delta:
            # land exactly on the exclusion-band edge so termination points
            # do not depend on the step phase
            lo, hi = z, nxt
            for _ in range(50):
                mid = _project_to_zero(M, 0.5 * (lo + hi), tol)
                if mid is None:
                    break
                if _toroidal_dist(mid[0], mid[1], TWO_PI) >= delta:
                    lo = mid
                else:
                    hi = mid
            if np.linalg.norm(lo - pts[-1]) > 1e-9:
                pts.append(lo)
            return pts, False, False
        pts.append(nxt)
        if len(pts) > 8 and \
                _toroidal_dist(nxt[0], z0[0], TWO_PI) < 1.2 * step and \
                _toroidal_dist(nxt[1], z0[1], TWO_PI) < 1.2 * step:
            pts.append(np.array(z0, dtype=float))
            return pts, True, False
        nd = _step_direction(M, nxt, d)
        if nd is None:
            return pts, False, True
        z, d = nxt, nd
    return pts, False, True


def _branch_from_path(M, lam, path, status):
    S = np.array([p[0] % TWO_PI for p in path])
    T = np.array([p[1] % TWO_PI for p in path])
    A = M.position((S,))
    B = M.position((T,))
    X = lam * A + (1 - lam) * B
    steps = np.linalg.norm(np.diff(np.array(path), axis=0), axis=1) \
        if len(path) > 1 else np.array([])
    sigmas = np.concatenate([[0.0], np.cumsum(steps)])
    samples = []
    for i in range(len(path)):
        pp = _pair_point(M, float(S[i]), float(T[i]), 0.0)
        g, scale = _g_scalar(M, float(S[i]), float(T[i]))
        pp.residual = abs(float(g)) / float(scale)
        samples.append((pp, X[i]))
    scale = float(np.max(np.linalg.norm(A, axis=1))) or 1.0
    diam = float(np.max(np.ptp(X, axis=0))) if len(X) else 0.0
    return EquidistantBranch(
        lam=float(lam), manifold=M, samples=samples, sigmas=sigmas,
        status=status, degenerate=diam < 1e-8 * scale)


def trace_equidistant(M: ParametricManifold, lam, step: float = 0.02,
                      delta_diag: Optional[float] = None,
                      seed_density: int = 128, tol: float = 1e-12,
                      max_steps: int = 40000) -> List[EquidistantBranch]:
    """Trace the affine lambda-equidistant of M.

    Curves run pseudo-arclength continuation of the parallel-pair equation
    on the parameter torus minus the diagonal band |s - t| < delta_diag,
    mapping each solution through x = lam*a + (1-lam)*b.  Branches either
    close up or terminate at the band.  Non-curve inputs fall back to a
    grid-sampled point cloud (status "cloud") with no branch structure.
    """
    lam = float(lam)
    if lam in (0.0, 1.0):
        raise ValueError("lambda must avoid 0 and 1; those reproduce M")
    if M.n != 1:
        pairs = find_parallel_pairs(M, tol=1e-10, delta_diag=delta_diag)
        samples = [(p, p.lambda_point(lam)) for p in pairs]
        return [EquidistantBranch(
            lam=lam, manifold=M, samples=samples,
            sigmas=np.zeros(len(samples)), status="cloud")]
    if delta_diag is None:
        delta_diag = 10.0 * TWO_PI / seed_density
    seeds = find_parallel_pairs(M, seed_density, tol=1e-10,
                                delta_diag=delta_diag)
    seed_pts = [(float(p.s), float(p.t)) for p in seeds]
    seed_pts += [(t, s) for s, t in seed_pts]
    seed_pts.sort()

    visited = set()

    def cell(z):
        return (int(math.floor((z[0] % TWO_PI) / step)),
                int(math.floor((z[1] % TWO_PI) / step)))

    ncells = int(math.ceil(TWO_PI / step))

    def mark(z):
        c = cell(z)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                visited.add(((c[0] + di) % ncells, (c[1] + dj) % ncells))

    branches = []
    for sp in seed_pts:
        if cell(sp) in visited:
            continue
        z0 = _project_to_zero(M, sp, tol)
        if z0 is None or _toroidal_dist(z0[0], z0[1], TWO_PI) < delta_diag:
            continue
        if cell(z0) in visited:
            continue
        fwd, closed, failed = _march(M, z0, +1.0, step, delta_diag, tol,
                                     max_steps)
        if closed:
            path = fwd
            status = "closed"
        else:
            bwd, _, failed_b = _march(M, z0, -1.0, step, delta_diag, tol,
                                      max_steps)
            path = list(reversed(bwd[1:])) + fwd
            status = "step_failure" if (failed or failed_b) else "open"
        for p in path:
            mark(p)
        if len(path) >= 2:
            branches.append(_branch_from_path(M, lam, path, status))
    return branches


def densify_branch(branch: EquidistantBranch,
                   target_spacing: Optional[float] = None,
                   max_sigma_gap: Optional[float] = None) -> EquidistantBranch:
    """Resample a traced branch.  `target_spacing` caps the distance between
    consecutive lambda-points; `max_sigma_gap` caps the parameter-arclength
    gap, which bounds the polyline's deviation from the underlying curve by
    gap^2 * max|x''(sigma)| / 8 even across cusps, where the point spacing
    degenerates.  Inserted parameters interpolate the polyline and are
    projected back onto the parallel-pair equation; degree data is copied
    from the bracketing coarse samples, annotations are dropped.
    """
    if branch.status == "cloud" or len(branch) < 2:
        return branch
    if target_spacing is None and max_sigma_gap is None:
        raise ValueError("give target_spacing or max_sigma_gap")
    M = branch.manifold
    lam = branch.lam
    Z = np.array([[pp.s, pp.t] for pp, _ in branch.samples])
    # unwrap so linear interpolation never crosses the period seam
    Zu = Z.copy()
    for col in range(2):
        Zu[:, col] = Z[0, col] + np.concatenate(
            [[0.0], np.cumsum(_wrap_pi(np.diff(Z[:, col])))])
    X = branch.points()
    counts = np.ones(len(Zu) - 1, dtype=int)
    if target_spacing is not None:
        gaps = np.linalg.norm(np.diff(X, axis=0), axis=1)
        counts = np.maximum(counts,
                            np.ceil(gaps / target_spacing).astype(int))
    if max_sigma_gap is not None:
        sgaps = np.linalg.norm(np.diff(Zu, axis=0), axis=1)
        counts = np.maximum(counts,
                            np.ceil(sgaps / max_sigma_gap).astype(int))
    S_new, T_new = [], []
    for i in range(len(Zu) - 1):
        fr = np.arange(counts[i]) / counts[i]
        S_new.append(Zu[i, 0] + fr * (Zu[i + 1, 0] - Zu[i, 0]))
        T_new.append(Zu[i, 1] + fr * (Zu[i + 1, 1] - Zu[i, 1]))
    S = np.concatenate(S_new + [[Zu[-1, 0]]])
    T = np.concatenate(T_new + [[Zu[-1, 1]]])
    for _ in range(3):
        Ts = M.derivative((S,), (1,))
        Tt = M.derivative((T,), (1,))
        As = M.derivative((S,), (2,))
        At = M.derivative((T,), (2,))
        g = _cross2(Ts, Tt)
        gs = _cross2(As, Tt)
        gt = _cross2(Ts, At)
        n2 = gs * gs + gt * gt
        n2[n2 == 0] = 1.0
        S = S - g * gs / n2
        T = T - g * gt / n2
    A = M.position((S,))
    B = M.position((T,))
    X = lam * A + (1 - lam) * B
    Ts = M.derivative((S,), (1,))
    Tt = M.derivative((T,), (1,))
    res = np.abs(_cross2(Ts, Tt)) / (
        np.linalg.norm(Ts, axis=1) * np.linalg.norm(Tt, axis=1))
    deg0, cod0 = branch.samples[0][0].deg_k, branch.samples[0][0].codim
    samples = [
        (PairPoint(float(S[i] % TWO_PI), float(T[i] % TWO_PI), A[i], B[i],
                   deg0, cod0, float(res[i])), X[i])
        for i in range(len(S))
    ]
    steps = np.hypot(np.diff(S), np.diff(T))
    sigmas = np.concatenate([[0.0], np.cumsum(steps)])
    return EquidistantBranch(
        lam=lam, manifold=M, samples=samples, sigmas=sigmas,
        status=branch.status, degenerate=branch.degenerate)


def _wrap_pi(d):
    return (d + math.pi) % TWO_PI - math.pi


def projection_rank_residuals(branch: EquidistantBranch) -> np.ndarray:
    """Smallest-over-largest singular value of the lambda-point map Jacobian
    [lam*T(s); (1-lam)*T(t)] at every sample of the branch."""
    M, lam = branch.manifold, branch.lam
    out = np.empty(len(branch))
    for i, (pp, _) in enumerate(branch.samples):
        J = np.vstack([lam * tangent_frame(M, pp.s),
                       (1 - lam) * tangent_frame(M, pp.t)])
        sv = np.linalg.svd(J, compute_uv=False)
        out[i] = sv[-1] / sv[0]
    return out


# --------------------------------------------------------------------------
# singularity detection


def _cusp_scalar(M, lam, z, ref):
    g, gs, gt, _ = _g_grad(M, z[0], z[1])
    tau = np.array([-gt, gs])
    nrm = np.linalg.norm(tau)
    if nrm == 0:
        return 0.0
    tau = tau / nrm
    if float(tau @ ref) < 0:
        tau = -tau
    Ts = M.derivative(z[0], (1,))
    Tt = M.derivative(z[1], (1,))
    mu = float(Ts @ Tt) / float(Ts @ Ts)
    return lam * tau[0] + (1 - lam) * mu * tau[1]


def _refine_cusp(M, lam, z_lo, z_hi, tol):
    ref = np.array([_wrap_pi(z_hi[0] - z_lo[0]), _wrap_pi(z_hi[1] - z_lo[1])])
    nrm = np.linalg.norm(ref)
    if nrm == 0:
        return None
    ref = ref / nrm

    def h_at(fr):
        z = np.array([z_lo[0] + fr * nrm * ref[0],
                      z_lo[1] + fr * nrm * ref[1]])
        z = _project_to_zero(M, z, tol)
        if z is None:
            return None, None
        return _cusp_scalar(M, lam, z, ref), z

    f_lo, _ = h_at(0.0)
    f_hi, _ = h_at(1.0)
    if f_lo is None or f_hi is None or f_lo * f_hi > 0:
        return None
    lo, hi = 0.0, 1.0
    z_best = None
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        fm, zm = h_at(mid)
        if fm is None:
            return None
        z_best = zm
        if (fm > 0) == (f_lo > 0):
            lo = mid
        else:
            hi = mid
    return z_best


def _segment_intersection(p1, p2, p3, p4, min_sin):
    r = p2 - p1
    w = p4 - p3
    denom = _cross2(r, w)
    lr, lw = np.linalg.norm(r), np.linalg.norm(w)
    if lr == 0 or lw == 0 or abs(denom) <= min_sin * lr * lw:
        return None
    dp = p3 - p1
    u = _cross2(dp, w) / denom
    v = _cross2(dp, r) / denom
    if not (0.0 <= u < 1.0 and 0.0 <= v < 1.0):
        return None
    return u, v


def _find_node_candidates(P, closed, index_gap, min_sin):
    N = len(P) - 1 if not closed else len(P)
    segs = [(P[i], P[(i + 1) % len(P)]) for i in range(N)]
    lengths = [np.linalg.norm(b - a) for a, b in segs]
    cell = max(max(lengths), 1e-12) * 2.0
    buckets: Dict[Tuple[int, int], List[int]] = {}
    for i, (a, b) in enumerate(segs):
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        for cx in range(int(lo[0] // cell), int(hi[0] // cell) + 1):
            for cy in range(int(lo[1] // cell), int(hi[1] // cell) + 1):
                buckets.setdefault((cx, cy), []).append(i)
    hits = []
    seen = set()
    for ids in buckets.values():
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                i, j = ids[ai], ids[bi]
                if (i, j) in seen:
                    continue
                seen.add((i, j))
                gap = abs(i - j)
                if closed:
                    gap = min(gap, N - gap)
                if gap < index_gap:
                    continue
                hit = _segment_intersection(*segs[i], *segs[j], min_sin)
                if hit is not None:
                    hits.append((i + hit[0], j + hit[1]))
    merged = []
    for si, sj in sorted(hits):
        a = P[int(si)] + (si % 1) * (P[(int(si) + 1) % len(P)] - P[int(si)])
        if all(np.linalg.norm(a - m[2]) > cell for m in merged):
            merged.append((si, sj, a))
    return merged


def detect_singularities(branch: EquidistantBranch, cross_check: bool = True,
                         min_sin: float = 0.15,
                         index_gap: int = 12) -> EquidistantBranch:
    """Annotate a traced branch with cusps and nodes.

    Cusps: sign changes of the velocity scalar of the lambda-point along
    the branch, refined by bisection on the parallel-pair equation.  Nodes:
    transverse self-intersections of the sampled polyline found by a
    bucketed segment sweep.  Each resolved point is optionally
    cross-checked through the adapted-germ contact pipeline; disagreement
    or failed refinement yields the label UNRESOLVED.
    """
    if branch.degenerate or branch.status == "cloud" or len(branch) < 4:
        return replace(branch, annotations=[])
    M, lam = branch.manifold, branch.lam
    tol = 1e-13
    Z = [np.array([pp.s, pp.t]) for pp, _ in branch.samples]
    closed = branch.status == "closed"
    refs = []
    hs = []
    last = len(Z) - 1 if closed else len(Z)
    for i in range(last):
        nxt = Z[(i + 1) % len(Z)]
        ref = np.array([_wrap_pi(nxt[0] - Z[i][0]),
                        _wrap_pi(nxt[1] - Z[i][1])])
        nrm = np.linalg.norm(ref)
        refs.append(ref / nrm if nrm else ref)
        hs.append(_cusp_scalar(M, lam, Z[i], refs[-1]))
    annotations: List[Annotation] = []
    pair_count = last if closed else last - 1
    for i in range(pair_count):
        j = (i + 1) % last
        if hs[i] == 0.0 or hs[i] * hs[j] >= 0:
            continue
        z_star = _refine_cusp(M, lam, Z[i], Z[(i + 1) % len(Z)], tol)
        if z_star is None:
            annotations.append(Annotation(index=i, label="UNRESOLVED"))
            continue
        pp = _pair_point(M, float(z_star[0] % TWO_PI),
                         float(z_star[1] % TWO_PI), 0.0)
        x = pp.lambda_point(lam)
        ann = Annotation(index=i, label="A2_cusp", pair=pp, x=x)
        if cross_check:
            ann = _cross_checked(M, ann, lam, ("A", (2,)))
        annotations.append(ann)
    P = branch.points()
    for si, sj, xpt in _find_node_candidates(P, closed, index_gap, min_sin):
        for spos in (si, sj):
            i = int(spos)
            fr = spos % 1
            nxt = Z[(i + 1) % len(Z)]
            z = np.array([
                Z[i][0] + fr * _wrap_pi(nxt[0] - Z[i][0]),
                Z[i][1] + fr * _wrap_pi(nxt[1] - Z[i][1])])
            zp = _project_to_zero(M, z, tol)
            if zp is None:
                annotations.append(Annotation(index=i, label="UNRESOLVED"))
                continue
            pp = _pair_point(M, float(zp[0] % TWO_PI),
                             float(zp[1] % TWO_PI), 0.0)
            ann = Annotation(index=i, label="A1_node", pair=pp,
                             x=pp.lambda_point(lam))
            if cross_check:
                ann = _cross_checked(M, ann, lam, ("A", (1,)))
            annotations.append(ann)
    annotations.sort(key=lambda a: a.index)
    return replace(branch, annotations=annotations)


def _cross_checked(M, ann, lam, expected):
    try:
        got = classify_pair(M, ann.pair, lam)
    except (ArithmeticError, ValueError):
        return replace(ann, label="UNRESOLVED")
    if (got.family, got.params) != expected:
        return replace(ann, label="UNRESOLVED", germ_class=got)
    return replace(ann, germ_class=got)


# --------------------------------------------------------------------------
# the float-to-exact bridge


def _factorial_multi(alpha):
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def _fmul(p, q, order):
    out: Dict[tuple, float] = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            if sum(e) > order:
                continue
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _fcompose(f, subs, n, order):
    pows: List[Dict[int, dict]] = [
        {0: {(0,) * n: 1.0}, 1: dict(s)} for s in subs]
    out: Dict[tuple, float] = {}
    for exps, c in f.items():
        term = {(0,) * n: c}
        for j, e in enumerate(exps):
            if e == 0:
                continue
            while e not in pows[j]:
                top = max(pows[j])
                pows[j][top + 1] = _fmul(pows[j][top], pows[j][1], order)
            term = _fmul(term, pows[j][e], order)
            if not term:
                break
        for e, v in term.items():
            out[e] = out.get(e, 0.0) + v
    return {e: v for e, v in out.items() if v != 0.0}


def _unit_exp(i, n):
    return tuple(int(i == j) for j in range(n))


def _series_invert(A, n, order):
    L = np.array([[A[i].get(_unit_exp(j, n), 0.0) for j in range(n)]
                  for i in range(n)])
    if np.linalg.cond(L) > FRAME_COND_LIMIT:
        raise FrameAlignmentError("ill-conditioned frame alignment")
    Li = np.linalg.inv(L)
    B = [
        {_unit_exp(j, n): float(Li[i, j]) for j in range(n) if Li[i, j]}
        for i in range(n)
    ]
    for _ in range(order - 1):
        comp = [_fcompose(A[i], B, n, order) for i in range(n)]
        for i in range(n):
            e = _unit_exp(i, n)
            comp[i][e] = comp[i].get(e, 0.0) - 1.0
        newB = []
        for i in range(n):
            d = dict(B[i])
            for j in range(n):
                if not Li[i, j]:
                    continue
                for e, c in comp[j].items():
                    d[e] = d.get(e, 0.0) - float(Li[i, j]) * c
            newB.append({e: c for e, c in d.items() if c != 0.0})
        B = newB
    return B


def _adapted_basis(Fa, Fb, k, q):
    """Columns [Y | Z | U | V]: Y spans the common tangent directions, Z the
    rest of the first tangent space, V the rest of the second, U a
    complement of their sum."""
    Qa = np.linalg.svd(Fa, full_matrices=False)[2]
    Qb = np.linalg.svd(Fb, full_matrices=False)[2]
    U_, S, Vt = np.linalg.svd(Qa @ Qb.T)
    if k > 0 and S[k - 1] < 1.0 - 1e-6:
        raise FrameAlignmentError(
            f"common tangent directions degenerate: cosines {S}")
    if k < len(S) and S[k] > 1.0 - 1e-6:
        raise FrameAlignmentError(
            f"pair is more parallel than its recorded degree: cosines {S}")
    Y = U_[:, :k].T @ Qa
    n = Fa.shape[0]

    def complement_in(Q):
        proj = Q - (Q @ Y.T) @ Y
        u2, s2, v2 = np.linalg.svd(proj, full_matrices=False)
        return v2[: n - k]

    Z = complement_in(Qa)
    V = complement_in(Qb)
    stacked = np.vstack([Qa, Qb])
    _, sv, vt = np.linalg.svd(stacked)
    u_dim = q + k - 2 * n
    Ublock = vt[2 * n - k: 2 * n - k + u_dim]
    B = np.vstack([Y, Z, Ublock, V]).T
    if np.linalg.cond(B) > FRAME_COND_LIMIT:
        raise FrameAlignmentError("ill-conditioned frame alignment")
    return B


def _chart_series(M, params, Binv, base, n, order, scale=None):
    xi = [dict() for _ in range(M.q)]
    for alpha in monomials_upto(n, order):
        d = sum(alpha)
        vec = np.asarray(M.derivative(params, alpha), dtype=float)
        if d == 0:
            vec = vec - base
        elif scale is not None:
            vec = scale * vec
        w = Binv @ (vec / _factorial_multi(alpha))
        for r in range(M.q):
            if w[r] != 0.0:
                xi[r][alpha] = float(w[r])
    return xi


def _graph_functions(xi, indep_rows, dep_rows, n, order):
    A = [xi[r] for r in indep_rows]
    Binv_series = _series_invert(A, n, order)
    return [_fcompose(xi[r], Binv_series, n, order) for r in dep_rows]


def _snap_block(comps, clip=COEFF_CLIP):
    mx = max((abs(c) for d in comps for c in d.values()), default=0.0)
    out = []
    for d in comps:
        nd = {}
        for e, c in d.items():
            if abs(c) <= clip * mx:
                continue
            if sum(e) <= 1:
                raise FrameAlignmentError(
                    f"graph function keeps a degree-{sum(e)} term {c}; "
                    "frame alignment failed")
            nd[e] = Fraction(c).limit_denominator(SNAP_DENOMINATOR)
        out.append(nd)
    return out


def _as_lambda_fraction(lam) -> Fraction:
    if isinstance(lam, Fraction):
        return lam
    if isinstance(lam, int):
        return Fraction(lam)
    if isinstance(lam, str):
        return Fraction(lam)
    return Fraction(lam).limit_denominator(10 ** 9)


def taylor_germ_at_pair(M: ParametricManifold, pair: PairPoint, lam,
                        order: int = 3) -> GraphPair:
    """Adapted-coordinate GraphPair of a weakly parallel pair.

    The ambient chart sends a to the origin, spans the first tangent space
    by the (y, z) block and the lambda-reflected second tangent space by
    the (y, v) block; both local graphs are Taylor-expanded to `order`.
    The reflection is baked into the second germ, so contact_map on the
    result measures the equidistant contact at the lambda-point.
    Coefficients snap to rationals; entries below a relative clip vanish.
    """
    lam_f = _as_lambda_fraction(lam)
    if lam_f in (0, 1):
        raise ValueError("lambda must avoid 0 and 1")
    lam = float(lam_f)
    n, q, k = M.n, M.q, pair.deg_k
    if k < 1:
        raise ValueError("pair is not weakly parallel (degree 0)")
    if order < 2:
        raise ValueError("need order >= 2 to carry curvature data")
    if M.kind == "samples" and order > 3:
        raise ValueError("sampled grids carry derivatives up to order 3")
    Fa = tangent_frame(M, pair.s)
    Fb_scaled = -(1 - lam) / lam * tangent_frame(M, pair.t)
    B = _adapted_basis(Fa, Fb_scaled, k, q)
    Binv = np.linalg.inv(B)
    a = np.asarray(M.position(pair.s), dtype=float)

    xi_a = _chart_series(M, pair.s, Binv, a, n, order)
    u_dim = q + k - 2 * n

    phi_psi = _graph_functions(xi_a, list(range(n)),
                               list(range(n, q)), n, order)
    phi = _snap_block(phi_psi[:u_dim])
    psi = _snap_block(phi_psi[u_dim:])

    # reflected second graph: base point maps to a, derivatives rescale
    xi_b = [dict() for _ in range(q)]
    refl_base = (1.0 / lam) * pair.lambda_point(lam) \
        - (1 - lam) / lam * np.asarray(M.position(pair.t), dtype=float)
    for alpha in monomials_upto(n, order):
        d = sum(alpha)
        vec = np.asarray(M.derivative(pair.t, alpha), dtype=float)
        if d == 0:
            vec = refl_base - a
        else:
            vec = -(1 - lam) / lam * vec
        w = Binv @ (vec / _factorial_multi(alpha))
        for r in range(q):
            if w[r] != 0.0:
                xi_b[r][alpha] = float(w[r])
    indep_b = list(range(k)) + list(range(n + u_dim, q))
    dep_b = list(range(k, n)) + list(range(n, n + u_dim))
    eta_zeta = _graph_functions(xi_b, indep_b, dep_b, n, order)
    eta = _snap_block(eta_zeta[: n - k])
    zeta = _snap_block(eta_zeta[n - k:])

    mk = lambda polys: MapGerm.from_polys(polys, n, order=order)
    return GraphPair(n, q, k, phi=mk(phi), psi=mk(psi), eta=mk(eta),
                     zeta=mk(zeta), lam=lam_f)


def classify_pair(M: ParametricManifold, pair: PairPoint, lam,
                  order: int = 3, clip: float = COEFF_CLIP) -> GermClass:
    """Contact class of the equidistant at a pair: adapted germs, contact
    map, then recognition.  The contact map's own coefficients are clipped
    relative to its largest one before recognition, since differences of
    snapped graphs carry a cancellation floor."""
    gp = taylor_germ_at_pair(M, pair, lam, order=order)
    kappa = contact_map(gp)
    polys = kappa.polys()
    mx = max((abs(float(c)) for d in polys for c in d.values()), default=0.0)
    cleaned = [
        {e: c for e, c in d.items() if abs(float(c)) > clip * mx}
        for d in polys
    ]
    kappa = MapGerm.from_polys(cleaned, kappa.source_dim)
    return recognize(kappa)


# --------------------------------------------------------------------------
# writers


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _fmt_param(p) -> str:
    if np.isscalar(p):
        return _fmt(p)
    return ";".join(_fmt(x) for x in p)


def write_branches_csv(branches: Sequence[EquidistantBranch],
                       path: str) -> None:
    """Columns: branch_id, sigma, s, t, x1..xq, label (surface parameters
    join their components with ';')."""
    if not branches:
        raise ValueError("no branches to write")
    q = len(branches[0].samples[0][1]) if branches[0].samples else 0
    header = ["branch_id", "sigma", "s", "t"] + \
        [f"x{i + 1}" for i in range(q)] + ["label"]
    lines = [",".join(header)]
    for bid, br in enumerate(branches):
        labels = {a.index: a.label for a in br.annotations}
        for i, (pp, x) in enumerate(br.samples):
            row = [str(bid), _fmt(br.sigmas[i] if len(br.sigmas) else 0.0),
                   _fmt_param(pp.s), _fmt_param(pp.t)]
            row += [_fmt(c) for c in x]
            row.append(labels.get(i, ""))
            lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b")


def write_branches_svg(branches: Sequence[EquidistantBranch], path: str,
                       size: int = 640,
                       include_manifold: bool = True) -> None:
    """Polylines per branch in ambient coordinates; cusps marked with
    circles, nodes with squares.  Only the first two ambient coordinates
    are drawn."""
    pts = [x[:2] for br in branches for _, x in br.samples]
    M = branches[0].manifold if branches else None
    outline = None
    if include_manifold and M is not None and M.n == 1:
        th = np.linspace(0, TWO_PI, 512)
        outline = np.asarray(M.position((th,)))[:, :2]
        pts.extend(outline)
    if not pts:
        raise ValueError("no points to draw")
    arr = np.array(pts)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.06 * span

    def to_px(p):
        x = (p[0] - lo[0] + pad) / (span + 2 * pad) * size
        y = size - (p[1] - lo[1] + pad) / (span + 2 * pad) * size
        return f"{x:.2f},{y:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if outline is not None:
        path_pts = " ".join(to_px(p) for p in outline)
        parts.append(
            f'<polyline points="{path_pts}" fill="none" stroke="#bbbbbb" '
            'stroke-width="1"/>')
    for bid, br in enumerate(branches):
        color = _SVG_COLORS[bid % len(_SVG_COLORS)]
        path_pts = " ".join(to_px(x[:2]) for _, x in br.samples)
        parts.append(
            f'<polyline points="{path_pts}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>')
        for ann in br.annotations:
            if ann.x is None:
                continue
            px = to_px(ann.x[:2]).split(",")
            if ann.label == "A2_cusp":
                parts.append(
                    f'<circle cx="{px[0]}" cy="{px[1]}" r="4" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>')
            elif ann.label == "A1_node":
                x0, y0 = float(px[0]), float(px[1])
                parts.append(
                    f'<rect x="{x0 - 3:.2f}" y="{y0 - 3:.2f}" width="6" '
                    f'height="6" fill="none" stroke="{color}" '
                    'stroke-width="1.5"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
