"""Numerical integration of graded stochastic evolutions.

Float-coefficient Grassmann states are held as dense complex vectors over
the 2^n monomial masks, so Euler--Maruyama stepping, closed-form evaluation
and Monte-Carlo averaging are plain numpy array operations.  The module also
provides the classical Loewner flow and rasterized hulls of the scaled
complex Brownian trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.ndimage
import sympy as sp

from supersle.grassmann import (
    EXACT,
    FLOAT,
    CoefficientRing,
    GrassmannNumber,
    NotInvertible,
    _merge_sign,
    make_generator,
)
from supersle.ns_algebra import (
    CutoffOverflow,
    AlgebraElement,
    Mode,
    ModuleParams,
    VermaVector,
    _bracket_terms,
    pbw_words,
    quotient_projection,
    word_level,
    word_parity,
)
from supersle.superfield import LaurentSuperfunction, SuperPoint, is_superconformal
from supersle.walk import (
    SdeSystem,
    WalkSpec,
    _sqrt_kappa,
    beta_element,
    drift_generator,
    sde_system,
    spec_32,
    spec_32alt,
)


class SwallowedPoint(RuntimeError):
    """The body of z entered the epsilon-ball around the origin."""

    def __init__(self, time):
        super().__init__(f"body of z swallowed at t={time}")
        self.time = time


class DenominatorVanishes(RuntimeError):
    """The complex part of the integrand denominator came too close to 0."""


# -- Brownian driving paths -----------------------------------------------------


@dataclass(frozen=True)
class BrownianPath:
    """Sampled increments of a multi-dimensional Brownian motion."""

    dt: float
    increments: np.ndarray  # shape (dim, steps)
    seed: object = None

    @property
    def dim(self) -> int:
        return self.increments.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    @property
    def values(self) -> np.ndarray:
        """Cumulative path including B_0 = 0; shape (dim, steps+1)."""
        out = np.zeros((self.dim, self.steps + 1))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        return out

    @classmethod
    def sample(cls, dim: int, dt: float, steps: int, seed) -> "BrownianPath":
        rng = np.random.default_rng(seed)
        # draw step-major so a longer horizon extends a shorter one in place
        inc = rng.normal(0.0, math.sqrt(dt), size=(steps, dim)).T.copy()
        return cls(dt=dt, increments=inc, seed=seed)

    def coarsen(self, k: int) -> "BrownianPath":
        """Same underlying path on a grid coarser by the integer factor k."""
        if k < 1 or self.steps % k:
            raise ValueError("coarsening factor must divide the step count")
        inc = self.increments.reshape(self.dim, self.steps // k, k).sum(axis=2)
        return BrownianPath(dt=self.dt * k, increments=inc, seed=self.seed)


@dataclass(frozen=True)
class SuperPath:
    """Time series of an even/odd coordinate pair along a driving path."""

    times: np.ndarray
    z: tuple          # GrassmannNumber per time
    theta: tuple
    driving: BrownianPath
    swallowed_time: float | None = None


# -- batched float Grassmann arithmetic ------------------------------------------

_TENSOR_CACHE: dict = {}


def _mul_tensor(n: int) -> np.ndarray:
    """T[i, j, k] = Koszul sign of psi_i * psi_j when i|j == k, i & j == 0."""
    if n not in _TENSOR_CACHE:
        if n > 6:
            raise ValueError("dense multiplication tensor limited to n <= 6")
        m = 1 << n
        T = np.zeros((m, m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                if i & j == 0:
                    T[i, j, i | j] = _merge_sign(i, j)
        _TENSOR_CACHE[n] = T
    return _TENSOR_CACHE[n]


def _bmul(T: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A, B = np.broadcast_arrays(A, B)
    m = T.shape[0]
    outer = (A[..., :, None] * B[..., None, :]).reshape(*A.shape[:-1], m * m)
    return outer @ T.reshape(m * m, m)


def _binv(T: np.ndarray, n: int, A: np.ndarray) -> np.ndarray:
    """Batched inverse via the Neumann series over the nilpotent soul."""
    body = A[..., 0]
    if np.any(np.abs(body) == 0.0):
        raise NotInvertible("vanishing body in batched inverse")
    soul = A.copy()
    soul[..., 0] = 0.0
    out = np.zeros_like(A)
    power = np.zeros_like(A)
    power[..., 0] = 1.0
    bpow = body.copy()
    sign = 1.0
    for _ in range(n + 1):
        out += sign * power / bpow[..., None]
        power = _bmul(T, power, soul)
        if not power.any():
            break
        sign = -sign
        bpow = bpow * body
    return out


def _gvec(g: GrassmannNumber, n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    for mask, c in g.terms.items():
        v[mask] = complex(c)
    return v


def _gnum(vec: np.ndarray, n: int) -> GrassmannNumber:
    terms = {m: complex(c) for m, c in enumerate(vec) if c != 0}
    return GrassmannNumber(n, FLOAT, terms)


def _eval_batch(F: LaurentSuperfunction, Z: np.ndarray, TH: np.ndarray,
                T: np.ndarray, n: int) -> np.ndarray:
    """Evaluate a Laurent superfunction at batched points (..., 2^n)."""
    exps = sorted(set(F.a) | set(F.b))
    if not exps:
        return np.zeros_like(Z)
    pows = {0: None}
    one = np.zeros(1 << n, dtype=complex)
    one[0] = 1.0
    pows[0] = np.broadcast_to(one, Z.shape).copy()
    hi, lo = max(exps + [0]), min(exps + [0])
    for k in range(1, hi + 1):
        pows[k] = _bmul(T, pows[k - 1], Z)
    if lo < 0:
        zinv = _binv(T, n, Z)
        for k in range(-1, lo - 1, -1):
            pows[k] = _bmul(T, pows[k + 1], zinv)
    out = np.zeros_like(Z)
    for k, c in F.a.items():
        out = out + _bmul(T, _gvec(c, n)[None, :], pows[k])
    bsum = np.zeros_like(Z)
    for k, c in F.b.items():
        bsum = bsum + _bmul(T, _gvec(c, n)[None, :], pows[k])
    if bsum.any():
        out = out + _bmul(T, TH, bsum)
    return out


# -- Euler--Maruyama integration --------------------------------------------------


def _has_negative_exponents(system: SdeSystem) -> bool:
    fns = [*system.drift, *(f for pair in system.diffusion for f in pair)]
    return any(k < 0 for f in fns for k in list(f.a) + list(f.b))


def _em_core(system: SdeSystem, z0: np.ndarray, th0: np.ndarray,
             increments: np.ndarray, dt: float, n: int, eps: float):
    """Batched explicit Euler; increments shape (paths, steps, dim).

    Returns (Z, TH) of shape (paths, steps+1, 2^n) and the first swallowing
    step index per path (steps+1 when never swallowed).  Swallowed paths are
    frozen at their last valid state.
    """
    T = _mul_tensor(n)
    paths, steps, dim = increments.shape
    guard = _has_negative_exponents(system)
    Z = np.zeros((paths, steps + 1, 1 << n), dtype=complex)
    TH = np.zeros_like(Z)
    Z[:, 0] = z0
    TH[:, 0] = th0
    swallowed = np.full(paths, steps + 1, dtype=int)
    zd, td = system.drift
    z = Z[:, 0].copy()
    th = TH[:, 0].copy()
    for k in range(steps):
        if guard:
            hit = (np.abs(z[:, 0]) < eps) & (swallowed > steps)
            swallowed[hit] = k
        active = swallowed > steps
        if not active.any():
            Z[:, k + 1:] = z[:, None, :]
            TH[:, k + 1:] = th[:, None, :]
            return Z, TH, swallowed
        znew = z + dt * _eval_batch(zd, z, th, T, n)
        tnew = th + dt * _eval_batch(td, z, th, T, n)
        for i, (zi, ti) in enumerate(system.diffusion):
            dB = increments[:, k, i][:, None]
            znew = znew + dB * _eval_batch(zi, z, th, T, n)
            tnew = tnew + dB * _eval_batch(ti, z, th, T, n)
        z = np.where(active[:, None], znew, z)
        th = np.where(active[:, None], tnew, th)
        Z[:, k + 1] = z
        TH[:, k + 1] = th
    return Z, TH, swallowed


def _point_vectors(init: SuperPoint, n: int):
    return _gvec(init.z, n), _gvec(init.theta, n)


def _as_superpath(Z: np.ndarray, TH: np.ndarray, path: BrownianPath,
                  n: int) -> SuperPath:
    zs = tuple(_gnum(Z[k], n) for k in range(Z.shape[0]))
    ths = tuple(_gnum(TH[k], n) for k in range(TH.shape[0]))
    return SuperPath(times=path.times, z=zs, theta=ths, driving=path)


def euler_maruyama(system: SdeSystem, init: SuperPoint, path: BrownianPath,
                   eps: float = 1e-6, n: int | None = None,
                   on_swallow: str = "raise") -> SuperPath:
    """Explicit Euler integration of dX = X_0' dt + sum_i X_i' dB_i.

    ``on_swallow`` is "raise" (default) or "truncate"; the latter returns
    the path up to the swallowing step with ``swallowed_time`` set.
    """
    if on_swallow not in ("raise", "truncate"):
        raise ValueError("on_swallow must be 'raise' or 'truncate'")
    if n is None:
        n = max(init.z.n, init.theta.n)
    z0, th0 = _point_vectors(init, n)
    inc = path.increments.T[None, :, :]  # (1, steps, dim)
    Z, TH, swallowed = _em_core(system, z0[None, :], th0[None, :],
                                inc, path.dt, n, eps)
    if swallowed[0] <= path.steps:
        t_hit = swallowed[0] * path.dt
        if on_swallow == "raise":
            raise SwallowedPoint(t_hit)
        k = int(swallowed[0])
        out = _as_superpath(Z[0, :k + 1], TH[0, :k + 1], path, n)
        return SuperPath(times=path.times[:k + 1], z=out.z, theta=out.theta,
                         driving=path, swallowed_time=float(t_hit))
    return _as_superpath(Z[0], TH[0], path, n)


# -- closed-form solutions --------------------------------------------------------


def _cf32_core(z0: np.ndarray, th0: np.ndarray, kappa: float,
               times: np.ndarray, B: np.ndarray, n: int = 4):
    """Batched closed form of the one-Brownian evolution.

    B has shape (paths, steps+1); returns (Z, TH) of shape
    (paths, steps+1, 2^n).
    """
    T = _mul_tensor(n)
    sk = math.sqrt(kappa)
    spec = spec_32(kappa, FLOAT)
    y = _gvec(spec.beta[0][-1][0], n) / sk
    eta = _gvec(spec.beta[0][-1][1], n) / sk
    zinv = _binv(T, n, z0[None, :])[0]
    yeta = _bmul(T, y, eta)
    th_yeta_zinv = _bmul(T, th0, _bmul(T, yeta, zinv))
    yeta_zinv = _bmul(T, yeta, zinv)
    cz = sk * (y + _bmul(T, th0, eta))
    ct = sk * eta
    Z = (z0[None, None, :] + times[None, :, None] * th_yeta_zinv[None, None, :]
         - B[:, :, None] * cz[None, None, :])
    TH = (th0[None, None, :] + times[None, :, None] * yeta_zinv[None, None, :]
          - B[:, :, None] * ct[None, None, :])
    return Z, TH


def closed_form_32(init: SuperPoint, path: BrownianPath, kappa) -> SuperPath:
    """Exact solution of the one-Brownian graded evolution along the path."""
    n = 4
    z0, th0 = _point_vectors(init, n)
    if abs(z0[0]) == 0.0:
        raise NotInvertible("initial z must have non-zero body")
    B = path.values[0][None, :]
    Z, TH = _cf32_core(z0, th0, float(kappa), path.times, B, n)
    return _as_superpath(Z[0], TH[0], path, n)


def _cf32alt_core(z0: np.ndarray, th0: np.ndarray, kappa: float, dt: float,
                  B1: np.ndarray, B2: np.ndarray, eps: float, n: int = 2):
    """Batched closed form of the two-Brownian evolution (y = 1).

    B1, B2 have shape (paths, steps+1).  The time integral of
    1/(z - sqrt(kappa) B^+) is a left-endpoint Riemann sum on the same grid.
    """
    T = _mul_tensor(n)
    sk = math.sqrt(kappa)
    eta = np.zeros(1 << n, dtype=complex)
    eta[1] = 1.0
    bplus = B1 + 1j * B2
    den = np.repeat(z0[None, None, :], B1.shape[1], axis=1).astype(complex)
    den = np.broadcast_to(den, B1.shape + (1 << n,)).copy()
    den[..., 0] -= sk * bplus
    if np.min(np.abs(den[..., 0])) < eps:
        raise DenominatorVanishes(
            "complex part of z - sqrt(kappa) B+ fell below epsilon")
    integrand = _binv(T, n, den)
    I = np.zeros_like(integrand)
    np.cumsum(dt * integrand[:, :-1], axis=1, out=I[:, 1:])
    shift = I.copy()
    shift[..., 0] -= sk * B1
    th_eta = _bmul(T, th0, eta)
    Z = np.broadcast_to(z0[None, None, :], shift.shape).copy()
    Z[..., 0] -= sk * bplus
    Z = Z + _bmul(T, th_eta[None, None, :], shift)
    TH = np.broadcast_to(th0[None, None, :], shift.shape).copy()
    TH = TH + _bmul(T, eta[None, None, :], shift)
    return Z, TH


def closed_form_32alt(init: SuperPoint, path: BrownianPath, kappa,
                      eps: float = 1e-6) -> SuperPath:
    """Exact solution of the two-Brownian graded evolution along the path."""
    n = 2
    if path.dim != 2:
        raise ValueError("two Brownian components required")
    z0, th0 = _point_vectors(init, n)
    values = path.values
    Z, TH = _cf32alt_core(z0, th0, float(kappa), path.dt,
                          values[0][None, :], values[1][None, :], eps, n)
    return _as_superpath(Z[0], TH[0], path, n)


# -- closed forms as superconformal maps ------------------------------------------


def closed_form_32_map(kappa, t=None, B=None, ring: CoefficientRing = EXACT):
    """The map (z, theta) -> (z'_t, theta'_t) as Laurent superfunctions.

    By default t and B are free symbols, so superconformality can be checked
    identically in t and the driving value.
    """
    if t is None:
        t = sp.Symbol("t")
    if B is None:
        B = sp.Symbol("B")
    spec = spec_32(kappa, ring)
    sk = _sqrt_kappa(kappa, ring)
    y = spec.beta[0][-1][0] / sk
    eta = spec.beta[0][-1][1] / sk
    yeta = y * eta
    zp = LaurentSuperfunction({1: GrassmannNumber.scalar(1, 4, ring),
                               0: -(y * (sk * B))},
                              {-1: yeta * t, 0: -(eta * (sk * B))})
    thetap = LaurentSuperfunction({-1: yeta * t, 0: -(eta * (sk * B))},
                                  {0: GrassmannNumber.scalar(1, 4, ring)})
    return zp, thetap


def closed_form_32alt_map(kappa, I=None, B1=None, B2=None,
                          ring: CoefficientRing = EXACT):
    """The two-Brownian closed-form map with I, B1, B2 as free symbols.

    I stands for the path integral of 1/(z - sqrt(kappa) B+); at frozen time
    it is just an even constant, so the superconformality check is algebraic.
    """
    if I is None:
        I = sp.Symbol("I_v")
    if B1 is None:
        B1 = sp.Symbol("B_1")
    if B2 is None:
        B2 = sp.Symbol("B_2")
    eta = make_generator(0, 2, ring)
    sk = _sqrt_kappa(kappa, ring)
    i_unit = sp.I if ring.kind == "exact" else 1j
    shift = eta * (I - sk * B1)
    zp = LaurentSuperfunction(
        {1: GrassmannNumber.scalar(1, 2, ring),
         0: GrassmannNumber.scalar(-sk * (B1 + i_unit * B2), 2, ring)},
        {0: shift})
    thetap = LaurentSuperfunction({0: shift},
                                  {0: GrassmannNumber.scalar(1, 2, ring)})
    return zp, thetap


def conservation_check_32(init: SuperPoint, path: BrownianPath, kappa) -> dict:
    """Verify mu_t w_t = theta z + y eta t along the closed-form solution.

    Returns the worst grade-wise deviation of the conserved product and the
    worst drift of the body of w_t from the body of z.
    """
    n = 4
    T = _mul_tensor(n)
    sol = closed_form_32(init, path, kappa)
    sk = math.sqrt(float(kappa))
    spec = spec_32(kappa, FLOAT)
    y = _gvec(spec.beta[0][-1][0], n) / sk
    eta = _gvec(spec.beta[0][-1][1], n) / sk
    yeta = _bmul(T, y, eta)
    z0, th0 = _point_vectors(init, n)
    B = path.values[0]
    Z = np.stack([_gvec(g, n) for g in sol.z])
    TH = np.stack([_gvec(g, n) for g in sol.theta])
    w = Z + (y[None, :] + _bmul(T, TH, eta[None, :])) * (sk * B[:, None])
    mu = TH + sk * B[:, None] * eta[None, :]
    conserved = _bmul(T, th0[None, :], z0[None, :]) \
        + sol.times[:, None] * yeta[None, :]
    residual = _bmul(T, mu, w) - conserved
    return {
        "max_conservation_error": float(np.max(np.abs(residual))),
        "max_body_drift": float(np.max(np.abs(w[:, 0] - z0[0]))),
    }


# -- pathwise convergence study ----------------------------------------------------


_ERROR_FLOOR = 1e-12


def _cf32_terminal(z0: np.ndarray, th0: np.ndarray, kappa: float,
                   T: float, B_T: float, n: int = 4):
    """Terminal state of the one-Brownian closed form (single path)."""
    Z, TH = _cf32_core(z0, th0, kappa, np.array([T]),
                       np.array([[B_T]]), n)
    return Z[0, 0], TH[0, 0]


def _cf32alt_terminal(z0: np.ndarray, th0: np.ndarray, kappa: float,
                      dt: float, B1: np.ndarray, B2: np.ndarray,
                      eps: float, n: int = 2):
    """Terminal state of the two-Brownian closed form (single path).

    Only the left-endpoint Riemann sum of the integrand is accumulated, so
    very fine reference grids stay cheap in memory.
    """
    T = _mul_tensor(n)
    sk = math.sqrt(kappa)
    bplus = B1 + 1j * B2
    body = z0[0] - sk * bplus
    if np.min(np.abs(body)) < eps:
        raise DenominatorVanishes(
            "complex part of z - sqrt(kappa) B+ fell below epsilon")
    soul = z0.copy()
    soul[0] = 0.0
    I = np.zeros_like(z0)
    power = np.zeros_like(z0)
    power[0] = 1.0
    sign = 1.0
    for k in range(n + 1):
        I = I + power * (sign * dt * np.sum(body[:-1] ** (-(k + 1))))
        power = _bmul(T, power, soul)
        if not power.any():
            break
        sign = -sign
    eta = np.zeros_like(z0)
    eta[1] = 1.0
    shift = I.copy()
    shift[0] -= sk * B1[-1]
    zT = z0.copy()
    zT[0] -= sk * bplus[-1]
    zT = zT + _bmul(T, _bmul(T, th0, eta), shift)
    thT = th0 + _bmul(T, eta, shift)
    return zT, thT


def pathwise_convergence(system: SdeSystem, closed_form, init: SuperPoint,
                         T: float, dt_list, n_paths: int, seed,
                         n: int | None = None, eps: float = 1e-6,
                         refine: int = 10) -> dict:
    """Strong-error table of explicit Euler against a closed-form solution.

    ``closed_form(z0_vec, th0_vec, path)`` must return the terminal state
    pair for one driving path.  Brownian paths are sampled once on a grid
    ``refine`` times finer than the smallest dt; the reference solution is
    evaluated there and each Euler run uses the aggregated increments of the
    same underlying path, so the table isolates discretization error.

    When every error sits at the rounding floor the scheme is exact for the
    system (graded coefficients constant along paths); the empirical order
    is then reported as infinity.
    """
    dt_list = sorted(float(d) for d in dt_list)
    dt_ref = dt_list[0] / refine
    steps_ref = round(T / dt_ref)
    for d in dt_list:
        k = d / dt_ref
        if abs(k - round(k)) > 1e-9 or steps_ref % round(k):
            raise ValueError("every dt must be an integer multiple of the "
                             "reference dt and divide the horizon")
    if n is None:
        n = max(init.z.n, init.theta.n)
    dim = len(system.diffusion)
    z0, th0 = _point_vectors(init, n)
    m = 1 << n
    ref_z = np.empty((n_paths, m), dtype=complex)
    ref_th = np.empty((n_paths, m), dtype=complex)
    for p in range(n_paths):
        bp = BrownianPath.sample(dim, dt_ref, steps_ref, [seed, p])
        ref_z[p], ref_th[p] = closed_form(z0, th0, bp)
    dts = sorted(dt_list, reverse=True)
    errors = []
    for d in dts:
        k = round(d / dt_ref)
        steps = steps_ref // k
        inc = np.empty((n_paths, steps, dim))
        for p in range(n_paths):
            bp = BrownianPath.sample(dim, dt_ref, steps_ref, [seed, p])
            inc[p] = bp.coarsen(k).increments.T
        Z, TH, swallowed = _em_core(system, np.tile(z0, (n_paths, 1)),
                                    np.tile(th0, (n_paths, 1)),
                                    inc, d, n, eps)
        if np.any(swallowed <= steps):
            raise SwallowedPoint(float(np.min(swallowed)) * d)
        err = np.maximum(np.max(np.abs(Z[:, -1] - ref_z), axis=-1),
                         np.max(np.abs(TH[:, -1] - ref_th), axis=-1))
        errors.append(float(np.mean(err)))
    exact = all(e < _ERROR_FLOOR for e in errors)
    if exact:
        order = math.inf
    else:
        order = float(np.polyfit(np.log(np.array(dts)),
                                 np.log(np.array(errors)), 1)[0])
    return {"dt": dts, "mean_error": errors, "order": order,
            "exact_scheme": exact, "n_paths": n_paths, "seed": seed, "T": T}


def convergence_32(kappa, init: SuperPoint, T: float, dt_list, n_paths: int,
                   seed, refine: int = 10) -> dict:
    system = sde_system(spec_32(kappa, FLOAT))

    def cf(z0, th0, bp):
        return _cf32_terminal(z0, th0, float(kappa), bp.dt * bp.steps,
                              float(bp.values[0, -1]), 4)

    return pathwise_convergence(system, cf, init, T, dt_list, n_paths, seed,
                                n=4, refine=refine)


def convergence_32alt(kappa, init: SuperPoint, T: float, dt_list,
                      n_paths: int, seed, eps: float = 1e-6,
                      refine: int = 10) -> dict:
    system = sde_system(spec_32alt(kappa, FLOAT))

    def cf(z0, th0, bp):
        values = bp.values
        return _cf32alt_terminal(z0, th0, float(kappa), bp.dt,
                                 values[0], values[1], eps, 2)

    return pathwise_convergence(system, cf, init, T, dt_list, n_paths, seed,
                                n=2, eps=eps, refine=refine)


# -- Monte-Carlo martingale check ---------------------------------------------------


def _normal_order_word(word) -> dict:
    """PBW reduction of a product of lowering modes; word -> Fraction."""
    out: dict = {}
    stack = [(tuple(word), Fraction(1))]
    while stack:
        w, coeff = stack.pop()
        i = _first_violation(w)
        if i is None:
            out[w] = out.get(w, Fraction(0)) + coeff
            continue
        a, b = w[i], w[i + 1]
        rest = (w[:i], w[i + 2:])
        terms = _bracket_terms(a, b, 0)
        if a.odd and b.odd and a.index == b.index:
            # a*a = (1/2){a, a}
            for s, mode in terms:
                if mode is not None:
                    stack.append((rest[0] + (mode,) + rest[1],
                                  coeff * _as_fraction(s) / 2))
            continue
        sigma = -1 if (a.odd and b.odd) else 1
        stack.append((rest[0] + (b, a) + rest[1], coeff * sigma))
        for s, mode in terms:
            if mode is not None:
                stack.append((rest[0] + (mode,) + rest[1],
                              coeff * _as_fraction(s)))
    return {w: c for w, c in out.items() if c}


def _first_violation(w):
    for i in range(len(w) - 1):
        a, b = w[i], w[i + 1]
        if a.kind == "G" and b.kind == "L":
            return i
        if a.kind == b.kind == "L" and a.index > b.index:
            return i
        if a.kind == b.kind == "G" and a.index >= b.index:
            return i
    return None


def _as_fraction(s) -> Fraction:
    s = sp.nsimplify(sp.sympify(s), rational=True)
    return Fraction(int(s.p), int(s.q))


def _element_data(elem: AlgebraElement):
    """[(word, {mask: complex coeff})] for a float-coefficient element."""
    out = []
    for word, g in elem.terms.items():
        masks = {m: complex(c) for m, c in g.terms.items()}
        if masks:
            out.append((tuple(word), masks))
    return out


def _reachable_masks(elements):
    """Closure of coefficient masks under right multiplication."""
    masks = {0}
    changed = True
    while changed:
        changed = False
        for _u, mtable in (t for e in elements for t in e):
            for mu in mtable:
                for m in list(masks):
                    if m & mu == 0 and (m | mu) not in masks:
                        masks.add(m | mu)
                        changed = True
    return sorted(masks)


def _right_multiplication_matrix(element, words, masks, cutoff: Fraction):
    """Matrix of O -> O*E on the (word x mask) coefficient basis."""
    widx = {w: i for i, w in enumerate(words)}
    midx = {m: i for i, m in enumerate(masks)}
    nm = len(masks)
    D = len(words) * nm
    R = np.zeros((D, D), dtype=complex)
    for u, mtable in element:
        struct = {}
        for w in words:
            if word_level(w) + word_level(u) > cutoff:
                continue
            struct[w] = {w2: c for w2, c in _normal_order_word(w + u).items()
                         if word_level(w2) <= cutoff}
        for mu, cval in mtable.items():
            p_mu = bin(mu).count("1") & 1
            for w, targets in struct.items():
                sgn_word = -1 if (p_mu and word_parity(w)) else 1
                for m in masks:
                    if m & mu:
                        continue
                    tgt_mask = m | mu
                    if tgt_mask not in midx:
                        continue
                    sgn = sgn_word * _merge_sign(m, mu)
                    row = widx[w] * nm + midx[m]
                    for w2, c in targets.items():
                        col = widx[w2] * nm + midx[tgt_mask]
                        R[row, col] += sgn * cval * float(c)
    return R


def mc_martingale(spec: WalkSpec, params: ModuleParams,
                  cutoff: Fraction | None = None, n_paths: int = 1000,
                  T: float = 0.25, dt: float = 1e-3, seed=0) -> dict:
    """Monte-Carlo estimate of the drift of the projected state expectation.

    The enveloping-algebra operator O_t starting from the identity is evolved
    by right multiplication with 1 + alpha dt + sum_i beta_i dB_i, words above
    the level cutoff trimmed.  O_t applied to the highest-weight vector is
    projected to the quotient by the singular-vector submodule; the per-basis
    coefficient drift (v_T - v_0)/T is averaged grade-by-grade over paths.
    """
    if cutoff is None:
        cutoff = params.level_cutoff
    cutoff = Fraction(cutoff)
    alpha = _element_data(drift_generator(spec))
    betas = [_element_data(beta_element(spec, i))
             for i in range(spec.brownian_dim)]
    for elem in [alpha, *betas]:
        for u, _m in elem:
            if word_level(u) > cutoff:
                raise CutoffOverflow("level cutoff too small for the walk")
    words = pbw_words(cutoff)
    masks = _reachable_masks([alpha, *betas])
    nm = len(masks)
    Ra = _right_multiplication_matrix(alpha, words, masks, cutoff)
    Rb = [_right_multiplication_matrix(b, words, masks, cutoff) for b in betas]
    steps = round(T / dt)
    D = len(words) * nm
    S = np.zeros((n_paths, D), dtype=complex)
    S[:, 0] = 1.0  # O_0 = identity word, trivial mask
    increments = np.empty((n_paths, steps, spec.brownian_dim))
    for p in range(n_paths):
        rng = np.random.default_rng([seed, p])
        increments[p] = rng.normal(0.0, math.sqrt(dt),
                                   size=(steps, spec.brownian_dim))
    for k in range(steps):
        delta = dt * (S @ Ra)
        for i, R in enumerate(Rb):
            delta += increments[:, k, i][:, None] * (S @ R)
        S = S + delta
    Pm = quotient_projection(params, cutoff, check_singular=False).matrix(words)
    S3 = S.reshape(n_paths, len(words), nm)
    proj = np.einsum("vw,pwm->pvm", Pm, S3)
    v0 = np.zeros((len(words), nm), dtype=complex)
    v0[0, 0] = 1.0
    proj0 = np.einsum("vw,wm->vm", Pm, v0)
    drifts = (proj - proj0[None, :, :]) / (T if T > 0 else 1.0)
    terminal = proj.mean(axis=0)
    mean = drifts.mean(axis=0)
    if n_paths > 1:
        se_re = drifts.real.std(axis=0, ddof=1) / math.sqrt(n_paths)
        se_im = drifts.imag.std(axis=0, ddof=1) / math.sqrt(n_paths)
    else:
        se_re = np.zeros(mean.shape)
        se_im = np.zeros(mean.shape)

    def zscore(m, se):
        if se > 0:
            return abs(m) / se
        return 0.0 if abs(m) < 1e-12 else math.inf

    entries = []
    for wi, w in enumerate(words):
        for mi, m in enumerate(masks):
            z = max(zscore(mean[wi, mi].real, se_re[wi, mi]),
                    zscore(mean[wi, mi].imag, se_im[wi, mi]))
            entries.append({
                "word": "1" if not w else "".join(repr(mode) for mode in w),
                "mask": m,
                "terminal_re": float(terminal[wi, mi].real),
                "terminal_im": float(terminal[wi, mi].imag),
                "drift_re": float(mean[wi, mi].real),
                "drift_im": float(mean[wi, mi].imag),
                "se_re": float(se_re[wi, mi]),
                "se_im": float(se_im[wi, mi]),
                "z": z,
            })
    max_z = max(e["z"] for e in entries)
    return {
        "spec": spec.name,
        "c": str(params.c),
        "delta": str(params.delta),
        "cutoff": str(cutoff),
        "n_paths": n_paths,
        "T": T,
        "dt": dt,
        "seed": seed,
        "basis_size": D,
        "entries": entries,
        "max_z": max_z,
        "martingale": bool(max_z <= 3.0),
        "drift_detected": bool(max_z > 5.0),
    }


# -- Loewner flow and hulls ---------------------------------------------------------


@dataclass(frozen=True)
class HullRaster:
    """Boolean occupancy raster of a hull on a rectangular grid."""

    bounds: tuple       # (xmin, xmax, ymin, ymax)
    occupancy: np.ndarray  # shape (ny, nx)
    horizon: float

    def cell_of(self, point: complex):
        xmin, xmax, ymin, ymax = self.bounds
        ny, nx = self.occupancy.shape
        ix = int((point.real - xmin) / (xmax - xmin) * nx)
        iy = int((point.imag - ymin) / (ymax - ymin) * ny)
        return min(max(iy, 0), ny - 1), min(max(ix, 0), nx - 1)


@dataclass(frozen=True)
class LoewnerResult:
    """Per-point outcome of the upward Loewner flow."""

    z_grid: np.ndarray
    swallowed_time: np.ndarray  # nan where the point survived
    final_g: np.ndarray         # nan where swallowed
    epsilon: float
    kappa: float
    seed: object

    @property
    def swallowed(self) -> np.ndarray:
        return np.isfinite(self.swallowed_time)


def loewner_flow(kappa, z_grid, T: float, dt: float, seed) -> LoewnerResult:
    """Explicit Euler for dg = 2 dt / (g - sqrt(kappa) B), per grid point.

    A point is declared swallowed when |g - sqrt(kappa) B| falls below
    1e-3 sqrt(dt), or when the discrete update leaves the closed upper half
    plane (an overshoot past the singular line, counted as swallowing).
    """
    z_grid = np.asarray(z_grid, dtype=complex)
    steps = round(T / dt)
    sk = math.sqrt(float(kappa))
    B = BrownianPath.sample(1, dt, steps, seed).values[0]
    eps = 1e-3 * math.sqrt(dt)
    g = z_grid.astype(complex).ravel().copy()
    swallowed_time = np.full(g.shape, np.nan)
    for k in range(steps):
        active = np.isnan(swallowed_time)
        f = g - sk * B[k]
        hit = active & ((np.abs(f) < eps) | (g.imag < 0.0))
        swallowed_time[hit] = k * dt
        active &= ~hit
        g[active] = g[active] + dt * 2.0 / f[active]
    final = g.copy()
    final[np.isfinite(swallowed_time)] = np.nan
    return LoewnerResult(z_grid=z_grid,
                         swallowed_time=swallowed_time.reshape(z_grid.shape),
                         final_g=final.reshape(z_grid.shape),
                         epsilon=eps, kappa=float(kappa), seed=seed)


def _rasterize_polyline(points: np.ndarray, bounds, shape) -> np.ndarray:
    xmin, xmax, ymin, ymax = bounds
    ny, nx = shape
    occ = np.zeros((ny, nx), dtype=bool)
    cell = min((xmax - xmin) / nx, (ymax - ymin) / ny)
    samples = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        seg = abs(b - a)
        k = max(1, int(seg / (0.5 * cell)) + 1)
        samples.extend(a + (b - a) * (j / k) for j in range(1, k + 1))
    pts = np.asarray(samples)
    ix = np.floor((pts.real - xmin) / (xmax - xmin) * nx).astype(int)
    iy = np.floor((pts.imag - ymin) / (ymax - ymin) * ny).astype(int)
    keep = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    occ[iy[keep], ix[keep]] = True
    return occ


def _fill_hull(occ: np.ndarray) -> np.ndarray:
    """Occupied cells plus bounded components of the free complement."""
    free = ~occ
    labels, count = scipy.ndimage.label(free)
    if count == 0:
        return occ.copy()
    border = np.unique(np.concatenate([
        labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]]))
    border = set(int(b) for b in border if b != 0)
    hull = occ.copy()
    for lab in range(1, count + 1):
        if lab not in border:
            hull |= labels == lab
    return hull


def supertrace_hull(kappa, T: float, dt: float, seed, grid,
                    bounds=None):
    """Raster hull of the scaled complex Brownian trace sqrt(kappa) B+.

    ``grid`` is the raster resolution (nx, ny) or a single integer.  Returns
    (HullRaster, polyline) where the polyline starts at the origin.
    """
    if isinstance(grid, int):
        grid = (grid, grid)
    nx, ny = grid
    if nx < 1 or ny < 1:
        raise ValueError("grid resolution must be positive")
    steps = round(T / dt)
    sk = math.sqrt(float(kappa))
    values = BrownianPath.sample(2, dt, steps, seed).values
    trace = sk * (values[0] + 1j * values[1])
    if bounds is None:
        margin = max(1e-6, 0.1 * max(np.ptp(trace.real), np.ptp(trace.imag)))
        bounds = (float(trace.real.min() - margin),
                  float(trace.real.max() + margin),
                  float(trace.imag.min() - margin),
                  float(trace.imag.max() + margin))
    occ = _rasterize_polyline(trace, bounds, (ny, nx))
    hull = _fill_hull(occ)
    return HullRaster(bounds=bounds, occupancy=hull, horizon=T), trace


# -- file output --------------------------------------------------------------------


def _config_lines(config: dict | None):
    if not config:
        return []
    return [f"# {k}={config[k]}" for k in sorted(config)]


def write_superpath_csv(sp_path: SuperPath, dest, config: dict | None = None):
    """CSV rows of (t, per-mask Re/Im of z and theta)."""
    masks = sorted({m for g in (*sp_path.z, *sp_path.theta)
                    for m in g.terms})
    if not masks:
        masks = [0]
    cols = ["t"]
    for m in masks:
        cols += [f"z{m}_re", f"z{m}_im"]
    for m in masks:
        cols += [f"theta{m}_re", f"theta{m}_im"]
    lines = _config_lines(config)
    if sp_path.swallowed_time is not None:
        lines.append(f"# status=swallowed t={sp_path.swallowed_time!r}")
    lines.append(",".join(cols))
    for k, t in enumerate(sp_path.times):
        row = [repr(float(t))]
        for g in (sp_path.z[k], sp_path.theta[k]):
            for m in masks:
                c = complex(g.terms.get(m, 0))
                row += [repr(c.real), repr(c.imag)]
        lines.append(",".join(row))
    _write_text(dest, "\n".join(lines) + "\n")


def write_pgm(raster: HullRaster, dest, config: dict | None = None):
    """Binary occupancy as a plain-text PGM image (1 = hull)."""
    ny, nx = raster.occupancy.shape
    lines = ["P2"]
    lines += _config_lines(config)
    lines += [f"{nx} {ny}", "1"]
    for row in raster.occupancy[::-1]:  # top row = largest imaginary part
        lines.append(" ".join("1" if v else "0" for v in row))
    _write_text(dest, "\n".join(lines) + "\n")


def write_json_report(report: dict, dest, config: dict | None = None):
    payload = {"config": config or {}, "report": report}
    _write_text(dest, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_text(dest, text: str):
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
