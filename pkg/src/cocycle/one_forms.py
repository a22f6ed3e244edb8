"""Time-varying cocyclic one-forms, Lipschitz data, and their certificates.

A cocyclic one-form assigns to each time-grid index ``s`` a map
``(a, v) -> value`` that is linear in the direction ``v`` and satisfies the
cocycle law ``beta(a, b) beta(ab, c) = beta(a, bc)`` on group elements.
Targets are either flat vector spaces (an abelian group under addition) or a
truncated graded algebra (values with unit scalar part).

Certificates quantify how slowly a form varies along a base path: a uniform
operator bound plus per-degree Holder quotients against a control, and the
weaker integrable condition evaluated on grid triples.  Operator norms are
exact maximisations over the coefficient basis (the domain carries the ell-1
norm, so the dual norm is a maximum over basis images).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import trees
from .algebra import ForestSystem, GradedTensor, HopfSystem, WordSystem, tensor_system
from .paths import Control, SampledGroupPath
from .shuffles import ordered_shuffles


class CertificateError(ValueError):
    """A regularity certificate failed; carries the offending data."""

    def __init__(self, message: str, detail=None):
        super().__init__(message)
        self.detail = detail


def worker_count() -> int:
    """Worker cap from COCYCLE_THREADS (certificates may fan out per pair)."""
    try:
        return max(1, int(os.environ.get("COCYCLE_THREADS", "1")))
    except ValueError:
        return 1


# -- targets -------------------------------------------------------------------


class FlatTarget:
    """R^m as an abelian group under addition."""

    def __init__(self, dim: int):
        self.dim = dim
        self.kind = "flat"

    def unit(self):
        return np.zeros(self.dim)

    def mul(self, x, y):
        return x + y

    def inverse(self, x):
        return -x

    def sub(self, x, y):
        return x - y

    def norm(self, x) -> float:
        return float(np.abs(x).sum())

    def sigma_max_norm(self, x) -> float:
        return float(np.abs(x).sum())

    def is_member(self, x, tol=1e-9) -> bool:
        return np.all(np.isfinite(x))


class AlgebraTarget:
    """A truncated graded algebra; group elements have unit scalar part."""

    def __init__(self, system: HopfSystem):
        self.system = system
        self.kind = "algebra"

    def unit(self):
        return self.system.unit()

    def mul(self, x, y):
        return self.system.mul(x, y)

    def inverse(self, x):
        return self.system.inverse(x)

    def sub(self, x, y):
        return x - y

    def norm(self, x) -> float:
        return x.norm()

    def sigma_max_norm(self, x) -> float:
        return self.system.sigma_max_norm(x)

    def is_member(self, x, tol=1e-9) -> bool:
        return abs(x.scalar() - 1.0) <= tol


# -- Lipschitz data --------------------------------------------------------------


def strict_floor(gamma: float) -> int:
    """Largest integer strictly below gamma (the Lipschitz ladder index)."""
    f = int(math.floor(gamma))
    return f - 1 if f == gamma else f


@dataclass
class LipFunction:
    """A gamma-Lipschitz function given by its derivative stack.

    ``deriv(l, x)`` returns the l-th derivative at x with shape
    ``out_shape + (in_dim,) * l`` (derivative slots last, symmetric).
    One-form-valued functions use ``out_shape = (m, in_dim)`` with the
    direction slot second.
    """

    gamma: float
    in_dim: int
    out_shape: tuple
    deriv_fn: object
    lip_bound_fn: object = None

    @property
    def top(self) -> int:
        return strict_floor(self.gamma)

    def deriv(self, l: int, x) -> np.ndarray:
        arr = np.asarray(self.deriv_fn(l, np.asarray(x, dtype=float)), dtype=float)
        want = tuple(self.out_shape) + (self.in_dim,) * l
        if arr.shape != want:
            raise ValueError(f"derivative {l} has shape {arr.shape}, want {want}")
        return arr

    def lip_bound(self, R: float) -> float:
        if self.lip_bound_fn is None:
            raise ValueError("no Lipschitz bound callback supplied")
        return float(self.lip_bound_fn(R))

    @classmethod
    def from_polynomial(cls, arrays, gamma: float | None = None, in_dim: int | None = None) -> "LipFunction":
        """Polynomial from its derivative arrays at 0 (symmetry validated)."""
        arrays = [np.asarray(a, dtype=float) for a in arrays]
        out_shape = arrays[0].shape
        if in_dim is None:
            if len(arrays) > 1:
                in_dim = arrays[1].shape[-1]
            elif len(out_shape) == 2:
                in_dim = out_shape[1]  # one-form-valued: direction slot
            else:
                in_dim = 1
        for l, arr in enumerate(arrays):
            if arr.shape != tuple(out_shape) + (in_dim,) * l:
                raise ValueError(f"array {l} has inconsistent shape {arr.shape}")
            _check_symmetric(arr, l)
        degree = len(arrays) - 1
        if gamma is None:
            gamma = float(degree + 1)

        def deriv_fn(l, x):
            if l >= len(arrays):
                return np.zeros(tuple(out_shape) + (in_dim,) * l)
            out = np.zeros_like(arrays[l])
            fact = 1.0
            for j in range(len(arrays) - l):
                term = arrays[l + j]
                for _ in range(j):
                    term = np.tensordot(term, x, axes=([len(out_shape) + l], [0]))
                out = out + term / fact
                fact *= j + 1
            return out

        def lip_bound_fn(R):
            total = 0.0
            for l, arr in enumerate(arrays):
                total = max(total, sum(
                    float(np.abs(arrays[l + j]).max()) * R**j / math.factorial(j)
                    for j in range(len(arrays) - l)
                ))
            return max(total, 1e-300)

        return cls(gamma, in_dim, tuple(out_shape), deriv_fn, lip_bound_fn)


def _check_symmetric(arr: np.ndarray, l: int, tol: float = 1e-10):
    if l < 2:
        return
    lead = arr.ndim - l
    base = list(range(arr.ndim))
    for i in range(l - 1):
        axes = list(base)
        axes[lead + i], axes[lead + i + 1] = axes[lead + i + 1], axes[lead + i]
        if np.abs(arr - arr.transpose(axes)).max() > tol:
            raise ValueError(f"derivative array of order {l} is not symmetric")


def holder_remainder_residual(f: LipFunction, samples, R: float | None = None) -> float:
    """Empirical Holder quotient of the top derivative over sample pairs."""
    top = f.top
    expo = f.gamma - top
    worst = 0.0
    pts = [np.asarray(x, dtype=float) for x in samples]
    for i, x in enumerate(pts):
        for y in pts[i + 1 :]:
            gap = float(np.abs(x - y).sum())
            if gap < 1e-12:
                continue
            dev = float(np.abs(f.deriv(top, x) - f.deriv(top, y)).max())
            worst = max(worst, dev / gap**expo)
    return worst


# -- the one-form interface ------------------------------------------------------


class TimeVaryingOneForm:
    """Per-grid-time linear maps (a, v) -> target, linear in v."""

    def __init__(self, times, domain: HopfSystem, target):
        self.times = np.asarray(times, dtype=float)
        self.domain = domain
        self.target = target
        self._matrix_cache: dict = {}

    def eval(self, s: int, a: GradedTensor, v: GradedTensor):
        raise NotImplementedError

    def eval_pair(self, path: SampledGroupPath, j: int, k: int):
        """beta_{t_j}(g_{t_j}, g_{t_j, t_k})."""
        return self.eval(j, path.values[j], path.increment(j, k))

    def recentered(self, path: SampledGroupPath, s: int, c: GradedTensor):
        """beta_s evaluated at base g_s in the recentered direction c."""
        return self.eval(s, path.values[s], c)

    def base_matrix(self, path: SampledGroupPath, s: int, k: int) -> np.ndarray:
        """Matrix of v_k -> beta_s(g_s, v_k) on the degree-k block (flat targets)."""
        key = (id(path), s, k)
        cached = self._matrix_cache.get(key)
        if cached is not None:
            return cached
        dim = self.domain.dim(k)
        cols = []
        for pos in range(dim):
            e = self.domain.zero()
            e.levels[k][pos] = 1.0
            cols.append(self.eval(s, path.values[s], e))
        mat = np.stack(cols, axis=-1).reshape(-1, dim)
        self._matrix_cache[key] = mat
        return mat

    def linearity_residual(self, s: int, a: GradedTensor, v1, v2, c1=0.7, c2=-1.3) -> float:
        lhs = self.eval(s, a, c1 * v1 + c2 * v2)
        combo = self.target.sub(lhs, _scale(self.eval(s, a, v1), c1))
        combo = self.target.sub(combo, _scale(self.eval(s, a, v2), c2))
        return self.target.norm(combo)

    def cocycle_residual(self, s: int, a: GradedTensor, b: GradedTensor, c: GradedTensor) -> float:
        """|beta(a,b) beta(ab,c) - beta(a,bc)| at one time index."""
        dom = self.domain
        lhs = self.target.mul(self.eval(s, a, b), self.eval(s, dom.mul(a, b), c))
        rhs = self.eval(s, a, dom.mul(b, c))
        return self.target.norm(self.target.sub(lhs, rhs))


def _scale(x, c):
    if isinstance(x, GradedTensor):
        return c * x
    return c * np.asarray(x)


class CallableForm(TimeVaryingOneForm):
    """One-form from a closure ``fn(s, a, v)``; optional exposed summands."""

    def __init__(self, times, domain, target, fn, summands=None, base_path=None):
        super().__init__(times, domain, target)
        self._fn = fn
        self.summands = summands
        self.base_path = base_path

    def eval(self, s, a, v):
        return self._fn(s, a, v)


class FormSum(TimeVaryingOneForm):
    """Pointwise sum of forms with a common flat target."""

    def __init__(self, forms):
        first = forms[0]
        super().__init__(first.times, first.domain, first.target)
        self.forms = list(forms)

    def eval(self, s, a, v):
        out = self.forms[0].eval(s, a, v)
        for f in self.forms[1:]:
            out = self.target.mul(out, f.eval(s, a, v))
        return out


# -- constant cocyclic forms -----------------------------------------------------


def constant_form_from_alpha(times, domain: HopfSystem, target, alpha, probes=None):
    """Time-constant cocyclic form  beta(a, b) = alpha(a)^{-1} alpha(ab).

    ``alpha`` is a linear map from the domain algebra into the target; its
    image on group elements must lie in the target group (checked on the
    probe points).
    """
    if probes:
        for g in probes:
            if not target.is_member(alpha(g)):
                raise CertificateError("alpha image leaves the target group", detail=g)

    if isinstance(target, FlatTarget):

        def fn(s, a, v):
            av = domain.mul(a, v)
            return np.asarray(alpha(av)) - v.scalar() * np.asarray(alpha(a))

    else:

        def fn(s, a, v):
            return target.mul(target.inverse(alpha(a)), alpha(domain.mul(a, v)))

    return CallableForm(times, domain, target, fn)


def identity_form(times, domain: HopfSystem):
    """beta(a, b) = b: the form whose integral reproduces the path itself."""
    return constant_form_from_alpha(times, domain, AlgebraTarget(domain), lambda g: g)


def coordinate_form(times, domain: HopfSystem):
    """Degree-one increment form: the level-1 coupling beta(a,v) = pi_1(a(v - v_0))."""
    target = FlatTarget(domain.dim(1))

    def fn(s, a, v):
        w = domain.mul(a, v - v.scalar() * domain.unit())
        return np.array(w.levels[1])

    return CallableForm(times, domain, target, fn)


class LevelRaisingForm(TimeVaryingOneForm):
    """The one-level extension form of a group path.

    ``beta_s(a, b) = (1_m(g_s^{-1} a))^{-1} 1_m(g_s^{-1} (ab))`` with the
    inner product of a and b truncated at level m and everything else in the
    level-(m+1) algebra.
    """

    def __init__(self, path: SampledGroupPath):
        m = path.level
        self.m = m
        self.upper = tensor_system(path.system.kind, path.d, m + 1)
        super().__init__(path.times, path.system, AlgebraTarget(self.upper))
        self.base_path = path
        self._inv_padded = [
            self.upper.inverse(path.system.embed(v, m + 1)) for v in path.values
        ]

    def eval(self, s, a, v):
        dom, up, m = self.domain, self.upper, self.m
        gi = self._inv_padded[s]
        av = dom.mul(a, v)
        c1 = up.project(up.mul(gi, dom.embed(a, m + 1)), m)
        c2 = up.project(up.mul(gi, dom.embed(av, m + 1)), m)
        return up.mul(up.inverse(c1), c2)


# -- the polynomial cocyclic lift --------------------------------------------------


class PolynomialCocyclicForm(TimeVaryingOneForm):
    """Grouplike-target lift of a polynomial one-form.

    The value at ``(a, v)`` sums, over target degrees k and derivative orders
    ``(l_1..l_k)``, the ordered-shuffle image of the degree ``sum l_i + k``
    block of ``v`` contracted with the derivative tensors evaluated at
    ``pi_1(a)``.  On a domain at level ``n^2`` this is exactly cocyclic; on
    the level-n truncation it is approximately so, with the same sewn limit.
    """

    def __init__(self, times, f: LipFunction, lift_level: int, domain: HopfSystem):
        if len(f.out_shape) != 2:
            raise ValueError("polynomial lift needs a one-form-valued function")
        if not isinstance(domain, WordSystem):
            raise ValueError("polynomial lift is defined over the word system")
        if f.in_dim != domain.d:
            raise ValueError("dimension mismatch between one-form and domain")
        m = f.out_shape[0]
        target = AlgebraTarget(tensor_system("nilpotent", m, lift_level))
        super().__init__(times, domain, target)
        self.f = f
        self.lift_level = lift_level
        self._deriv_cache: dict = {}
        self._tuples = self._index_tuples()

    def _index_tuples(self):
        n, dn = self.lift_level, self.domain.n
        out = []
        for k in range(1, n + 1):
            for ls in _tuples_upto(k, n - 1):
                if sum(ls) + k <= dn:
                    out.append((k, ls))
        return out

    def _deriv_at(self, x: np.ndarray):
        key = x.tobytes()
        hit = self._deriv_cache.get(key)
        if hit is None:
            hit = [self.f.deriv(l, x) for l in range(self.lift_level)]
            if len(self._deriv_cache) > 64:
                self._deriv_cache.clear()
            self._deriv_cache[key] = hit
        return hit

    def eval(self, s, a, v):
        d = self.domain.d
        m = self.f.out_shape[0]
        derivs = self._deriv_at(np.asarray(a.levels[1]))
        out = v.scalar() * self.target.unit()
        for k, ls in self._tuples:
            total = sum(ls) + k
            block = np.zeros(d**total)
            for perm in ordered_shuffles(tuple(l + 1 for l in ls)):
                from .shuffles import apply_inverse

                block = block + apply_inverse(v.levels[total], perm, d)
            # contract factor i (a V^{(l_i+1)} slot group) with (D^{l_i} p)(x)
            cur = block.reshape(tuple(d ** (l + 1) for l in ls))
            for i, l in enumerate(ls):
                # derivative layout (m, direction, slots...) -> direction last
                A = np.moveaxis(derivs[l], 1, -1).reshape(m, d ** (l + 1))
                cur = np.tensordot(A, cur, axes=([1], [i]))
                cur = np.moveaxis(cur, 0, i)
            out.levels[k][:] += cur.reshape(-1)
        return out


def _tuples_upto(parts: int, top: int):
    if parts == 0:
        yield ()
        return
    for first in range(top + 1):
        for rest in _tuples_upto(parts - 1, top):
            yield (first,) + rest


def polynomial_trace_increment(f: LipFunction, path: SampledGroupPath, s: int, t: int) -> np.ndarray:
    """Closed-form increment sum_l (D^l p)(x_s) applied to the signature blocks."""
    x = path.level_one(s)
    inc = path.increment(s, t)
    m = f.out_shape[0]
    out = np.zeros(m)
    for l in range(min(path.level, len_of_stack(f))):
        A = np.moveaxis(f.deriv(l, x), 1, -1).reshape(m, -1)
        out = out + A @ inc.levels[l + 1]
    return out


def len_of_stack(f: LipFunction) -> int:
    return f.top + 1


# -- rough-integration one-forms ---------------------------------------------------


class RoughOneForm(TimeVaryingOneForm):
    """One-form of a Lip(gamma) one-form against a word-system path.

    ``beta_s(a, v) = sum_{l < [p]} (D^l f)(x_s) pi_{l+1}(g_s^{-1} a (v - v_0))``
    with x the degree-one trace of the base path.  Requires gamma > p - 1;
    only derivatives below [p] enter the Taylor recentering, so the usable
    Holder scale (and the slowly-varying exponent) caps gamma at [p].
    """

    def __init__(self, f: LipFunction, path: SampledGroupPath, p: float):
        if len(f.out_shape) != 2:
            raise ValueError("rough integration needs a one-form-valued function")
        if not isinstance(path.system, WordSystem):
            raise ValueError("this construction is for the word system")
        if f.gamma <= p - 1.0:
            raise CertificateError(
                f"gamma = {f.gamma} must exceed p - 1 = {p - 1}", detail=(f.gamma, p)
            )
        hp = int(math.floor(p))
        if path.level < hp:
            raise ValueError("base path level below [p]")
        target = FlatTarget(f.out_shape[0])
        super().__init__(path.times, path.system, target)
        self.f = f
        self.p = p
        self.hp = hp
        self.base_path = path
        self.theta = (min(f.gamma, float(hp)) + 1.0) / p
        self._A: dict = {}

    def _derivs(self, s: int):
        hit = self._A.get(s)
        if hit is None:
            x = self.base_path.level_one(s)
            m = self.f.out_shape[0]
            hit = [
                np.moveaxis(self.f.deriv(l, x), 1, -1).reshape(m, -1)
                for l in range(min(self.hp, self.f.top + 1))
            ]
            self._A[s] = hit
        return hit

    def eval(self, s, a, v):
        dom = self.domain
        gi = self.base_path.inverse_value(s)
        w = dom.mul(a, v - v.scalar() * dom.unit())
        c = dom.mul(gi, w)
        out = np.zeros(self.f.out_shape[0])
        for l, A in enumerate(self._derivs(s)):
            out = out + A @ c.levels[l + 1]
        return out


class BranchedRoughOneForm(TimeVaryingOneForm):
    """Forest-system analogue: corolla-coefficient readout with Taylor weights.

    ``beta_s(a, v) = sum_l (1/l!) (D^l f)(x_s) [corolla_{l}](g_s^{-1} a (v - v_0))``
    where corolla_l is the tree with l single-node branches on a new root.
    """

    def __init__(self, f: LipFunction, path: SampledGroupPath, p: float):
        if len(f.out_shape) != 2:
            raise ValueError("rough integration needs a one-form-valued function")
        if not isinstance(path.system, ForestSystem):
            raise ValueError("this construction is for the forest system")
        if f.gamma <= p - 1.0:
            raise CertificateError(
                f"gamma = {f.gamma} must exceed p - 1 = {p - 1}", detail=(f.gamma, p)
            )
        target = FlatTarget(f.out_shape[0])
        super().__init__(path.times, path.system, target)
        self.f = f
        self.p = p
        self.hp = int(math.floor(p))
        self.base_path = path
        self.theta = (min(f.gamma, float(self.hp)) + 1.0) / p
        sysm = path.system
        self._slots = []
        for l in range(min(self.hp, f.top + 1)):
            rows = []
            for leaves in _tuples_of_labels(l, sysm.d):
                for i in range(1, sysm.d + 1):
                    corolla = trees.tree(i, tuple(trees.tree(j) for j in leaves))
                    rows.append((l, leaves, i, sysm.forest_position(l + 1, (corolla,))))
            self._slots.append(rows)

    def eval(self, s, a, v):
        dom = self.domain
        gi = self.base_path.inverse_value(s)
        w = dom.mul(a, v - v.scalar() * dom.unit())
        c = dom.mul(gi, w)
        x = self.base_path.level_one(s)
        m = self.f.out_shape[0]
        out = np.zeros(m)
        for l, rows in enumerate(self._slots):
            D = self.f.deriv(l, x)  # (m, d, d^l)
            fact = math.factorial(l)
            for _, leaves, i, pos in rows:
                coeff = c.levels[l + 1][pos]
                if coeff == 0.0:
                    continue
                sel = D[:, i - 1]
                for j in leaves:
                    sel = sel[..., j - 1]
                out = out + sel * coeff / fact
        return out


def _tuples_of_labels(l: int, d: int):
    if l == 0:
        yield ()
        return
    for first in range(1, d + 1):
        for rest in _tuples_of_labels(l - 1, d):
            yield (first,) + rest


class TimeVaryingRoughOneForm(TimeVaryingOneForm):
    """Rough-integration form with a per-grid-time Lipschitz function.

    The compensated regularity of the stack is measured on the grid:
    quotients ``|((D^l F_t) - (D^l F_s))(x_t)| / w(s,t)^{theta - (l+1)/p}``.
    """

    def __init__(self, fs, path: SampledGroupPath, p: float, omega: Control, theta: float):
        f0 = fs[0]
        if any(f.gamma != f0.gamma or f.out_shape != f0.out_shape for f in fs):
            raise ValueError("all grid functions must share shape and gamma")
        if len(fs) != len(path):
            raise ValueError("need one function per grid point")
        if f0.gamma <= p - 1.0:
            raise CertificateError("gamma must exceed p - 1", detail=(f0.gamma, p))
        super().__init__(path.times, path.system, FlatTarget(f0.out_shape[0]))
        self.fs = list(fs)
        self.p = p
        self.hp = int(math.floor(p))
        self.base_path = path
        self.omega = omega
        self.theta = theta

    def eval(self, s, a, v):
        dom = self.domain
        gi = self.base_path.inverse_value(s)
        w = dom.mul(a, v - v.scalar() * dom.unit())
        c = dom.mul(gi, w)
        x = self.base_path.level_one(s)
        m = self.fs[s].out_shape[0]
        out = np.zeros(m)
        for l in range(min(self.hp, self.fs[s].top + 1)):
            A = np.moveaxis(self.fs[s].deriv(l, x), 1, -1).reshape(m, -1)
            out = out + A @ c.levels[l + 1]
        return out

    def time_variation_report(self, bound: float | None = None):
        """Per-order Holder quotients of the stack along the path."""
        N = len(self.base_path)
        rows = []
        worst = {}
        for l in range(self.hp):
            expo = self.theta - (l + 1) / self.p
            for s in range(N - 1):
                for t in range(s + 1, N):
                    x_t = self.base_path.level_one(t)
                    dev = float(np.abs(self.fs[t].deriv(l, x_t) - self.fs[s].deriv(l, x_t)).max())
                    w = self.omega(s, t)
                    if w <= 0:
                        continue
                    q = dev / w**expo
                    rows.append((s, t, l, dev, w, q))
                    if q > worst.get(l, (0.0, None))[0]:
                        worst[l] = (q, (s, t, l))
                    if bound is not None and q > bound:
                        raise CertificateError(
                            "time-varying stack violates the compensated regularity bound",
                            detail=(s, t, l),
                        )
        return {"rows": rows, "worst": worst}


def mixed_one_form(alpha_fn, h_values, path: SampledGroupPath, p: float, omega: Control, theta: float):
    """Time variation through a second path: F_s = alpha(. , h_s)."""
    fs = [alpha_fn(h) for h in h_values]
    return TimeVaryingRoughOneForm(fs, path, p, omega, theta)


# -- certificates ------------------------------------------------------------------


@dataclass
class SlowVaryingReport:
    """Uniform bound, per-degree Holder quotients and the combined norm."""

    M: float
    theta: float
    p: float
    quotients: dict
    beta_norm: float
    worst_pair: tuple | None = None
    samples: list = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return np.isfinite(self.beta_norm)


def slowly_varying_certificate(
    beta: TimeVaryingOneForm,
    path: SampledGroupPath,
    omega: Control,
    theta: float,
    p: float,
    max_degree: int | None = None,
    keep_samples: bool = False,
) -> SlowVaryingReport:
    """Measure the slowly-varying norm of a form along a path.

    Operator norms are exact maxima over the coefficient basis; Holder
    quotients run over all grid pairs and degrees 1..[p] (capped at the
    domain level).
    """
    N = len(path)
    dom = beta.domain
    kmax = dom.n if max_degree is None else min(max_degree, dom.n)
    M = 0.0
    basis = [
        [(k, pos) for pos in range(dom.dim(k))] for k in range(dom.n + 1)
    ]
    cache: dict = {}

    def probe(s, k, pos):
        key = (s, k, pos)
        hit = cache.get(key)
        if hit is None:
            e = dom.zero()
            e.levels[k][pos] = 1.0
            hit = beta.eval(s, path.values[s], e)
            cache[key] = hit
        return hit

    for s in range(N):
        for k in range(dom.n + 1):
            for _, pos in basis[k]:
                M = max(M, beta.target.norm(probe(s, k, pos)))
    quotients = {k: 0.0 for k in range(1, kmax + 1)}
    worst_pair = None
    samples = []
    pairs = [(s, t) for s in range(N - 1) for t in range(s + 1, N)]

    def measure(pair):
        s, t = pair
        w = omega(s, t)
        out = []
        if w <= 0:
            return out
        for k in range(1, kmax + 1):
            dev = 0.0
            for _, pos in basis[k]:
                e = dom.zero()
                e.levels[k][pos] = 1.0
                late = beta.eval(t, path.values[t], e)
                early = beta.eval(s, path.values[t], e)
                dev = max(dev, beta.target.norm(beta.target.sub(late, early)))
            out.append((s, t, k, dev, w))
        return out

    rows = _map_maybe_parallel(measure, pairs)
    for chunk in rows:
        for s, t, k, dev, w in chunk:
            q = dev / w ** (theta - k / p)
            if keep_samples:
                samples.append((s, t, k, dev, w))
            if q > quotients[k]:
                quotients[k] = q
                if q >= max(quotients.values()):
                    worst_pair = (s, t, k)
    beta_norm = M + (max(quotients.values()) if quotients else 0.0)
    return SlowVaryingReport(M, theta, p, quotients, beta_norm, worst_pair, samples)


def _map_maybe_parallel(fn, items):
    workers = worker_count()
    if workers <= 1 or len(items) < 32:
        return [fn(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class IntegrableReport:
    """Measured constants of the integrable condition on grid triples."""

    M: float
    ratio: float
    theta: float
    worst_triple: tuple | None
    ok: bool
    frozen: bool = False


def integrable_condition_check(
    beta: TimeVaryingOneForm,
    path: SampledGroupPath,
    omega: Control,
    theta: float,
    max_triples: int = 4096,
) -> IntegrableReport:
    """Evaluate the one-step bound and the compensated-regularity bound.

    The first bound is the sup over pairs of the one-step values; the second
    is the sup over triples s < u < t of
    ``max_sigma |(beta_u - beta_s)(g_u, g_{u,t})| / w(s,t)^theta``.
    """
    N = len(path)
    tgt = beta.target
    M = 0.0
    for s in range(N - 1):
        for t in range(s + 1, N):
            M = max(M, tgt.sigma_max_norm(beta.eval_pair(path, s, t)))
    triples = [(s, u, t) for s in range(N) for u in range(s + 1, N) for t in range(u + 1, N)]
    if len(triples) > max_triples:
        stride = len(triples) // max_triples + 1
        triples = triples[::stride]
    ratio, worst = 0.0, None
    frozen = True
    for s, u, t in triples:
        inc = path.increment(u, t)
        if frozen and any(np.abs(l).max() > 1e-14 for l in inc.levels[1:]):
            frozen = False
        late = beta.eval(u, path.values[u], inc)
        early = beta.eval(s, path.values[u], inc)
        dev = tgt.sigma_max_norm(tgt.sub(late, early))
        w = omega(s, t)
        if w <= 0:
            if dev > 1e-13:
                ratio = np.inf
                worst = (s, u, t)
            continue
        q = dev / w**theta
        if q > ratio:
            ratio, worst = q, (s, u, t)
    ok = theta > 1.0 and np.isfinite(ratio) and np.isfinite(M)
    return IntegrableReport(M, ratio, theta, worst, ok, frozen)
