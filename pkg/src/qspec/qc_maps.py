"""Explicit quasiconformal maps with analytic derivatives.

All methods are vectorized: a single point of shape (n,) or a batch of shape
(N, n) is accepted, and results follow the input's shape.

Two dilatation conventions coexist.  ``declared_K`` is the analytic
coefficient, ess sup |Dphi|^n / J, which is what every bound consumes.
``linear_K`` is the ratio of extreme singular values; for the radial stretch
it equals a + 1 while the analytic one is (a + 1)^(n-1).
"""

from __future__ import annotations

import numpy as np

from .errors import SingularPointError

# radius of the ball around a singular point that samplers exclude
EXCLUSION_RADIUS = 1e-12


def _points(x, n):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != n:
        raise ValueError(f"expected points in R^{n}, got shape {x.shape}")
    return pts, single


def _out(values, single):
    return values[0] if single else values


class QCMap:
    dim: int
    declared_K: float | None = None
    linear_K: float | None = None
    # maps with a singular derivative at the origin set this to EXCLUSION_RADIUS
    singular_radius: float = 0.0

    def evaluate(self, x):
        pts, single = _points(x, self.dim)
        return _out(self._evaluate(pts), single)

    def derivative(self, x):
        pts, single = _points(x, self.dim)
        return _out(self._derivative(pts), single)

    def jacobian(self, x):
        pts, single = _points(x, self.dim)
        return _out(self._jacobian(pts), single)

    def operator_norm(self, x):
        """Spectral norm |Dphi(x)|."""
        pts, single = _points(x, self.dim)
        return _out(self._operator_norm(pts), single)

    def dilatation(self, x, p):
        """p-dilatation |Dphi|^p / |J|."""
        pts, single = _points(x, self.dim)
        jac = np.abs(self._jacobian(pts))
        if np.any(jac == 0):
            raise SingularPointError("zero Jacobian: dilatation undefined")
        return _out(self._operator_norm(pts) ** p / jac, single)

    def _jacobian(self, pts):
        return np.linalg.det(self._derivative(pts))

    def _operator_norm(self, pts):
        return np.linalg.norm(self._derivative(pts), ord=2, axis=(1, 2))

    def describe(self):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()} n={self.dim}>"


class Identity(QCMap):
    declared_K = 1.0
    linear_K = 1.0

    def __init__(self, n):
        self.dim = int(n)

    def _evaluate(self, pts):
        return pts.copy()

    def _derivative(self, pts):
        return np.broadcast_to(np.eye(self.dim), (len(pts), self.dim, self.dim)).copy()

    def _jacobian(self, pts):
        return np.ones(len(pts))

    def _operator_norm(self, pts):
        return np.ones(len(pts))

    def inverse(self):
        return self

    def describe(self):
        return "identity"


class Linear(QCMap):
    def __init__(self, matrix):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise ValueError(f"linear map needs a square matrix of size >= 2, got shape {A.shape}")
        self.A = A
        self.dim = A.shape[0]
        self.det = float(np.linalg.det(A))
        if not self.det > 0:
            raise ValueError(f"linear map must be orientation preserving (det > 0), got det = {self.det}")
        sv = np.linalg.svd(A, compute_uv=False)
        self.norm = float(sv[0])
        self.declared_K = self.norm ** self.dim / self.det
        self.linear_K = float(sv[0] / sv[-1])

    @classmethod
    def diag(cls, *entries):
        return cls(np.diag(entries))

    def _evaluate(self, pts):
        return pts @ self.A.T

    def _derivative(self, pts):
        return np.broadcast_to(self.A, (len(pts), self.dim, self.dim)).copy()

    def _jacobian(self, pts):
        return np.full(len(pts), self.det)

    def _operator_norm(self, pts):
        return np.full(len(pts), self.norm)

    def inverse(self):
        return Linear(np.linalg.inv(self.A))

    def describe(self):
        if np.allclose(self.A, np.diag(np.diag(self.A))):
            return "linear:diag=" + ",".join(repr(float(v)) for v in np.diag(self.A))
        rows = ";".join(",".join(repr(float(v)) for v in row) for row in self.A)
        return "linear:matrix=" + rows


class RadialStretch(QCMap):
    """phi(x) = |x|^a x, a > 0, with phi(0) = 0."""

    singular_radius = EXCLUSION_RADIUS

    def __init__(self, n, a):
        if not a > 0:
            raise ValueError(f"stretch exponent a must be positive, got {a}")
        self.dim = int(n)
        self.a = float(a)
        self.declared_K = (self.a + 1.0) ** (self.dim - 1)
        self.linear_K = self.a + 1.0

    def _radius(self, pts, allow_zero=False):
        r = np.linalg.norm(pts, axis=1)
        if not allow_zero and np.any(r == 0):
            raise SingularPointError("radial stretch derivative is singular at x = 0")
        return r

    def _evaluate(self, pts):
        r = self._radius(pts, allow_zero=True)
        return pts * (r ** self.a)[:, None]

    def _derivative(self, pts):
        r = self._radius(pts)
        a = self.a
        eye = np.eye(self.dim)[None]
        outer = pts[:, :, None] * pts[:, None, :]
        return (r ** a)[:, None, None] * eye + (a * r ** (a - 2.0))[:, None, None] * outer

    def _jacobian(self, pts):
        r = self._radius(pts)
        return (self.a + 1.0) * r ** (self.dim * self.a)

    def _operator_norm(self, pts):
        r = self._radius(pts)
        return (self.a + 1.0) * r ** self.a

    def inverse_points(self, y):
        """Closed-form inverse y -> |y|^(-a/(a+1)) y."""
        pts, single = _points(y, self.dim)
        r = np.linalg.norm(pts, axis=1)
        scale = np.zeros_like(r)
        nz = r > 0
        scale[nz] = r[nz] ** (-self.a / (self.a + 1.0))
        return _out(pts * scale[:, None], single)

    def describe(self):
        return f"stretch:a={self.a!r}"


class Composition(QCMap):
    """outer o inner.  ``declared_K`` is left unset: the product of the two
    coefficients is only an upper bound (exposed as ``K_upper``)."""

    def __init__(self, outer, inner):
        if outer.dim != inner.dim:
            raise ValueError("composed maps must share a dimension")
        self.outer, self.inner = outer, inner
        self.dim = outer.dim
        self.singular_radius = max(outer.singular_radius, inner.singular_radius)
        self.declared_K = None
        ko, ki = outer.declared_K, inner.declared_K
        if ko is None and isinstance(outer, Composition):
            ko = outer.K_upper
        if ki is None and isinstance(inner, Composition):
            ki = inner.K_upper
        self.K_upper = None if ko is None or ki is None else ko * ki

    def _evaluate(self, pts):
        return self.outer._evaluate(self.inner._evaluate(pts))

    def _derivative(self, pts):
        inner_d = self.inner._derivative(pts)
        outer_d = self.outer._derivative(self.inner._evaluate(pts))
        return outer_d @ inner_d

    def _jacobian(self, pts):
        return self.outer._jacobian(self.inner._evaluate(pts)) * self.inner._jacobian(pts)

    def describe(self):
        return f"{self.outer.describe()}*{self.inner.describe()}"


def coefficient(m):
    """Analytic K of ``m``, or the composition bound when that is all we have."""
    if m.declared_K is not None:
        return m.declared_K
    return getattr(m, "K_upper", None)


def estimate_K(m, d, spec):
    """Largest n-dilatation over the sample points of ``d``."""
    from .domains import sample

    pts, _ = sample(d, spec, exclude_radius=m.singular_radius)
    pts = pts[np.linalg.norm(pts, axis=1) >= m.singular_radius]
    return float(np.max(m.dilatation(pts, m.dim)))


def parse_map(text, n=None):
    """Build a map from a descriptor such as ``identity``, ``stretch:a=0.5``,
    ``linear:diag=2,1,1`` or ``linear:matrix=1,0;0,2``.  ``outer*inner``
    composes."""
    text = text.strip()
    if "*" in text:
        outer, inner = text.split("*", 1)
        return Composition(parse_map(outer, n), parse_map(inner, n))
    kind, _, params = text.partition(":")
    kv = dict(item.split("=", 1) for item in params.split("|") if item) if params else {}
    if kind == "identity":
        if n is None:
            raise ValueError("identity map needs a dimension")
        return Identity(n)
    if kind == "stretch":
        if n is None:
            raise ValueError("stretch map needs a dimension")
        return RadialStretch(n, float(kv["a"]))
    if kind == "linear":
        if "diag" in kv:
            m = Linear.diag(*(float(v) for v in kv["diag"].split(",")))
        elif "matrix" in kv:
            m = Linear([[float(v) for v in row.split(",")] for row in kv["matrix"].split(";")])
        else:
            raise ValueError(f"linear map needs diag= or matrix=: {text!r}")
        if n is not None and m.dim != n:
            raise ValueError(f"linear map has dimension {m.dim}, expected {n}")
        return m
    raise ValueError(f"unknown map descriptor {text!r}")


def zoo(n):
    """The maps every certification check runs over."""
    return [Identity(n), Linear.diag(2.0, *([1.0] * (n - 1))), RadialStretch(n, 0.5), RadialStretch(n, 1.0)]
