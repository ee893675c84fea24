"""
Affine maps with Gaussian noise.

A morphism ``n → m`` is ``v ↦ M·v + ξ`` with ``ξ ~ N(mean, cov)``. Variables
carry a dimension (θ(x) is an int), so a list of variables is the sum of
their dimensions.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import AssignmentError, DimensionMismatch, SingularBlock
from .markov import Assignment, CapabilityFlags, MarkovCategory, Morphism
from .varspace import set_to_list

logger = logging.getLogger(__name__)


def _frozen(array, shape):
    array = np.array(array, dtype=float).reshape(shape)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GaussMap(Morphism):
    """
    The triple of a Gaussian map, stored by name.

    Attributes:
        M: Linear part, ``cod_dim × dom_dim``.
        cov: Noise covariance, ``cod_dim × cod_dim``.
        mean: Noise mean, length ``cod_dim``.
    """
    M: np.ndarray = None
    cov: np.ndarray = None
    mean: np.ndarray = None

    @property
    def dom_dim(self):
        return self.M.shape[1]

    @property
    def cod_dim(self):
        return self.M.shape[0]

    def __repr__(self):
        return f"GaussMap({list(self.dom)}→{list(self.cod)}, mean={self.mean.tolist()}, cov={self.cov.tolist()})"


class Gauss(MarkovCategory):
    """Gaussian maps compared entrywise within an absolute tolerance."""
    kind = 'gauss'

    def __init__(self, theta, tolerance=None):
        super().__init__(theta)
        if tolerance is None:
            from django.conf import settings
            tolerance = settings.DIBI_GAUSS_TOLERANCE
        self.tolerance = float(tolerance)
        self.flags = CapabilityFlags(
            has_conditionals=True, del_cancellative=True, equality_exact=False, tolerance=self.tolerance,
        )

    @classmethod
    def uniform(cls, dim=1, tolerance=None, **dims):
        return cls(Assignment(default=int(dim), overrides={k: int(v) for k, v in dims.items()}), tolerance)

    def dim(self, name):
        d = self.theta(name)
        if not isinstance(d, int) or d < 0:
            raise AssignmentError(f"dimension of {name!r} must be a nonnegative int, got {d!r}")
        return d

    def width(self, o):
        return sum(self.dim(name) for name in o)

    def offsets(self, o):
        """Start offset of each variable's block in the list ``o``."""
        starts, at = [], 0
        for name in o:
            starts.append(at)
            at += self.dim(name)
        return starts

    def make(self, dom, cod, M, cov=None, mean=None):
        """Build and validate a GaussMap (missing noise means deterministic)."""
        dom, cod = tuple(dom), tuple(cod)
        n, m = self.width(dom), self.width(cod)
        M = _frozen(M, (m, n))
        cov = _frozen(np.zeros((m, m)) if cov is None else cov, (m, m))
        mean = _frozen(np.zeros(m) if mean is None else mean, (m,))
        if not np.allclose(cov, cov.T, atol=self.tolerance):
            raise DimensionMismatch("covariance is not symmetric")
        if m and np.linalg.eigvalsh((cov + cov.T) / 2).min() < -self.tolerance:
            raise DimensionMismatch("covariance is not positive semidefinite")
        return GaussMap(dom, cod, M, cov, mean)

    def state(self, cod, cov, mean=None):
        """A map ``[] → cod`` with the given covariance and mean."""
        return self.make((), cod, np.zeros((self.width(cod), 0)), cov, mean)

    # Markov structure

    def unit(self):
        return self.make((), (), np.zeros((0, 0)))

    def identity_on_var(self, name):
        return self.identity((name,))

    def identity(self, o):
        return self.make(o, o, np.eye(self.width(o)))

    def compose(self, f, g):
        self.check_composable(f, g)
        if f.cod_dim != g.dom_dim:
            raise DimensionMismatch(f"{f.cod_dim} outputs feed {g.dom_dim} inputs")
        return self.make(
            f.dom,
            g.cod,
            g.M @ f.M,
            g.M @ f.cov @ g.M.T + g.cov,
            g.M @ f.mean + g.mean,
        )

    def tensor(self, f, g):
        def block(a, b):
            out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
            out[:a.shape[0], :a.shape[1]] = a
            out[a.shape[0]:, a.shape[1]:] = b
            return out

        return self.make(
            f.dom + g.dom,
            f.cod + g.cod,
            block(f.M, g.M),
            block(f.cov, g.cov),
            np.concatenate([f.mean, g.mean]),
        )

    def select(self, src, indices):
        src, indices = tuple(src), tuple(indices)
        starts = self.offsets(src)
        dst = tuple(src[i] for i in indices)
        M = np.zeros((self.width(dst), self.width(src)))
        row = 0
        for i in indices:
            d = self.dim(src[i])
            M[row:row + d, starts[i]:starts[i] + d] = np.eye(d)
            row += d
        return self.make(src, dst, M)

    def copy(self, o):
        o = tuple(o)
        return self.select(o, tuple(range(len(o))) * 2)

    def delete(self, o):
        return self.select(o, ())

    def swap(self, a, b):
        a, b = tuple(a), tuple(b)
        return self.select(a + b, tuple(range(len(a), len(a) + len(b))) + tuple(range(len(a))))

    def close(self, a, b):
        return a.shape == b.shape and np.allclose(a, b, rtol=0.0, atol=self.tolerance)

    def equal(self, f, g):
        return (
            tuple(f.dom) == tuple(g.dom)
            and tuple(f.cod) == tuple(g.cod)
            and self.close(f.M, g.M)
            and self.close(f.cov, g.cov)
            and self.close(f.mean, g.mean)
        )

    def random_morphism(self, dom, cod, rng):
        n, m = self.width(dom), self.width(cod)
        M = [[rng.choice((-1.0, -0.5, 0.0, 0.5, 1.0)) for _ in range(n)] for _ in range(m)]
        A = np.array([[rng.uniform(-1.0, 1.0) for _ in range(m)] for _ in range(m)]).reshape(m, m)
        mean = [rng.uniform(-1.0, 1.0) for _ in range(m)]
        return self.make(dom, cod, M, A @ A.T, mean)

    # Capabilities

    def conditional(self, f, k, fallback=None):
        """
        Schur-complement split of ``f : A → X ++ Y``.

        The regression gain uses the pseudo-inverse of the X-block, so
        deterministic (singular) Gaussians are accepted when they reassemble.
        That choice also fixes the conditional off the support, so
        ``fallback`` is not consulted.
        """
        xs, ys = f.cod[:k], f.cod[k:]
        dx = self.width(xs)
        cov_xx, cov_xy = f.cov[:dx, :dx], f.cov[:dx, dx:]
        cov_yx, cov_yy = f.cov[dx:, :dx], f.cov[dx:, dx:]
        if dx and np.linalg.matrix_rank(cov_xx, tol=self.tolerance) < dx:
            logger.warning("conditioning block of %r is singular; using the pseudo-inverse", f)
        gain = cov_yx @ np.linalg.pinv(cov_xx, rcond=self.tolerance) if dx else np.zeros((cov_yy.shape[0], 0))
        m_x, m_y = f.M[:dx], f.M[dx:]
        marginal = self.make(f.dom, xs, m_x, cov_xx, f.mean[:dx])
        cov = cov_yy - gain @ cov_xy
        cond = self.make(
            f.dom + xs,
            ys,
            np.hstack([m_y - gain @ m_x, gain]),
            (cov + cov.T) / 2,
            f.mean[dx:] - gain @ f.mean[:dx],
        )
        if not self.equal(self.reassemble(marginal, cond), f):
            raise SingularBlock(f"conditional of {f!r} does not reassemble within {self.tolerance}")
        return marginal, cond

    def conditionals_unique(self, f):
        return not f.cod_dim or bool(np.linalg.matrix_rank(f.cov, tol=self.tolerance) == f.cod_dim)

    def drop_inputs(self, f, keep):
        keep = tuple(keep)
        starts = self.offsets(f.dom)
        kept_columns = [c for i in keep for c in range(starts[i], starts[i] + self.dim(f.dom[i]))]
        dropped = [c for c in range(f.dom_dim) if c not in set(kept_columns)]
        if dropped and not np.allclose(f.M[:, dropped], 0.0, atol=self.tolerance):
            return None
        return self.make(tuple(f.dom[i] for i in keep), f.cod, f.M[:, kept_columns], f.cov, f.mean)


def cross_covariance(category, state, given, left, right):
    """
    Conditional cross-covariance of ``left`` and ``right`` given ``given``
    in an empty-domain Gaussian ``state`` over canonical lists.
    """
    order = set_to_list(given) + set_to_list(left) + set_to_list(right)
    arranged = category.compose(state, category.wiring(state.cod, order))
    _, cond = category.conditional(arranged, len(set_to_list(given)))
    dl = category.width(set_to_list(left))
    return cond.cov[:dl, dl:]


def gauss_state(category, names, cov, mean=None):
    """The empty-domain kernel over ``names`` with covariance ``cov`` in canonical order."""
    from .kernels import Kernel

    names = frozenset(names)
    core = category.state(set_to_list(names), cov, mean)
    return Kernel(frozenset(), names, core, category)
