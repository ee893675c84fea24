"""
Input-preserving kernels over any Markov-category instance.

A kernel ``X → Y`` (``X ⊆ Y``) is stored as its nontrivial part, a morphism
from the canonical list of ``X`` to the canonical list of ``Y ∖ X``. The
full morphism copies the input through, so input preservation holds by
construction.
"""
import logging
from dataclasses import dataclass

from .exceptions import EndpointMismatch, ParUndefined, Refuted, SeqUndefined, Unsupported
from .varspace import positions, set_to_list

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Kernel:
    """
    An input-preserving kernel.

    Attributes:
        dom: Input variables X.
        cod: Output variables Y, a superset of X.
        core: Morphism ``set_to_list(X) → set_to_list(Y - X)``.
        category: The instance the core lives in.
    """
    dom: frozenset
    cod: frozenset
    core: object
    category: object

    def __post_init__(self):
        object.__setattr__(self, 'dom', frozenset(self.dom))
        object.__setattr__(self, 'cod', frozenset(self.cod))
        if not self.dom <= self.cod:
            raise EndpointMismatch(f"kernel domain {sorted(self.dom)} is not inside {sorted(self.cod)}")
        if tuple(self.core.dom) != self.dom_list or tuple(self.core.cod) != set_to_list(self.fresh):
            raise EndpointMismatch(
                f"core {list(self.core.dom)}→{list(self.core.cod)} does not match "
                f"kernel {list(self.dom_list)}→{list(self.cod_list)}"
            )

    @property
    def fresh(self):
        return self.cod - self.dom

    @property
    def dom_list(self):
        return set_to_list(self.dom)

    @property
    def cod_list(self):
        return set_to_list(self.cod)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (
            self.dom == other.dom
            and self.cod == other.cod
            and self.category.equal(self.core, other.core)
        )

    __hash__ = None

    def __repr__(self):
        return f"Kernel({list(self.dom_list)} → {list(self.cod_list)})"


@dataclass(frozen=True)
class SubkernelWitness:
    """
    Evidence that ``f ⊑ g``: ``g = (f ⊕ id_U) ⊙ h``.

    Attributes:
        extension_vars: The set U.
        continuation: The kernel h.
    """
    extension_vars: frozenset
    continuation: Kernel

    def replay(self, f):
        """Recompute ``(f ⊕ id_U) ⊙ h``."""
        category = self.continuation.category
        return seq(par(f, identity_kernel(category, self.extension_vars)), self.continuation)


def identity_kernel(category, variables):
    variables = frozenset(variables)
    return Kernel(variables, variables, category.delete(set_to_list(variables)), category)


def from_full(category, morphism):
    """
    Kernel from a full morphism over canonical lists whose outputs include
    its inputs. The caller is responsible for input preservation.
    """
    dom, cod = frozenset(morphism.dom), frozenset(morphism.cod)
    fresh = set_to_list(cod - dom)
    return Kernel(dom, cod, category.compose(morphism, category.wiring(morphism.cod, fresh)), category)


def embed(k):
    """The full morphism ``copy_X ; (id_X ⊗ core) ; rewire``."""
    category = k.category
    xs = k.dom_list
    return category.compose_all(
        category.select(xs, tuple(range(len(xs))) * 2),
        category.tensor(category.identity(xs), k.core),
        category.wiring(xs + set_to_list(k.fresh), k.cod_list),
    )


def seq(f, g):
    """``f ⊙ g``: run f, then g on f's outputs."""
    if f.cod != g.dom:
        raise SeqUndefined(f"codomain {sorted(f.cod)} differs from domain {sorted(g.dom)}")
    category = f.category
    full = category.compose(embed(f), embed(g))
    core = category.compose(full, category.wiring(g.cod_list, set_to_list(g.cod - f.dom)))
    return Kernel(f.dom, g.cod, core, category)


def par_defined(f, g):
    return (f.dom & g.dom) == (f.cod & g.cod)


def par(f, g):
    """``f ⊕ g``: shared inputs are copied, fresh outputs are disjoint."""
    if not par_defined(f, g):
        raise ParUndefined(
            f"inputs overlap on {sorted(f.dom & g.dom)} but outputs on {sorted(f.cod & g.cod)}"
        )
    category = f.category
    dom = f.dom | g.dom
    fresh_f, fresh_g = set_to_list(f.fresh), set_to_list(g.fresh)
    core = category.compose_all(
        category.wiring(set_to_list(dom), f.dom_list + g.dom_list),
        category.tensor(f.core, g.core),
        category.wiring(fresh_f + fresh_g, set_to_list(f.fresh | g.fresh)),
    )
    return Kernel(dom, f.cod | g.cod, core, category)


def restrict(k, inputs, outputs):
    """
    The kernel ``inputs → outputs`` obtained by marginalizing ``k``.

    Returns None when the marginal on ``outputs`` depends on inputs outside
    ``inputs``.
    """
    inputs, outputs = frozenset(inputs), frozenset(outputs)
    if not (inputs <= k.dom and inputs <= outputs <= k.cod) or (outputs - inputs) & k.dom:
        raise EndpointMismatch(
            f"cannot restrict {k!r} to {sorted(inputs)} → {sorted(outputs)}"
        )
    category = k.category
    marginal = category.compose(k.core, category.wiring(set_to_list(k.fresh), set_to_list(outputs - inputs)))
    core = category.drop_inputs(marginal, positions(k.dom_list, set_to_list(inputs)))
    if core is None:
        return None
    return Kernel(inputs, outputs, core, category)


def marginal_kernel(k, outputs):
    """The kernel ``dom(k) → outputs`` keeping every input."""
    return restrict(k, k.dom, outputs)


def conditional_kernel(k, given, fallback=None):
    """
    The continuation ``given → cod(k)`` with ``marginal_kernel(k, given) ⊙
    conditional_kernel(k, given) = k`` (``dom(k) ⊆ given ⊆ cod(k)``).

    ``fallback`` (a kernel of the same type) supplies the rows the marginal
    does not determine.
    """
    category = k.category
    given = frozenset(given)
    if not k.dom <= given <= k.cod:
        raise EndpointMismatch(f"cannot condition {k!r} on {sorted(given)}")
    head, tail = set_to_list(given - k.dom), set_to_list(k.cod - given)
    arranged = category.compose(k.core, category.wiring(set_to_list(k.fresh), head + tail))
    spare = None
    if fallback is not None:
        if fallback.dom != given or fallback.cod != k.cod:
            raise EndpointMismatch(f"fallback {fallback!r} does not have the type of the conditional")
        spare = category.compose(category.wiring(k.dom_list + head, set_to_list(given)), fallback.core)
    _, cond = category.conditional(arranged, len(head), fallback=spare)
    core = category.compose(category.wiring(set_to_list(given), k.dom_list + head), cond)
    return Kernel(given, k.cod, core, category)


def strip_inputs(k, names):
    """``restrict`` dropping the inputs ``names`` on both sides, or None."""
    names = frozenset(names)
    return restrict(k, k.dom - names, k.cod - names)


def require_conditionals(category):
    flags = category.flags
    if not (flags.has_conditionals and flags.del_cancellative):
        raise Unsupported(
            f"{category.kind} lacks conditionals or del-cancellativity; "
            "subkernels cannot be decided there"
        )


def subkernel(f, g):
    """
    Decide ``f ⊑ g``.

    The extension set is ``dom(g) - dom(f)``. The candidate must equal the
    marginal of g on ``cod(f)``, independently of the extension inputs, and
    the continuation is g's conditional given ``cod(f) ∪ dom(g)``.

    Returns:
        SubkernelWitness, or Refuted naming the failed check.
    """
    require_conditionals(g.category)
    if not (f.dom <= g.dom and f.cod <= g.cod) or (f.fresh & g.dom):
        return Refuted('type-mismatch', {'f': repr(f), 'g': repr(g)})
    extension = g.dom - f.dom
    candidate = strip_inputs(marginal_kernel(g, f.cod | g.dom), extension)
    if candidate is None:
        logger.debug("%r ⋢ %r: marginal depends on %s", f, g, sorted(extension))
        return Refuted('completion-dependence', {'extension': sorted(extension)})
    if candidate != f:
        logger.debug("%r ⋢ %r: marginal differs", f, g)
        return Refuted('marginal-mismatch')
    witness = SubkernelWitness(extension, conditional_kernel(g, f.cod | g.dom))
    if witness.replay(f) != g:
        logger.debug("%r ⋢ %r: replay differs", f, g)
        return Refuted('replay-failure')
    return witness


def random_kernel(category, dom, cod, rng):
    """A kernel ``dom → cod`` with a random core."""
    dom, cod = frozenset(dom), frozenset(cod)
    return Kernel(dom, cod, category.random_morphism(set_to_list(dom), set_to_list(cod - dom), rng), category)
