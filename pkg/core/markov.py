"""
The contract every Markov-category instance implements.

Objects are variable lists; a morphism carries its ``dom`` and ``cod``
lists alongside an instance payload. Instances implement the primitive
structure (composition, tensor, copy, delete, swap, equality); the base
class derives identities on lists, positional selections and name-based
wirings from it, so every rewiring is literally a composite of swaps.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import reduce

from .exceptions import AssignmentError, EndpointMismatch, Unsupported
from .varspace import check_name


@dataclass(frozen=True)
class CapabilityFlags:
    """
    What an instance can do beyond the bare Markov structure.

    Attributes:
        has_conditionals: Every f : A → X⊗Y splits into marginal and conditional.
        del_cancellative: f ⊗ del_D = g ⊗ del_D implies f = g.
        equality_exact: Equality is exact rather than tolerance based.
        tolerance: Entrywise tolerance of equality (0 when exact).
    """
    has_conditionals: bool
    del_cancellative: bool
    equality_exact: bool
    tolerance: float = 0.0


@dataclass(frozen=True)
class Assignment:
    """
    The assignment θ of an instance object to each variable.

    ``overrides`` wins over ``default``; a uniform assignment only sets
    ``default``.
    """
    default: object = None
    overrides: dict = field(default_factory=dict, hash=False)

    def __call__(self, name):
        check_name(name)
        if name in self.overrides:
            return self.overrides[name]
        if self.default is None:
            raise AssignmentError(f"no object assigned to variable {name!r}")
        return self.default

    def mentions(self):
        return frozenset(self.overrides)


@dataclass(frozen=True, eq=False)
class Morphism:
    """
    Base morphism handle: endpoints only.

    Instance payload classes add their own fields and are compared through
    :meth:`MarkovCategory.equal`, never with ``==``.
    """
    dom: tuple
    cod: tuple


class MarkovCategory(ABC):
    """
    Abstract Markov category over variable lists.

    Attributes:
        kind: Short instance tag (``finstoch``, ``finrel``, ``gauss``, ``synvar``).
        flags: CapabilityFlags of the instance.
        theta: The Assignment of objects to variables.
    """
    kind = None
    flags = None

    def __init__(self, theta):
        self.theta = theta

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind}>"

    # Primitive structure

    @abstractmethod
    def compose(self, f, g):
        """``g ∘ f``: first ``f`` then ``g``."""

    @abstractmethod
    def tensor(self, f, g):
        """Parallel product; endpoints concatenate."""

    @abstractmethod
    def copy(self, o):
        """``o → o ++ o``."""

    @abstractmethod
    def delete(self, o):
        """``o → []``."""

    @abstractmethod
    def swap(self, a, b):
        """``a ++ b → b ++ a``."""

    @abstractmethod
    def unit(self):
        """Identity on the empty list."""

    @abstractmethod
    def equal(self, f, g):
        """Payload equality with matching endpoints."""

    @abstractmethod
    def random_morphism(self, dom, cod, rng):
        """A random morphism ``dom → cod`` drawn with ``rng``."""

    @abstractmethod
    def identity_on_var(self, name):
        """Identity on the single wire ``[name]``."""

    # Optional capabilities

    def conditional(self, f, k, fallback=None):
        """
        Split ``f : A → X ++ Y`` (``len(X) == k``) into ``(f_X, f_|X)``
        with ``f_X : A → X`` and ``f_|X : A ++ X → Y``.

        Where the conditional is not determined by ``f``, instances read
        the row from ``fallback : A ++ X → Y`` when one is given.
        """
        raise Unsupported(f"{self.kind} has no conditionals")

    def conditionals_unique(self, f):
        """True when every conditional of ``f`` given its outputs is determined."""
        return False

    def drop_inputs(self, f, keep):
        """
        Return ``f★`` on the inputs at positions ``keep`` when ``f`` ignores
        every other input, else None.
        """
        raise Unsupported(f"{self.kind} cannot test input independence")

    # Derived structure

    def check_composable(self, f, g):
        if tuple(f.cod) != tuple(g.dom):
            raise EndpointMismatch(
                f"cannot compose {list(f.dom)}→{list(f.cod)} with {list(g.dom)}→{list(g.cod)}"
            )

    def identity(self, o):
        o = tuple(o)
        return reduce(self.tensor, (self.identity_on_var(name) for name in o), self.unit())

    def compose_all(self, *morphisms):
        return reduce(self.compose, morphisms)

    def tensor_all(self, *morphisms):
        return reduce(self.tensor, morphisms, self.unit())

    def adjacent_swap(self, items, i):
        """Swap positions ``i`` and ``i + 1`` of ``items``, identities elsewhere."""
        items = tuple(items)
        return self.tensor_all(
            self.identity(items[:i]),
            self.swap(items[i:i + 1], items[i + 1:i + 2]),
            self.identity(items[i + 2:]),
        )

    def permute(self, items, order):
        """
        Morphism ``items → tuple(items[j] for j in order)`` built from
        adjacent swaps (bubble sort on target positions).
        """
        items = tuple(items)
        target = [0] * len(order)
        for position, j in enumerate(order):
            target[j] = position
        current = list(items)
        result = self.identity(items)
        for sweep in range(len(target)):
            for i in range(len(target) - 1 - sweep):
                if target[i] > target[i + 1]:
                    result = self.compose(result, self.adjacent_swap(current, i))
                    target[i], target[i + 1] = target[i + 1], target[i]
                    current[i], current[i + 1] = current[i + 1], current[i]
        return result

    def fan(self, name, count):
        """``[name] → [name] * count`` from copy and delete."""
        if count == 0:
            return self.delete((name,))
        result = self.identity((name,))
        for made in range(1, count):
            result = self.compose(
                result,
                self.tensor(self.copy((name,)), self.identity((name,) * (made - 1))),
            )
        return result

    def select(self, src, indices):
        """
        Positional wiring ``src → tuple(src[i] for i in indices)``.

        Each source wire is fanned out to the number of times it is selected
        and the fanned list is then permuted into place.
        """
        src, indices = tuple(src), tuple(indices)
        counts = [indices.count(i) for i in range(len(src))]
        fanned = self.tensor_all(*(self.fan(name, counts[i]) for i, name in enumerate(src)))
        # position of each fanned wire in the target
        slots = {i: [] for i in range(len(src))}
        for position, i in enumerate(indices):
            slots[i].append(position)
        order = [position for i in range(len(src)) for position in slots[i]]
        # permute expects, per target position, the fanned index it reads
        reads = [0] * len(order)
        for fanned_index, position in enumerate(order):
            reads[position] = fanned_index
        spread = tuple(name for i, name in enumerate(src) for _ in range(counts[i]))
        return self.compose(fanned, self.permute(spread, reads))

    def wiring(self, src, dst):
        """Name-based wiring; ``src`` must be duplicate-free."""
        src, dst = tuple(src), tuple(dst)
        index = {name: i for i, name in enumerate(src)}
        missing = [name for name in dst if name not in index]
        if missing:
            raise EndpointMismatch(f"wiring target mentions {missing} outside {list(src)}")
        return self.select(src, [index[name] for name in dst])

    def reassemble(self, marginal, cond):
        """
        Rebuild ``A → X ++ Y`` from ``marginal : A → X`` and
        ``cond : A ++ X → Y``.
        """
        a, x = len(marginal.dom), len(marginal.cod)
        both = tuple(marginal.dom) + tuple(marginal.cod)
        return self.compose_all(
            self.select(marginal.dom, tuple(range(a)) * 2),
            self.tensor(self.identity(marginal.dom), marginal),
            self.select(both, tuple(range(a, a + x)) + tuple(range(a + x))),
            self.tensor(self.identity(marginal.cod), cond),
        )
