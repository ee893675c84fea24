"""
Finite stochastic maps with exact rational weights.

This is the Kleisli category of the finite distribution monad: a morphism
``[x1..xm] → [y1..yn]`` sends each tuple of input values to a distribution
over tuples of output values. Memories (name → value maps) give the
variable-level view used by kernels and kernel files.
"""
import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

from .exceptions import AssignmentError, InvalidDistribution, NotASubset, ReassemblyFailed
from .kernels import Kernel
from .markov import Assignment, CapabilityFlags, MarkovCategory, Morphism
from .varspace import set_to_list, var_key

logger = logging.getLogger(__name__)


class Memory(Mapping):
    """
    An immutable assignment of values to variables.

    Memories hash and compare by their bindings, so they can key
    distributions and tables.
    """
    __slots__ = ('_map', '_key')

    def __init__(self, bindings=()):
        mapping = dict(bindings)
        self._map = mapping
        self._key = tuple(sorted(mapping.items(), key=lambda item: var_key(item[0])))

    def __getitem__(self, name):
        return self._map[name]

    def __iter__(self):
        return (name for name, _ in self._key)

    def __len__(self):
        return len(self._key)

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        if isinstance(other, Memory):
            return self._key == other._key
        return Mapping.__eq__(self, other)

    def __repr__(self):
        return '{' + ', '.join(f"{name}:{value}" for name, value in self._key) + '}'

    @property
    def variables(self):
        return frozenset(self._map)

    def restrict(self, names):
        """The memory restricted to ``names`` (which must be bound)."""
        names = frozenset(names)
        if not names <= self.variables:
            raise NotASubset(f"{sorted(names - self.variables)} not bound in {self!r}")
        return Memory((name, self._map[name]) for name in names)

    def agrees(self, other):
        return all(self._map[name] == other[name] for name in self.variables & other.variables)

    def merge(self, other):
        """Union of two memories that agree on shared variables."""
        return Memory({**self._map, **dict(other)})

    def as_tuple(self, names):
        return tuple(self._map[name] for name in names)

    @classmethod
    def from_tuple(cls, names, values):
        return cls(zip(names, values))


class Dist:
    """
    A finitely supported probability distribution with Fraction weights.

    Zero weights are never stored, so the stored keys are the support.
    """
    __slots__ = ('_weights',)

    def __init__(self, weights, check=True):
        if isinstance(weights, Mapping):
            weights = weights.items()
        accumulated = {}
        for outcome, weight in weights:
            weight = Fraction(weight)
            if weight < 0:
                raise InvalidDistribution(f"negative weight {weight} on {outcome!r}")
            if weight:
                accumulated[outcome] = accumulated.get(outcome, 0) + weight
        if check and sum(accumulated.values()) != 1:
            raise InvalidDistribution(f"weights sum to {sum(accumulated.values())}, not 1")
        self._weights = accumulated

    def __getitem__(self, outcome):
        return self._weights.get(outcome, Fraction(0))

    def __iter__(self):
        return iter(self._weights)

    def __len__(self):
        return len(self._weights)

    def __eq__(self, other):
        return isinstance(other, Dist) and self._weights == other._weights

    def __hash__(self):
        return hash(frozenset(self._weights.items()))

    def __repr__(self):
        return ' + '.join(f"{w}|{o!r}⟩" for o, w in self.items())

    def items(self):
        return self._weights.items()

    @property
    def support(self):
        return frozenset(self._weights)

    def bind(self, k):
        """Kleisli extension: Σ_m d(m)·k(m)."""
        return Dist(
            ((n, w * v) for m, w in self.items() for n, v in k(m).items()),
            check=False,
        )

    def map(self, fn):
        """Pushforward along ``fn``."""
        return Dist(((fn(o), w) for o, w in self.items()), check=False)

    def product(self, other, combine=lambda a, b: a + b):
        return Dist(
            ((combine(a, b), w * v) for a, w in self.items() for b, v in other.items()),
            check=False,
        )


def dirac(outcome):
    """Point mass on ``outcome``."""
    return Dist({outcome: 1}, check=False)


def kleisli_bind(d, k):
    return d.bind(k)


def marginalize(d, u):
    """Project a distribution over memories onto the variables ``u``."""
    u = frozenset(u)
    return d.map(lambda m: m.restrict(u))


def uniform(outcomes):
    outcomes = list(outcomes)
    return Dist((o, Fraction(1, len(outcomes))) for o in outcomes)


def random_dist(outcomes, rng, sparsity=0.3):
    """
    A random distribution on ``outcomes``; each outcome is dropped from the
    support with probability ``sparsity`` (at least one survives).
    """
    outcomes = list(outcomes)
    weights = [0 if rng.random() < sparsity else rng.randint(1, 4) for _ in outcomes]
    if not any(weights):
        weights[rng.randrange(len(outcomes))] = 1
    total = sum(weights)
    return Dist(((o, Fraction(w, total)) for o, w in zip(outcomes, weights)), check=False)


@dataclass(frozen=True, eq=False)
class StochTable(Morphism):
    """
    A stochastic map as a dense table.

    Attributes:
        rows: Maps each tuple of input values to a Dist over output tuples.
    """
    rows: dict = field(default_factory=dict)

    def __repr__(self):
        return f"StochTable({list(self.dom)}→{list(self.cod)}, {len(self.rows)} rows)"


class FinStoch(MarkovCategory):
    """
    Exact finite stochastic maps.

    ``theta`` assigns each variable its value alphabet (a tuple of tokens);
    the first token of an alphabet is its least value.
    """
    kind = 'finstoch'
    flags = CapabilityFlags(has_conditionals=True, del_cancellative=True, equality_exact=True)

    @classmethod
    def uniform(cls, values=('0', '1'), **alphabets):
        return cls(Assignment(default=tuple(values), overrides={k: tuple(v) for k, v in alphabets.items()}))

    def alphabet(self, name):
        values = tuple(self.theta(name))
        if not values or len(set(values)) != len(values):
            raise AssignmentError(f"alphabet of {name!r} must be nonempty and duplicate-free")
        return values

    def tuples(self, o):
        """All value tuples over the list ``o``."""
        return itertools.product(*(self.alphabet(name) for name in o))

    def least(self, o):
        return tuple(self.alphabet(name)[0] for name in o)

    def table(self, dom, cod, row):
        """Build a table from a function on input tuples."""
        dom, cod = tuple(dom), tuple(cod)
        return StochTable(dom, cod, {a: row(a) for a in self.tuples(dom)})

    def validate(self, f):
        """Check totality, alphabets and normalization of ``f``."""
        expected = set(self.tuples(f.dom))
        if set(f.rows) != expected:
            raise AssignmentError(f"table rows do not cover the inputs of {list(f.dom)}")
        for a, d in f.rows.items():
            if sum(w for _, w in d.items()) != 1:
                raise InvalidDistribution(f"row {a} does not sum to 1")
            for outcome in d:
                if len(outcome) != len(f.cod) or any(
                    v not in self.alphabet(name) for name, v in zip(f.cod, outcome)
                ):
                    raise AssignmentError(f"outcome {outcome} outside the alphabets of {list(f.cod)}")
        return f

    # Markov structure

    def unit(self):
        return StochTable((), (), {(): dirac(())})

    def identity_on_var(self, name):
        return self.table((name,), (name,), dirac)

    def identity(self, o):
        return self.table(o, o, dirac)

    def compose(self, f, g):
        self.check_composable(f, g)
        return StochTable(f.dom, g.cod, {a: d.bind(g.rows.__getitem__) for a, d in f.rows.items()})

    def tensor(self, f, g):
        return StochTable(
            f.dom + g.dom,
            f.cod + g.cod,
            {a + b: d.product(e) for a, d in f.rows.items() for b, e in g.rows.items()},
        )

    def copy(self, o):
        o = tuple(o)
        return self.table(o, o + o, lambda a: dirac(a + a))

    def delete(self, o):
        return self.table(o, (), lambda a: dirac(()))

    def swap(self, a, b):
        a, b = tuple(a), tuple(b)
        return self.table(a + b, b + a, lambda v: dirac(v[len(a):] + v[:len(a)]))

    def select(self, src, indices):
        src, indices = tuple(src), tuple(indices)
        return self.table(src, tuple(src[i] for i in indices), lambda v: dirac(tuple(v[i] for i in indices)))

    def equal(self, f, g):
        return tuple(f.dom) == tuple(g.dom) and tuple(f.cod) == tuple(g.cod) and f.rows == g.rows

    def random_morphism(self, dom, cod, rng):
        outcomes = list(self.tuples(cod))
        return self.table(dom, cod, lambda a: random_dist(outcomes, rng))

    # Capabilities

    def conditional(self, f, k, fallback=None):
        """
        Marginal on the first ``k`` outputs and the conditional of the rest.

        Where the conditioning marginal has no mass the conditional row is
        read from ``fallback``, or is the Dirac on the least output tuple.
        """
        xs, ys = f.cod[:k], f.cod[k:]
        marginal = StochTable(f.dom, xs, {a: d.map(lambda o: o[:k]) for a, d in f.rows.items()})
        least = dirac(self.least(ys))
        rows = {}
        for a, d in f.rows.items():
            mass = marginal.rows[a]
            for x in self.tuples(xs):
                if mass[x] == 0:
                    rows[a + x] = fallback.rows[a + x] if fallback is not None else least
                    continue
                rows[a + x] = Dist(
                    ((o[k:], w / mass[x]) for o, w in d.items() if o[:k] == x),
                    check=False,
                )
        cond = StochTable(f.dom + xs, ys, rows)
        if not self.equal(self.reassemble(marginal, cond), f):
            raise ReassemblyFailed(f"conditional of {f!r} does not reassemble")
        return marginal, cond

    def conditionals_unique(self, f):
        """Every row of ``f`` charges every output tuple."""
        total = len(list(self.tuples(f.cod)))
        return all(len(d) == total for d in f.rows.values())

    def drop_inputs(self, f, keep):
        keep = tuple(keep)
        rows = {}
        for a, d in f.rows.items():
            key = tuple(a[i] for i in keep)
            if rows.setdefault(key, d) != d:
                logger.debug("row %s differs from its completion partner", a)
                return None
        return StochTable(tuple(f.dom[i] for i in keep), f.cod, rows)

    # Memory-level view

    def memories(self, names):
        names = set_to_list(names)
        return [Memory.from_tuple(names, values) for values in self.tuples(names)]

    def row_as_memories(self, f, a):
        """Row ``a`` of ``f`` as a Dist over memories of ``f.cod``."""
        return f.rows[a].map(lambda o: Memory.from_tuple(f.cod, o))


def kernel_to_memory_map(k):
    """A FinStoch kernel as the map from input memories to distributions over output memories."""
    xs, fresh = k.dom_list, set_to_list(k.fresh)
    return {
        Memory.from_tuple(xs, a): d.map(lambda o, a=a: Memory.from_tuple(xs + fresh, a + o))
        for a, d in k.core.rows.items()
    }


def kernel_from_memory_map(category, dom, cod, mapping):
    """
    Inverse of :func:`kernel_to_memory_map`.

    Raises:
        AssignmentError: an input memory is missing or an output memory
            does not extend its input.
    """
    dom, cod = frozenset(dom), frozenset(cod)
    xs, fresh = set_to_list(dom), set_to_list(cod - dom)
    rows = {}
    for a in category.tuples(xs):
        given = Memory.from_tuple(xs, a)
        if given not in mapping:
            raise AssignmentError(f"no row for input {given!r}")

        def project(m, given=given):
            if m.variables != cod or m.restrict(dom) != given:
                raise AssignmentError(f"output {m!r} does not extend input {given!r}")
            return m.as_tuple(fresh)

        rows[a] = mapping[given].map(project)
    return Kernel(dom, cod, category.validate(StochTable(xs, fresh, rows)), category)
