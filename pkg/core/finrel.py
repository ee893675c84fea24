"""
Finite relations as nondeterministic maps.

Morphisms are Kleisli maps of the nonempty powerset monad: each input tuple
relates to a nonempty set of output tuples. Empty-domain kernels double as
flat relations over their output variables, which is where join
dependencies live.
"""
import itertools
from dataclasses import dataclass, field

from .exceptions import AssignmentError, EmptyImage, OverlapViolation
from .finstoch import Memory
from .markov import Assignment, CapabilityFlags, MarkovCategory, Morphism
from .varspace import set_to_list


def rel_bind(s, k):
    """Union of the images ``k(m)`` over ``m ∈ s``; every image must be nonempty."""
    result = set()
    for m in s:
        image = k(m)
        if not image:
            raise EmptyImage(f"empty image for {m!r}")
        result.update(image)
    return frozenset(result)


@dataclass(frozen=True, eq=False)
class RelTable(Morphism):
    """
    A relation as a dense table.

    Attributes:
        rows: Maps each input tuple to a nonempty frozenset of output tuples.
    """
    rows: dict = field(default_factory=dict)

    def __repr__(self):
        return f"RelTable({list(self.dom)}→{list(self.cod)}, {len(self.rows)} rows)"


class FinRel(MarkovCategory):
    """
    Exact finite relations.

    ``theta`` assigns each variable its value alphabet. Relations have no
    conditionals here, so subkernel decisions refuse on this instance.
    """
    kind = 'finrel'
    flags = CapabilityFlags(has_conditionals=False, del_cancellative=False, equality_exact=True)

    @classmethod
    def uniform(cls, values=('0', '1'), **alphabets):
        return cls(Assignment(default=tuple(values), overrides={k: tuple(v) for k, v in alphabets.items()}))

    def alphabet(self, name):
        values = tuple(self.theta(name))
        if not values or len(set(values)) != len(values):
            raise AssignmentError(f"alphabet of {name!r} must be nonempty and duplicate-free")
        return values

    def tuples(self, o):
        return itertools.product(*(self.alphabet(name) for name in o))

    def table(self, dom, cod, row):
        dom, cod = tuple(dom), tuple(cod)
        rows = {}
        for a in self.tuples(dom):
            image = frozenset(row(a))
            if not image:
                raise EmptyImage(f"row {a} of {list(dom)}→{list(cod)} is empty")
            rows[a] = image
        return RelTable(dom, cod, rows)

    def validate(self, f):
        if set(f.rows) != set(self.tuples(f.dom)):
            raise AssignmentError(f"relation rows do not cover the inputs of {list(f.dom)}")
        for a, image in f.rows.items():
            if not image:
                raise EmptyImage(f"row {a} is empty")
            for outcome in image:
                if len(outcome) != len(f.cod) or any(
                    v not in self.alphabet(name) for name, v in zip(f.cod, outcome)
                ):
                    raise AssignmentError(f"outcome {outcome} outside the alphabets of {list(f.cod)}")
        return f

    def unit(self):
        return RelTable((), (), {(): frozenset({()})})

    def identity_on_var(self, name):
        return self.table((name,), (name,), lambda a: {a})

    def identity(self, o):
        return self.table(o, o, lambda a: {a})

    def compose(self, f, g):
        self.check_composable(f, g)
        return RelTable(f.dom, g.cod, {a: rel_bind(s, g.rows.__getitem__) for a, s in f.rows.items()})

    def tensor(self, f, g):
        return RelTable(
            f.dom + g.dom,
            f.cod + g.cod,
            {
                a + b: frozenset(x + y for x in s for y in t)
                for a, s in f.rows.items()
                for b, t in g.rows.items()
            },
        )

    def copy(self, o):
        o = tuple(o)
        return self.table(o, o + o, lambda a: {a + a})

    def delete(self, o):
        return self.table(o, (), lambda a: {()})

    def swap(self, a, b):
        a, b = tuple(a), tuple(b)
        return self.table(a + b, b + a, lambda v: {v[len(a):] + v[:len(a)]})

    def select(self, src, indices):
        src, indices = tuple(src), tuple(indices)
        return self.table(src, tuple(src[i] for i in indices), lambda v: {tuple(v[i] for i in indices)})

    def equal(self, f, g):
        return tuple(f.dom) == tuple(g.dom) and tuple(f.cod) == tuple(g.cod) and f.rows == g.rows

    def random_morphism(self, dom, cod, rng):
        outcomes = list(self.tuples(cod))

        def row(a):
            chosen = {o for o in outcomes if rng.random() < 0.5}
            return chosen or {rng.choice(outcomes)}

        return self.table(dom, cod, row)

    def drop_inputs(self, f, keep):
        keep = tuple(keep)
        rows = {}
        for a, image in f.rows.items():
            if rows.setdefault(tuple(a[i] for i in keep), image) != image:
                return None
        return RelTable(tuple(f.dom[i] for i in keep), f.cod, rows)


def rel_parallel_row(row, f, g):
    """
    One row of ``f ⊕ g`` computed on memories.

    ``f`` and ``g`` are full (input-preserving) relations over canonical
    lists; ``row`` is a memory over the union of their inputs.

    Raises:
        OverlapViolation: the parallel composite is undefined.
        EmptyImage: no pair of outputs agrees (impossible for kernels).
    """
    x, u, y, v = (frozenset(names) for names in (f.dom, g.dom, f.cod, g.cod))
    if x & u != y & v:
        raise OverlapViolation(f"inputs share {sorted(x & u)} but outputs share {sorted(y & v)}")
    left = f.rows[row.as_tuple(f.dom)]
    right = g.rows[row.as_tuple(g.dom)]
    result = set()
    for a in left:
        ma = Memory.from_tuple(f.cod, a)
        for b in right:
            mb = Memory.from_tuple(g.cod, b)
            if ma.agrees(mb):
                result.add(ma.merge(mb))
    if not result:
        raise EmptyImage(f"no compatible outputs for {row!r}")
    return frozenset(result)


def to_flat(state):
    """The flat relation (set of memories) of an empty-domain relation."""
    if state.dom:
        raise AssignmentError("only empty-domain relations have a flat view")
    return frozenset(Memory.from_tuple(state.cod, o) for o in state.rows[()])


def from_flat(relation, variables):
    """An empty-domain RelTable over ``set_to_list(variables)``."""
    cod = set_to_list(variables)
    image = frozenset(m.as_tuple(cod) for m in relation)
    if not image:
        raise EmptyImage("flat relation is empty")
    return RelTable((), cod, {(): image})


def project(relation, names):
    return frozenset(m.restrict(names) for m in relation)


def join(left, right):
    """Natural join of two flat relations."""
    return frozenset(a.merge(b) for a in left for b in right if a.agrees(b))
