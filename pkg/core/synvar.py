"""
The free Markov category on variable names.

Terms are built from one generator per signature ``[u1..um] → [v1..vn]``
(both lists strictly increasing) together with identities, copies,
deletions and swaps. A term elaborates to a :class:`DiagGraph`: generator
nodes with ordered ports, where every wire has one source and any number
of sinks. Copies and deletions dissolve into fan-out degrees, so the
comonoid laws hold by construction and normalization only has to drop
nodes whose outputs are never used.
"""
import logging
from dataclasses import dataclass, field

import networkx as nx
from networkx.algorithms import isomorphism

from .exceptions import DiagramTypeError, EndpointMismatch, ParseError
from .lexer import TokenStream
from .markov import CapabilityFlags, MarkovCategory, Morphism
from .varspace import check_name, is_canonical, set_to_list

logger = logging.getLogger(__name__)

INPUT = -1
KEYWORDS = ('id', 'copy', 'del', 'swap', 'wire', 'gen')


def _wires(names):
    names = tuple(names)
    for name in names:
        check_name(name)
    return names


# Terms


class DiagTerm:
    """Base class of diagram terms; subclasses expose ``dom`` and ``cod``."""
    dom = ()
    cod = ()


@dataclass(frozen=True)
class Gen(DiagTerm):
    """
    The generator of signature ``dom → cod``.

    ``label`` is a display name only; generators with the same signature
    are the same generator.
    """
    dom: tuple
    cod: tuple
    label: str = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'dom', _wires(self.dom))
        object.__setattr__(self, 'cod', _wires(self.cod))
        if not (is_canonical(self.dom) and is_canonical(self.cod)):
            raise DiagramTypeError(
                f"generator {list(self.dom)}→{list(self.cod)} needs strictly increasing variable lists", self
            )


@dataclass(frozen=True)
class Id(DiagTerm):
    wires: tuple

    def __post_init__(self):
        object.__setattr__(self, 'wires', _wires(self.wires))

    @property
    def dom(self):
        return self.wires

    @property
    def cod(self):
        return self.wires


@dataclass(frozen=True)
class Copy(DiagTerm):
    wires: tuple

    def __post_init__(self):
        object.__setattr__(self, 'wires', _wires(self.wires))

    @property
    def dom(self):
        return self.wires

    @property
    def cod(self):
        return self.wires + self.wires


@dataclass(frozen=True)
class Del(DiagTerm):
    wires: tuple

    def __post_init__(self):
        object.__setattr__(self, 'wires', _wires(self.wires))

    @property
    def dom(self):
        return self.wires

    @property
    def cod(self):
        return ()


@dataclass(frozen=True)
class Swap(DiagTerm):
    left: tuple
    right: tuple

    def __post_init__(self):
        object.__setattr__(self, 'left', _wires(self.left))
        object.__setattr__(self, 'right', _wires(self.right))

    @property
    def dom(self):
        return self.left + self.right

    @property
    def cod(self):
        return self.right + self.left


@dataclass(frozen=True)
class Seq(DiagTerm):
    """``first`` followed by ``second``."""
    first: DiagTerm
    second: DiagTerm

    def __post_init__(self):
        if tuple(self.first.cod) != tuple(self.second.dom):
            raise DiagramTypeError(
                f"sequencing {list(self.first.cod)} into {list(self.second.dom)}", self
            )

    @property
    def dom(self):
        return self.first.dom

    @property
    def cod(self):
        return self.second.cod


@dataclass(frozen=True)
class Par(DiagTerm):
    left: DiagTerm
    right: DiagTerm

    @property
    def dom(self):
        return tuple(self.left.dom) + tuple(self.right.dom)

    @property
    def cod(self):
        return tuple(self.left.cod) + tuple(self.right.cod)


class Terms(MarkovCategory):
    """
    Diagram terms as a Markov category, so derived wirings come out as
    copy/delete/swap terms. Equality is equality of elaborations.
    """
    kind = 'terms'
    flags = CapabilityFlags(has_conditionals=False, del_cancellative=True, equality_exact=True)

    def __init__(self):
        super().__init__(None)

    def compose(self, f, g):
        self.check_composable(f, g)
        if isinstance(f, Id):
            return g
        if isinstance(g, Id):
            return f
        return Seq(f, g)

    def tensor(self, f, g):
        if isinstance(f, Id) and not f.wires:
            return g
        if isinstance(g, Id) and not g.wires:
            return f
        if isinstance(f, Id) and isinstance(g, Id):
            return Id(f.wires + g.wires)
        return Par(f, g)

    def copy(self, o):
        return Copy(o)

    def delete(self, o):
        return Del(o)

    def swap(self, a, b):
        return Swap(a, b)

    def unit(self):
        return Id(())

    def identity(self, o):
        return Id(o)

    def identity_on_var(self, name):
        return Id((name,))

    def equal(self, f, g):
        return diag_equal(elaborate(f), elaborate(g))

    def random_morphism(self, dom, cod, rng):
        gen = Gen(set_to_list(set(dom)), set_to_list(set(cod)))
        return self.compose_all(self.wiring(dom, gen.dom), gen, self.wiring(gen.cod, cod))


def wire_term(src, dst):
    """Copy/delete/swap term sending each ``dst`` position the like-named ``src`` wire."""
    src, dst = _wires(src), _wires(dst)
    if len(set(src)) != len(src):
        raise DiagramTypeError(f"wire source {list(src)} repeats a name")
    return Terms().wiring(src, dst)


# Graphs


@dataclass(frozen=True, eq=False)
class DiagGraph(Morphism):
    """
    A string diagram with fan-out wires.

    A source is ``(INPUT, i)`` for boundary input ``i`` or ``(n, j)`` for
    output port ``j`` of node ``n``. Nodes are listed in a topological
    order: node ``n`` only reads boundary inputs and earlier nodes.

    Attributes:
        nodes: Signature ``(dom, cod)`` of each generator occurrence.
        feeds: Per node, the source of each input port.
        outputs: Source of each boundary output.
    """
    nodes: tuple = ()
    feeds: tuple = ()
    outputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'dom', tuple(self.dom))
        object.__setattr__(self, 'cod', tuple(self.cod))
        object.__setattr__(self, 'nodes', tuple((tuple(d), tuple(c)) for d, c in self.nodes))
        object.__setattr__(self, 'feeds', tuple(tuple(tuple(s) for s in feed) for feed in self.feeds))
        object.__setattr__(self, 'outputs', tuple(tuple(s) for s in self.outputs))
        if len(self.feeds) != len(self.nodes):
            raise DiagramTypeError("every node needs one feed list")
        for n, ((dom, _), feed) in enumerate(zip(self.nodes, self.feeds)):
            if len(feed) != len(dom):
                raise DiagramTypeError(f"node {n} has {len(dom)} inputs but {len(feed)} feeds")
            for port, source in enumerate(feed):
                if source[0] >= n:
                    raise DiagramTypeError(f"node {n} reads node {source[0]}; nodes must be in topological order")
                if self.source_type(source) != dom[port]:
                    raise DiagramTypeError(f"node {n} port {port} expects {dom[port]!r}")
        if len(self.outputs) != len(self.cod):
            raise DiagramTypeError(f"{len(self.cod)} outputs but {len(self.outputs)} sources")
        for k, source in enumerate(self.outputs):
            if self.source_type(source) != self.cod[k]:
                raise DiagramTypeError(f"output {k} expects {self.cod[k]!r}")

    def source_type(self, source):
        n, j = source
        try:
            return self.dom[j] if n == INPUT else self.nodes[n][1][j]
        except IndexError:
            raise DiagramTypeError(f"source {source} does not exist") from None

    def sources(self):
        """Every wire source, boundary inputs first."""
        return [(INPUT, i) for i in range(len(self.dom))] + [
            (n, j) for n, (_, cod) in enumerate(self.nodes) for j in range(len(cod))
        ]

    def sinks(self, source):
        """Node ports ``('node', n, p)`` and outputs ``('out', k)`` reading ``source``."""
        found = [('node', n, p) for n, feed in enumerate(self.feeds) for p, s in enumerate(feed) if s == source]
        found += [('out', k) for k, s in enumerate(self.outputs) if s == source]
        return found

    def __repr__(self):
        return f"DiagGraph({list(self.dom)}→{list(self.cod)}, {len(self.nodes)} nodes)"


def _reindex(g, kept, dom=None, input_map=None):
    """Keep the nodes in ``kept`` (ascending), renumbering sources."""
    position = {n: i for i, n in enumerate(kept)}

    def move(source):
        n, j = source
        if n == INPUT:
            return (INPUT, input_map[j] if input_map else j)
        return (position[n], j)

    return DiagGraph(
        g.dom if dom is None else tuple(dom),
        g.cod,
        tuple(g.nodes[n] for n in kept),
        tuple(tuple(move(s) for s in g.feeds[n]) for n in kept),
        tuple(move(s) for s in g.outputs),
    )


def normalize(g):
    """
    Drop every node none of whose outputs reach the boundary.

    Fan-out is a set of readers per source, so there is no sink order left
    to canonicalize; the result is idempotent.
    """
    needed = {n for n, _ in g.outputs if n != INPUT}
    for n in reversed(range(len(g.nodes))):
        if n in needed:
            needed.update(m for m, _ in g.feeds[n] if m != INPUT)
    if len(needed) == len(g.nodes):
        return g
    logger.debug("normalize dropped %d of %d nodes", len(g.nodes) - len(needed), len(g.nodes))
    return _reindex(g, sorted(needed))


def canonical_form(g):
    """
    A hashable form of ``normalize(g)`` that is equal for two graphs
    exactly when they are isomorphic respecting generator signatures,
    port order and boundary order.

    Nodes are numbered in post-order of a depth-first walk from the
    outputs, reading feeds left to right.
    """
    g = normalize(g)
    number, entries = {}, []

    def ref(source):
        n, j = source
        if n == INPUT:
            return ('in', j)
        if n not in number:
            stack = [(n, False)]
            while stack:
                m, expanded = stack.pop()
                if m in number:
                    continue
                if expanded:
                    number[m] = len(entries)
                    entries.append((g.nodes[m], tuple(ref(s) for s in g.feeds[m])))
                    continue
                stack.append((m, True))
                for p, _ in reversed(g.feeds[m]):
                    if p != INPUT and p not in number:
                        stack.append((p, False))
        return (number[n], j)

    outputs = tuple(ref(s) for s in g.outputs)
    return (tuple(g.dom), tuple(g.cod), tuple(entries), outputs)


def diag_equal(a, b):
    """Equality in the free Markov category, modulo the fan-out quotient."""
    if tuple(a.dom) != tuple(b.dom) or tuple(a.cod) != tuple(b.cod):
        return False
    return canonical_form(a) == canonical_form(b)


def to_networkx(g):
    """
    ``g`` as a labelled ``networkx.DiGraph``.

    Boundary vertices are labelled by side and position, generator vertices
    by signature; each edge records the ``(out_port, in_port)`` pairs it
    carries.
    """
    graph = nx.DiGraph()
    for i, name in enumerate(g.dom):
        graph.add_node(('in', i), label=('in', i, name))
    for n, signature in enumerate(g.nodes):
        graph.add_node(('node', n), label=('node', signature))
    for k, name in enumerate(g.cod):
        graph.add_node(('out', k), label=('out', k, name))

    def vertex(source):
        return ('in', source[1]) if source[0] == INPUT else ('node', source[0])

    def connect(source, target, port):
        u = vertex(source)
        out_port = source[1] if source[0] != INPUT else 0
        if graph.has_edge(u, target):
            graph[u][target]['ports'] = graph[u][target]['ports'] | {(out_port, port)}
        else:
            graph.add_edge(u, target, ports=frozenset({(out_port, port)}))

    for n, feed in enumerate(g.feeds):
        for p, source in enumerate(feed):
            connect(source, ('node', n), p)
    for k, source in enumerate(g.outputs):
        connect(source, ('out', k), 0)
    return graph


def isomorphic(a, b):
    """Decide ``diag_equal`` by a labelled graph match instead of canonical forms."""
    if tuple(a.dom) != tuple(b.dom) or tuple(a.cod) != tuple(b.cod):
        return False
    matcher = isomorphism.DiGraphMatcher(
        to_networkx(normalize(a)),
        to_networkx(normalize(b)),
        node_match=lambda x, y: x['label'] == y['label'],
        edge_match=lambda x, y: x['ports'] == y['ports'],
    )
    return matcher.is_isomorphic()


# The category


class SynVar(MarkovCategory):
    """
    Diagram graphs with variable names as wire types.

    Args:
        generators: Display names for generator signatures, name → Gen.
    """
    kind = 'synvar'
    flags = CapabilityFlags(has_conditionals=False, del_cancellative=True, equality_exact=True)

    def __init__(self, generators=None):
        super().__init__(None)
        self.generators = dict(generators or {})
        self.labels = {(gen.dom, gen.cod): name for name, gen in self.generators.items()}

    def label(self, signature):
        return self.labels.get(signature)

    def generator(self, dom, cod):
        gen = Gen(dom, cod)
        return DiagGraph(
            gen.dom, gen.cod, ((gen.dom, gen.cod),),
            (tuple((INPUT, i) for i in range(len(gen.dom))),),
            tuple((0, j) for j in range(len(gen.cod))),
        )

    def unit(self):
        return DiagGraph((), ())

    def identity_on_var(self, name):
        return self.identity((name,))

    def identity(self, o):
        return self.select(o, range(len(tuple(o))))

    def select(self, src, indices):
        src = _wires(src)
        indices = tuple(indices)
        return DiagGraph(src, tuple(src[i] for i in indices), outputs=tuple((INPUT, i) for i in indices))

    def copy(self, o):
        o = tuple(o)
        return self.select(o, tuple(range(len(o))) * 2)

    def delete(self, o):
        return self.select(o, ())

    def swap(self, a, b):
        a, b = tuple(a), tuple(b)
        return self.select(a + b, tuple(range(len(a), len(a) + len(b))) + tuple(range(len(a))))

    def compose(self, f, g):
        self.check_composable(f, g)
        offset = len(f.nodes)

        def move(source):
            n, j = source
            return f.outputs[j] if n == INPUT else (n + offset, j)

        return normalize(DiagGraph(
            f.dom,
            g.cod,
            f.nodes + g.nodes,
            f.feeds + tuple(tuple(move(s) for s in feed) for feed in g.feeds),
            tuple(move(s) for s in g.outputs),
        ))

    def tensor(self, f, g):
        inputs, offset = len(f.dom), len(f.nodes)

        def move(source):
            n, j = source
            return (INPUT, j + inputs) if n == INPUT else (n + offset, j)

        return DiagGraph(
            tuple(f.dom) + tuple(g.dom),
            tuple(f.cod) + tuple(g.cod),
            f.nodes + g.nodes,
            f.feeds + tuple(tuple(move(s) for s in feed) for feed in g.feeds),
            f.outputs + tuple(move(s) for s in g.outputs),
        )

    def equal(self, f, g):
        return diag_equal(f, g)

    def random_morphism(self, dom, cod, rng):
        """
        One or two generator nodes reading a random subset of the inputs;
        the second node may also read the first node's outputs.
        """
        dom, cod = _wires(dom), _wires(cod)
        produced = set_to_list(set(cod))
        if not produced:
            return self.delete(dom)
        read = set_to_list({name for name in dom if rng.random() < 0.5})
        groups = [produced]
        if len(produced) > 1 and rng.random() < 0.5:
            cut = rng.randrange(1, len(produced))
            groups = [produced[:cut], produced[cut:]]
        nodes, feeds, maker = [], [], {}
        for group in groups:
            available = {name: (INPUT, dom.index(name)) for name in read}
            if nodes and rng.random() < 0.5:
                available.update({name: maker[name] for name in nodes[0][1]})
            inputs = set_to_list(available)
            nodes.append((inputs, tuple(group)))
            feeds.append(tuple(available[name] for name in inputs))
            maker.update({name: (len(nodes) - 1, j) for j, name in enumerate(group)})
        graph = DiagGraph(dom, cod, tuple(nodes), tuple(feeds), tuple(maker[name] for name in cod))
        return normalize(graph)

    def drop_inputs(self, f, keep):
        keep = tuple(keep)
        f = normalize(f)
        read = {j for feed in f.feeds for n, j in feed if n == INPUT}
        read |= {j for n, j in f.outputs if n == INPUT}
        if not read <= set(keep):
            return None
        input_map = {i: position for position, i in enumerate(keep)}
        return _reindex(f, range(len(f.nodes)), dom=tuple(f.dom[i] for i in keep), input_map=input_map)


def elaborate(term, category=None):
    """The diagram graph of ``term``."""
    category = category or SynVar()
    if isinstance(term, Gen):
        return category.generator(term.dom, term.cod)
    if isinstance(term, Id):
        return category.identity(term.wires)
    if isinstance(term, Copy):
        return category.copy(term.wires)
    if isinstance(term, Del):
        return category.delete(term.wires)
    if isinstance(term, Swap):
        return category.swap(term.left, term.right)
    if isinstance(term, Seq):
        if tuple(term.first.cod) != tuple(term.second.dom):
            raise DiagramTypeError(f"sequencing {list(term.first.cod)} into {list(term.second.dom)}", term)
        return category.compose(elaborate(term.first, category), elaborate(term.second, category))
    if isinstance(term, Par):
        return category.tensor(elaborate(term.left, category), elaborate(term.right, category))
    raise DiagramTypeError(f"not a diagram term: {term!r}", term)


def graph_to_term(g):
    """
    A term elaborating to ``g``: nodes are appended one at a time to a
    growing list of wires, then the outputs are selected.
    """
    terms = Terms()
    current = tuple(g.dom)
    term = Id(current)
    where = {(INPUT, i): i for i in range(len(current))}
    for n, (dom, cod) in enumerate(g.nodes):
        reads = [where[s] for s in g.feeds[n]]
        term = terms.compose_all(
            term,
            terms.select(current, tuple(range(len(current))) + tuple(reads)),
            terms.tensor(Id(current), Gen(dom, cod)),
        )
        where.update({(n, j): len(current) + j for j in range(len(cod))})
        current = current + tuple(cod)
    return terms.compose(term, terms.select(current, [where[s] for s in g.outputs]))


# Concrete syntax


def _bracketed(names):
    return '[' + ', '.join(names) + ']'


def render_term(term, labels=None):
    """DSL text for ``term``; generators with a label print by name."""
    labels = labels or {}

    def prim(t):
        if isinstance(t, Gen):
            name = labels.get((t.dom, t.cod)) or t.label
            return name if name else f"gen{_bracketed(t.dom)}{_bracketed(t.cod)}"
        if isinstance(t, Id):
            return f"id{_bracketed(t.wires)}"
        if isinstance(t, Copy):
            return f"copy{_bracketed(t.wires)}"
        if isinstance(t, Del):
            return f"del{_bracketed(t.wires)}"
        if isinstance(t, Swap):
            return f"swap{_bracketed(t.left)}{_bracketed(t.right)}"
        return f"({sequence(t)})"

    def tensor(t):
        if isinstance(t, Par):
            return f"{tensor(t.left)} * {prim(t.right)}"
        return prim(t)

    def sequence(t):
        if isinstance(t, Seq):
            return f"{sequence(t.first)} ; {tensor(t.second)}"
        return tensor(t)

    return sequence(term)


class TermParser:
    """
    Recursive-descent parser for diagram terms.

    Args:
        generators: Named generators the text may refer to, name → Gen.
    """

    def __init__(self, text, generators=None):
        self.stream = TokenStream(text)
        self.generators = generators or {}

    def parse(self):
        term = self.sequence()
        self.stream.finish()
        return term

    def sequence(self):
        term = self.tensor()
        while self.stream.at(';'):
            token = self.stream.advance()
            right = self.tensor()
            if tuple(term.cod) != tuple(right.dom):
                raise ParseError(
                    f"cannot sequence {list(term.cod)} into {list(right.dom)}", token.line, token.column
                )
            term = Seq(term, right)
        return term

    def tensor(self):
        term = self.prim()
        while self.stream.at('*'):
            self.stream.advance()
            term = Par(term, self.prim())
        return term

    def prim(self):
        stream = self.stream
        token = stream.current
        if stream.at('('):
            stream.advance()
            term = self.sequence()
            stream.expect(')')
            return term
        if not stream.at('ident'):
            stream.fail(f"unexpected {stream.describe()}", ('(', 'ident') + KEYWORDS)
        stream.advance()
        try:
            if token.value == 'id':
                return Id(stream.ident_list('[', ']'))
            if token.value == 'copy':
                return Copy(stream.ident_list('[', ']'))
            if token.value == 'del':
                return Del(stream.ident_list('[', ']'))
            if token.value == 'swap':
                return Swap(stream.ident_list('[', ']'), stream.ident_list('[', ']'))
            if token.value == 'wire':
                return wire_term(stream.ident_list('[', ']'), stream.ident_list('[', ']'))
            if token.value == 'gen':
                return Gen(stream.ident_list('[', ']'), stream.ident_list('[', ']'))
        except (DiagramTypeError, EndpointMismatch) as exc:
            raise ParseError(str(exc), token.line, token.column) from exc
        if token.value not in self.generators:
            raise ParseError(
                f"unknown generator {token.value!r}", token.line, token.column, sorted(self.generators)
            )
        return self.generators[token.value]


def parse_term(text, generators=None):
    return TermParser(text, generators).parse()
