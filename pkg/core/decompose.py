"""
Structural decompositions of SynVar kernels.

Equality in the free category is structural, so a kernel splits as
``b1 ⊙ b2`` or contains ``b1 ⊕ b2`` exactly when its normalized graph can
be cut into node sets along wires. A cut is a set of nodes closed under
predecessors whose private wires (ones not exposed as kernel outputs)
stay inside the set.
"""
import itertools
import logging
from dataclasses import dataclass, field

import networkx as nx
from django.conf import settings

from .exceptions import BudgetExceeded, Refuted, UnsupportedShape
from .kernels import Kernel
from .synvar import INPUT, DiagGraph, SynVar, normalize, to_networkx
from .varspace import set_to_list

logger = logging.getLogger(__name__)


class SearchBudget:
    """Counts enumeration steps and raises BudgetExceeded past ``limit``."""

    def __init__(self, limit=None, what='search'):
        self.limit = settings.DIBI_SAT_BUDGET if limit is None else limit
        self.what = what
        self.spent = 0

    def spend(self, steps=1):
        self.spent += steps
        if self.spent > self.limit:
            logger.warning("%s gave up after %d steps", self.what, self.spent)
            raise BudgetExceeded(f"{self.what} exceeded {self.limit} steps", self.limit, self.spent)


@dataclass(frozen=True)
class Cut:
    """
    Attributes:
        inputs: Kernel inputs the cut may read.
        nodes: Node indices of the normalized core graph.
        produced: Kernel outputs sourced inside the cut.
    """
    inputs: frozenset
    nodes: frozenset
    produced: frozenset


def core_graph(k):
    return normalize(k.core)


def _exposed(g):
    return {source: k for k, source in enumerate(g.outputs)}


def _reads(g, k, nodes):
    """Kernel input names read by ``nodes``."""
    xs = k.dom_list
    return {xs[j] for n in nodes for m, j in g.feeds[n] if m == INPUT}


def _produced(g, k, nodes):
    fresh = set_to_list(k.fresh)
    return frozenset(fresh[i] for i, (n, _) in enumerate(g.outputs) if n in nodes)


def is_cut(g, nodes):
    """Closed under predecessors, and private wires stay inside."""
    exposed = _exposed(g)
    for n in nodes:
        if any(m != INPUT and m not in nodes for m, _ in g.feeds[n]):
            return False
    for m, feed in enumerate(g.feeds):
        if m in nodes:
            continue
        if any(n in nodes and (n, j) not in exposed for n, j in feed):
            return False
    return True


def closure(g, seeds):
    """Smallest cut containing ``seeds``."""
    graph = to_networkx(g)
    exposed = _exposed(g)
    nodes = set(seeds)
    while True:
        grown = set(nodes)
        for n in nodes:
            grown.update(v[1] for v in nx.ancestors(graph, ('node', n)) if v[0] == 'node')
        for m, feed in enumerate(g.feeds):
            if any(n in grown and (n, j) not in exposed for n, j in feed):
                grown.add(m)
        if grown == nodes:
            return frozenset(nodes)
        nodes = grown


def piece(k, g, nodes, inputs):
    """The kernel ``inputs → inputs ∪ produced`` running ``nodes`` of ``g``."""
    nodes, inputs = sorted(nodes), frozenset(inputs)
    xs, fresh = k.dom_list, set_to_list(k.fresh)
    dom = set_to_list(inputs)
    produced = _produced(g, k, set(nodes))
    position = {n: i for i, n in enumerate(nodes)}

    def move(source):
        n, j = source
        return (INPUT, dom.index(xs[j])) if n == INPUT else (position[n], j)

    out = set_to_list(produced)
    core = DiagGraph(
        dom,
        out,
        tuple(g.nodes[n] for n in nodes),
        tuple(tuple(move(s) for s in g.feeds[n]) for n in nodes),
        tuple(move(g.outputs[fresh.index(name)]) for name in out),
    )
    return Kernel(inputs, inputs | produced, core, k.category)


def continuation(k, g, nodes):
    """
    The kernel ``dom(k) ∪ produced → cod(k)`` running the nodes outside
    ``nodes``; wires leaving the cut become its extra inputs.
    """
    xs, fresh = k.dom_list, set_to_list(k.fresh)
    produced = _produced(g, k, nodes)
    dom = set_to_list(k.dom | produced)
    kept = [n for n in range(len(g.nodes)) if n not in nodes]
    position = {n: i for i, n in enumerate(kept)}
    exposed = _exposed(g)

    def move(source):
        n, j = source
        if n == INPUT:
            return (INPUT, dom.index(xs[j]))
        if n in nodes:
            return (INPUT, dom.index(fresh[exposed[source]]))
        return (position[n], j)

    rest = set_to_list(k.fresh - produced)
    core = DiagGraph(
        dom,
        rest,
        tuple(g.nodes[n] for n in kept),
        tuple(tuple(move(s) for s in g.feeds[n]) for n in kept),
        tuple(move(g.outputs[fresh.index(name)]) for name in rest),
    )
    return Kernel(frozenset(dom), k.cod, core, k.category)


def structural_cut(k, inputs, targets):
    """
    The least cut reading only ``inputs`` and producing ``targets - inputs``,
    or None when there is none.
    """
    inputs, targets = frozenset(inputs), frozenset(targets)
    if not inputs <= k.dom or not targets <= k.cod or (targets - inputs) & k.dom:
        return None
    g = core_graph(k)
    fresh = set_to_list(k.fresh)
    seeds = {g.outputs[fresh.index(name)][0] for name in targets - inputs}
    nodes = closure(g, seeds)
    if not _reads(g, k, nodes) <= inputs:
        return None
    return Cut(inputs, nodes, _produced(g, k, nodes))


def cuts(k, g, inputs, budget):
    """Every cut of ``g`` whose nodes read only ``inputs``, smallest first per branch."""
    xs = k.dom_list
    inputs = frozenset(inputs)
    readable = [
        all(m != INPUT or xs[j] in inputs for m, j in g.feeds[n]) for n in range(len(g.nodes))
    ]

    def extend(n, chosen):
        budget.spend()
        if n == len(g.nodes):
            if is_cut(g, chosen):
                yield frozenset(chosen)
            return
        yield from extend(n + 1, chosen)
        if readable[n] and all(m == INPUT or m in chosen for m, _ in g.feeds[n]):
            yield from extend(n + 1, chosen | {n})

    yield from extend(0, frozenset())


def components(g, nodes):
    """Groups of ``nodes`` connected through node-to-node wires."""
    graph = nx.Graph()
    graph.add_nodes_from(nodes)
    for n in nodes:
        graph.add_edges_from((m, n) for m, _ in g.feeds[n] if m in nodes)
    return sorted((frozenset(c) for c in nx.connected_components(graph)), key=sorted)


def fatsemi_candidates(k, budget):
    """Pairs ``(b1, b2)`` with ``b1 ⊙ b2 = k``."""
    g = core_graph(k)
    for nodes in cuts(k, g, k.dom, budget):
        yield piece(k, g, nodes, k.dom), continuation(k, g, nodes)


def star_candidates(k, budget):
    """Pairs ``(b1, b2)`` with ``b1 ⊕ b2 ⊑ k``."""
    g = core_graph(k)
    xs = k.dom_list
    for size in range(len(xs) + 1):
        for chosen in itertools.combinations(xs, size):
            domain = frozenset(chosen)
            for nodes in cuts(k, g, domain, budget):
                groups = components(g, nodes)
                for mask in itertools.product((0, 1), repeat=len(groups)):
                    left = frozenset().union(*(c for c, side in zip(groups, mask) if side == 0))
                    right = nodes - left
                    for d1, d2 in _domain_splits(domain, _reads(g, k, left), _reads(g, k, right), budget):
                        yield piece(k, g, left, d1), piece(k, g, right, d2)


def _domain_splits(domain, left_reads, right_reads, budget):
    options = []
    for name in set_to_list(domain):
        if name in left_reads and name in right_reads:
            options.append(('both',))
        elif name in left_reads:
            options.append(('left', 'both'))
        elif name in right_reads:
            options.append(('right', 'both'))
        else:
            options.append(('left', 'right', 'both'))
    names = set_to_list(domain)
    for choice in itertools.product(*options):
        budget.spend()
        d1 = frozenset(n for n, c in zip(names, choice) if c != 'right')
        d2 = frozenset(n for n, c in zip(names, choice) if c != 'left')
        yield d1, d2


# Conditional-independence decompositions

BLOCKS = ('g1', 'g2', 'h', 's0')
FLAVORS = ('superset', 'ext-superset', 'dibi', 'markov', 'plain')


@dataclass(frozen=True)
class Decomposition:
    """
    A witness that a state splits into the CI blocks of a flavor.

    Attributes:
        blocks: Block name → node indices of the searched graph.
        partition: Where each U variable is produced (``U0``, ``U1``,
            ``U2`` or ``H``).
        search_size: Assignments tried.
    """
    flavor: str
    blocks: dict = field(hash=False)
    partition: dict = field(hash=False)
    search_size: int = 0


def decompose_search(g, query, flavor, node_budget=None):
    """
    Assign every generator node of the empty-domain graph ``g`` to a
    block so that blocks only talk through the interfaces of the flavor.

    ``s0`` produces W (and U0), ``g1`` reads W and produces X (and U1),
    ``g2`` reads W and produces Y (and U2); for ``ext-superset`` a trailing
    ``h`` may read any output wire and produces the rest of U. The
    ``dibi``, ``markov`` and ``plain`` flavors delete U first and use
    ``s0``, ``g1`` and ``g2`` only.

    Returns:
        Decomposition, or Refuted with the search size.

    Raises:
        UnsupportedShape: ``g`` has inputs.
        BudgetExceeded: more nodes than ``node_budget``.
    """
    if g.dom:
        raise UnsupportedShape("decomposition needs an empty-domain diagram")
    node_budget = settings.DIBI_SYNVAR_NODE_BUDGET if node_budget is None else node_budget
    kinds = {}
    for label in ('W', 'X', 'Y', 'U'):
        kinds.update({name: label for name in getattr(query, label)})
    if flavor in ('dibi', 'markov', 'plain'):
        kept = [name for name in g.cod if kinds.get(name) != 'U']
        g = SynVar().compose(g, SynVar().wiring(g.cod, kept))
    g = normalize(g)
    if len(g.nodes) > node_budget:
        raise BudgetExceeded(
            f"{len(g.nodes)} generator nodes exceed the budget of {node_budget}", node_budget, len(g.nodes)
        )
    graph = to_networkx(g)
    reach = [
        {kinds[g.cod[v[1]]] for v in nx.descendants(graph, ('node', n)) if v[0] == 'out'}
        for n in range(len(g.nodes))
    ]
    feeds_kinds = {}
    for k, source in enumerate(g.outputs):
        feeds_kinds.setdefault(source, set()).add(kinds[g.cod[k]])

    def candidates(n):
        allowed = []
        if not reach[n] & {'W', 'Y'}:
            allowed.append('g1')
        if not reach[n] & {'W', 'X'}:
            allowed.append('g2')
        if flavor == 'ext-superset' and reach[n] <= {'U'}:
            allowed.append('h')
        allowed.append('s0')
        return allowed

    def edge_ok(source, source_block, block):
        if source_block == block:
            return True
        exposed = feeds_kinds.get(source, set())
        if source_block == 's0' and block in ('g1', 'g2'):
            return 'W' in exposed
        return block == 'h' and bool(exposed)

    producers = {'W': ('s0',), 'X': ('g1',), 'Y': ('g2',)}
    if flavor == 'superset':
        producers['U'] = ('s0', 'g1', 'g2')
    elif flavor == 'ext-superset':
        producers['U'] = ('s0', 'g1', 'g2', 'h')

    assignment = [None] * len(g.nodes)
    steps = 0

    def fits(n, block):
        for source in g.feeds[n]:
            if not edge_ok(source, assignment[source[0]], block):
                return False
        for k, (m, _) in enumerate(g.outputs):
            if m == n and block not in producers.get(kinds[g.cod[k]], ()):
                return False
        return True

    def search(n):
        nonlocal steps
        if n == len(g.nodes):
            return True
        for block in candidates(n):
            steps += 1
            if fits(n, block):
                assignment[n] = block
                if search(n + 1):
                    return True
        assignment[n] = None
        return False

    found = search(0)
    logger.debug("%s decomposition of %r: %s after %d assignments", flavor, g, found, steps)
    if not found:
        return Refuted('no-decomposition', {'search_size': steps, 'nodes': len(g.nodes)})
    blocks = {block: tuple(n for n, b in enumerate(assignment) if b == block) for block in BLOCKS}
    names = {'s0': 'U0', 'g1': 'U1', 'g2': 'U2', 'h': 'H'}
    partition = {
        g.cod[k]: names[assignment[m]] for k, (m, _) in enumerate(g.outputs) if kinds[g.cod[k]] == 'U'
    }
    return Decomposition(flavor, blocks, partition, steps)
