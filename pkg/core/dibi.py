"""
Formulas of the ∗/⨟ fragment and their satisfaction by kernels.

Kernels form the frame: ``⊕`` interprets ``∗``, ``⊙`` interprets ``⨟`` and
atoms ``<S|>T>`` hold when some subkernel with domain S produces T.
"""
import itertools
import logging
from dataclasses import dataclass, field

from django.conf import settings

from . import decompose
from .exceptions import Unsupported
from .kernels import (
    Kernel, SubkernelWitness, conditional_kernel, identity_kernel, marginal_kernel, par, par_defined,
    require_conditionals, restrict, seq, subkernel,
)
from .lexer import TokenStream
from .varspace import set_to_list, varset

logger = logging.getLogger(__name__)


# Syntax


class Formula:
    """Base class of formulas."""


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Emp(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    S: frozenset
    T: frozenset

    def __post_init__(self):
        object.__setattr__(self, 'S', varset(self.S))
        object.__setattr__(self, 'T', varset(self.T))


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Star(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Fatsemi(Formula):
    left: Formula
    right: Formula


BINARY = (And, Star, Fatsemi)


class FormulaParser:
    """
    Recursive-descent parser; ``;`` binds loosest, then ``*``, then ``&``,
    and all three associate to the right.
    """

    def __init__(self, text):
        self.stream = TokenStream(text)

    def parse(self):
        formula = self.fatsemi()
        self.stream.finish()
        return formula

    def fatsemi(self):
        left = self.star()
        if self.stream.at(';'):
            self.stream.advance()
            return Fatsemi(left, self.fatsemi())
        return left

    def star(self):
        left = self.conj()
        if self.stream.at('*'):
            self.stream.advance()
            return Star(left, self.star())
        return left

    def conj(self):
        left = self.unit()
        if self.stream.at('&'):
            self.stream.advance()
            return And(left, self.conj())
        return left

    def unit(self):
        stream = self.stream
        if stream.at('ident', 'top'):
            stream.advance()
            return Top()
        if stream.at('ident', 'emp'):
            stream.advance()
            return Emp()
        if stream.at('<'):
            stream.advance()
            s = stream.ident_list()
            stream.expect('|>')
            t = stream.ident_list()
            stream.expect('>')
            return Atom(s, t)
        if stream.at('('):
            stream.advance()
            formula = self.fatsemi()
            stream.expect(')')
            return formula
        stream.fail(f"unexpected {stream.describe()}", ['top', 'emp', '<', '('])


def parse(text):
    return FormulaParser(text).parse()


def pretty(formula):
    """Concrete syntax with the fewest parentheses that parse back to ``formula``."""
    levels = {Fatsemi: (0, ';'), Star: (1, '*'), And: (2, '&')}

    def show(f, level):
        if isinstance(f, Top):
            return 'top'
        if isinstance(f, Emp):
            return 'emp'
        if isinstance(f, Atom):
            return f"<{{{', '.join(set_to_list(f.S))}}}|>{{{', '.join(set_to_list(f.T))}}}>"
        own, symbol = levels[type(f)]
        text = f"{show(f.left, own + 1)} {symbol} {show(f.right, own)}"
        return f"({text})" if own < level else text

    return show(formula, 0)


def free_vars(formula):
    if isinstance(formula, Atom):
        return formula.S | formula.T
    if isinstance(formula, BINARY):
        return free_vars(formula.left) | free_vars(formula.right)
    return frozenset()


def size(formula):
    if isinstance(formula, BINARY):
        return 1 + size(formula.left) + size(formula.right)
    return 1


def atoms(formula):
    if isinstance(formula, Atom):
        return [formula]
    if isinstance(formula, BINARY):
        return atoms(formula.left) + atoms(formula.right)
    return []


def random_formula(rng, variables, depth=3):
    """A random formula over ``variables`` of nesting depth at most ``depth``."""
    variables = set_to_list(variables)

    def subset():
        return frozenset(v for v in variables if rng.random() < 0.4)

    if depth == 0 or rng.random() < 0.3:
        roll = rng.random()
        if roll < 0.1:
            return Top()
        if roll < 0.2:
            return Emp()
        return Atom(subset(), subset())
    connective = rng.choice(BINARY)
    return connective(random_formula(rng, variables, depth - 1), random_formula(rng, variables, depth - 1))


def ci_formula(w, x, y):
    """``<{}|>W> ; (<W|>W∪X> * <W|>W∪Y>)``."""
    w, x, y = frozenset(w), frozenset(x), frozenset(y)
    return Fatsemi(Atom((), w), Star(Atom(w, w | x), Atom(w, w | y)))


# Witnesses


@dataclass(frozen=True)
class AtomWitness:
    """``kernel ⊑ k`` by ``witness``, with ``dom(kernel) = S`` and ``T ⊆ cod(kernel)``."""
    kernel: Kernel
    witness: SubkernelWitness


@dataclass(frozen=True)
class StarWitness:
    """``left ⊕ right ⊑ k`` by ``witness``."""
    left: Kernel
    right: Kernel
    witness: SubkernelWitness


@dataclass(frozen=True)
class FatsemiWitness:
    """``left ⊙ right = k``."""
    left: Kernel
    right: Kernel


MODES = ('exact-conditional', 'witness-supplied', 'bounded-structural')


@dataclass(frozen=True)
class SatStrategy:
    """
    How ``∗`` and ``⨟`` witnesses are found.

    Attributes:
        mode: ``exact-conditional`` builds them from marginals and
            conditionals; ``bounded-structural`` cuts SynVar graphs;
            ``witness-supplied`` replays ``witnesses``.
        budget: Enumeration steps before BudgetExceeded (None reads
            DIBI_SAT_BUDGET).
        witnesses: Subformula path (tuple of ``'l'``/``'r'``) → witness.
    """
    mode: str = 'exact-conditional'
    budget: int = None
    witnesses: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise Unsupported(f"unknown satisfaction mode {self.mode!r}")


def default_strategy(category):
    if category.kind == 'synvar':
        return SatStrategy('bounded-structural')
    return SatStrategy('exact-conditional')


# Satisfaction


def sat_atomic(k, S, T):
    """
    ``k ⊨ <S|>T>``.

    On conditional instances the candidate is the restriction of k to
    ``S → S ∪ T``, which is the only kernel of that type that can sit below
    k. On SynVar the candidate is the least graph cut producing T.
    """
    S, T = frozenset(S), frozenset(T)
    category = k.category
    if category.kind == 'synvar':
        cut = decompose.structural_cut(k, S, T)
        if cut is None:
            return False
        g = decompose.core_graph(k)
        below = decompose.piece(k, g, cut.nodes, S)
        witness = SubkernelWitness(k.dom - S, decompose.continuation(k, g, cut.nodes))
        return witness.replay(below) == k
    require_conditionals(category)
    if not (S <= k.dom and T <= k.cod) or (T - S) & k.dom:
        return False
    candidate = restrict(k, S, S | T)
    return candidate is not None and bool(subkernel(candidate, k))


class Satisfaction:
    """One satisfaction run: strategy, budget and the ambiguity log."""

    def __init__(self, strategy):
        self.strategy = strategy
        self.budget = decompose.SearchBudget(
            settings.DIBI_SAT_BUDGET if strategy.budget is None else strategy.budget, 'satisfaction search'
        )

    def check(self, k, formula, path=()):
        self.budget.spend()
        if isinstance(formula, (Top, Emp)):
            return True
        if isinstance(formula, And):
            return self.check(k, formula.left, path + ('l',)) and self.check(k, formula.right, path + ('r',))
        mode = self.strategy.mode
        if mode == 'witness-supplied':
            return self.replay(k, formula, path)
        if isinstance(formula, Atom):
            return sat_atomic(k, formula.S, formula.T)
        if mode == 'bounded-structural':
            return self.structural(k, formula, path)
        return self.exact(k, formula, path)

    # witness-supplied

    def replay(self, k, formula, path):
        witness = self.strategy.witnesses.get(path)
        if isinstance(formula, Atom):
            if witness is None:
                if not (k.category.kind == 'synvar' or k.category.flags.has_conditionals):
                    raise Unsupported(f"no witness supplied for the atom at {list(path)}")
                return sat_atomic(k, formula.S, formula.T)
            below = witness.kernel
            ok = below.dom == formula.S and formula.T <= below.cod and witness.witness.replay(below) == k
        elif witness is None:
            raise Unsupported(f"no witness supplied for {pretty(formula)} at {list(path)}")
        elif isinstance(formula, Star):
            ok = (
                par_defined(witness.left, witness.right)
                and witness.witness.replay(par(witness.left, witness.right)) == k
                and self.check(witness.left, formula.left, path + ('l',))
                and self.check(witness.right, formula.right, path + ('r',))
            )
        else:
            ok = (
                witness.left.cod == witness.right.dom
                and seq(witness.left, witness.right) == k
                and self.check(witness.left, formula.left, path + ('l',))
                and self.check(witness.right, formula.right, path + ('r',))
            )
        if not ok:
            logger.debug("witness at %s does not establish %s", list(path), pretty(formula))
        return ok

    # bounded-structural

    def structural(self, k, formula, path):
        candidates = decompose.star_candidates if isinstance(formula, Star) else decompose.fatsemi_candidates
        for b1, b2 in candidates(k, self.budget):
            if self.check(b1, formula.left, path + ('l',)) and self.check(b2, formula.right, path + ('r',)):
                return True
        return False

    # exact-conditional

    def exact(self, k, formula, path):
        require_conditionals(k.category)
        if isinstance(formula, Star):
            return self.exact_star(k, formula, path)
        return self.exact_fatsemi(k, formula, path)

    def restrictions(self, k):
        """Every ``restrict(k, D, C)`` that exists, smallest codomain first."""
        found = []
        fresh = set_to_list(k.fresh)
        for d_size in range(len(k.dom) + 1):
            for d in itertools.combinations(k.dom_list, d_size):
                for e_size in range(len(fresh) + 1):
                    for e in itertools.combinations(fresh, e_size):
                        self.budget.spend()
                        below = restrict(k, d, frozenset(d) | frozenset(e))
                        if below is not None:
                            found.append(below)
        return sorted(found, key=lambda b: (len(b.cod), len(b.dom)))

    def exact_star(self, k, formula, path):
        """
        Below k every kernel is fixed by its type, so ``b1 ⊕ b2 ⊑ k`` is
        searched over pairs of restrictions of k.
        """
        candidates = self.restrictions(k)
        left = [b for b in candidates if self.check(b, formula.left, path + ('l',))]
        if not left:
            return False
        right = [b for b in candidates if self.check(b, formula.right, path + ('r',))]
        for b1 in left:
            for b2 in right:
                self.budget.spend()
                if par_defined(b1, b2) and subkernel(par(b1, b2), k):
                    return True
        return False

    def exact_fatsemi(self, k, formula, path):
        """
        ``b1 ⊙ b2 = k`` forces b1 to be the marginal of k on ``cod(b1)`` and
        b2 a conditional; only the rows of b2 where b1 has no mass are free.
        When the right formula reads those rows through atoms with a smaller
        domain, the free rows are filled from the coarser conditional on the
        atoms' common domain.
        """
        category = k.category
        free = set_to_list(k.fresh)
        ambiguous = []
        right_domains = {atom.S for atom in atoms(formula.right)}
        for size_ in range(len(free) + 1):
            for chosen in itertools.combinations(free, size_):
                self.budget.spend()
                given = k.dom | frozenset(chosen)
                b1 = marginal_kernel(k, given)
                if not self.check(b1, formula.left, path + ('l',)):
                    continue
                local = all(not s < given for s in right_domains)
                fallback = None
                if not (local or category.conditionals_unique(b1.core)):
                    shared = next(iter(right_domains)) if len(right_domains) == 1 else None
                    if shared is None or not shared <= given:
                        ambiguous.append(set_to_list(given))
                    else:
                        fallback = self.coarse_fallback(k, given, shared)
                b2 = conditional_kernel(k, given, fallback=fallback)
                if self.check(b2, formula.right, path + ('r',)):
                    return True
        if ambiguous:
            raise Unsupported(
                f"{pretty(formula)} depends on how conditionals are completed at {ambiguous}"
            )
        return False

    @staticmethod
    def coarse_fallback(k, given, shared):
        """``given → cod(k)`` drawing the outputs from the conditional on ``dom(k) ∪ shared``."""
        base = k.dom | shared
        ignored = given - base
        coarse = marginal_kernel(conditional_kernel(k, base), k.cod - ignored)
        return par(coarse, identity_kernel(k.category, ignored))


def satisfies(k, formula, strategy=None):
    """
    ``k ⊨ formula``.

    Raises:
        Unsupported: the strategy cannot decide this formula on this instance.
        BudgetExceeded: the search ran out of steps.
    """
    strategy = strategy or default_strategy(k.category)
    result = Satisfaction(strategy).check(k, formula)
    logger.debug("%r ⊨ %s: %s", k, pretty(formula), result)
    return result
