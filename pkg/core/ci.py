"""
Conditional independence of empty-domain kernels (states).

Five notions are decided here: the DIBI formula, plain and Markov CI
(factorization through W once U is deleted), superset CI (U spread over
the three factors) and extended superset CI (a trailing map produces U).
:func:`theorem_harness` cross-checks the implications between them.
"""
import itertools
import logging
import random
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from django.conf import settings

from . import decompose
from .dibi import ci_formula, satisfies
from .exceptions import BudgetExceeded, DibiError, ShapeError, Unsupported
from .finrel import join, project, to_flat
from .finstoch import Dist, FinStoch, StochTable, marginalize
from .gauss import Gauss, cross_covariance, gauss_state
from .kernels import (
    Kernel, conditional_kernel, identity_kernel, marginal_kernel, par, random_kernel, seq,
)
from .synvar import DiagGraph, Gen, SynVar
from .varspace import set_to_list, varset

logger = logging.getLogger(__name__)

FLAVORS = ('dibi', 'plain', 'markov', 'superset', 'ext-superset')


@dataclass(frozen=True)
class CIQuery:
    """
    ``X ⊥ Y | W`` for a state over ``W ∪ X ∪ Y ∪ U``.

    Attributes:
        flavor: One of FLAVORS; ``plain`` needs ``U = ∅``.
    """
    W: frozenset = frozenset()
    X: frozenset = frozenset()
    Y: frozenset = frozenset()
    U: frozenset = frozenset()
    flavor: str = 'dibi'

    def __post_init__(self):
        for name in ('W', 'X', 'Y', 'U'):
            object.__setattr__(self, name, varset(getattr(self, name)))
        blocks = (self.W, self.X, self.Y, self.U)
        for a, b in itertools.combinations(blocks, 2):
            if a & b:
                raise ShapeError(f"W, X, Y and U must be disjoint; {sorted(a & b)} repeats")
        if self.flavor not in FLAVORS:
            raise ShapeError(f"unknown flavor {self.flavor!r}; expected one of {', '.join(FLAVORS)}")
        if self.flavor == 'plain' and self.U:
            raise ShapeError("plain CI takes no U variables")

    @property
    def variables(self):
        return self.W | self.X | self.Y | self.U

    def swapped(self):
        return replace(self, X=self.Y, Y=self.X)

    def as_dict(self):
        return {name: list(set_to_list(getattr(self, name))) for name in ('W', 'X', 'Y', 'U')} | {
            'flavor': self.flavor
        }


def check_shape(k, q):
    if k.dom:
        raise ShapeError(f"CI needs an empty-domain kernel, got {k!r}")
    if k.cod != q.variables:
        raise ShapeError(f"kernel outputs {sorted(k.cod)} but the query covers {sorted(q.variables)}")


def _partitions(q, max_u):
    """Ordered 3-block partitions of U as ``(U0, U1, U2)``."""
    max_u = settings.DIBI_SUPERSET_MAX_U if max_u is None else max_u
    us = set_to_list(q.U)
    if len(us) > max_u:
        raise BudgetExceeded(f"|U| = {len(us)} exceeds the superset cap of {max_u}", max_u, len(us))
    for labels in itertools.product(range(3), repeat=len(us)):
        yield tuple(frozenset(u for u, label in zip(us, labels) if label == block) for block in range(3))


# FinStoch


def _joint(k):
    return k.category.row_as_memories(k.core, ())


def _finstoch_markov(k, q):
    """p(w,x,y)·p(w) = p(w,x)·p(w,y) for every assignment."""
    category = k.category
    joint = marginalize(_joint(k), q.W | q.X | q.Y)
    p_w, p_wx, p_wy = (marginalize(joint, names) for names in (q.W, q.W | q.X, q.W | q.Y))
    for w in category.memories(q.W):
        if p_w[w] == 0:
            continue
        for x in category.memories(q.X):
            for y in category.memories(q.Y):
                if joint[w.merge(x).merge(y)] * p_w[w] != p_wx[w.merge(x)] * p_wy[w.merge(y)]:
                    return False
    return True


def _finstoch_superset(k, q, max_u):
    """p(w,u0,x,u1,y,u2)·p(w)² = p(w,u0)·p(w,x,u1)·p(w,y,u2) for some partition."""
    category = k.category
    joint = _joint(k)
    p_w = marginalize(joint, q.W)
    everything = category.memories(q.variables)
    for u0, u1, u2 in _partitions(q, max_u):
        logger.debug("trying U partition %s | %s | %s", sorted(u0), sorted(u1), sorted(u2))
        p_a = marginalize(joint, q.W | u0)
        p_b = marginalize(joint, q.W | q.X | u1)
        p_c = marginalize(joint, q.W | q.Y | u2)
        if all(
            joint[m] * p_w[m.restrict(q.W)] ** 2
            == p_a[m.restrict(q.W | u0)] * p_b[m.restrict(q.W | q.X | u1)] * p_c[m.restrict(q.W | q.Y | u2)]
            for m in everything
        ):
            return u0, u1, u2
    return None


# FinRel


def _finrel_markov(k, q):
    relation = project(to_flat(k.core), q.W | q.X | q.Y)
    return relation == join(project(relation, q.W | q.X), project(relation, q.W | q.Y))


def _finrel_superset(k, q, max_u):
    relation = to_flat(k.core)
    for u0, u1, u2 in _partitions(q, max_u):
        logger.debug("trying U partition %s | %s | %s", sorted(u0), sorted(u1), sorted(u2))
        rebuilt = join(
            join(project(relation, q.W | u0), project(relation, q.W | q.X | u1)),
            project(relation, q.W | q.Y | u2),
        )
        if rebuilt == relation:
            return u0, u1, u2
    return None


# Gauss


def _uncorrelated(k, given, left, right):
    block = cross_covariance(k.category, k.core, given, left, right)
    return np.allclose(block, 0.0, rtol=0.0, atol=k.category.tolerance)


def _gauss_markov(k, q):
    return _uncorrelated(k, q.W, q.X, q.Y)


def _gauss_superset(k, q, max_u):
    for u0, u1, u2 in _partitions(q, max_u):
        a, b, c = u0, q.X | u1, q.Y | u2
        if _uncorrelated(k, q.W, a, b) and _uncorrelated(k, q.W, a, c) and _uncorrelated(k, q.W, b, c):
            return u0, u1, u2
    return None


# Decisions


def dibi_ci(k, q, strategy=None):
    """``k ⊨ <{}|>W> ; (<W|>W∪X> * <W|>W∪Y>)``."""
    check_shape(k, q)
    return satisfies(k, ci_formula(q.W, q.X, q.Y), strategy)


def markov_ci(k, q):
    check_shape(k, q)
    kind = k.category.kind
    if kind == 'finstoch':
        return _finstoch_markov(k, q)
    if kind == 'finrel':
        return _finrel_markov(k, q)
    if kind == 'gauss':
        return _gauss_markov(k, q)
    return bool(decompose.decompose_search(k.core, q, 'markov'))


def plain_ci(k, q):
    if q.U:
        raise ShapeError("plain CI takes no U variables")
    return markov_ci(k, q)


SUPERSET_ORACLES = {
    'finstoch': _finstoch_superset,
    'finrel': _finrel_superset,
    'gauss': _gauss_superset,
}


def superset_partition(k, q, max_u=None):
    """
    The partition ``(U0, U1, U2)`` under which ``k`` displays superset CI,
    or None. U0 travels with W, U1 with X and U2 with Y.
    """
    check_shape(k, q)
    oracle = SUPERSET_ORACLES.get(k.category.kind)
    if oracle is not None:
        return oracle(k, q, max_u)
    found = decompose.decompose_search(k.core, q, 'superset')
    if not found:
        return None
    return tuple(
        frozenset(u for u, block in found.partition.items() if block == name) for name in ('U0', 'U1', 'U2')
    )


def superset_ci(k, q, max_u=None):
    return superset_partition(k, q, max_u) is not None


def ext_superset_ci(k, q):
    """
    Extended superset CI.

    With conditionals the decomposition is rebuilt from the marginal on W,
    the conditionals of X and of Y given W and the conditional of
    everything given ``W ∪ X ∪ Y``; the state displays the notion exactly
    when the rebuilt state equals it.
    """
    check_shape(k, q)
    category = k.category
    if category.kind == 'synvar':
        return bool(decompose.decompose_search(k.core, q, 'ext-superset'))
    if not category.flags.has_conditionals:
        raise Unsupported(f"extended superset CI needs conditionals, which {category.kind} lacks")
    s_w = marginal_kernel(k, q.W)
    g_x = conditional_kernel(marginal_kernel(k, q.W | q.X), q.W)
    g_y = conditional_kernel(marginal_kernel(k, q.W | q.Y), q.W)
    h = conditional_kernel(k, q.W | q.X | q.Y)
    return seq(seq(s_w, par(g_x, g_y)), h) == k


DECIDERS = {
    'dibi': dibi_ci,
    'plain': plain_ci,
    'markov': markov_ci,
    'superset': superset_ci,
    'ext-superset': ext_superset_ci,
}


def decide(k, q):
    """Decide ``q`` with the procedure of its flavor."""
    result = DECIDERS[q.flavor](k, q)
    logger.debug("%s CI of %r for %s: %s", q.flavor, k, q.as_dict(), result)
    return result


def witness(k, q):
    """The block decomposition behind a SynVar decision (or the Refuted)."""
    check_shape(k, q)
    flavor = 'markov' if q.flavor in ('dibi', 'plain') else q.flavor
    return decompose.decompose_search(k.core, q, flavor)


# Harness

CHECKS = {
    'markov<=>dibi': lambda v: v['markov'] == v['dibi'],
    'superset=>dibi': lambda v: not v['superset'] or v['dibi'],
    'superset=>markov': lambda v: not v['superset'] or v['markov'],
    'plain<=>dibi': lambda v: 'plain' not in v or v['plain'] == v['dibi'],
    'ext<=>markov': lambda v: 'ext-superset' not in v or v['ext-superset'] == v['markov'],
    'symmetry': lambda v: v['markov'] == v['markov-swapped'] and v['superset'] == v['superset-swapped'],
}
# instances where each check is a theorem
APPLIES = {
    'finstoch': tuple(CHECKS),
    'gauss': tuple(CHECKS),
    'synvar': ('superset=>dibi', 'superset=>markov', 'symmetry'),
}
SHAPES = ('random', 'markov', 'superset', 'product')


def evaluate(k, q):
    """Every flavor that applies to ``k``, plus the X/Y-swapped Markov and superset answers."""
    values = {
        'dibi': dibi_ci(k, q),
        'markov': markov_ci(k, q),
        'superset': superset_ci(k, q),
        'markov-swapped': markov_ci(k, q.swapped()),
        'superset-swapped': superset_ci(k, q.swapped()),
    }
    if not q.U:
        values['plain'] = plain_ci(k, q)
    if k.category.flags.has_conditionals or k.category.kind == 'synvar':
        values['ext-superset'] = ext_superset_ci(k, q)
    return values


def structured_state(category, q, shape, rng):
    """
    A random state over ``q.variables`` built in one of SHAPES:
    ``markov`` and ``superset`` display the corresponding CI by
    construction, ``product`` makes everything independent.
    """
    everything = q.variables
    if shape == 'random':
        return random_kernel(category, (), everything, rng)
    if shape == 'product':
        state = identity_kernel(category, ())
        for name in set_to_list(everything):
            state = par(state, random_kernel(category, (), {name}, rng))
        return state
    if shape == 'markov':
        s_w = random_kernel(category, (), q.W, rng)
        g_x = random_kernel(category, q.W, q.W | q.X, rng)
        g_y = random_kernel(category, q.W, q.W | q.Y, rng)
        g_u = random_kernel(category, q.W | q.X | q.Y, everything, rng)
        return seq(seq(s_w, par(g_x, g_y)), g_u)
    blocks = [set(), set(), set()]
    for u in set_to_list(q.U):
        blocks[rng.randrange(3)].add(u)
    u0, u1, u2 = (frozenset(b) for b in blocks)
    s0 = random_kernel(category, (), q.W | u0, rng)
    g1 = random_kernel(category, q.W, q.W | q.X | u1, rng)
    g2 = random_kernel(category, q.W, q.W | q.Y | u2, rng)
    return seq(s0, par(par(g1, g2), identity_kernel(category, u0)))


def harness_quotas(trials):
    """Trials per instance: ``trials`` on FinStoch, a fifth of that (rounded up) on each other instance."""
    side = -(-trials // 5)
    return {'finstoch': trials, 'gauss': side, 'synvar': side}


def random_trial(seed, index, instance='finstoch'):
    """The category, query, shape and state of trial ``index`` on ``instance``."""
    rng = random.Random(f"{seed}:{instance}:{index}")
    if instance == 'finstoch':
        category = FinStoch.uniform(values=('0', '1') if rng.random() < 0.8 else ('0', '1', '2'))
    elif instance == 'gauss':
        category = Gauss.uniform(dim=1)
    elif instance == 'synvar':
        category = SynVar()
    else:
        raise Unsupported(f"no harness trials on {instance}")
    # at most four variables on ternary and Gaussian trials
    small = instance == 'gauss' or (instance == 'finstoch' and len(category.alphabet('w')) == 3)
    n_u = rng.choice((0, 1) if small else (0, 1, 2))
    q = CIQuery({'w'}, {'x'}, {'y'}, {f"u{i + 1}" for i in range(n_u)})
    shape = rng.choice(SHAPES)
    return category, q, shape, structured_state(category, q, shape, rng)


def _failed_checks(kind, values):
    return [name for name in APPLIES[kind] if not CHECKS[name](values)]


def shrink(k, q, check):
    """
    Drop U variables one at a time while ``check`` still fails, keeping the
    smallest failing state.
    """
    changed = True
    while changed:
        changed = False
        for u in set_to_list(q.U):
            smaller_q = replace(q, U=q.U - {u})
            smaller_k = marginal_kernel(k, k.cod - {u})
            try:
                failing = check in _failed_checks(k.category.kind, evaluate(smaller_k, smaller_q))
            except DibiError:
                failing = False
            logger.debug("shrink without %s: %s", u, 'still failing' if failing else 'passes')
            if failing:
                k, q, changed = smaller_k, smaller_q, True
                break
    return k, q


def _counterexample(check, k, q, values, trial=None):
    from .serializers import dump_kernel_file

    return {
        'check': check,
        'trial': trial,
        'query': q.as_dict(),
        'values': values,
        'file': dump_kernel_file(k.category, {'state': k}),
    }


def harness_batch(seed, start, count, instance='finstoch'):
    """Run trials ``start .. start+count-1`` on ``instance`` and tally every applicable check."""
    tally = {name: {'checked': 0, 'violations': 0} for name in CHECKS}
    counterexamples, skipped = [], 0
    for index in range(start, start + count):
        category, q, shape, k = random_trial(seed, index, instance)
        try:
            values = evaluate(k, q)
        except (Unsupported, BudgetExceeded) as exc:
            logger.debug("%s trial %d skipped: %s", instance, index, exc)
            skipped += 1
            continue
        for name in APPLIES[category.kind]:
            tally[name]['checked'] += 1
            if not CHECKS[name](values):
                tally[name]['violations'] += 1
                small_k, small_q = shrink(k, q, name)
                example = _counterexample(name, small_k, small_q, evaluate(small_k, small_q), trial=index)
                counterexamples.append({'instance': instance, **example})
                logger.debug("%s trial %d (%s) violates %s", instance, index, shape, name)
    return {
        'instance': instance,
        'start': start,
        'count': count,
        'checks': tally,
        'skipped': skipped,
        'counterexamples': counterexamples,
    }


def merge_batches(batches):
    tally = {name: {'checked': 0, 'violations': 0} for name in CHECKS}
    instances = {}
    counterexamples, skipped, trials = [], 0, 0
    for batch in sorted(batches, key=lambda b: (list(APPLIES).index(b['instance']), b['start'])):
        trials += batch['count']
        skipped += batch['skipped']
        counts = instances.setdefault(batch['instance'], {'trials': 0, 'skipped': 0})
        counts['trials'] += batch['count']
        counts['skipped'] += batch['skipped']
        counterexamples.extend(batch['counterexamples'])
        for name, checked in batch['checks'].items():
            tally[name]['checked'] += checked['checked']
            tally[name]['violations'] += checked['violations']
    return {
        'trials': trials,
        'skipped': skipped,
        'instances': instances,
        'checks': tally,
        'counterexamples': counterexamples,
    }


# Fixed cases


def _finstoch_state(category, names, weights):
    """A state from ``{value tuple: weight}`` over the canonical list of ``names``."""
    cod = set_to_list(names)
    table = StochTable((), cod, {(): Dist(weights)})
    return Kernel(frozenset(), frozenset(names), category.validate(table), category)


def example_states():
    """
    The named states the harness always checks, with their expected answers.

    ``coin-pair``: given a fair coin z, x and y are independent flips that are
    fair when z = 0 and biased 1:3 when z = 1. ``xor``: y = x XOR z.
    ``common-cause``: x and y are w plus independent unit noise;
    ``shared-noise`` correlates that noise. ``chain``: the free-category state where c0 draws w, c1 and c2 draw x and
    y from w, and d draws u from x and y.
    """
    binary = FinStoch.uniform()
    coin_pair = _finstoch_state(binary, {'x', 'y', 'z'}, {
        (x, y, z): Fraction(1, 8) if z == '0' else
        Fraction(1 if x == '0' else 3, 4) * Fraction(1 if y == '0' else 3, 4) / 2
        for x in '01' for y in '01' for z in '01'
    })
    xor = _finstoch_state(binary, {'x', 'y', 'z'}, {
        (x, str(int(x) ^ int(z)), z): Fraction(1, 4) for x in '01' for z in '01'
    })
    gaussian = Gauss.uniform(dim=1)
    common_cause = gauss_state(gaussian, {'w', 'x', 'y'}, [[1.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])
    shared_noise = gauss_state(gaussian, {'w', 'x', 'y'}, [[1.0, 1.0, 1.0], [1.0, 2.0, 1.5], [1.0, 1.5, 2.0]])
    q_xyz = CIQuery({'z'}, {'x'}, {'y'})
    q_wxy = CIQuery({'w'}, {'x'}, {'y'})
    q_chain = CIQuery({'w'}, {'x'}, {'y'}, {'u'})
    return [
        ('coin-pair', coin_pair, q_xyz, {'dibi': True, 'markov': True, 'plain': True, 'superset': True}),
        ('xor', xor, q_xyz, {'dibi': False, 'markov': False, 'plain': False, 'superset': False}),
        ('common-cause', common_cause, q_wxy, {'dibi': True, 'markov': True, 'plain': True, 'superset': True}),
        ('shared-noise', shared_noise, q_wxy, {'dibi': False, 'markov': False, 'plain': False, 'superset': False}),
        ('chain', chain_state(), q_chain, {'dibi': True, 'markov': True, 'superset': False, 'ext-superset': True}),
    ]


def chain_state():
    """``c0 : [] → [w]``, ``c1 : [w] → [x]``, ``c2 : [w] → [y]``, ``d : [x, y] → [u]``."""
    category = SynVar({
        'c0': Gen((), ('w',)),
        'c1': Gen(('w',), ('x',)),
        'c2': Gen(('w',), ('y',)),
        'd': Gen(('x', 'y'), ('u',)),
    })
    graph = DiagGraph(
        (),
        ('u', 'w', 'x', 'y'),
        (((), ('w',)), (('w',), ('x',)), (('w',), ('y',)), (('x', 'y'), ('u',))),
        ((), ((0, 0),), ((0, 0),), ((1, 0), (2, 0))),
        ((3, 0), (0, 0), (1, 0), (2, 0)),
    )
    return Kernel(frozenset(), frozenset({'u', 'w', 'x', 'y'}), graph, category)


def fixed_cases():
    results = []
    for name, k, q, expected in example_states():
        actual = evaluate(k, q)
        ok = all(actual.get(flavor) == value for flavor, value in expected.items())
        results.append({'name': name, 'expected': expected, 'actual': actual, 'ok': ok})
    return results


def harness_jobs(trials, batch_size):
    """``(instance, start, count)`` for every batch of every instance quota."""
    return [
        (instance, start, min(batch_size, quota - start))
        for instance, quota in harness_quotas(trials).items()
        for start in range(0, quota, batch_size)
    ]


def run_batches(seed, jobs):
    return [harness_batch(seed, start, count, instance) for instance, start, count in jobs]


def theorem_harness(seed=0, trials=None, batch_size=50, runner=None):
    """
    Cross-check the CI implications on random states plus the fixed cases.

    ``trials`` FinStoch states are always drawn; Gaussian and free-category
    states come on top (see :func:`harness_quotas`).

    Args:
        runner: Callable ``(seed, jobs) -> batch reports`` over the
            ``(instance, start, count)`` jobs; defaults to
            :func:`run_batches` in-process.

    Returns:
        JSON-serializable report with per-check and per-instance counts,
        shrunk counterexamples and the fixed-case table.
    """
    trials = settings.DIBI_HARNESS_TRIALS if trials is None else trials
    runner = runner or run_batches
    report = merge_batches(runner(seed, harness_jobs(trials, batch_size)))
    report['seed'] = seed
    report['fixed'] = fixed_cases()
    report['passed'] = not report['counterexamples'] and all(case['ok'] for case in report['fixed'])
    logger.info(
        "harness seed=%s: %d trials (%s), %d counterexamples, fixed cases %s",
        seed, report['trials'],
        ', '.join(f"{counts['trials']} {kind}" for kind, counts in report['instances'].items()),
        len(report['counterexamples']),
        'ok' if all(case['ok'] for case in report['fixed']) else 'FAILED',
    )
    return report
