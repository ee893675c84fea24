"""
Randomized checks of the frame conditions satisfied by kernels.

Every condition is a builder, which draws the kernels of one trial so that
the partial operations involved are defined, and a check, which returns
None or the reason the trial fails. Checks only read the kernels they are
handed, so a dumped counterexample can be reloaded and rechecked.
"""
import logging
import random
from dataclasses import dataclass

from django.conf import settings

from .exceptions import DefinednessError, DibiError
from .finrel import FinRel
from .finstoch import FinStoch
from .gauss import Gauss
from .kernels import (
    SubkernelWitness, identity_kernel, marginal_kernel, par, random_kernel, seq, subkernel,
)
from .markov import Assignment
from .synvar import SynVar

logger = logging.getLogger(__name__)

INSTANCES = ('finstoch', 'finrel', 'gauss', 'synvar')


class TrialScope:
    """
    Fresh variable names and random kernels for one trial.

    Args:
        size: Most fresh names one draw returns.
        max_vars: Most variables the whole trial may use. Builders
            ``reserve`` the names they cannot do without, so optional
            draws shrink first when the trial runs out of room.
    """

    def __init__(self, category, rng, size=2, max_vars=4):
        self.category = category
        self.rng = rng
        self.size = size
        self.max_vars = max_vars
        self.used = 0
        self.reserved = 0

    def reserve(self, count):
        self.reserved += count
        return self

    def fresh(self, low=0, high=None):
        high = self.size if high is None else min(high, self.size)
        self.reserved = max(self.reserved - low, 0)
        room = self.max_vars - self.used - self.reserved
        count = self.rng.randint(low, max(low, min(high, room)))
        names = frozenset(f"v{self.used + i + 1}" for i in range(count))
        self.used += count
        return names

    def kernel(self, dom, outputs):
        return random_kernel(self.category, dom, frozenset(dom) | outputs, self.rng)

    def shared(self):
        return self.fresh(0, 1)


def random_category(instance, rng, binary=False):
    """A per-trial instance: FinStoch and FinRel sometimes get a ternary alphabet."""
    values = ('0', '1') if binary or rng.random() < 0.75 else ('0', '1', '2')
    if instance == 'finstoch':
        return FinStoch.uniform(values=values)
    if instance == 'finrel':
        return FinRel.uniform(values=values)
    if instance == 'gauss':
        return Gauss.uniform(dim=1 if binary else rng.choice((1, 1, 2)))
    return SynVar()


def with_default(category):
    """
    ``category`` with a default object so generated names are assignable;
    per-variable assignments without a default lend the first one.
    """
    theta = category.theta
    if not isinstance(theta, Assignment) or theta.default is not None or not theta.overrides:
        return category
    default = theta.overrides[min(theta.overrides)]
    logger.debug("generated variables take the assignment of %s", min(theta.overrides))
    if category.kind == 'gauss':
        return Gauss(Assignment(default, theta.overrides), category.tolerance)
    return type(category)(Assignment(default, theta.overrides))


# Builders


def build_parallel(scope, count):
    scope.reserve(count)
    shared = scope.shared()
    names = 'abc'[:count]
    return {name: scope.kernel(shared | scope.fresh(0, 1), scope.fresh(1)) for name in names}


def build_single(scope):
    scope.reserve(1)
    return {'a': scope.kernel(scope.fresh(0), scope.fresh(1))}


def build_chain(scope):
    scope.reserve(2)
    a = scope.kernel(scope.fresh(0, 1), scope.fresh(1))
    b = scope.kernel(a.cod, scope.fresh(0, 1))
    c = scope.kernel(b.cod, scope.fresh(1, 1))
    return {'a': a, 'b': b, 'c': c}


def build_unit_coh(scope):
    scope.reserve(1)
    shared = scope.shared()
    return {
        'a': scope.kernel(shared | scope.fresh(0, 1), scope.fresh(1)),
        'e': scope.kernel(shared | scope.fresh(0, 1), scope.fresh(0, 1)),
    }


def build_then_coh(scope):
    scope.reserve(1)
    a = scope.kernel(scope.fresh(0, 1), scope.fresh(1))
    return {'a': a, 'e': scope.kernel(a.cod, scope.fresh(0, 1))}


def build_extension(scope):
    e = scope.kernel(scope.fresh(0, 1), scope.fresh(0, 1))
    return {'e': e, 'h': scope.kernel(e.cod | scope.fresh(0, 1), scope.fresh(0, 1))}


def build_down_closed(scope):
    scope.reserve(2)
    shared = scope.shared()
    kernels = {}
    for side in 'ab':
        small = scope.kernel(shared | scope.fresh(0, 1), scope.fresh(1, 1))
        kernels[f"{side}_small"] = small
        kernels[f"h{side}"] = scope.kernel(small.cod | scope.fresh(0, 1), scope.fresh(0, 1))
    return kernels


def build_up_closed(scope):
    scope.reserve(2)
    a = scope.kernel(scope.fresh(0, 1), scope.fresh(1, 1))
    b = scope.kernel(a.cod, scope.fresh(1, 1))
    return {'a': a, 'b': b, 'h': scope.kernel(b.cod | scope.fresh(0, 1), scope.fresh(0, 1))}


def build_exchange(scope):
    scope.reserve(2)
    shared = scope.shared()
    kernels = {}
    for side in 'ab':
        first = scope.kernel(shared | scope.fresh(0, 1), scope.fresh(1, 1))
        kernels[f"{side}1"] = first
        kernels[f"{side}2"] = scope.kernel(first.cod, scope.fresh(0, 1))
    return kernels


# Checks


def _attempt(build):
    try:
        return build()
    except DefinednessError:
        return None


def _loosely_equal(left, right, what):
    """Equal when either side is defined."""
    left, right = _attempt(left), _attempt(right)
    if left is None and right is None:
        return None
    if left is None or right is None:
        return f"{what}: only one side is defined"
    return None if left == right else f"{what}: the two sides differ"


def _extends(small, big, witness):
    """``small ⊑ big`` through ``witness``, cross-checked by the decision procedure where one exists."""
    if witness.replay(small) != big:
        return f"witness does not rebuild {big!r} from {small!r}"
    flags = big.category.flags
    if flags.has_conditionals and flags.del_cancellative:
        found = subkernel(small, big)
        if not found:
            return f"subkernel decision refutes {small!r} ⊑ {big!r}: {found.reason}"
    return None


def _first_failure(*reasons):
    return next((reason for reason in reasons if reason), None)


def check_plus_com(k):
    return _loosely_equal(lambda: par(k['a'], k['b']), lambda: par(k['b'], k['a']), 'a ⊕ b vs b ⊕ a')


def check_plus_unit_exist(k):
    a = k['a']
    units = (identity_kernel(a.category, ()), identity_kernel(a.category, a.dom))
    if any(par(e, a) == a for e in units):
        return None
    return "no identity kernel is a ⊕-unit of a"


def check_plus_assoc(k):
    a, b, c = k['a'], k['b'], k['c']
    return _loosely_equal(lambda: par(par(a, b), c), lambda: par(a, par(b, c)), '(a ⊕ b) ⊕ c vs a ⊕ (b ⊕ c)')


def check_then_unit_exist_left(k):
    a = k['a']
    return None if seq(identity_kernel(a.category, a.dom), a) == a else "id ⊙ a differs from a"


def check_then_unit_exist_right(k):
    a = k['a']
    return None if seq(a, identity_kernel(a.category, a.cod)) == a else "a ⊙ id differs from a"


def check_then_assoc(k):
    a, b, c = k['a'], k['b'], k['c']
    return _loosely_equal(lambda: seq(seq(a, b), c), lambda: seq(a, seq(b, c)), '(a ⊙ b) ⊙ c vs a ⊙ (b ⊙ c)')


def check_plus_unit_coh(k):
    a, e = k['a'], k['e']
    big = par(a, e)
    witness = SubkernelWitness(e.dom - a.dom, par(identity_kernel(a.category, a.cod), e))
    return _extends(a, big, witness)


def check_then_unit_coh_right(k):
    a, e = k['a'], k['e']
    return _extends(a, seq(a, e), SubkernelWitness(frozenset(), e))


def check_unit_closure(k):
    e, h = k['e'], k['h']
    extension = h.dom - e.cod
    bigger = seq(par(e, identity_kernel(e.category, extension)), h)
    if marginal_kernel(bigger, bigger.dom) != identity_kernel(e.category, bigger.dom):
        return "extension of a unit does not preserve its inputs"
    return _extends(e, bigger, SubkernelWitness(extension, h))


def check_plus_down_closed(k):
    a_small, b_small, ha, hb = k['a_small'], k['b_small'], k['ha'], k['hb']
    category = a_small.category
    extra_a, extra_b = ha.dom - a_small.cod, hb.dom - b_small.cod
    a = seq(par(a_small, identity_kernel(category, extra_a)), ha)
    b = seq(par(b_small, identity_kernel(category, extra_b)), hb)
    big = _attempt(lambda: par(a, b))
    if big is None:
        return None
    small = _attempt(lambda: par(a_small, b_small))
    if small is None:
        return "a ⊕ b is defined but a′ ⊕ b′ is not"
    return _extends(small, big, SubkernelWitness(extra_a | extra_b, par(ha, hb)))


def check_then_up_closed(k):
    a, b, h = k['a'], k['b'], k['h']
    category = a.category
    extension = h.dom - b.cod
    identity = identity_kernel(category, extension)
    target = seq(par(seq(a, b), identity), h)
    a_big = par(a, identity)
    b_big = seq(par(b, identity), h)
    if seq(a_big, b_big) != target:
        return "the split a′ ⊙ b′ does not rebuild c′"
    return _first_failure(
        _extends(a, a_big, SubkernelWitness(extension, identity_kernel(category, a_big.cod))),
        _extends(b, b_big, SubkernelWitness(extension, h)),
    )


def check_rev_exchange(k):
    a1, a2, b1, b2 = k['a1'], k['a2'], k['b1'], k['b2']
    return _loosely_equal(
        lambda: par(seq(a1, a2), seq(b1, b2)),
        lambda: seq(par(a1, b1), par(a2, b2)),
        '(a1 ⊙ a2) ⊕ (b1 ⊙ b2) vs (a1 ⊕ b1) ⊙ (a2 ⊕ b2)',
    )


@dataclass(frozen=True)
class Condition:
    build: object
    check: object


CONDITIONS = {
    'plus-com': Condition(lambda s: build_parallel(s, 2), check_plus_com),
    'plus-unit-exist': Condition(build_single, check_plus_unit_exist),
    'plus-assoc': Condition(lambda s: build_parallel(s, 3), check_plus_assoc),
    'then-unit-exist-l': Condition(build_single, check_then_unit_exist_left),
    'then-unit-exist-r': Condition(build_single, check_then_unit_exist_right),
    'then-assoc': Condition(build_chain, check_then_assoc),
    'plus-unit-coh': Condition(build_unit_coh, check_plus_unit_coh),
    'then-unit-coh-r': Condition(build_then_coh, check_then_unit_coh_right),
    'unit-closure': Condition(build_extension, check_unit_closure),
    'plus-down-closed': Condition(build_down_closed, check_plus_down_closed),
    'then-up-closed': Condition(build_up_closed, check_then_up_closed),
    'rev-exchange': Condition(build_exchange, check_rev_exchange),
}


def recheck(condition, kernels):
    """Run ``condition``'s check on named kernels, e.g. a reloaded counterexample."""
    return CONDITIONS[condition].check(kernels)


def run_trial(condition, instance, seed, trial, size=2, binary=False, max_vars=4):
    """
    One trial of ``condition``.

    ``instance`` is an instance name (a fresh category per trial) or a
    category to draw every trial from.

    Returns:
        ``(kernels, reason)``; reason is None when the trial passes.
    """
    rng = random.Random(f"{seed}:{condition}:{trial}")
    if isinstance(instance, str):
        category = random_category(instance, rng, binary)
    else:
        category = with_default(instance)
    kernels = CONDITIONS[condition].build(TrialScope(category, rng, size, max_vars))
    return kernels, CONDITIONS[condition].check(kernels)


def shrink(condition, instance, seed, trial, kernels, reason):
    """Replay a failing trial with fewer variables and the binary alphabet; keep the smallest failure."""
    for size, binary in ((2, True), (1, False), (1, True)):
        smaller, smaller_reason = run_trial(condition, instance, seed, trial, size, binary)
        logger.debug("shrink %s trial %d size=%d binary=%s: %s", condition, trial, size, binary, smaller_reason)
        if smaller_reason:
            kernels, reason = smaller, smaller_reason
    return kernels, reason


def frame_check(condition, instance, seed=0, trials=None):
    """
    Run ``trials`` randomized trials of one frame condition.

    Returns:
        A JSON-serializable report; a failing condition carries its first
        counterexample, shrunk and dumped in the kernel-file format.
    """
    from .serializers import dump_kernel_file

    if condition not in CONDITIONS:
        raise KeyError(condition)
    trials = settings.DIBI_FRAME_TRIALS if trials is None else trials
    name = instance if isinstance(instance, str) else instance.kind
    passed, failed, errors, counterexample = 0, 0, [], None
    for trial in range(trials):
        try:
            kernels, reason = run_trial(condition, instance, seed, trial)
        except DibiError as exc:
            logger.debug("%s trial %d on %s raised %s", condition, trial, name, exc)
            errors.append({'trial': trial, 'error': type(exc).__name__, 'message': str(exc)})
            continue
        if reason is None:
            passed += 1
            continue
        failed += 1
        logger.debug("%s trial %d on %s fails: %s", condition, trial, name, reason)
        if counterexample is None:
            kernels, reason = shrink(condition, instance, seed, trial, kernels, reason)
            category = next(iter(kernels.values())).category
            counterexample = {
                'trial': trial,
                'reason': reason,
                'file': dump_kernel_file(category, kernels),
            }
    report = {
        'condition': condition,
        'instance': name,
        'seed': seed,
        'trials': trials,
        'passed': passed,
        'failed': failed,
        'errors': errors,
        'ok': not failed and not errors,
        'counterexample': counterexample,
    }
    logger.info("%s on %s: %d/%d trials pass", condition, name, passed, trials)
    return report


def run_conditions(instance, seed, trials, conditions):
    return [frame_check(condition, instance, seed, trials) for condition in conditions]


def frame_suite(instance, seed=0, trials=None, conditions=None, runner=None):
    """
    Every condition (or the named ones) on one instance.

    Args:
        runner: Callable ``(instance, seed, trials, conditions) -> reports``;
            defaults to :func:`run_conditions` in-process.
    """
    runner = runner or run_conditions
    conditions = list(CONDITIONS) if conditions is None else list(conditions)
    reports = sorted(runner(instance, seed, trials, conditions), key=lambda r: list(CONDITIONS).index(r['condition']))
    return {
        'instance': instance if isinstance(instance, str) else instance.kind,
        'seed': seed,
        'conditions': reports,
        'ok': all(r['ok'] for r in reports),
    }
