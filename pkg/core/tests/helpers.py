import random
from pathlib import Path

from hypothesis import strategies as st

from core.finrel import FinRel
from core.finstoch import FinStoch
from core.gauss import Gauss
from core.serializers import load_kernel_file
from core.synvar import SynVar

FIXTURES = Path(__file__).resolve().parent.parent / 'fixtures'

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def fixture(name):
    return load_kernel_file(FIXTURES / name)


def instances():
    """One category per instance, each with small objects."""
    return {
        'finstoch': FinStoch.uniform(),
        'finrel': FinRel.uniform(),
        'gauss': Gauss.uniform(dim=1),
        'synvar': SynVar(),
    }


def rng(seed):
    return random.Random(seed)


def memory_seq(f, g):
    """``f ⊙ g`` on memory maps: run f, then g on each output memory."""
    return {m: d.bind(g.__getitem__) for m, d in f.items()}


def memory_par(f, g, dom_f, dom_g):
    """``f ⊕ g`` on memory maps: both read their share of the input and the output memories are merged."""
    dom_f, dom_g = frozenset(dom_f), frozenset(dom_g)
    return {
        m: f[m.restrict(dom_f)].product(g[m.restrict(dom_g)], combine=lambda a, b: a.merge(b))
        for m in {a.merge(b) for a in f for b in g if a.agrees(b)}
    }
