"""
Variable names, the global order on them, and rewirings.

Variable sets are plain ``frozenset[str]``; their canonical list form is the
tuple sorted by :func:`var_key`. Lists (``tuple[str, ...]``) are the objects
of every Markov-category instance and may repeat names.
"""
import re
from collections import Counter
from dataclasses import dataclass

from .exceptions import DuplicateVariable, InvalidVariable, NotAPermutation

VarSet = frozenset
VarList = tuple

_NAME = re.compile(r'[A-Za-z_][A-Za-z0-9_]*\Z')
_SUFFIX = re.compile(r'(.*?)(\d+)\Z')


def check_name(name):
    """Return ``name`` unchanged, or raise InvalidVariable."""
    if not isinstance(name, str) or not _NAME.match(name):
        raise InvalidVariable(f"invalid variable name: {name!r}")
    return name


def var_key(name):
    """
    Sort key realizing the total order on variables.

    Names compare by base name first, then by numeric suffix read as an
    integer, so ``x2`` sorts before ``x10`` and a bare ``x`` before ``x0``.
    The raw text breaks the remaining ties (``x01`` against ``x1``).
    """
    match = _SUFFIX.match(name)
    if match is None:
        return (name, 0, 0, name)
    base, digits = match.groups()
    return (base, 1, int(digits), name)


def varset(names=()):
    """Build a validated VarSet from any iterable of names (or a comma list)."""
    if isinstance(names, str):
        names = [part.strip() for part in names.split(',') if part.strip()]
    return frozenset(check_name(name) for name in names)


def set_to_list(s):
    """Canonical list form: the strictly increasing enumeration of ``s``."""
    return tuple(sorted(s, key=var_key))


def is_canonical(items):
    """True when ``items`` is duplicate-free and strictly increasing."""
    keys = [var_key(name) for name in items]
    return all(a < b for a, b in zip(keys, keys[1:]))


def split(s, t):
    """Return ``(s - t, s & t, t - s)``."""
    s, t = frozenset(s), frozenset(t)
    return s - t, s & t, t - s


def positions(items, names):
    """Indices of ``names`` inside the duplicate-free list ``items``."""
    index = {name: i for i, name in enumerate(items)}
    return tuple(index[name] for name in names)


@dataclass(frozen=True)
class Rewiring:
    """
    A permutation of wires.

    Attributes:
        src: Input list.
        dst: Output list, a permutation of ``src``.
        perm: ``perm[i]`` is the position in ``dst`` receiving ``src[i]``.
    """
    src: tuple
    dst: tuple
    perm: tuple

    def apply(self, items):
        """Move ``items`` (aligned with ``src``) into ``dst`` order."""
        out = [None] * len(items)
        for i, item in enumerate(items):
            out[self.perm[i]] = item
        return tuple(out)

    def inverse(self):
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return Rewiring(self.dst, self.src, tuple(inv))

    def then(self, other):
        """Rewiring that applies ``self`` and then ``other``."""
        if other.src != self.dst:
            raise NotAPermutation(f"cannot chain {self.dst} into {other.src}")
        return Rewiring(self.src, other.dst, tuple(other.perm[j] for j in self.perm))

    @property
    def is_identity(self):
        return all(i == j for i, j in enumerate(self.perm))


def rewiring_between(src, dst):
    """
    The unique position permutation carrying ``src`` to ``dst``.

    Raises:
        DuplicateVariable: ``src`` repeats a name.
        NotAPermutation: the two lists hold different names.
    """
    src, dst = tuple(src), tuple(dst)
    repeated = [name for name, count in Counter(src).items() if count > 1]
    if repeated:
        raise DuplicateVariable(f"repeated variables in {list(src)}: {sorted(repeated)}")
    if Counter(src) != Counter(dst):
        raise NotAPermutation(f"{list(dst)} is not a permutation of {list(src)}")
    where = {name: j for j, name in enumerate(dst)}
    return Rewiring(src, dst, tuple(where[name] for name in src))
