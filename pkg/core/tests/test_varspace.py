from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.exceptions import DuplicateVariable, InvalidVariable, NotAPermutation
from core.varspace import (
    check_name, is_canonical, positions, rewiring_between, set_to_list, split, var_key, varset,
)

NAMES = ['a', 'b', 'w', 'x', 'x1', 'x2', 'x10', 'y', 'z', 'u1', 'u2']


class VariableNameTest(SimpleTestCase):
    def test_valid_names(self):
        """Test identifiers are accepted unchanged."""
        for name in ('x', '_tmp', 'u12', 'Alpha'):
            self.assertEqual(check_name(name), name)

    def test_invalid_names(self):
        """Test non-identifiers raise InvalidVariable."""
        for name in ('', '1x', 'x-y', 'x y', 3):
            with self.assertRaises(InvalidVariable):
                check_name(name)

    def test_varset_accepts_comma_lists(self):
        """Test a comma separated string builds the same set as a list."""
        self.assertEqual(varset('x, y,z'), frozenset({'x', 'y', 'z'}))
        self.assertEqual(varset(''), frozenset())


class VariableOrderTest(SimpleTestCase):
    def test_numeric_suffixes_compare_as_integers(self):
        """Test x2 sorts before x10 and a bare name before its numbered forms."""
        self.assertEqual(set_to_list({'x10', 'x2', 'x', 'w'}), ('w', 'x', 'x2', 'x10'))

    def test_leading_zeros_break_ties(self):
        """Test x01 and x1 are distinct and ordered deterministically."""
        self.assertLess(var_key('x01'), var_key('x1'))

    def test_is_canonical(self):
        """Test canonical lists are strictly increasing."""
        self.assertTrue(is_canonical(('x', 'y', 'z')))
        self.assertFalse(is_canonical(('y', 'x')))
        self.assertFalse(is_canonical(('x', 'x')))

    @given(st.sets(st.sampled_from(NAMES)))
    def test_canonical_list_is_canonical(self, names):
        """Test set_to_list always yields a canonical list of the same names."""
        items = set_to_list(names)
        self.assertTrue(is_canonical(items))
        self.assertEqual(frozenset(items), names)

    def test_split(self):
        """Test split returns the left-only, shared and right-only parts."""
        self.assertEqual(split({'x', 'y'}, {'y', 'z'}), ({'x'}, {'y'}, {'z'}))


class RewiringTest(SimpleTestCase):
    def test_rewiring_moves_items(self):
        """Test a rewiring moves aligned items into the target order."""
        r = rewiring_between(('x', 'y', 'z'), ('z', 'x', 'y'))
        self.assertEqual(r.apply(('x', 'y', 'z')), ('z', 'x', 'y'))
        self.assertEqual(r.apply((1, 2, 3)), (3, 1, 2))

    def test_inverse_and_then(self):
        """Test composing a rewiring with its inverse gives the identity."""
        r = rewiring_between(('x', 'y', 'z'), ('y', 'z', 'x'))
        self.assertTrue(r.then(r.inverse()).is_identity)

    def test_duplicates_are_rejected(self):
        """Test a source list with repeats raises DuplicateVariable."""
        with self.assertRaises(DuplicateVariable):
            rewiring_between(('x', 'x'), ('x', 'x'))

    def test_different_names_are_rejected(self):
        """Test lists over different names raise NotAPermutation."""
        with self.assertRaises(NotAPermutation):
            rewiring_between(('x', 'y'), ('x', 'z'))

    @settings(max_examples=50)
    @given(st.permutations(NAMES))
    def test_rewiring_reaches_any_permutation(self, order):
        """Test the rewiring between two orders applies to the target order."""
        src = tuple(NAMES)
        r = rewiring_between(src, tuple(order))
        self.assertEqual(r.apply(src), tuple(order))
        self.assertEqual(positions(order, src), r.perm)
