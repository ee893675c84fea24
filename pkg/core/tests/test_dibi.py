import random
from fractions import Fraction

from django.test import SimpleTestCase

from core.ci import chain_state
from core.dibi import (
    And, Atom, Emp, Fatsemi, FatsemiWitness, SatStrategy, Star, StarWitness, Top, ci_formula, free_vars, parse,
    pretty, random_formula, sat_atomic, satisfies, size,
)
from core.exceptions import BudgetExceeded, ParseError, Unsupported
from core.finrel import FinRel
from core.finstoch import Dist, FinStoch, StochTable
from core.kernels import Kernel, marginal_kernel, par, random_kernel, subkernel

from .helpers import fixture, rng


class FormulaSyntaxTest(SimpleTestCase):
    def test_ci_formula_text(self):
        """Test the conditional-independence formula parses to ci_formula."""
        text = '<{}|>{z}> ; (<{z}|>{x, z}> * <{z}|>{y, z}>)'
        self.assertEqual(parse(text), ci_formula({'z'}, {'x'}, {'y'}))
        self.assertEqual(pretty(parse(text)), '<{}|>{z}> ; <{z}|>{x, z}> * <{z}|>{y, z}>')

    def test_precedence_and_associativity(self):
        """Test ';' binds loosest, then '*', then '&', all to the right."""
        self.assertEqual(parse('top ; emp * top & emp'), Fatsemi(Top(), Star(Emp(), And(Top(), Emp()))))
        self.assertEqual(parse('top * emp * top'), Star(Top(), Star(Emp(), Top())))
        self.assertEqual(parse('(top * emp) * top'), Star(Star(Top(), Emp()), Top()))

    def test_pretty_uses_few_parentheses(self):
        """Test parentheses only appear where precedence needs them."""
        self.assertEqual(pretty(Star(Star(Top(), Emp()), Top())), '(top * emp) * top')
        self.assertEqual(pretty(Star(Top(), Star(Emp(), Top()))), 'top * emp * top')
        self.assertEqual(pretty(And(Fatsemi(Top(), Emp()), Top())), '(top ; emp) & top')

    def test_pretty_parses_back(self):
        """Test parse(pretty(f)) == f on random formulas."""
        for seed in range(1000):
            formula = random_formula(random.Random(seed), {'x', 'y', 'z', 'x10'}, depth=4)
            self.assertEqual(parse(pretty(formula)), formula, pretty(formula))

    def test_atoms_normalize_their_sets(self):
        """Test repeated names and order inside braces do not matter."""
        self.assertEqual(parse('<{y, x, y}|>{x}>'), Atom({'x', 'y'}, {'x'}))
        self.assertEqual(free_vars(parse('<{x}|>{y}> * <{}|>{z}>')), {'x', 'y', 'z'})
        self.assertEqual(size(parse('<{x}|>{y}> * <{}|>{z}> ; top')), 5)

    def test_missing_close_bracket(self):
        """Test an unfinished atom reports where and what was expected."""
        with self.assertRaises(ParseError) as caught:
            parse('<{x}|>{y}')
        self.assertEqual((caught.exception.line, caught.exception.column), (1, 10))
        self.assertEqual(caught.exception.expected, ('>',))

    def test_missing_operand(self):
        """Test a dangling connective lists the formula starters."""
        with self.assertRaises(ParseError) as caught:
            parse('top &\n')
        self.assertEqual(caught.exception.expected, ('(', '<', 'emp', 'top'))
        self.assertEqual(caught.exception.line, 2)

    def test_trailing_input(self):
        """Test text after a complete formula is rejected."""
        with self.assertRaises(ParseError) as caught:
            parse('top top')
        self.assertEqual(caught.exception.expected, ('end',))
        self.assertEqual(caught.exception.column, 5)

    def test_bad_character(self):
        """Test characters outside the syntax fail in the tokenizer."""
        with self.assertRaises(ParseError):
            parse('<{x}|>{y}> % top')


class SatisfactionTest(SimpleTestCase):
    def setUp(self):
        self.file = fixture('ex62.json')
        self.h = self.file.kernel('h')
        self.xor = self.file.kernel('xor')
        self.ci = ci_formula({'z'}, {'x'}, {'y'})

    def test_coin_mixture_is_independent_given_z(self):
        """Test h satisfies the CI formula and xor does not."""
        self.assertTrue(satisfies(self.h, self.ci))
        self.assertFalse(satisfies(self.xor, self.ci))

    def test_top_and_emp_always_hold(self):
        """Test the constants hold on any kernel."""
        for formula in (Top(), Emp(), And(Top(), Emp())):
            self.assertTrue(satisfies(self.xor, formula))

    def test_atoms(self):
        """Test <S|>T> needs a subkernel with domain S producing T."""
        f = self.file.kernel('f')
        self.assertTrue(sat_atomic(f, {'z'}, {'x'}))
        self.assertFalse(sat_atomic(f, set(), {'x'}))
        self.assertTrue(sat_atomic(self.h, set(), {'x', 'y'}))
        self.assertFalse(sat_atomic(self.h, set(), {'q'}))

    def test_star_on_the_conditional(self):
        """Test f splits into independent coins."""
        f = self.file.kernel('f')
        self.assertTrue(satisfies(f, parse('<{z}|>{x, z}> * <{z}|>{y, z}>')))
        self.assertFalse(satisfies(f, parse('<{}|>{x}> * <{}|>{y}>')))

    def test_witness_supplied(self):
        """Test replaying explicit ⨟ and ∗ witnesses."""
        h0, f = self.file.kernel('h0'), self.file.kernel('f')
        g1, g2 = marginal_kernel(f, {'x', 'z'}), marginal_kernel(f, {'y', 'z'})
        witnesses = {
            (): FatsemiWitness(h0, f),
            ('r',): StarWitness(g1, g2, subkernel(par(g1, g2), f)),
        }
        self.assertTrue(satisfies(self.h, self.ci, SatStrategy('witness-supplied', witnesses=witnesses)))
        bad = {**witnesses, (): FatsemiWitness(h0, random_kernel(h0.category, {'z'}, {'x', 'y', 'z'}, rng(0)))}
        self.assertFalse(satisfies(self.h, self.ci, SatStrategy('witness-supplied', witnesses=bad)))

    def test_witness_supplied_needs_witnesses(self):
        """Test a missing ∗ witness refuses instead of guessing."""
        with self.assertRaises(Unsupported):
            satisfies(self.h, self.ci, SatStrategy('witness-supplied', witnesses={}))

    def test_budget(self):
        """Test a tiny budget gives up."""
        with self.assertRaises(BudgetExceeded):
            satisfies(self.h, self.ci, SatStrategy(budget=1))

    def test_unknown_mode(self):
        """Test strategies only take the known modes."""
        with self.assertRaises(Unsupported):
            SatStrategy('guess')

    def test_completion_dependent_split_is_refused(self):
        """Test a ⨟ split whose answer hangs on massless conditional rows raises Unsupported."""
        C = FinStoch.uniform()
        quarter = Fraction(1, 4)
        state = Kernel(
            frozenset(), frozenset({'x', 'y', 'z'}),
            C.validate(StochTable((), ('x', 'y', 'z'), {(): Dist({
                ('0', '0', '0'): quarter, ('0', '1', '0'): quarter, ('1', '0', '0'): quarter, ('1', '1', '0'): quarter,
            })})),
            C,
        )
        with self.assertRaises(Unsupported):
            satisfies(state, parse('<{}|>{z}> ; (<{}|>{x}> * <{z}|>{y, z}>)'))

    def test_relations_refuse(self):
        """Test atoms and splits refuse on an instance without conditionals."""
        k = random_kernel(FinRel.uniform(), (), {'x', 'y'}, rng(5))
        self.assertTrue(satisfies(k, Top()))
        with self.assertRaises(Unsupported):
            satisfies(k, parse('<{}|>{x}> * <{}|>{y}>'))


class StructuralSatisfactionTest(SimpleTestCase):
    """The free-category chain w → x, y → u."""

    def setUp(self):
        self.chain = chain_state()

    def test_chain_is_independent_given_w(self):
        """Test the CI formula holds structurally once u is marginalized."""
        self.assertTrue(satisfies(marginal_kernel(self.chain, {'w', 'x', 'y'}), ci_formula({'w'}, {'x'}, {'y'})))

    def test_atoms_cut_the_graph(self):
        """Test atoms hold for every set the graph produces from nothing."""
        self.assertTrue(satisfies(self.chain, parse('<{}|>{x}>')))
        self.assertTrue(satisfies(self.chain, parse('<{}|>{u}>')))
