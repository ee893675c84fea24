import json
from unittest import mock

from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings

from core.ci import (
    CHECKS, CIQuery, chain_state, decide, evaluate, ext_superset_ci, fixed_cases, harness_batch, harness_jobs,
    harness_quotas, markov_ci, merge_batches, random_trial, run_batches, structured_state, superset_partition,
    theorem_harness, witness,
)
from core.exceptions import BudgetExceeded, InvalidVariable, ShapeError, Unsupported
from core.finrel import FinRel, from_flat
from core.finstoch import FinStoch, Memory, dirac, uniform
from core.kernels import Kernel, par, random_kernel, seq
from core.serializers import parse_kernel_file

from .helpers import fixture, rng, seeds


class CIQueryTest(SimpleTestCase):
    def test_blocks_must_be_disjoint(self):
        """Test a variable in two blocks is a ShapeError."""
        with self.assertRaises(ShapeError):
            CIQuery({'w'}, {'w', 'x'}, {'y'})

    def test_flavor_is_checked(self):
        """Test unknown flavors and plain CI with U are rejected."""
        with self.assertRaises(ShapeError):
            CIQuery({'w'}, {'x'}, {'y'}, flavor='strong')
        with self.assertRaises(ShapeError):
            CIQuery({'w'}, {'x'}, {'y'}, {'u'}, flavor='plain')

    def test_names_are_validated(self):
        """Test block members must be variable names."""
        with self.assertRaises(InvalidVariable):
            CIQuery({'w'}, {'1x'}, {'y'})

    def test_swapped_and_dict(self):
        """Test swapping exchanges X and Y and the dict view is canonical."""
        q = CIQuery({'w'}, {'x2', 'x10'}, {'y'}, {'u'})
        self.assertEqual(q.swapped().X, {'y'})
        self.assertEqual(q.as_dict(), {'W': ['w'], 'X': ['x2', 'x10'], 'Y': ['y'], 'U': ['u'], 'flavor': 'dibi'})

    def test_state_must_cover_the_query(self):
        """Test the kernel must be a state over exactly the query variables."""
        f = fixture('ex62.json').kernel('f')
        with self.assertRaises(ShapeError):
            decide(f, CIQuery(set(), {'x'}, {'y'}, {'z'}))
        with self.assertRaises(ShapeError):
            decide(fixture('ex62.json').kernel('h'), CIQuery(set(), {'x'}, {'y'}))


class FinStochCITest(SimpleTestCase):
    def setUp(self):
        self.file = fixture('ex62.json')

    def test_coin_mixture(self):
        """Test x ⊥ y | z holds in h for every flavor."""
        h = self.file.kernel('h')
        for flavor in ('dibi', 'plain', 'markov', 'superset', 'ext-superset'):
            with self.subTest(flavor=flavor):
                self.assertTrue(decide(h, CIQuery({'z'}, {'x'}, {'y'}, flavor=flavor)))

    def test_coin_mixture_without_z(self):
        """Test marginalizing z away makes x and y dependent."""
        q = CIQuery(set(), {'x'}, {'y'}, {'z'}, flavor='markov')
        self.assertFalse(decide(self.file.kernel('h'), q))

    def test_xor(self):
        """Test y = x XOR z is not independent of x given z in any flavor."""
        xor = self.file.kernel('xor')
        for flavor in ('dibi', 'markov', 'superset', 'ext-superset'):
            with self.subTest(flavor=flavor):
                self.assertFalse(decide(xor, CIQuery({'z'}, {'x'}, {'y'}, flavor=flavor)))

    def test_xor_is_pairwise_independent(self):
        """Test x and y of the xor state are independent once z is hidden."""
        self.assertTrue(markov_ci(self.file.kernel('xor'), CIQuery(set(), {'x'}, {'y'}, {'z'})))

    def test_superset_partition(self):
        """Test a private copy of x is placed with X."""
        C = FinStoch.uniform()
        r = rng(7)
        q = CIQuery({'w'}, {'x'}, {'y'}, {'u'}, flavor='superset')
        flip = Kernel({'w'}, {'w', 'x'}, C.table(('w',), ('x',), lambda a: uniform([('0',), ('1',)])), C)
        copy_x = Kernel({'w', 'x'}, {'u', 'w', 'x'}, C.table(('w', 'x'), ('u',), lambda a: dirac((a[1],))), C)
        k = seq(random_kernel(C, (), {'w'}, r), par(seq(flip, copy_x), random_kernel(C, {'w'}, {'w', 'y'}, r)))
        self.assertEqual(superset_partition(k, q), (frozenset(), frozenset({'u'}), frozenset()))
        self.assertTrue(decide(k, q))

    def test_superset_cap(self):
        """Test too many U variables exceed the superset budget."""
        C = FinStoch.uniform()
        q = CIQuery(set(), {'x'}, {'y'}, {'u1', 'u2'}, flavor='superset')
        k = random_kernel(C, (), q.variables, rng(8))
        with self.assertRaises(BudgetExceeded):
            superset_partition(k, q, max_u=1)

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_structured_states_display_their_notion(self, seed):
        """Test Markov-shaped states are Markov CI and superset-shaped ones superset CI."""
        C = FinStoch.uniform()
        r = rng(seed)
        q = CIQuery({'w'}, {'x'}, {'y'}, {'u'})
        self.assertTrue(markov_ci(structured_state(C, q, 'markov', r), q))
        self.assertIsNotNone(superset_partition(structured_state(C, q, 'superset', r), q))
        self.assertTrue(ext_superset_ci(structured_state(C, q, 'markov', r), q))

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_implications_on_random_states(self, seed):
        """Test every applicable check holds on random binary states."""
        C = FinStoch.uniform()
        q = CIQuery({'w'}, {'x'}, {'y'})
        values = evaluate(random_kernel(C, (), q.variables, rng(seed)), q)
        for name in CHECKS:
            self.assertTrue(CHECKS[name](values), name)


class FinRelCITest(SimpleTestCase):
    def setUp(self):
        self.C = FinRel.uniform()

    def relation(self, rows):
        names = ('w', 'x', 'y')
        return Kernel(frozenset(), frozenset(names), from_flat(
            {Memory(zip(names, row)) for row in rows}, names,
        ), self.C)

    def test_join_dependency(self):
        """Test Markov CI of relations is the join dependency on W."""
        q = CIQuery({'w'}, {'x'}, {'y'})
        product = self.relation([('0', x, y) for x in '01' for y in '01'] + [('1', '0', '0')])
        diagonal = self.relation([('0', '0', '0'), ('0', '1', '1')])
        self.assertTrue(markov_ci(product, q))
        self.assertFalse(markov_ci(diagonal, q))
        self.assertTrue(decide(product, CIQuery({'w'}, {'x'}, {'y'}, flavor='superset')))

    def test_extended_superset_needs_conditionals(self):
        """Test extended superset CI refuses on relations."""
        q = CIQuery({'w'}, {'x'}, {'y'}, flavor='ext-superset')
        with self.assertRaises(Unsupported):
            decide(self.relation([('0', '0', '0')]), q)


class SynVarCITest(SimpleTestCase):
    """Given w, x and y are independent, but u reads both."""

    def setUp(self):
        self.chain = chain_state()
        self.q = CIQuery({'w'}, {'x'}, {'y'}, {'u'})

    def test_chain_flavors(self):
        """Test the chain is Markov and extended superset CI but not superset CI."""
        values = evaluate(self.chain, self.q)
        self.assertTrue(values['dibi'])
        self.assertTrue(values['markov'])
        self.assertFalse(values['superset'])
        self.assertTrue(values['ext-superset'])

    def test_witness_blocks(self):
        """Test the extended decomposition puts d in the trailing block."""
        found = witness(self.chain, CIQuery({'w'}, {'x'}, {'y'}, {'u'}, flavor='ext-superset'))
        self.assertEqual(found.partition, {'u': 'H'})
        self.assertEqual(found.blocks['h'], (3,))
        self.assertFalse(witness(self.chain, CIQuery({'w'}, {'x'}, {'y'}, {'u'}, flavor='superset')))

    def test_node_budget(self):
        """Test decompositions refuse graphs above the node budget."""
        with override_settings(DIBI_SYNVAR_NODE_BUDGET=2):
            with self.assertRaises(BudgetExceeded):
                decide(self.chain, CIQuery({'w'}, {'x'}, {'y'}, {'u'}, flavor='superset'))


class GaussianFixtureTest(SimpleTestCase):
    def test_fixture_is_markov(self):
        """Test the Gaussian fixture displays x ⊥ y | w."""
        s = fixture('gauss_ci.json').kernel('s')
        self.assertTrue(decide(s, CIQuery({'w'}, {'x'}, {'y'}, flavor='markov')))


class HarnessTest(SimpleTestCase):
    def test_fixed_cases(self):
        """Test the named states get their expected answers."""
        for case in fixed_cases():
            with self.subTest(case=case['name']):
                self.assertTrue(case['ok'], case['actual'])

    def test_trials_are_reproducible(self):
        """Test a trial depends only on the seed, its instance and its index."""
        first, second = random_trial(3, 11, 'gauss'), random_trial(3, 11, 'gauss')
        self.assertEqual(first[2], second[2])
        self.assertEqual(first[1], second[1])
        self.assertEqual(first[3], second[3])

    def test_trials_draw_from_their_instance(self):
        """Test every trial lives in the instance it was asked for."""
        for instance in ('finstoch', 'gauss', 'synvar'):
            for index in range(10):
                with self.subTest(instance=instance, index=index):
                    self.assertEqual(random_trial(0, index, instance)[0].kind, instance)

    def test_gaussian_trials_stay_small(self):
        """Test Gaussian trials hide at most one variable."""
        for index in range(40):
            _, q, _, state = random_trial(5, index, 'gauss')
            self.assertLessEqual(len(q.U), 1)
            self.assertLessEqual(len(state.cod), 4)

    def test_quotas_keep_every_finstoch_trial(self):
        """Test the FinStoch quota is the trial count and the other instances get a fifth of it."""
        self.assertEqual(harness_quotas(20), {'finstoch': 20, 'gauss': 4, 'synvar': 4})
        self.assertEqual(harness_quotas(6), {'finstoch': 6, 'gauss': 2, 'synvar': 2})
        self.assertEqual(harness_quotas(0), {'finstoch': 0, 'gauss': 0, 'synvar': 0})

    def test_batches_merge_in_order(self):
        """Test merged batches add up their tallies per check and per instance."""
        one, two, three = harness_batch(1, 0, 5), harness_batch(1, 5, 5), harness_batch(1, 0, 2, 'synvar')
        merged = merge_batches([three, two, one])
        self.assertEqual(merged['trials'], 12)
        self.assertEqual(merged['instances']['finstoch']['trials'], 10)
        self.assertEqual(merged['instances']['synvar']['trials'], 2)
        self.assertEqual(list(merged['instances']), ['finstoch', 'synvar'])
        for name in CHECKS:
            self.assertEqual(
                merged['checks'][name]['checked'],
                sum(batch['checks'][name]['checked'] for batch in (one, two, three)),
            )

    def test_small_harness_passes(self):
        """Test a short harness run finds no counterexample and serializes to JSON."""
        report = theorem_harness(seed=0, trials=20, batch_size=7)
        self.assertTrue(report['passed'], report['counterexamples'])
        self.assertEqual(report['instances']['finstoch']['trials'], 20)
        self.assertEqual(report['instances']['gauss']['trials'], 4)
        self.assertEqual(report['instances']['synvar']['trials'], 4)
        self.assertEqual(report['trials'], 28)
        json.dumps(report)

    def test_runner_is_pluggable(self):
        """Test a custom runner receives every batch of every instance."""
        calls = []

        def runner(seed, jobs):
            calls.extend(jobs)
            return run_batches(seed, jobs)

        theorem_harness(seed=2, trials=10, batch_size=4, runner=runner)
        self.assertEqual(calls, [
            ('finstoch', 0, 4), ('finstoch', 4, 4), ('finstoch', 8, 2), ('gauss', 0, 2), ('synvar', 0, 2),
        ])
        self.assertEqual(harness_jobs(10, 4), calls)

    def test_violations_are_shrunk_and_serialized(self):
        """Test a broken check yields a counterexample file that loads back."""
        with mock.patch.dict(CHECKS, {'markov<=>dibi': lambda v: False}):
            batch = harness_batch(0, 0, 10)
        example = next(e for e in batch['counterexamples'] if e['check'] == 'markov<=>dibi')
        self.assertEqual(example['instance'], 'finstoch')
        self.assertEqual(example['query']['U'], [])
        state = parse_kernel_file(example['file']).kernel('state')
        self.assertEqual(state.cod, {'w', 'x', 'y'})
