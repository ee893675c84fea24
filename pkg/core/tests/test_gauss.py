import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from core.ci import CIQuery, decide, ext_superset_ci, markov_ci, superset_ci
from core.exceptions import DimensionMismatch
from core.gauss import Gauss, cross_covariance, gauss_state
from core.kernels import conditional_kernel, marginal_kernel, par, random_kernel, seq

from .helpers import fixture, rng, seeds


class GaussMapTest(SimpleTestCase):
    def setUp(self):
        self.C = Gauss.uniform(dim=1, tolerance=1e-9, v=2)

    def test_dimensions_follow_the_assignment(self):
        """Test a list is as wide as the sum of its variables' dimensions."""
        self.assertEqual(self.C.width(('v', 'x')), 3)
        self.assertEqual(self.C.offsets(('x', 'v', 'y')), [0, 1, 3])
        self.assertEqual(self.C.copy(('v',)).M.shape, (4, 2))

    def test_covariance_must_be_symmetric(self):
        """Test an asymmetric covariance is rejected."""
        with self.assertRaises(DimensionMismatch):
            self.C.state(('x', 'y'), [[1.0, 0.5], [0.0, 1.0]])

    def test_covariance_must_be_positive_semidefinite(self):
        """Test a negative variance is rejected."""
        with self.assertRaises(DimensionMismatch):
            self.C.state(('x',), [[-1.0]])

    def test_composition_pushes_the_noise_forward(self):
        """Test a noisy doubling of a standard normal has variance 4 + 1."""
        C = self.C
        prior = C.state(('x',), [[1.0]], [1.0])
        double = C.make(('x',), ('y',), [[2.0]], [[1.0]], [0.5])
        composite = C.compose(prior, double)
        self.assertTrue(np.allclose(composite.cov, [[5.0]]))
        self.assertTrue(np.allclose(composite.mean, [2.5]))

    def test_equality_is_within_tolerance(self):
        """Test maps closer than the tolerance compare equal."""
        C = self.C
        self.assertTrue(C.equal(C.state(('x',), [[1.0]]), C.state(('x',), [[1.0 + 1e-12]])))
        self.assertFalse(C.equal(C.state(('x',), [[1.0]]), C.state(('x',), [[1.0 + 1e-6]])))

    def test_singular_block_uses_the_pseudo_inverse(self):
        """Test conditioning on a deterministic variable warns and still reassembles."""
        C = self.C
        f = C.state(('x', 'y'), [[0.0, 0.0], [0.0, 1.0]], [3.0, 0.0])
        with self.assertLogs('core.gauss', 'WARNING'):
            marginal, cond = C.conditional(f, 1)
        self.assertTrue(C.equal(C.reassemble(marginal, cond), f))
        self.assertFalse(C.conditionals_unique(f))

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_conditional_reassembles(self, seed):
        """Test marginal and Schur-complement conditional rebuild a random map."""
        C = Gauss.uniform(dim=1, tolerance=1e-7)
        f = C.random_morphism(('w',), ('x', 'y'), rng(seed))
        marginal, cond = C.conditional(f, 1)
        self.assertTrue(C.equal(C.reassemble(marginal, cond), f))

    def test_drop_inputs_needs_zero_columns(self):
        """Test an input with a nonzero coefficient cannot be dropped."""
        C = self.C
        f = C.make(('x', 'y'), ('z',), [[0.0, 1.0]])
        self.assertEqual(tuple(C.drop_inputs(f, (1,)).dom), ('y',))
        self.assertIsNone(C.drop_inputs(f, (0,)))


class GaussCITest(SimpleTestCase):
    """x and y each add unit noise to a shared standard normal w."""

    def setUp(self):
        self.file = fixture('gauss_ci.json')
        self.s = self.file.kernel('s')

    def test_fixture_factorizes_through_w(self):
        """Test s = s_w ⊙ (g_x ⊕ g_y)."""
        s_w, g_x, g_y = (self.file.kernel(name) for name in ('s_w', 'g_x', 'g_y'))
        self.assertEqual(seq(s_w, par(g_x, g_y)), self.s)
        self.assertEqual(conditional_kernel(marginal_kernel(self.s, {'w', 'x'}), {'w'}), g_x)

    def test_independent_given_w(self):
        """Test x ⊥ y | w holds in every flavor."""
        for flavor in ('dibi', 'plain', 'markov', 'superset', 'ext-superset'):
            with self.subTest(flavor=flavor):
                self.assertTrue(decide(self.s, CIQuery({'w'}, {'x'}, {'y'}, flavor=flavor)))

    def test_dependent_once_w_is_hidden(self):
        """Test x and y are correlated when w is only marginalized."""
        q = CIQuery(set(), {'x'}, {'y'}, {'w'}, flavor='markov')
        self.assertFalse(markov_ci(self.s, q))
        self.assertFalse(superset_ci(self.s, q))
        self.assertFalse(ext_superset_ci(self.s, q))
        self.assertFalse(decide(self.s, CIQuery(set(), {'x'}, {'y'}, {'w'}, flavor='dibi')))

    def test_cross_covariance(self):
        """Test the covariance of x and y is 1 and vanishes given w."""
        C = self.s.category
        self.assertTrue(np.allclose(cross_covariance(C, self.s.core, set(), {'x'}, {'y'}), [[1.0]]))
        self.assertTrue(np.allclose(cross_covariance(C, self.s.core, {'w'}, {'x'}, {'y'}), [[0.0]]))

    def test_gauss_state_builds_the_fixture(self):
        """Test a state built from the covariance of w, x and y equals the fixture state."""
        C = self.s.category
        built = gauss_state(C, {'y', 'x', 'w'}, [[1.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])
        self.assertEqual(built, self.s)
        self.assertEqual(built.dom, frozenset())
        with self.assertRaises(DimensionMismatch):
            gauss_state(C, {'x', 'y'}, [[1.0, 2.0], [2.0, 1.0]])

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_random_states_agree_across_flavors(self, seed):
        """Test Markov CI, the DIBI formula and extended superset CI agree on random states."""
        C = Gauss.uniform(dim=1, tolerance=1e-7)
        k = random_kernel(C, (), {'w', 'x', 'y'}, rng(seed))
        q = CIQuery({'w'}, {'x'}, {'y'})
        self.assertEqual(markov_ci(k, q), decide(k, q))
        self.assertEqual(markov_ci(k, q), ext_superset_ci(k, q))
