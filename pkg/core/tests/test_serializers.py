import copy
import json
import tempfile

from django.test import SimpleTestCase

from core.exceptions import KernelFileError
from core.serializers import dump_kernel_file, load_kernel_file, parse_kernel_file, render_document

from .helpers import FIXTURES, fixture


def document(name):
    with open(FIXTURES / name) as stream:
        return json.load(stream)


class KernelFileTest(SimpleTestCase):
    def test_fixtures_load(self):
        """Test every fixture validates into kernels of its instance."""
        for name, kind, count in (
            ('ex35.json', 'finstoch', 4), ('ex62.json', 'finstoch', 4),
            ('gauss_ci.json', 'gauss', 4), ('ex67.json', 'synvar', 3),
        ):
            with self.subTest(name=name):
                loaded = fixture(name)
                self.assertEqual(loaded.category.kind, kind)
                self.assertEqual(len(loaded.kernels), count)

    def test_dump_then_parse_gives_equal_kernels(self):
        """Test dumping a file and reading it back preserves every kernel."""
        for name in ('ex35.json', 'ex62.json', 'gauss_ci.json', 'ex67.json'):
            with self.subTest(name=name):
                loaded = fixture(name)
                text = render_document(dump_kernel_file(loaded.category, loaded.kernels))
                again = parse_kernel_file(json.loads(text))
                for kernel_name, kernel in loaded.kernels.items():
                    self.assertEqual(again.kernel(kernel_name), kernel)

    def test_unknown_kernel_name(self):
        """Test asking for a missing kernel names its path."""
        with self.assertRaises(KernelFileError) as caught:
            fixture('ex35.json').kernel('nope')
        self.assertEqual(caught.exception.path, '/kernels/nope')


class KernelFileErrorTest(SimpleTestCase):
    def assertFails(self, data, path, fragment=''):
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertEqual(caught.exception.path, path)
        self.assertIn(fragment, str(caught.exception))

    def test_instance_is_required(self):
        """Test a document without an instance is rejected at /instance."""
        self.assertFails({'kernels': {}}, '/instance')
        self.assertFails({'instance': 'quantum', 'kernels': {}}, '/instance')

    def test_alphabet_is_required(self):
        """Test a finite instance needs an alphabet."""
        self.assertFails({'instance': 'finstoch', 'kernels': {}}, '/alphabet')

    def test_probabilities_are_exact(self):
        """Test a float probability is rejected where it occurs."""
        data = document('ex35.json')
        data['kernels']['g1']['rows'][0]['output'][0]['p'] = 0.5
        self.assertFails(data, '/kernels/g1/rows/0/output/0/p', 'exact')

    def test_rows_must_sum_to_one(self):
        """Test a row with missing mass is rejected."""
        data = document('ex35.json')
        data['kernels']['g1']['rows'][0]['output'][0]['p'] = '1/4'
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertTrue(caught.exception.path.startswith('/kernels/g1'))
        self.assertIn('3/4', str(caught.exception))

    def test_outputs_preserve_inputs(self):
        """Test an output memory that rewrites the input is rejected."""
        data = document('ex35.json')
        data['kernels']['g1']['rows'][0]['output'][0]['memory']['z'] = '1'
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertIn('preserve', str(caught.exception))

    def test_values_stay_in_the_alphabet(self):
        """Test a value outside the alphabet is rejected."""
        data = document('ex62.json')
        data['kernels']['h0']['rows'][0]['output'][0]['memory']['z'] = '7'
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertIn("'7'", str(caught.exception))

    def test_variable_names(self):
        """Test invalid and repeated variable names are rejected."""
        data = copy.deepcopy(document('ex62.json'))
        data['kernels']['h0']['cod'] = ['z', 'z']
        self.assertFails(data, '/kernels/h0/cod', 'repeat')

    def test_domain_inside_codomain(self):
        """Test a kernel must output its inputs."""
        data = document('ex62.json')
        data['kernels']['f']['cod'] = ['x', 'y']
        self.assertFails(data, '/kernels/f/dom', 'missing from cod')

    def test_gaussian_shapes(self):
        """Test matrices must fit the dimensions."""
        data = document('gauss_ci.json')
        data['kernels']['g_x']['M'] = [[1.0, 2.0]]
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertTrue(caught.exception.path.startswith('/kernels/g_x'))

    def test_synvar_terms(self):
        """Test unknown generators and ill-typed terms are rejected."""
        data = document('ex67.json')
        data['kernels']['s']['term'] = 'c0 ; c7'
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertIn('unknown generator', str(caught.exception))
        data['kernels']['s']['term'] = 'c0'
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertIn('term has type', str(caught.exception))

    def test_generators_need_canonical_lists(self):
        """Test a generator declared over unsorted wires is rejected."""
        data = document('ex67.json')
        data['generators']['d'] = {'dom': ['y', 'x'], 'cod': ['u']}
        with self.assertRaises(KernelFileError) as caught:
            parse_kernel_file(data)
        self.assertTrue(caught.exception.path.startswith('/generators'))


class LoadKernelFileTest(SimpleTestCase):
    def test_missing_file(self):
        """Test an unreadable path is a KernelFileError."""
        with self.assertRaises(KernelFileError):
            load_kernel_file(FIXTURES / 'missing.json')

    def test_not_json(self):
        """Test a file that is not JSON is a KernelFileError."""
        with tempfile.NamedTemporaryFile('w', suffix='.json') as stream:
            stream.write('{"instance": ')
            stream.flush()
            with self.assertRaises(KernelFileError) as caught:
                load_kernel_file(stream.name)
        self.assertIn('not JSON', str(caught.exception))
