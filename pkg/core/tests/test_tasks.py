from unittest import mock

from django.test import SimpleTestCase

from core.exceptions import BudgetExceeded, Unsupported
from core.serializers import category_header
from core.tasks import run_frame_condition, run_harness_batch

from .helpers import fixture


class TrialTaskTest(SimpleTestCase):
    def test_frame_condition_task(self):
        """Test the task returns the same report as a direct run."""
        report = run_frame_condition.delay('finstoch', 'then-assoc', 0, 2).get()
        self.assertEqual(report['condition'], 'then-assoc')
        self.assertTrue(report['ok'])

    def test_frame_condition_failure_record(self):
        """Test a library error becomes a failure record instead of a task failure."""
        with mock.patch('core.tasks.frame_check', side_effect=Unsupported("no conditionals")):
            record = run_frame_condition('finrel', 'then-assoc', 0, 2)
        self.assertFalse(record['ok'])
        self.assertEqual(record['error'], 'Unsupported')
        self.assertEqual(record['code'], 'unsupported')
        self.assertEqual(record['condition'], 'then-assoc')

    def test_harness_batch_task(self):
        """Test a batch reports its slice of trials."""
        batch = run_harness_batch.delay(0, 3, 2).get()
        self.assertEqual((batch['start'], batch['count']), (3, 2))

    def test_frame_condition_from_a_file_header(self):
        """Test the task rebuilds a file category from its header."""
        header = category_header(fixture('ex62.json').category)
        report = run_frame_condition.delay(header, 'then-unit-exist-l', 0, 2).get()
        self.assertEqual(report['instance'], 'finstoch')
        self.assertTrue(report['ok'])

    def test_harness_batch_on_another_instance(self):
        """Test a batch runs its trials on the instance it names."""
        batch = run_harness_batch.delay(0, 0, 2, 'gauss').get()
        self.assertEqual(batch['instance'], 'gauss')
        self.assertEqual(batch['count'], 2)

    def test_harness_batch_failure_record(self):
        """Test a batch that gives up reports the budget error."""
        with mock.patch('core.tasks.harness_batch', side_effect=BudgetExceeded("too many nodes", budget=20)):
            record = run_harness_batch(0, 0, 5)
        self.assertEqual(record['code'], 'budget')
        self.assertEqual(record['start'], 0)
