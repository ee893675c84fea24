from celery import group

from core.ci import CHECKS, theorem_harness
from core.exceptions import DibiError
from core.tasks import run_harness_batch

from ._base import EX_FALSE, EX_OK, DibiCommand


class Command(DibiCommand):
    help = "Cross-check the implications between the CI notions on random states (exit 0 when none is violated)"

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=0, help='Harness seed')
        parser.add_argument('--trials', type=int, help='Random trials (default DIBI_HARNESS_TRIALS)')
        parser.add_argument('--batch-size', type=int, default=50, help='Trials per batch')
        parser.add_argument('--parallel', action='store_true', help='Dispatch batches as Celery tasks')
        super().add_arguments(parser)

    def run(self, **options):
        runner = self.dispatch if options['parallel'] else None
        report = theorem_harness(options['seed'], options['trials'], options['batch_size'], runner=runner)
        return report, EX_OK if report['passed'] else EX_FALSE

    def dispatch(self, seed, jobs):
        if not jobs:
            return []
        batches = group([run_harness_batch.s(seed, start, count, instance) for instance, start, count in jobs])
        results = batches.apply_async().get()
        failed = [batch for batch in results if 'error' in batch]
        if failed:
            first = failed[0]
            raise DibiError(
                f"{len(failed)} harness batch(es) failed; {first['instance']} {first['start']}+{first['count']}: "
                f"{first['message']}"
            )
        return results

    def render_text(self, report):
        mix = ', '.join(f"{counts['trials']} {kind}" for kind, counts in report['instances'].items())
        lines = [f"seed {report['seed']}: {report['trials']} trials ({mix}), {report['skipped']} skipped"]
        for name in CHECKS:
            counts = report['checks'][name]
            status = self.style.SUCCESS('ok') if not counts['violations'] else self.style.ERROR('VIOLATED')
            lines.append(f"  {name:<18} {status} {counts['checked']} checked, {counts['violations']} violations")
        for case in report['fixed']:
            status = self.style.SUCCESS('ok') if case['ok'] else self.style.ERROR('FAIL')
            lines.append(f"  fixed {case['name']:<12} {status}")
        for example in report['counterexamples']:
            lines.append(f"  {example['instance']} trial {example['trial']} violates {example['check']}: {example['query']}")
        return '\n'.join(lines)
