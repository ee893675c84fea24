from celery import group

from core.frames import CONDITIONS, INSTANCES, frame_suite
from core.serializers import category_header, load_kernel_file
from core.tasks import run_frame_condition

from ._base import EX_FALSE, EX_OK, DibiCommand


class Command(DibiCommand):
    help = "Run the randomized frame-condition suite on kernel instances (exit 0 when every condition holds)"

    def add_arguments(self, parser):
        parser.add_argument('file', nargs='?', help='Draw trials from the instance declared in this kernel file')
        parser.add_argument('--random', action='store_true', help='Draw a fresh random instance per trial')
        parser.add_argument(
            '--instance', action='append', choices=INSTANCES,
            help='Instance for random trials (repeatable; default finstoch and finrel)',
        )
        parser.add_argument('--seed', type=int, default=0, help='Suite seed')
        parser.add_argument('--trials', type=int, help='Trials per condition (default DIBI_FRAME_TRIALS)')
        parser.add_argument('--condition', action='append', choices=tuple(CONDITIONS), help='Only this condition (repeatable)')
        parser.add_argument('--parallel', action='store_true', help='Dispatch conditions as Celery tasks')
        super().add_arguments(parser)

    def run(self, **options):
        if options['file'] and options['random']:
            self.usage_error("give a kernel file or --random, not both")
        if options['file']:
            targets = [load_kernel_file(options['file']).category]
        else:
            targets = options['instance'] or ['finstoch', 'finrel']
        runner = self.dispatch if options['parallel'] else None
        suites = [
            frame_suite(target, options['seed'], options['trials'], options['condition'], runner=runner)
            for target in targets
        ]
        report = {'seed': options['seed'], 'suites': suites, 'ok': all(suite['ok'] for suite in suites)}
        return report, EX_OK if report['ok'] else EX_FALSE

    def dispatch(self, instance, seed, trials, conditions):
        payload = instance if isinstance(instance, str) else category_header(instance)
        jobs = group([run_frame_condition.s(payload, condition, seed, trials) for condition in conditions])
        return jobs.apply_async().get()

    def render_text(self, report):
        lines = []
        for suite in report['suites']:
            held = sum(1 for r in suite['conditions'] if r['ok'])
            lines.append(f"{suite['instance']} (seed {suite['seed']}): {held}/{len(suite['conditions'])} conditions hold")
            for r in suite['conditions']:
                if 'error' in r and 'passed' not in r:
                    lines.append(f"  {r['condition']:<18} {self.style.ERROR('error')} {r['message']}")
                    continue
                status = self.style.SUCCESS('ok') if r['ok'] else self.style.ERROR('FAIL')
                lines.append(f"  {r['condition']:<18} {status} {r['passed']}/{r['trials']}")
                if r['counterexample']:
                    lines.append(f"    trial {r['counterexample']['trial']}: {r['counterexample']['reason']}")
                for error in r['errors'][:3]:
                    lines.append(f"    trial {error['trial']}: {error['error']}: {error['message']}")
        return '\n'.join(lines)
