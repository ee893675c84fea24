from core.dibi import MODES, SatStrategy, default_strategy, parse, pretty, satisfies
from core.serializers import load_kernel_file

from ._base import EX_FALSE, EX_OK, DibiCommand


class Command(DibiCommand):
    help = "Decide whether a kernel satisfies a DIBI formula (exit 0 when it does, 1 when not)"

    def add_arguments(self, parser):
        parser.add_argument('file', help='Kernel file (JSON)')
        parser.add_argument('kernel', help='Kernel name inside the file')
        parser.add_argument('formula', help='Formula, e.g. "<{}|>{z}> ; (<{z}|>{x,z}> * <{z}|>{y,z}>)"')
        parser.add_argument('--strategy', choices=MODES, help='Satisfaction strategy (default depends on the instance)')
        parser.add_argument('--budget', type=int, help='Search steps before giving up')
        super().add_arguments(parser)

    def run(self, **options):
        kernel = load_kernel_file(options['file']).kernel(options['kernel'])
        formula = parse(options['formula'])
        strategy = default_strategy(kernel.category)
        if options['strategy'] or options['budget'] is not None:
            strategy = SatStrategy(options['strategy'] or strategy.mode, options['budget'])
        result = satisfies(kernel, formula, strategy)
        report = {
            'kernel': options['kernel'],
            'instance': kernel.category.kind,
            'formula': pretty(formula),
            'strategy': strategy.mode,
            'result': bool(result),
        }
        return report, EX_OK if result else EX_FALSE

    def render_text(self, report):
        return f"{report['kernel']} ⊨ {report['formula']}: {self.verdict(report['result'])}"
