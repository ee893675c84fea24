from core.exceptions import DibiError, Unsupported
from core.kernels import embed
from core.serializers import load_kernel_file
from core.synvar import diag_equal, graph_to_term, isomorphic, normalize, render_term

from ._base import EX_FALSE, EX_OK, DibiCommand


class Command(DibiCommand):
    help = "Decide whether two diagrams of a synvar kernel file are equal in the free Markov category"

    def add_arguments(self, parser):
        parser.add_argument('file', help='Kernel file with instance "synvar"')
        parser.add_argument('first', help='First kernel')
        parser.add_argument('second', help='Second kernel')
        super().add_arguments(parser)

    def run(self, **options):
        kernel_file = load_kernel_file(options['file'])
        category = kernel_file.category
        if category.kind != 'synvar':
            raise Unsupported(f"diagram equality needs a synvar file, got {category.kind}")
        first, second = (embed(kernel_file.kernel(options[key])) for key in ('first', 'second'))
        equal = diag_equal(first, second)
        if equal != isomorphic(first, second):
            raise DibiError("canonical forms and graph matching disagree")
        report = {
            'first': options['first'],
            'second': options['second'],
            'equal': equal,
            'normal_forms': [render_term(graph_to_term(normalize(g)), category.labels) for g in (first, second)],
        }
        return report, EX_OK if equal else EX_FALSE

    def render_text(self, report):
        first, second = report['normal_forms']
        return f"{report['first']} = {report['second']}: {self.verdict(report['equal'])}\n  {first}\n  {second}"
