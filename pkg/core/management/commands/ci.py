from core.ci import FLAVORS, CIQuery, decide, superset_partition, witness
from core.serializers import load_kernel_file

from ._base import EX_FALSE, EX_OK, DibiCommand, names, variable_set


class Command(DibiCommand):
    help = "Decide X ⊥ Y | W for a state in one of the CI flavors (exit 0 when it holds, 1 when not)"

    def add_arguments(self, parser):
        parser.add_argument('file', help='Kernel file (JSON)')
        parser.add_argument('kernel', help='Name of an empty-domain kernel in the file')
        parser.add_argument('--w', type=variable_set, default='', help='Conditioning variables, comma separated')
        parser.add_argument('--x', type=variable_set, required=True, help='Left variables')
        parser.add_argument('--y', type=variable_set, required=True, help='Right variables')
        parser.add_argument('--u', type=variable_set, default='', help='Remaining output variables')
        parser.add_argument('--flavor', choices=FLAVORS, default='dibi', help='CI notion to decide')
        super().add_arguments(parser)

    def run(self, **options):
        kernel = load_kernel_file(options['file']).kernel(options['kernel'])
        query = CIQuery(*(variable_set(options[key]) for key in ('w', 'x', 'y', 'u')), options['flavor'])
        result = decide(kernel, query)
        report = {'kernel': options['kernel'], 'instance': kernel.category.kind, **query.as_dict(), 'result': bool(result)}
        if result and query.flavor == 'superset' and query.U:
            u0, u1, u2 = superset_partition(kernel, query)
            report['partition'] = {'U0': sorted(u0), 'U1': sorted(u1), 'U2': sorted(u2)}
        if result and kernel.category.kind == 'synvar':
            found = witness(kernel, query)
            if found:
                report['blocks'] = {block: list(nodes) for block, nodes in found.blocks.items()}
        return report, EX_OK if result else EX_FALSE

    def render_text(self, report):
        lines = [
            f"{report['flavor']}: {names(report['X'])} ⊥ {names(report['Y'])} | {names(report['W'])}"
            f" in {report['kernel']}: {self.verdict(report['result'])}"
        ]
        if 'partition' in report:
            lines.append('  U partition: ' + ' | '.join(names(report['partition'][b]) or '∅' for b in ('U0', 'U1', 'U2')))
        if 'blocks' in report:
            lines.extend(f"  {block}: nodes {nodes}" for block, nodes in report['blocks'].items() if nodes)
        return '\n'.join(lines)
