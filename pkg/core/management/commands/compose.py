from core.kernels import par, seq
from core.serializers import dump_kernel_file, load_kernel_file, render_document

from ._base import EX_OK, DibiCommand, names

OPERATIONS = {'seq': seq, 'par': par}


class Command(DibiCommand):
    help = "Compose two kernels of a file sequentially (seq) or in parallel (par) and write the result"

    def add_arguments(self, parser):
        parser.add_argument('file', help='Kernel file (JSON)')
        parser.add_argument('first', help='First kernel')
        parser.add_argument('operation', choices=tuple(OPERATIONS), help='seq or par')
        parser.add_argument('second', help='Second kernel')
        parser.add_argument('-o', '--output', help='Write the composite to this kernel file')
        parser.add_argument('--name', default='composite', help='Name of the composite inside the written file')
        super().add_arguments(parser)

    def run(self, **options):
        kernel_file = load_kernel_file(options['file'])
        first, second = kernel_file.kernel(options['first']), kernel_file.kernel(options['second'])
        composite = OPERATIONS[options['operation']](first, second)
        document = dump_kernel_file(kernel_file.category, {options['name']: composite})
        if options['output']:
            with open(options['output'], 'w') as stream:
                stream.write(render_document(document))
        report = {
            'operation': options['operation'],
            'name': options['name'],
            'dom': list(composite.dom_list),
            'cod': list(composite.cod_list),
            'output': options['output'],
            'document': document,
        }
        return report, EX_OK

    def render_text(self, report):
        summary = (
            f"{report['name']} = {self.style.SQL_FIELD(report['operation'])}: "
            f"{{{names(report['dom'])}}} → {{{names(report['cod'])}}}"
        )
        if report['output']:
            return f"{summary}\nwrote {report['output']}"
        return f"{summary}\n{render_document(report['document'])}"
