import logging
import sys

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from core.exceptions import DibiError, KernelFileError, ParseError, Unsupported
from core.serializers import render_document
from core.varspace import set_to_list, varset

EX_OK = 0
EX_FALSE = 1
EX_ERROR = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_UNAVAILABLE = 69

LOG_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}


def variable_set(value):
    """``--w z,x`` style option values; an empty string is the empty set."""
    if isinstance(value, str):
        value = [name.strip() for name in value.split(',') if name.strip()]
    return varset(value)


def exit_code(error):
    if isinstance(error, (ParseError, KernelFileError, ValidationError)):
        return EX_DATAERR
    if isinstance(error, Unsupported):
        return EX_UNAVAILABLE
    return EX_ERROR


def names(s):
    return ','.join(set_to_list(s))


class DibiCommand(BaseCommand):
    """
    Shared plumbing for the kernel commands.

    Subclasses implement ``run(**options)`` returning ``(report, code)`` and
    ``render_text(report)``. Library errors become exit statuses: 65 for
    unreadable files and formulas, 69 for missing capabilities, 2 otherwise;
    argument errors exit 64.
    """

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = self.usage_error
        return parser

    def run_from_argv(self, argv):
        # argument parsing happens outside BaseCommand's own CommandError handler
        try:
            super().run_from_argv(argv)
        except CommandError as e:
            self.stderr.write(f"{type(e).__name__}: {e}")
            sys.exit(e.returncode)

    def usage_error(self, message):
        raise CommandError(f"Error: {message}", returncode=EX_USAGE)

    def add_arguments(self, parser):
        parser.add_argument('--format', choices=('text', 'json'), default='text', help='Report format')

    def handle(self, *args, **options):
        verbosity = options.get('verbosity', 1)
        if verbosity != 1:
            logging.getLogger('core').setLevel(LOG_LEVELS.get(verbosity, logging.DEBUG))
        try:
            report, code = self.run(**options)
        except (DibiError, ValidationError) as e:
            raise CommandError(str(e), returncode=exit_code(e)) from e
        if options['format'] == 'json':
            self.stdout.write(render_document(report))
        else:
            self.stdout.write(self.render_text(report))
        if code != EX_OK:
            raise SystemExit(code)

    def run(self, **options):
        raise NotImplementedError

    def render_text(self, report):
        raise NotImplementedError

    def verdict(self, value):
        return self.style.SUCCESS('true') if value else self.style.ERROR('false')
