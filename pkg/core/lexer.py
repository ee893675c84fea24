"""
Tokenizer shared by the formula parser and the diagram-term parser.
"""
import re
from dataclasses import dataclass

from .exceptions import ParseError

SYMBOLS = ('|>', '<', '>', '{', '}', '[', ']', '(', ')', ',', ';', '*', '&')

_TOKEN = re.compile(
    r"(?P<space>\s+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<symbol>"
    + '|'.join(re.escape(s) for s in SYMBOLS)
    + r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def tokenize(text):
    """
    Split ``text`` into identifier and symbol tokens, ending with ``end``.

    Symbol tokens use the symbol itself as their kind.
    """
    tokens, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind == 'space':
            for offset, char in enumerate(value):
                if char == '\n':
                    line, line_start = line + 1, pos + offset + 1
        else:
            tokens.append(Token(kind if kind == 'ident' else value, value, line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token('end', '', line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with expectation tracking for error messages."""

    def __init__(self, text):
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self):
        return self.tokens[self.index]

    def at(self, kind, value=None):
        token = self.current
        return token.kind == kind and (value is None or token.value == value)

    def advance(self):
        token = self.current
        if token.kind != 'end':
            self.index += 1
        return token

    def expect(self, kind, value=None):
        if not self.at(kind, value):
            self.fail(f"unexpected {self.describe()}", [value or kind])
        return self.advance()

    def describe(self):
        token = self.current
        return 'end of input' if token.kind == 'end' else repr(token.value)

    def fail(self, message, expected=()):
        token = self.current
        raise ParseError(message, token.line, token.column, expected)

    def finish(self):
        if not self.at('end'):
            self.fail(f"trailing input {self.describe()}", ['end'])

    def ident_list(self, open_='{', close='}'):
        """``open [ident {, ident}] close`` as a tuple of names."""
        self.expect(open_)
        names = []
        if self.at('ident'):
            names.append(self.advance().value)
            while self.at(','):
                self.advance()
                names.append(self.expect('ident').value)
        if not self.at(close):
            self.fail(f"unexpected {self.describe()}", [',', close] if names else ['ident', close])
        self.advance()
        return tuple(names)
