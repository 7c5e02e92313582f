import re
from typing import List, Optional, Sequence, Tuple

from errors import ParseError
from exact_algebra import HOLO_VARIABLES, JET_VARIABLES, Poly, Scalar, get_backend

# GRAMMAR
#
# expression
#   term (('+' | '-') term)...
# term
#   unary (('*' | '/') unary)...
# unary
#   ('+' | '-') unary
#   power
# power
#   atom ('^' integer)?
# atom
#   integer | I | variable | conj '(' expression ')' | '(' expression ')'

_TOKEN_RE = re.compile(r"""
    (?P<number>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<space>[ \t\r\n]+)
  | (?P<bad>.)
""", re.VERBOSE)


class Token:
    """Token com posição (linha, coluna) no texto de origem"""

    __slots__ = ('typ', 'text', 'line', 'column')

    def __init__(self, typ: str, text: str, line: int, column: int):
        self.typ = typ
        self.text = text
        self.line = line
        self.column = column

    def __repr__(self):
        return f"({self.typ}, {self.text!r}, {self.line}:{self.column})"


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start = 1, 0
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        value = match.group()
        column = match.start() - line_start + 1
        if kind == 'space':
            newlines = value.count('\n')
            if newlines:
                line += newlines
                line_start = match.start() + value.rfind('\n') + 1
            continue
        if kind == 'bad':
            raise ParseError(f"caractere inesperado {value!r}", line, column)
        tokens.append(Token(kind, value, line, column))
    tokens.append(Token('eof', '', line, len(text) - line_start + 1))
    return tokens


class ExpressionParser:
    """Parser descendente recursivo de polinômios com coeficientes racionais gaussianos"""

    def __init__(self, variables: Sequence[str] = JET_VARIABLES, order: int = 6, backend=None):
        self.variables = tuple(variables)
        self.order = order
        self.backend = backend or get_backend('exact')
        self.tokens: List[Token] = []
        self.position = 0

    def parse(self, text: str) -> Poly:
        self.tokens = tokenize(text)
        self.position = 0
        if self._peek().typ == 'eof':
            token = self._peek()
            raise ParseError("expressão vazia", token.line, token.column)
        result = self._expression()
        token = self._peek()
        if token.typ != 'eof':
            raise ParseError(f"token inesperado {token.text!r}", token.line, token.column)
        return result

    # navegação ---------------------------------------------------------------
    def _peek(self) -> Token:
        return self.tokens[self.position]

    def _advance(self) -> Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def _accept(self, text: str) -> Optional[Token]:
        token = self._peek()
        if token.typ == 'op' and token.text == text:
            return self._advance()
        return None

    def _expect(self, text: str) -> Token:
        token = self._accept(text)
        if token is None:
            found = self._peek()
            raise ParseError(f"esperado {text!r}, encontrado {found.text or 'fim'!r}", found.line, found.column)
        return token

    def _constant(self, value) -> Poly:
        return Poly.constant(value, self.order, self.backend, self.variables)

    # regras ------------------------------------------------------------------
    def _expression(self) -> Poly:
        result = self._term()
        while True:
            if self._accept('+'):
                result = result + self._term()
            elif self._accept('-'):
                result = result - self._term()
            else:
                return result

    def _term(self) -> Poly:
        result = self._unary()
        while True:
            if self._accept('*'):
                result = result * self._unary()
            elif self._peek().typ == 'op' and self._peek().text == '/':
                token = self._advance()
                divisor = self._unary()
                if divisor.max_degree() > 0:
                    raise ParseError("divisão permitida apenas por constantes", token.line, token.column)
                constant = divisor.constant_term()
                if constant.is_zero():
                    raise ParseError("divisão por zero", token.line, token.column)
                result = result.scale(self.backend.div(self.backend.one, constant.value))
            else:
                return result

    def _unary(self) -> Poly:
        if self._accept('-'):
            return -self._unary()
        if self._accept('+'):
            return self._unary()
        return self._power()

    def _power(self) -> Poly:
        base = self._atom()
        if self._accept('^'):
            token = self._advance()
            if token.typ != 'number':
                raise ParseError("expoente deve ser inteiro não negativo", token.line, token.column)
            return base ** int(token.text)
        return base

    def _atom(self) -> Poly:
        token = self._advance()
        if token.typ == 'number':
            return self._constant(int(token.text))
        if token.typ == 'op' and token.text == '(':
            inner = self._expression()
            self._expect(')')
            return inner
        if token.typ == 'name':
            if token.text == 'I':
                return self._constant(self.backend.i)
            if token.text == 'conj':
                if self.variables != JET_VARIABLES:
                    raise ParseError("conj() só vale para funções definidoras", token.line, token.column)
                self._expect('(')
                inner = self._expression()
                self._expect(')')
                return inner.conjugate()
            if token.text in self.variables:
                return Poly.variable(token.text, self.order, self.backend, self.variables)
            raise ParseError(f"variável desconhecida {token.text!r}", token.line, token.column)
        raise ParseError(f"token inesperado {token.text or 'fim'!r}", token.line, token.column)


def parse_poly(text: str, order: int = 6, backend=None, variables: Sequence[str] = JET_VARIABLES) -> Poly:
    return ExpressionParser(variables, order, backend).parse(text)


def parse_map_component(text: str, order: int = 6, backend=None) -> Poly:
    """Componente de aplicação holomorfa em (z1, z2, w)"""
    return ExpressionParser(HOLO_VARIABLES, order, backend).parse(text)


def parse_scalar(text: str, backend=None) -> Scalar:
    """Escalar no formato canônico `a/b+c/d*I`"""
    poly = ExpressionParser((), 0, backend).parse(text)
    return poly.constant_term()


def parse_assignment(text: str, backend=None) -> Tuple[str, Scalar]:
    """Par `nome=valor` usado por --param"""
    if '=' not in text:
        raise ParseError(f"parâmetro sem '=': {text!r}", 1, 1)
    name, value = text.split('=', 1)
    return name.strip(), parse_scalar(value, backend)
