"""Tokenizer and recursive-descent parser for the symbol language.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' factor) | ('/' factor ['>=' number]))*
    factor := '-' factor | atom ['^' int]
    atom   := number | var | func '(' args ')' | '(' expr ')'
    var    := 's' idx | ('G' | 'H' | 'Z') '[' idx ',' idx ']'

A divisor that is not a numeric literal must declare a lower bound for
its modulus with ``>= number``. Error positions are 0-based offsets into
the source text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import IndexOutOfRange, SymbolSyntaxError

FUNCTIONS = ("conj", "abs", "re", "im", "pow", "tr", "det")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|[-+*/^()\[\],])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SymbolSyntaxError(pos, "a number, name or operator", text)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


# -- AST -------------------------------------------------------------------


class Node:
    pass


@dataclass(frozen=True)
class Num(Node):
    value: complex


@dataclass(frozen=True)
class Var(Node):
    name: str  # 's', 'G', 'H' or 'Z'
    index: tuple  # 1-based


@dataclass(frozen=True)
class MatFunc(Node):
    func: str  # 'tr' or 'det'
    mat: str  # 'G' or 'H'


@dataclass(frozen=True)
class Call(Node):
    func: str  # conj, abs, re, im
    arg: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exp: int


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node
    bound: float | None = None  # declared lower bound of |right| for '/'


@dataclass(frozen=True)
class SymbolExpr:
    text: str
    n: int
    root: Node

    def __str__(self):
        return unparse(self.root)


# -- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, expected):
        raise SymbolSyntaxError(self.tok.pos, expected, self.text)

    def take(self, text=None, kind=None) -> Token:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            self.fail(repr(text) if text is not None else kind)
        self.i += 1
        return t

    def at(self, text) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            self.fail("an operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at("*") or self.at("/"):
            op = self.take().text
            rhs = self.factor()
            if op == "*":
                node = BinOp("*", node, rhs)
                continue
            if self.at(">="):
                self.take()
                bound = abs(self.number())
                if bound <= 0:
                    self.fail("a positive divisor bound")
            elif isinstance(rhs, Num) and rhs.value != 0:
                bound = abs(rhs.value)
            else:
                self.fail("'>= bound' after a non-constant divisor")
            node = BinOp("/", node, rhs, float(bound))
        return node

    def factor(self) -> Node:
        if self.at("-"):
            self.take()
            return Neg(self.factor())
        node = self.atom()
        if self.at("^"):
            self.take()
            node = Pow(node, self.integer())
        return node

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail("a non-negative integer exponent")
        self.i += 1
        return int(t.text)

    def number(self) -> complex:
        t = self.tok
        if t.kind == "name" and t.text == "i":
            self.i += 1
            return 1j
        if t.kind != "num":
            self.fail("a number")
        self.i += 1
        if t.text.endswith("i"):
            return complex(0, float(t.text[:-1]))
        return complex(float(t.text))

    def index(self, var: str) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail("an index")
        self.i += 1
        k = int(t.text)
        if not 1 <= k <= self.n:
            raise IndexOutOfRange(var, k, self.n)
        return k

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num" or (t.kind == "name" and t.text == "i"):
            return Num(self.number())
        if self.at("("):
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if t.kind != "name":
            self.fail("an expression")
        name = t.text
        m = re.fullmatch(r"s(\d+)", name)
        if m:
            self.i += 1
            k = int(m.group(1))
            if not 1 <= k <= self.n:
                raise IndexOutOfRange("s", k, self.n)
            return Var("s", (k,))
        if name in ("G", "H", "Z"):
            self.i += 1
            self.take("[")
            j = self.index(name)
            self.take(",")
            k = self.index(name)
            self.take("]")
            return Var(name, (j, k))
        if name in FUNCTIONS:
            self.i += 1
            self.take("(")
            if name in ("tr", "det"):
                mt = self.tok
                if mt.kind != "name" or mt.text not in ("G", "H"):
                    self.fail("'G' or 'H'")
                self.i += 1
                node = MatFunc(name, mt.text)
            elif name == "pow":
                base = self.expr()
                self.take(",")
                node = Pow(base, self.integer())
            else:
                node = Call(name, self.expr())
            self.take(")")
            return node
        self.fail("a variable, number or function")


def parse_symbol(text: str, n: int) -> SymbolExpr:
    if n < 1:
        raise ValueError("n must be positive")
    return SymbolExpr(text, n, _Parser(text, n).parse())


# -- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num_text(v: complex) -> str:
    def r(x):
        return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))

    if v.imag == 0:
        return r(v.real)
    if v.real == 0:
        return f"{r(v.imag)}i"
    return f"({r(v.real)}+{r(v.imag)}i)" if v.imag > 0 else f"({r(v.real)}-{r(-v.imag)}i)"


def unparse(node: Node, prec: int = 0) -> str:
    """Render an AST back to parseable text."""
    if isinstance(node, Num):
        s = _num_text(node.value)
        return f"({s})" if s.startswith("-") and prec else s
    if isinstance(node, Var):
        return f"s{node.index[0]}" if node.name == "s" else f"{node.name}[{node.index[0]},{node.index[1]}]"
    if isinstance(node, MatFunc):
        return f"{node.func}({node.mat})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, Pow):
        return f"pow({unparse(node.base)}, {node.exp})"
    if isinstance(node, Neg):
        s = "-" + unparse(node.arg, 3)
        return f"({s})" if prec else s
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        s = f"{unparse(node.left, p)} {node.op} {unparse(node.right, p + 1)}"
        if node.op == "/":
            s += f" >= {node.bound!r}"
        return f"({s})" if prec > p or (node.op == "/" and prec) else s
    raise TypeError(f"unknown node {node!r}")
