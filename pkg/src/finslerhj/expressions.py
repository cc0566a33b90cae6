"""Arithmetic mini-language for metrics, Hamiltonians and grid data.

Grammar (expressions over a declared variable set):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('+'|'-') factor | atom
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Functions: cos, sin, exp, abs (unary), min, max (binary).  Variables are
context-dependent: spatial data uses {x1, x2, d}, stationary Hamiltonians
{t, d}, evolution Hamiltonians {t, m, d}; ``d`` always refers to a
precomputed distance field (or, for data-slot Hamiltonians, a precomputed
node profile).  Each parse yields a numpy-vectorised evaluator plus a
postfix opcode program executable inside the compiled sweeping kernels.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import SchemaError

# opcodes shared with the numba kernels
OP_CONST, OP_T, OP_D, OP_TIME = 0, 1, 2, 3
OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG = 4, 5, 6, 7, 8
OP_COS, OP_SIN, OP_EXP, OP_ABS, OP_MIN, OP_MAX = 9, 10, 11, 12, 13, 14

_FUNCTIONS = {"cos": 1, "sin": 1, "exp": 1, "abs": 1, "min": 2, "max": 2}
_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
                    r"|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SchemaError(f"cannot tokenize expression at {text[pos:]!r}")
        num, name, sym = m.groups()
        if num is not None:
            tokens.append(("num", float(m.group(0))))
        elif name is not None:
            tokens.append(("name", name))
        elif sym in "+-*/(),":
            tokens.append((sym, sym))
        elif sym.strip():
            raise SchemaError(f"unexpected character {sym!r} in expression")
        pos = m.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, tokens, variables):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise SchemaError(f"expected {kind!r}, found {tok[1]!r}")
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() != "end":
            raise SchemaError(f"trailing input after expression: "
                              f"{self.tokens[self.pos][1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in "+-":
            op = self.next()[0]
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek() in "*/":
            op = self.next()[0]
            node = ("bin", op, node, self.factor())
        return node

    def factor(self):
        if self.peek() in "+-":
            op = self.next()[0]
            inner = self.factor()
            return inner if op == "+" else ("neg", inner)
        return self.atom()

    def atom(self):
        kind, value = self.next()
        if kind == "num":
            return ("num", value)
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if self.peek() == "(":
                if value not in _FUNCTIONS:
                    raise SchemaError(f"unknown function {value!r}")
                self.next()
                args = [self.expr()]
                while self.peek() == ",":
                    self.next()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != _FUNCTIONS[value]:
                    raise SchemaError(f"{value} takes {_FUNCTIONS[value]} "
                                      f"argument(s), got {len(args)}")
                return ("call", value, args)
            if value not in self.variables:
                raise SchemaError(f"unknown variable {value!r}; allowed: "
                                  f"{sorted(self.variables)}")
            return ("var", value)
        raise SchemaError(f"unexpected token {value!r}")


class Expression:
    """Parsed expression: numpy evaluation plus kernel opcode compilation."""

    def __init__(self, text: str, variables: set[str]):
        self.text = text
        self.variables = set(variables)
        self.ast = _Parser(_tokenize(text), self.variables).parse()

    def __repr__(self):
        return f"Expression({self.text!r})"

    def uses(self, name: str) -> bool:
        def walk(node):
            kind = node[0]
            if kind == "var":
                return node[1] == name
            if kind == "num":
                return False
            if kind == "neg":
                return walk(node[1])
            if kind == "bin":
                return walk(node[2]) or walk(node[3])
            return any(walk(a) for a in node[2])
        return walk(self.ast)

    def evaluate(self, env: dict) -> np.ndarray:
        """Vectorised numpy evaluation; env maps variable names to arrays."""
        def walk(node):
            kind = node[0]
            if kind == "num":
                return node[1]
            if kind == "var":
                if node[1] not in env:
                    raise SchemaError(f"no value supplied for {node[1]!r}")
                return env[node[1]]
            if kind == "neg":
                return -walk(node[1])
            if kind == "bin":
                a, b = walk(node[2]), walk(node[3])
                return {"+": np.add, "-": np.subtract,
                        "*": np.multiply, "/": np.divide}[node[1]](a, b)
            fn, args = node[1], [walk(a) for a in node[2]]
            return {"cos": np.cos, "sin": np.sin, "exp": np.exp,
                    "abs": np.abs, "min": np.minimum,
                    "max": np.maximum}[fn](*args)
        return walk(self.ast)

    def program(self, slot_map: dict[str, int]):
        """Postfix opcode program for the kernel VM.

        ``slot_map`` binds variable names to the VM slots OP_T / OP_D /
        OP_TIME (e.g. stationary: {'t': OP_T, 'd': OP_D}).
        """
        ops: list[int] = []
        args: list[int] = []
        consts: list[float] = []

        def emit(op, arg=0):
            ops.append(op)
            args.append(arg)

        def walk(node):
            kind = node[0]
            if kind == "num":
                consts.append(node[1])
                emit(OP_CONST, len(consts) - 1)
            elif kind == "var":
                if node[1] not in slot_map:
                    raise SchemaError(f"variable {node[1]!r} not available in "
                                      f"this Hamiltonian slot")
                emit(slot_map[node[1]])
            elif kind == "neg":
                walk(node[1])
                emit(OP_NEG)
            elif kind == "bin":
                walk(node[2])
                walk(node[3])
                emit({"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}[node[1]])
            else:
                for a in node[2]:
                    walk(a)
                emit({"cos": OP_COS, "sin": OP_SIN, "exp": OP_EXP,
                      "abs": OP_ABS, "min": OP_MIN, "max": OP_MAX}[node[1]])

        walk(self.ast)
        return (np.array(ops, dtype=np.int64), np.array(args, dtype=np.int64),
                np.array(consts, dtype=np.float64) if consts
                else np.zeros(1, dtype=np.float64))


SPATIAL_VARS = {"x1", "x2", "d"}
STATIONARY_VARS = {"t", "d"}
EVOLUTION_VARS = {"t", "m", "d"}


def spatial_expression(text: str) -> Expression:
    return Expression(text, SPATIAL_VARS)


def stationary_expression(text: str) -> Expression:
    return Expression(text, STATIONARY_VARS)


def evolution_expression(text: str) -> Expression:
    return Expression(text, EVOLUTION_VARS)
