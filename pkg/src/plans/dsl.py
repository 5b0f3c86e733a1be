"""Policy DSL: AST, concrete syntax, token stream, cost and canonical form.

Programs are flat. The top level is a sequence of statements, each one an
action, ``while``, ``repeat`` or ``if``/``else``; every control-flow body is a
non-empty sequence of actions. Sequences are plain tuples, so nested
sequences cannot arise.

Concrete syntax (the format ``pretty`` emits)::

    while(frontIsClear): move ; end
    repeat(3): { move ; turnLeft } ; end
    if(not markersPresent): putMarker else: move ; turnRight ; end
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .world import BASIC_ACTIONS, PERCEPTIONS, Action

R_MIN = 2
R_MAX = 10


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class StructureError(ValueError):
    """Well-formed text or AST that breaks a structural rule."""


@dataclass(frozen=True, order=True)
class Cond:
    primitive: int
    negated: bool = False

    def __post_init__(self):
        if not 0 <= self.primitive < len(PERCEPTIONS):
            raise StructureError(f"unknown perception index {self.primitive}")

    def evaluate(self, perceptions) -> bool:
        return bool(perceptions[self.primitive]) != self.negated

    def __str__(self):
        name = PERCEPTIONS[self.primitive]
        return f"not {name}" if self.negated else name


Block = tuple  # tuple[Action, ...]


def _check_block(body, what: str) -> tuple:
    body = tuple(body)
    if not body:
        raise StructureError(f"{what} body is empty")
    for item in body:
        if not isinstance(item, Action):
            raise StructureError(f"{what} body may only hold actions, got {type(item).__name__}")
        if item is Action.END:
            raise StructureError("end may not appear inside a program body")
    return body


@dataclass(frozen=True)
class While:
    cond: Cond
    body: Block

    def __post_init__(self):
        object.__setattr__(self, "body", _check_block(self.body, "while"))


@dataclass(frozen=True)
class Repeat:
    count: int
    body: Block

    def __post_init__(self):
        if not R_MIN <= self.count <= R_MAX:
            raise StructureError(f"repeat count {self.count} outside [{R_MIN}, {R_MAX}]")
        object.__setattr__(self, "body", _check_block(self.body, "repeat"))


@dataclass(frozen=True)
class IfElse:
    cond: Cond
    then_branch: Block
    else_branch: Block | None = None

    def __post_init__(self):
        object.__setattr__(self, "then_branch", _check_block(self.then_branch, "if"))
        if self.else_branch is not None:
            object.__setattr__(self, "else_branch", _check_block(self.else_branch, "else"))


Stmt = Union[Action, While, Repeat, IfElse]


@dataclass(frozen=True)
class Program:
    body: tuple = ()

    def __post_init__(self):
        body = tuple(self.body)
        for item in body:
            if isinstance(item, Action):
                if item is Action.END:
                    raise StructureError("end is implicit; do not put it in the body")
            elif not isinstance(item, (While, Repeat, IfElse)):
                raise StructureError(f"not a statement: {item!r}")
        object.__setattr__(self, "body", body)

    def __str__(self):
        return pretty(self)


# ---------------------------------------------------------------- tokens

VOCABULARY = (
    ("end",)
    + tuple(a.value for a in BASIC_ACTIONS)
    + PERCEPTIONS
    + ("not", "while", "repeat", "if", "else", "{", "}")
)
_RANK = {tok: i for i, tok in enumerate(VOCABULARY)}


def token_rank(token: str) -> int:
    """Position of ``token`` in the fixed total order; integers sort last."""
    if token in _RANK:
        return _RANK[token]
    return len(VOCABULARY) + int(token)


def _cond_tokens(cond: Cond) -> list[str]:
    name = PERCEPTIONS[cond.primitive]
    return ["not", name] if cond.negated else [name]


def _block_tokens(body) -> list[str]:
    if len(body) == 1:
        return [body[0].value]
    return ["{", *(a.value for a in body), "}"]


def stmt_tokens(stmt: Stmt) -> list[str]:
    if isinstance(stmt, Action):
        return [stmt.value]
    if isinstance(stmt, While):
        return ["while", *_cond_tokens(stmt.cond), *_block_tokens(stmt.body)]
    if isinstance(stmt, Repeat):
        return ["repeat", str(stmt.count), *_block_tokens(stmt.body)]
    out = ["if", *_cond_tokens(stmt.cond), *_block_tokens(stmt.then_branch)]
    if stmt.else_branch is not None:
        out += ["else", *_block_tokens(stmt.else_branch)]
    return out


def token_seq(program: Program) -> list[str]:
    out: list[str] = []
    for stmt in program.body:
        out.extend(stmt_tokens(stmt))
    out.append("end")
    return out


# ---------------------------------------------------------------- printing

def _block_text(body) -> str:
    if len(body) == 1:
        return body[0].value
    return "{ " + " ; ".join(a.value for a in body) + " }"


def _stmt_text(stmt: Stmt) -> str:
    if isinstance(stmt, Action):
        return stmt.value
    if isinstance(stmt, While):
        return f"while({stmt.cond}): {_block_text(stmt.body)}"
    if isinstance(stmt, Repeat):
        return f"repeat({stmt.count}): {_block_text(stmt.body)}"
    text = f"if({stmt.cond}): {_block_text(stmt.then_branch)}"
    if stmt.else_branch is not None:
        text += f" else: {_block_text(stmt.else_branch)}"
    return text


def pretty(program: Program) -> str:
    return " ; ".join([*(_stmt_text(s) for s in program.body), "end"])


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r"\s*(?:([A-Za-z_][A-Za-z_0-9]*)|(\d+)|([(){}:;]))")
_ACTION_NAMES = {a.value: a for a in BASIC_ACTIONS}
_PERCEPTION_INDEX = {name: i for i, name in enumerate(PERCEPTIONS)}
_CONTROL = {"while", "repeat", "if"}


def _lex(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def pos(self) -> int:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"expected {expected or 'a token'}, found end of input", self.pos())
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", self.pos())
        self.i += 1
        return tok

    def program(self) -> Program:
        body = []
        while self.peek() != "end":
            body.append(self.statement())
            self.take(";")
        self.take("end")
        if self.peek() is not None:
            raise ParseError(f"trailing input {self.peek()!r}", self.pos())
        return Program(tuple(body))

    def statement(self) -> Stmt:
        tok = self.peek()
        if tok == "while":
            self.take()
            cond = self.paren_cond()
            self.take(":")
            return While(cond, self.block())
        if tok == "repeat":
            self.take()
            self.take("(")
            at = self.pos()
            count = self.take()
            if not count.isdigit():
                raise ParseError(f"repeat count must be an integer, found {count!r}", at)
            self.take(")")
            self.take(":")
            return Repeat(int(count), self.block())
        if tok == "if":
            self.take()
            cond = self.paren_cond()
            self.take(":")
            then = self.block()
            orelse = None
            if self.peek() == "else":
                self.take()
                self.take(":")
                orelse = self.block()
            return IfElse(cond, then, orelse)
        return self.action()

    def action(self) -> Action:
        at = self.pos()
        tok = self.take()
        if tok in _CONTROL:
            raise StructureError(f"nested control flow ({tok!r}) is not allowed")
        if tok not in _ACTION_NAMES:
            raise ParseError(f"expected an action, found {tok!r}", at)
        return _ACTION_NAMES[tok]

    def block(self) -> tuple:
        if self.peek() == "{":
            self.take()
            items = [self.action()]
            while self.peek() == ";":
                self.take()
                items.append(self.action())
            self.take("}")
            return tuple(items)
        return (self.action(),)

    def paren_cond(self) -> Cond:
        self.take("(")
        negated = False
        while self.peek() == "not":
            self.take()
            negated = not negated
        at = self.pos()
        name = self.take()
        if name not in _PERCEPTION_INDEX:
            raise ParseError(f"unknown perception {name!r}", at)
        if self.peek() == "(":
            # tolerate call syntax: frontIsClear()
            self.take()
            self.take(")")
        self.take(")")
        return Cond(_PERCEPTION_INDEX[name], negated)


def parse(text: str) -> Program:
    return _Parser(text).program()


# ---------------------------------------------------------------- analysis

def cost(program: Program) -> int:
    """Number of branching statements (``while`` and ``if``)."""
    return sum(isinstance(s, (While, IfElse)) for s in program.body)


def canonicalize(program: Program) -> Program:
    """Unroll every ``repeat``. Nothing else is rewritten."""
    body: list[Stmt] = []
    for stmt in program.body:
        if isinstance(stmt, Repeat):
            body.extend(stmt.body * stmt.count)
        else:
            body.append(stmt)
    return Program(tuple(body))


def action_count(program: Program) -> int:
    """Action tokens appearing in the program text."""
    n = 0
    for stmt in program.body:
        if isinstance(stmt, Action):
            n += 1
        elif isinstance(stmt, IfElse):
            n += len(stmt.then_branch) + len(stmt.else_branch or ())
        else:
            n += len(stmt.body)
    return n
