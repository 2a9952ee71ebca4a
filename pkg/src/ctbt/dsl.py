"""Parser and compiler for the .btm model format.

A model file declares a plant (state/control dimensions plus one derivative
expression per state variable), named leaves (control expressions plus a
status expression), named Sequence/Fallback composites, and a root.  Example:

    model "thermostat" {
      state 1;
      control 1;
      const T = 21.0;
      plant { dx0 = u0; }
      leaf above { u = [0.0]; status = if x0 > T then S else F; }
      leaf heat  { u = [1.0]; status = R; }
      fal check_or_heat = [above, heat];
      root = check_or_heat;
    }

Three little sublanguages, kept apart by the grammar: real expressions
(+ - * / unary-minus, sin cos sqrt abs sgn sat, state vars x0.., control
vars u0.. in plant equations only, declared constants), predicates (one
comparison between two real expressions), and status expressions (R, S, F,
or if-then-else over a predicate).  sgn(0) is 0; sat(v, L) clamps v to
[-L, L].  Parsing is LL(1) recursive descent; every error carries the line
and column of the offending token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Union

import numpy as np

from .core import (
    BehaviorTree,
    DimensionMismatch,
    Fallback,
    Leaf,
    LeafBehavior,
    Plant,
    Sequence,
    Status,
)


class ModelError(ValueError):
    """Base for everything the parser/evaluator can reject."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.message = message
        self.line = line
        self.col = col


class LexError(ModelError):
    pass


class ParseError(ModelError):
    pass


class UndeclaredIdentifier(ModelError):
    pass


class ModelTypeError(ModelError):
    pass


class DuplicateDefinition(ModelError):
    pass


class NodeReusedInTree(ModelError):
    pass


class MissingRoot(ModelError):
    pass


class DivisionByZero(ModelError):
    pass


class UnboundIdentifier(ModelError):
    pass


# ---------------------------------------------------------------- expressions

_NOPOS = (0, 0)


@dataclass(frozen=True)
class Num:
    value: float
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    pos: tuple = field(default=_NOPOS, compare=False)


Expr = Union[Num, Var, Neg, Binary, Call]


@dataclass(frozen=True)
class Compare:
    op: str
    left: Expr
    right: Expr
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class StatusLit:
    value: Status
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class IfStatus:
    cond: Compare
    then: "StatusExpr"
    els: "StatusExpr"
    pos: tuple = field(default=_NOPOS, compare=False)


StatusExpr = Union[StatusLit, IfStatus]


@dataclass(frozen=True)
class LeafDecl:
    name: str
    controls: tuple
    status: StatusExpr
    pos: tuple = field(default=_NOPOS, compare=False)


@dataclass(frozen=True)
class CompositeDecl:
    name: str
    kind: str  # "seq" | "fal"
    children: tuple  # child names in order
    pos: tuple = field(default=_NOPOS, compare=False)
    child_positions: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class ModelFile:
    name: str
    state_dim: int
    control_dim: int
    constants: tuple  # ((name, value), ...) in declaration order
    plant: tuple  # ((state var, Expr), ...) in x0..xN order
    nodes: tuple  # LeafDecl | CompositeDecl in declaration order
    root: str


KEYWORDS = {
    "model", "const", "state", "control", "plant", "leaf", "seq", "fal",
    "root", "if", "then", "else", "u", "status", "R", "S", "F",
}
FUNCTIONS = {"sin": 1, "cos": 1, "sqrt": 1, "abs": 1, "sgn": 1, "sat": 2}
COMPARATORS = ("<=", ">=", "<", ">")


# ---------------------------------------------------------------------- lexer

@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER IDENT KEYWORD STRING OP EOF
    text: str
    line: int
    col: int
    value: float = 0.0

    @property
    def pos(self):
        return (self.line, self.col)


def tokenize(source: str) -> list:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c == '"':
            j = i + 1
            while j < n and source[j] not in '"\n':
                j += 1
            if j >= n or source[j] != '"':
                raise LexError("unterminated string", start_line, start_col)
            tokens.append(Token("STRING", source[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                if j >= n or not source[j].isdigit():
                    raise LexError("malformed number", start_line, start_col)
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                j += 1
                if j < n and source[j] in "+-":
                    j += 1
                if j >= n or not source[j].isdigit():
                    raise LexError("malformed number", start_line, start_col)
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            tokens.append(Token("NUMBER", text, start_line, start_col, float(text)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "KEYWORD" if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, start_line, start_col))
            col += j - i
            i = j
            continue
        two = source[i : i + 2]
        if two in ("<=", ">="):
            tokens.append(Token("OP", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if c in "<>=+-*/()[]{},;":
            tokens.append(Token("OP", c, start_line, start_col))
            i += 1
            col += 1
            continue
        raise LexError(f"unexpected character {c!r}", start_line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# --------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at(self, kind, text=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(
                f"expected {want!r}, found {tok.text or tok.kind!r}",
                tok.line, tok.col)
        return self.advance()

    # ---- model structure

    def model(self) -> ModelFile:
        self.expect("KEYWORD", "model")
        name_tok = self.expect("STRING")
        self.expect("OP", "{")
        consts, nodes, plant_entries = [], [], []
        state_dim = control_dim = None
        root = None
        seen: dict = {}
        while not self.at("OP", "}"):
            tok = self.peek()
            if tok.kind != "KEYWORD":
                raise ParseError(
                    f"expected a declaration, found {tok.text or tok.kind!r}",
                    tok.line, tok.col)
            if tok.text == "const":
                consts.append(self.const_decl(seen))
            elif tok.text == "state":
                state_dim = self.dim_decl("state", state_dim)
            elif tok.text == "control":
                control_dim = self.dim_decl("control", control_dim)
            elif tok.text == "plant":
                if plant_entries:
                    raise DuplicateDefinition("plant defined twice", tok.line, tok.col)
                plant_entries = self.plant_decl()
            elif tok.text == "leaf":
                nodes.append(self.leaf_decl(seen))
            elif tok.text in ("seq", "fal"):
                nodes.append(self.composite_decl(seen))
            elif tok.text == "root":
                if root is not None:
                    raise DuplicateDefinition("root defined twice", tok.line, tok.col)
                self.advance()
                self.expect("OP", "=")
                root = self.expect("IDENT")
                self.expect("OP", ";")
            else:
                raise ParseError(
                    f"unexpected keyword {tok.text!r} in model body",
                    tok.line, tok.col)
        close = self.expect("OP", "}")
        tok = self.peek()
        if tok.kind != "EOF":
            raise ParseError(
                f"trailing input after model: {tok.text!r}", tok.line, tok.col)
        if state_dim is None:
            raise ParseError("model never declares its state dimension",
                             name_tok.line, name_tok.col)
        if control_dim is None:
            raise ParseError("model never declares its control dimension",
                             name_tok.line, name_tok.col)
        if root is None:
            raise MissingRoot("model has no root declaration", close.line, close.col)
        return _validate(ModelFile(
            name=name_tok.text,
            state_dim=state_dim,
            control_dim=control_dim,
            constants=tuple(consts),
            plant=tuple(plant_entries),
            nodes=tuple(nodes),
            root=root.text,
        ), root_pos=root.pos)

    def const_decl(self, seen):
        self.advance()
        name = self.name_token(seen, "constant")
        self.expect("OP", "=")
        sign = 1.0
        if self.at("OP", "-"):
            self.advance()
            sign = -1.0
        num = self.expect("NUMBER")
        self.expect("OP", ";")
        return (name.text, sign * num.value)

    def dim_decl(self, which, current):
        tok = self.advance()
        if current is not None:
            raise DuplicateDefinition(f"{which} dimension defined twice",
                                      tok.line, tok.col)
        num = self.expect("NUMBER")
        self.expect("OP", ";")
        if num.value != int(num.value) or num.value < 1:
            raise ParseError(f"{which} dimension must be a positive integer",
                             num.line, num.col)
        return int(num.value)

    def plant_decl(self):
        self.advance()
        self.expect("OP", "{")
        entries = []
        while not self.at("OP", "}"):
            target = self.expect("IDENT")
            self.expect("OP", "=")
            expr = self.expr()
            self.expect("OP", ";")
            entries.append((target, expr))
        self.expect("OP", "}")
        if not entries:
            raise ParseError("plant block is empty", self.peek().line, self.peek().col)
        return entries

    def leaf_decl(self, seen):
        self.advance()
        name = self.name_token(seen, "leaf")
        self.expect("OP", "{")
        self.expect("KEYWORD", "u")
        self.expect("OP", "=")
        self.expect("OP", "[")
        controls = [self.expr()]
        while self.at("OP", ","):
            self.advance()
            controls.append(self.expr())
        self.expect("OP", "]")
        self.expect("OP", ";")
        self.expect("KEYWORD", "status")
        self.expect("OP", "=")
        status = self.status_expr()
        self.expect("OP", ";")
        self.expect("OP", "}")
        return LeafDecl(name.text, tuple(controls), status, pos=name.pos)

    def composite_decl(self, seen):
        kind = self.advance().text
        name = self.name_token(seen, kind)
        self.expect("OP", "=")
        self.expect("OP", "[")
        children = [self.expect("IDENT")]
        while self.at("OP", ","):
            self.advance()
            children.append(self.expect("IDENT"))
        self.expect("OP", "]")
        self.expect("OP", ";")
        return CompositeDecl(
            name.text, kind, tuple(c.text for c in children), pos=name.pos,
            child_positions=tuple(c.pos for c in children))

    def name_token(self, seen, what) -> Token:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            raise ParseError(f"{tok.text!r} is reserved and cannot name a {what}",
                             tok.line, tok.col)
        name = self.expect("IDENT")
        if name.text in FUNCTIONS:
            raise ParseError(
                f"{name.text!r} is a builtin function and cannot name a {what}",
                name.line, name.col)
        if name.text in seen:
            raise DuplicateDefinition(f"{name.text!r} is already defined",
                                      name.line, name.col)
        seen[name.text] = what
        return name

    # ---- expressions (precedence: additive < multiplicative < unary < atom)

    def expr(self) -> Expr:
        left = self.term()
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.advance()
            left = Binary(op.text, left, self.term(), pos=op.pos)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("OP", "*") or self.at("OP", "/"):
            op = self.advance()
            left = Binary(op.text, left, self.unary(), pos=op.pos)
        return left

    def unary(self) -> Expr:
        if self.at("OP", "-"):
            op = self.advance()
            return Neg(self.unary(), pos=op.pos)
        return self.atom()

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Num(tok.value, pos=tok.pos)
        if tok.kind == "IDENT":
            self.advance()
            if tok.text in FUNCTIONS and self.at("OP", "("):
                self.advance()
                args = [self.expr()]
                while self.at("OP", ","):
                    self.advance()
                    args.append(self.expr())
                self.expect("OP", ")")
                if len(args) != FUNCTIONS[tok.text]:
                    raise ModelTypeError(
                        f"{tok.text} expects {FUNCTIONS[tok.text]} argument(s), "
                        f"got {len(args)}", tok.line, tok.col)
                return Call(tok.text, tuple(args), pos=tok.pos)
            return Var(tok.text, pos=tok.pos)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("OP", ")")
            return inner
        if tok.kind == "KEYWORD" and tok.text in ("R", "S", "F"):
            raise ModelTypeError(
                f"status literal {tok.text!r} used in a real expression",
                tok.line, tok.col)
        if tok.kind == "KEYWORD" and tok.text == "if":
            raise ModelTypeError(
                "status conditional used in a real expression", tok.line, tok.col)
        raise ParseError(f"expected an expression, found {tok.text or tok.kind!r}",
                         tok.line, tok.col)

    def predicate(self) -> Compare:
        left = self.expr()
        tok = self.peek()
        if not (tok.kind == "OP" and tok.text in COMPARATORS):
            raise ModelTypeError(
                "expected a comparison between real expressions",
                tok.line, tok.col)
        self.advance()
        right = self.expr()
        return Compare(tok.text, left, right, pos=tok.pos)

    def status_expr(self) -> StatusExpr:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.text in ("R", "S", "F"):
            self.advance()
            return StatusLit(Status(tok.text), pos=tok.pos)
        if tok.kind == "KEYWORD" and tok.text == "if":
            self.advance()
            cond = self.predicate()
            self.expect("KEYWORD", "then")
            then = self.status_expr()
            self.expect("KEYWORD", "else")
            els = self.status_expr()
            return IfStatus(cond, then, els, pos=tok.pos)
        raise ModelTypeError(
            f"expected a status expression (R, S, F or if-then-else), "
            f"found {tok.text or tok.kind!r}", tok.line, tok.col)


def parse(source: str) -> ModelFile:
    """Parse .btm source into a ModelFile, validating names and structure."""
    return _Parser(tokenize(source)).model()


# ------------------------------------------------------- semantic validation

def _validate(m: ModelFile, root_pos) -> ModelFile:
    state_vars = {f"x{k}": k for k in range(m.state_dim)}
    control_vars = {f"u{k}": k for k in range(m.control_dim)}
    consts = dict(m.constants)
    for name in consts:
        if name in state_vars or name in control_vars:
            raise DuplicateDefinition(f"{name!r} collides with a model variable")

    decls = {d.name: d for d in m.nodes}
    for d in m.nodes:
        if d.name in state_vars or d.name in control_vars or d.name in consts:
            raise DuplicateDefinition(
                f"{d.name!r} collides with another definition", *d.pos)

    # plant: exactly one derivative per state variable, d-prefixed targets
    seen_targets = {}
    plant_entries = []
    for target, expr in m.plant:
        if not target.text.startswith("d") or target.text[1:] not in state_vars:
            raise UndeclaredIdentifier(
                f"plant target {target.text!r} is not d<state var>",
                target.line, target.col)
        var = target.text[1:]
        if var in seen_targets:
            raise DuplicateDefinition(
                f"derivative of {var!r} defined twice", target.line, target.col)
        seen_targets[var] = (target, expr)
        _check_expr(expr, state_vars, control_vars, consts, allow_control=True)
        plant_entries.append((var, expr))
    if not m.plant:
        raise ParseError("model has no plant block")
    for var in state_vars:
        if var not in seen_targets:
            raise ParseError(f"plant never defines d{var}")
    plant_entries.sort(key=lambda pair: state_vars[pair[0]])

    # leaves and composites
    for d in m.nodes:
        if isinstance(d, LeafDecl):
            for e in d.controls:
                _check_expr(e, state_vars, control_vars, consts, allow_control=False)
            _check_status(d.status, state_vars, control_vars, consts)
        else:
            for child, pos in zip(d.children, d.child_positions):
                if child not in decls:
                    raise UndeclaredIdentifier(f"unknown node {child!r}", *pos)

    # the reference graph must be a tree: every node referenced at most once,
    # counting the root declaration as a reference
    if m.root not in decls:
        raise UndeclaredIdentifier(f"unknown root node {m.root!r}", *root_pos)
    referenced = {m.root: root_pos}
    for d in m.nodes:
        if isinstance(d, CompositeDecl):
            for child, pos in zip(d.children, d.child_positions):
                if child in referenced:
                    raise NodeReusedInTree(
                        f"node {child!r} is attached to the tree twice", *pos)
                referenced[child] = pos

    return ModelFile(
        name=m.name, state_dim=m.state_dim, control_dim=m.control_dim,
        constants=m.constants, plant=tuple(plant_entries), nodes=m.nodes,
        root=m.root)


def _check_expr(e: Expr, sx, su, consts, allow_control: bool) -> None:
    if isinstance(e, Num):
        return
    if isinstance(e, Var):
        if e.name in sx or e.name in consts:
            return
        if e.name in su:
            if allow_control:
                return
            raise UndeclaredIdentifier(
                f"control variable {e.name!r} is only available in plant "
                "equations", *e.pos)
        raise UndeclaredIdentifier(f"undeclared identifier {e.name!r}", *e.pos)
    if isinstance(e, Neg):
        _check_expr(e.operand, sx, su, consts, allow_control)
        return
    if isinstance(e, Binary):
        _check_expr(e.left, sx, su, consts, allow_control)
        _check_expr(e.right, sx, su, consts, allow_control)
        return
    if isinstance(e, Call):
        for a in e.args:
            _check_expr(a, sx, su, consts, allow_control)
        return
    raise ModelTypeError(f"not a real expression: {e!r}")


def _check_status(s: StatusExpr, sx, su, consts) -> None:
    if isinstance(s, StatusLit):
        return
    _check_expr(s.cond.left, sx, su, consts, allow_control=False)
    _check_expr(s.cond.right, sx, su, consts, allow_control=False)
    _check_status(s.then, sx, su, consts)
    _check_status(s.els, sx, su, consts)


# ---------------------------------------------------- evaluation and folding

def evaluate_expr(e, env: Mapping):
    """Interpret any expression kind under a name -> value environment."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundIdentifier(f"unbound identifier {e.name!r}", *e.pos)
        return float(env[e.name])
    if isinstance(e, Neg):
        return -evaluate_expr(e.operand, env)
    if isinstance(e, Binary):
        a = evaluate_expr(e.left, env)
        b = evaluate_expr(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0.0:
            raise DivisionByZero("division by zero", *e.pos)
        return a / b
    if isinstance(e, Call):
        args = [evaluate_expr(a, env) for a in e.args]
        return _FUNC_IMPLS[e.func](*args)
    if isinstance(e, Compare):
        return _COMPARE_IMPLS[e.op](evaluate_expr(e.left, env), evaluate_expr(e.right, env))
    if isinstance(e, StatusLit):
        return e.value
    if isinstance(e, IfStatus):
        return (evaluate_expr(e.then, env) if evaluate_expr(e.cond, env)
                else evaluate_expr(e.els, env))
    raise ModelTypeError(f"cannot evaluate {e!r}")


def _sgn(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _sat(v: float, limit: float) -> float:
    return min(max(v, -limit), limit)


_FUNC_IMPLS = {
    "sin": math.sin, "cos": math.cos, "sqrt": math.sqrt,
    "abs": abs, "sgn": _sgn, "sat": _sat,
}

_COMPARE_IMPLS = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def fold_constants(e, consts: Mapping):
    """Substitute declared constants and collapse constant subtrees."""
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        if e.name in consts:
            return Num(float(consts[e.name]), pos=e.pos)
        return e
    if isinstance(e, Neg):
        inner = fold_constants(e.operand, consts)
        if isinstance(inner, Num):
            return Num(-inner.value, pos=e.pos)
        return Neg(inner, pos=e.pos)
    if isinstance(e, Binary):
        left = fold_constants(e.left, consts)
        right = fold_constants(e.right, consts)
        if isinstance(left, Num) and isinstance(right, Num):
            if e.op == "/" and right.value == 0.0:
                raise DivisionByZero("division by zero in constant expression", *e.pos)
            return Num(evaluate_expr(Binary(e.op, left, right, pos=e.pos), {}), pos=e.pos)
        return Binary(e.op, left, right, pos=e.pos)
    if isinstance(e, Call):
        args = tuple(fold_constants(a, consts) for a in e.args)
        if all(isinstance(a, Num) for a in args):
            return Num(float(_FUNC_IMPLS[e.func](*(a.value for a in args))), pos=e.pos)
        return Call(e.func, args, pos=e.pos)
    if isinstance(e, Compare):
        return Compare(e.op, fold_constants(e.left, consts),
                       fold_constants(e.right, consts), pos=e.pos)
    if isinstance(e, StatusLit):
        return e
    if isinstance(e, IfStatus):
        return IfStatus(fold_constants(e.cond, consts),
                        fold_constants(e.then, consts),
                        fold_constants(e.els, consts), pos=e.pos)
    raise ModelTypeError(f"cannot fold {e!r}")


# -------------------------------------------------------------- compilation

def _compile_real(e, sx: Mapping, su: Mapping) -> Callable:
    """Compile a folded real expression to a closure of (x, u)."""
    if isinstance(e, Num):
        v = e.value
        return lambda x, u: v
    if isinstance(e, Var):
        if e.name in sx:
            i = sx[e.name]
            return lambda x, u: x[i]
        j = su[e.name]
        return lambda x, u: u[j]
    if isinstance(e, Neg):
        f = _compile_real(e.operand, sx, su)
        return lambda x, u: -f(x, u)
    if isinstance(e, Binary):
        a = _compile_real(e.left, sx, su)
        b = _compile_real(e.right, sx, su)
        if e.op == "+":
            return lambda x, u: a(x, u) + b(x, u)
        if e.op == "-":
            return lambda x, u: a(x, u) - b(x, u)
        if e.op == "*":
            return lambda x, u: a(x, u) * b(x, u)
        pos = e.pos

        def divide(x, u, a=a, b=b, pos=pos):
            den = b(x, u)
            if den == 0.0:
                raise DivisionByZero("division by zero", *pos)
            return a(x, u) / den

        return divide
    if isinstance(e, Call):
        fn = _FUNC_IMPLS[e.func]
        args = [_compile_real(a, sx, su) for a in e.args]
        if len(args) == 1:
            g = args[0]
            return lambda x, u: fn(g(x, u))
        g1, g2 = args
        return lambda x, u: fn(g1(x, u), g2(x, u))
    raise ModelTypeError(f"cannot compile {e!r} as a real expression")


def _compile_status(s, sx: Mapping) -> Callable:
    if isinstance(s, StatusLit):
        v = s.value
        return lambda x, u: v
    cmp = _COMPARE_IMPLS[s.cond.op]
    left = _compile_real(s.cond.left, sx, {})
    right = _compile_real(s.cond.right, sx, {})
    then = _compile_status(s.then, sx)
    els = _compile_status(s.els, sx)
    return lambda x, u: then(x, u) if cmp(left(x, u), right(x, u)) else els(x, u)


@dataclass(frozen=True)
class LoweredModel:
    name: str
    bt: BehaviorTree
    plant: Plant
    model: ModelFile


def lower(m: ModelFile) -> LoweredModel:
    """Compile a parsed model into a BehaviorTree plus Plant.

    Node ids are assigned depth-first from the root, matching the textbook
    figures; constants are folded into every compiled expression.
    """
    consts = dict(m.constants)
    sx = {f"x{k}": k for k in range(m.state_dim)}
    su = {f"u{k}": k for k in range(m.control_dim)}
    decls = {d.name: d for d in m.nodes}

    derivs = [_compile_real(fold_constants(e, consts), sx, su) for _, e in m.plant]

    def plant_field(x, u, derivs=tuple(derivs)):
        return np.array([d(x, u) for d in derivs])

    plant = Plant(m.state_dim, m.control_dim, plant_field)

    counter = [0]

    def build(name: str):
        decl = decls[name]
        nid = counter[0]
        counter[0] += 1
        if isinstance(decl, LeafDecl):
            if len(decl.controls) != m.control_dim:
                raise DimensionMismatch(
                    f"leaf {decl.name!r} defines {len(decl.controls)} control "
                    f"component(s), model declares {m.control_dim}")
            ctrl = [_compile_real(fold_constants(e, consts), sx, {})
                    for e in decl.controls]
            status = _compile_status(fold_constants(decl.status, consts), sx)
            if len(ctrl) == 1:
                c0 = ctrl[0]
                controller = lambda x, c0=c0: (c0(x, None),)
            else:
                controller = lambda x, cs=tuple(ctrl): tuple(c(x, None) for c in cs)
            behavior = LeafBehavior(
                controller=controller,
                metadata=lambda x, s=status: s(x, None),
                label=decl.name)
            return Leaf(nid, behavior)
        children = tuple(build(child) for child in decl.children)
        cls = Sequence if decl.kind == "seq" else Fallback
        return cls(nid, children)

    root = build(m.root)
    bt = BehaviorTree(root, state_dim=m.state_dim)
    return LoweredModel(name=m.name, bt=bt, plant=plant, model=m)


def load(path) -> LoweredModel:
    with open(path, "r", encoding="utf-8") as fh:
        return lower(parse(fh.read()))


def bundled_model_dir() -> Path:
    return Path(__file__).resolve().parent / "models"


def resolve_model_path(arg) -> Path:
    """Resolve a model argument: an existing path, or a bundled model name."""
    p = Path(arg)
    if p.exists():
        return p
    candidate = bundled_model_dir() / p.name
    if p.parent == Path(".") and candidate.exists():
        return candidate
    raise FileNotFoundError(f"no such model file: {arg}")


# ------------------------------------------------------------ pretty printer

def format_model(m: ModelFile) -> str:
    """Canonical textual form; parse(format_model(m)) equals m structurally."""
    out = [f'model "{m.name}" {{']
    out.append(f"  state {m.state_dim};")
    out.append(f"  control {m.control_dim};")
    for name, value in m.constants:
        out.append(f"  const {name} = {_num(value)};")
    out.append("  plant {")
    for var, expr in m.plant:
        out.append(f"    d{var} = {format_expr(expr)};")
    out.append("  }")
    for d in m.nodes:
        if isinstance(d, LeafDecl):
            us = ", ".join(format_expr(e) for e in d.controls)
            out.append(f"  leaf {d.name} {{")
            out.append(f"    u = [{us}];")
            out.append(f"    status = {format_status(d.status)};")
            out.append("  }")
        else:
            kids = ", ".join(d.children)
            out.append(f"  {d.kind} {d.name} = [{kids}];")
    out.append(f"  root = {m.root};")
    out.append("}")
    return "\n".join(out) + "\n"


def _num(v: float) -> str:
    if v < 0:
        return f"-{_num(-v)}"
    text = repr(float(v))
    return text


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(e, parent_prec: int = 0) -> str:
    if isinstance(e, Num):
        if e.value < 0:
            inner = f"-{_num(-e.value)}"
            return f"({inner})" if parent_prec >= 3 else inner
        return _num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = f"-{format_expr(e.operand, 3)}"
        return f"({inner})" if parent_prec >= 3 else inner
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        left = format_expr(e.left, prec)
        # right operand of - and / needs parens at equal precedence
        right = format_expr(e.right, prec + (0 if e.op in "+*" else 1))
        text = f"{left} {e.op} {right}"
        return f"({text})" if parent_prec > prec else text
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    raise ModelTypeError(f"cannot format {e!r}")


def format_status(s) -> str:
    if isinstance(s, StatusLit):
        return s.value.value
    cond = f"{format_expr(s.cond.left)} {s.cond.op} {format_expr(s.cond.right)}"
    return f"if {cond} then {format_status(s.then)} else {format_status(s.els)}"
