"""Input language: threads as control-flow graphs over a bounded shared store.

A program declares bounded integer variables, integer arrays and pointers,
followed by one or more threads.  Every thread is a list of labelled edges
``label: [when (b)] stmt goto target;``.  Values live in finite ranges and
arithmetic wraps modulo the range size when stored, which keeps every state
space finite.

The module provides the AST, a parser and printer, the sugar lowering
(``assert``/``start``/``join``, global property weaving, memory-fault
edges) and the data semantics of actions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Optional, Union


class ParseError(Exception):
    """Syntax or static-semantics error in a program text."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class AddrOf:
    name: str
    index: Optional[int] = None


@dataclass(frozen=True)
class VarRef:
    """Scalar or pointer variable read."""
    name: str


@dataclass(frozen=True)
class ArrayRef:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Deref:
    pointer: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[Const, BoolConst, Null, AddrOf, VarRef, ArrayRef, Deref, BinOp, Not]
LValue = Union[VarRef, ArrayRef, Deref]

ARITH_OPS = ("+", "-")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


def conj(*parts: Expr) -> Expr:
    """Left-nested conjunction, dropping literal ``true``."""
    parts = [p for p in parts if p != BoolConst(True)]
    if not parts:
        return BoolConst(True)
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("&&", out, p)
    return out


def disj(*parts: Expr) -> Expr:
    parts = [p for p in parts if p != BoolConst(False)]
    if not parts:
        return BoolConst(False)
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("||", out, p)
    return out


def negate(e: Expr) -> Expr:
    return e.operand if isinstance(e, Not) else Not(e)


def conjuncts(e: Expr) -> list:
    if isinstance(e, BinOp) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def subexprs(e: Expr) -> Iterable[Expr]:
    yield e
    if isinstance(e, BinOp):
        yield from subexprs(e.left)
        yield from subexprs(e.right)
    elif isinstance(e, Not):
        yield from subexprs(e.operand)
    elif isinstance(e, ArrayRef):
        yield from subexprs(e.index)


# ---------------------------------------------------------------------------
# Actions

@dataclass(frozen=True)
class Assign:
    target: LValue
    value: Expr
    when: Optional[Expr] = None


@dataclass(frozen=True)
class Guard:
    cond: Expr


@dataclass(frozen=True)
class Cas:
    """Atomic compare-and-swap on the cell denoted by ``target``."""
    target: LValue
    expected: Expr
    new: Expr
    result: Optional[str] = None
    when: Optional[Expr] = None


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assert:
    cond: Expr


@dataclass(frozen=True)
class Start:
    thread: str


@dataclass(frozen=True)
class Join:
    thread: str


Action = Union[Assign, Guard, Cas, Skip, Assert, Start, Join]
SUGAR = (Assert, Start, Join)


def action_exprs(a: Action) -> list:
    """Expressions evaluated by ``a`` (reads), lvalue index parts included."""
    out = []
    if isinstance(a, Assign):
        if a.when is not None:
            out.append(a.when)
        out.append(a.value)
        if isinstance(a.target, ArrayRef):
            out.append(a.target.index)
    elif isinstance(a, Cas):
        if a.when is not None:
            out.append(a.when)
        out += [a.expected, a.new]
        if isinstance(a.target, ArrayRef):
            out.append(a.target.index)
    elif isinstance(a, (Guard, Assert)):
        out.append(a.cond)
    return out


# ---------------------------------------------------------------------------
# Program structure

@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class ArrayDecl:
    name: str
    length: int
    lo: int
    hi: int
    init: tuple


@dataclass(frozen=True)
class PtrDecl:
    name: str
    init: Optional[AddrOf] = None  # None means null


@dataclass(frozen=True)
class Edge:
    source: str
    action: Action
    target: str


@dataclass(frozen=True)
class ThreadCfg:
    name: str
    locations: tuple
    initial: str
    sink: Optional[str]
    edges: tuple

    @cached_property
    def loc_index(self) -> dict:
        return {l: k for k, l in enumerate(self.locations)}

    @cached_property
    def out_edges(self) -> dict:
        out = {l: [] for l in self.locations}
        for k, e in enumerate(self.edges):
            out[e.source].append(k)
        return out

    def terminal_locations(self) -> list:
        """Locations without outgoing edges other than the sink."""
        return [l for l in self.locations
                if not self.out_edges[l] and l != self.sink]


@dataclass(frozen=True)
class Program:
    vars: tuple
    arrays: tuple
    pointers: tuple
    threads: tuple
    property: Optional[Expr] = None
    lowered: bool = field(default=False, compare=False)
    # thread name -> completion flag variable, filled by lower_sugar
    completion: tuple = field(default=(), compare=False)

    @cached_property
    def layout(self) -> "Layout":
        return Layout(self)

    @cached_property
    def thread_index(self) -> dict:
        return {t.name: k for k, t in enumerate(self.threads)}

    def thread(self, name: str) -> ThreadCfg:
        return self.threads[self.thread_index[name]]


END = "end"
SINK = "error"
RESERVED_LABELS = (END, SINK)


class Layout:
    """Slot layout of a program's store.

    Addressable slots (scalars, then array cells) come first; slot ``k`` has
    address ``k + 1`` and address 0 is null.  Pointer slots follow and are
    not addressable.
    """

    def __init__(self, program: Program):
        self.slot_names = []
        self.ranges = []
        self.slot_of = {}       # scalar or pointer name -> slot
        self.array_base = {}    # array name -> (first slot, length)
        for v in program.vars:
            self.slot_of[v.name] = len(self.slot_names)
            self.slot_names.append(v.name)
            self.ranges.append((v.lo, v.hi))
        for a in program.arrays:
            self.array_base[a.name] = (len(self.slot_names), a.length)
            for k in range(a.length):
                self.slot_names.append(f"{a.name}_{k}")
                self.ranges.append((a.lo, a.hi))
        self.n_addressable = len(self.slot_names)
        for p in program.pointers:
            self.slot_of[p.name] = len(self.slot_names)
            self.slot_names.append(p.name)
            self.ranges.append((0, self.n_addressable))
        self.pointer_names = {p.name for p in program.pointers}
        if len(set(self.slot_names)) != len(self.slot_names):
            raise ParseError("array cell name collides with a variable name")
        init = []
        for v in program.vars:
            init.append(v.init)
        for a in program.arrays:
            init.extend(a.init)
        for p in program.pointers:
            init.append(self.address_of(p.init) if p.init is not None else 0)
        self.initial = tuple(init)

    def address_of(self, a: AddrOf) -> int:
        if a.index is None:
            return self.slot_of[a.name] + 1
        base, _ = self.array_base[a.name]
        return base + a.index + 1

    def address_name(self, addr: int) -> str:
        return "null" if addr == 0 else self.slot_names[addr - 1]

    def is_pointer_slot(self, slot: int) -> bool:
        return slot >= self.n_addressable

    def wrap(self, slot: int, value: int) -> int:
        lo, hi = self.ranges[slot]
        if lo <= value <= hi:
            return value
        return lo + (value - lo) % (hi - lo + 1)


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) |
    (?P<nl>\n) |
    (?P<comment>//[^\n]*) |
    (?P<int>\d+) |
    (?P<id>[A-Za-z_][A-Za-z_0-9]*) |
    (?P<op>:=|\.\.|==|!=|<=|>=|&&|\|\||\+\+|[-+*&!<>(){}\[\],;:=])
""", re.VERBOSE)

KEYWORDS = {"var", "array", "ptr", "int", "thread", "when", "goto", "skip",
            "cas", "assert", "start", "join", "true", "false", "null", "end"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            t = m.group()
            if kind == "id" and t in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, t, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    # token helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind in ("kw", "op")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            got = self.peek().text or "end of input"
            self.error(f"expected {text!r}, got {got!r}")
        tok = self.peek()
        self.pos += 1
        return tok

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "id":
            self.error(f"expected identifier, got {t.text or 'end of input'!r}")
        self.pos += 1
        return t.text

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.peek()
        if t.kind != "int":
            self.error(f"expected integer, got {t.text or 'end of input'!r}")
        self.pos += 1
        return -int(t.text) if neg else int(t.text)

    # grammar
    def program(self):
        decls = []
        while self.peek().text in ("var", "array", "ptr") and self.peek().kind == "kw":
            decls.append(self.decl())
        threads = []
        while self.at("thread"):
            threads.append(self.thread())
        if not threads:
            self.error("program must declare at least one thread")
        prop = None
        if self.accept("assert"):
            self.expect("(")
            prop = self.expr()
            self.expect(")")
            self.expect(";")
        if self.peek().kind != "eof":
            self.error(f"unexpected {self.peek().text!r}")
        return decls, threads, prop

    def decl(self):
        tok = self.peek()
        kind = tok.text
        self.pos += 1
        name = self.ident()
        if kind == "var":
            self.expect(":")
            lo, hi = self.int_range()
            init = self.integer() if self.accept("=") else None
            self.expect(";")
            return ("var", name, lo, hi, init, tok)
        if kind == "array":
            self.expect("[")
            length = self.integer()
            self.expect("]")
            self.expect(":")
            lo, hi = self.int_range()
            init = None
            if self.accept("="):
                self.expect("{")
                init = [self.integer()]
                while self.accept(","):
                    init.append(self.integer())
                self.expect("}")
            self.expect(";")
            return ("array", name, length, lo, hi, init, tok)
        target = None
        if self.accept("="):
            if self.accept("null"):
                target = None
            else:
                self.expect("&")
                tname = self.ident()
                idx = None
                if self.accept("["):
                    idx = self.integer()
                    self.expect("]")
                target = AddrOf(tname, idx)
        self.expect(";")
        return ("ptr", name, target, tok)

    def int_range(self):
        self.expect("int")
        self.expect("[")
        lo = self.integer()
        self.expect("..")
        hi = self.integer()
        self.expect("]")
        return lo, hi

    def thread(self):
        tok = self.expect("thread")
        name = self.ident()
        self.expect("{")
        edges = []
        while not self.at("}"):
            edges.append(self.edge())
        self.expect("}")
        if not edges:
            self.error(f"thread {name} has no initial location", tok)
        return name, edges, tok

    def edge(self):
        ltok = self.peek()
        label = self.ident()
        self.expect(":")
        when = None
        if self.accept("when"):
            self.expect("(")
            when = self.expr()
            self.expect(")")
        stmt = self.stmt(when)
        self.expect("goto")
        if self.accept("end"):
            target = END
        else:
            target = self.ident()
        self.expect(";")
        return label, stmt, target, ltok

    def stmt(self, when):
        tok = self.peek()
        if self.accept("skip"):
            return Guard(when) if when is not None else Skip()
        if self.at("assert") or self.at("start") or self.at("join"):
            if when is not None:
                self.error("'when' cannot guard assert/start/join", tok)
            kw = self.peek().text
            self.pos += 1
            if kw == "assert":
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Assert(e)
            name = self.ident()
            return Start(name) if kw == "start" else Join(name)
        if self.accept("cas"):
            self.expect("(")
            target = self.lvalue()
            self.expect(",")
            expected = self.expr()
            self.expect(",")
            new = self.expr()
            result = None
            if self.accept(","):
                result = self.ident()
            self.expect(")")
            return Cas(target, expected, new, result, when)
        target = self.lvalue()
        if self.accept("++"):
            return Assign(target, BinOp("+", target, Const(1)), when)
        self.expect(":=")
        return Assign(target, self.expr(), when)

    def lvalue(self):
        if self.accept("*"):
            return Deref(self.ident())
        name = self.ident()
        if self.accept("["):
            idx = self.expr()
            self.expect("]")
            return ArrayRef(name, idx)
        return VarRef(name)

    # expressions, lowest precedence first
    def expr(self):
        e = self.and_expr()
        while self.accept("||"):
            e = BinOp("||", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.cmp_expr()
        while self.accept("&&"):
            e = BinOp("&&", e, self.cmp_expr())
        return e

    def cmp_expr(self):
        e = self.add_expr()
        for op in CMP_OPS:
            if self.at(op):
                self.pos += 1
                return BinOp(op, e, self.add_expr())
        return e

    def add_expr(self):
        e = self.atom()
        while self.peek().text in ARITH_OPS and self.peek().kind == "op":
            op = self.peek().text
            self.pos += 1
            e = BinOp(op, e, self.atom())
        return e

    def atom(self):
        t = self.peek()
        if t.kind == "int" or (t.text == "-" and self.peek(1).kind == "int"):
            return Const(self.integer())
        if self.accept("!"):
            return Not(self.atom())
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        if self.accept("null"):
            return Null()
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("&"):
            name = self.ident()
            idx = None
            if self.accept("["):
                idx = self.integer()
                self.expect("]")
            return AddrOf(name, idx)
        if self.accept("*"):
            return Deref(self.ident())
        if t.kind == "id":
            name = self.ident()
            if self.accept("["):
                idx = self.expr()
                self.expect("]")
                return ArrayRef(name, idx)
            return VarRef(name)
        self.error(f"unexpected {t.text or 'end of input'!r} in expression")


def parse_program(text: str) -> Program:
    """Parse and statically check a program text."""
    decls, raw_threads, prop = _Parser(text).program()
    names = {}
    vars_, arrays, ptrs = [], [], []

    def declare(name, tok):
        if name in names:
            raise ParseError(f"duplicate name {name!r}", tok.line, tok.col)
        names[name] = tok

    for d in decls:
        kind, name, tok = d[0], d[1], d[-1]
        declare(name, tok)
        if kind == "var":
            _, _, lo, hi, init, _ = d
            if lo > hi:
                raise ParseError(f"empty range for {name}", tok.line, tok.col)
            if init is None:
                init = 0 if lo <= 0 <= hi else lo
            if not lo <= init <= hi:
                raise ParseError(f"initial value {init} of {name} outside [{lo}..{hi}]",
                                 tok.line, tok.col)
            vars_.append(VarDecl(name, lo, hi, init))
        elif kind == "array":
            _, _, length, lo, hi, init, _ = d
            if length < 1 or lo > hi:
                raise ParseError(f"bad array declaration {name}", tok.line, tok.col)
            if init is None:
                init = [0 if lo <= 0 <= hi else lo] * length
            if len(init) != length:
                raise ParseError(f"array {name} needs {length} initial values",
                                 tok.line, tok.col)
            for v in init:
                if not lo <= v <= hi:
                    raise ParseError(f"initial value {v} of {name} outside [{lo}..{hi}]",
                                     tok.line, tok.col)
            arrays.append(ArrayDecl(name, length, lo, hi, tuple(init)))
        else:
            ptrs.append(PtrDecl(name, d[2]))

    threads = []
    for tname, edges, tok in raw_threads:
        declare(tname, tok)
        labels = []
        for label, _, _, ltok in edges:
            if label in RESERVED_LABELS or label.startswith("_"):
                raise ParseError(f"reserved label {label!r}", ltok.line, ltok.col)
            if label not in labels:
                labels.append(label)
        locs = list(labels)
        for label, _, target, ltok in edges:
            if target != END and target not in labels:
                raise ParseError(f"unknown label {target!r} in thread {tname}",
                                 ltok.line, ltok.col)
            if target == END and END not in locs:
                locs.append(END)
        threads.append(ThreadCfg(tname, tuple(locs), locs[0], None,
                                 tuple(Edge(l, s, t) for l, s, t, _ in edges)))
    p = Program(tuple(vars_), tuple(arrays), tuple(ptrs), tuple(threads), prop)
    check_program(p)
    return p


# ---------------------------------------------------------------------------
# Static checks

def check_program(p: Program) -> None:
    """Type-check expressions and validate declarations; raises ParseError."""
    scalars = {v.name: v for v in p.vars}
    arrays = {a.name: a for a in p.arrays}
    ptrs = {q.name for q in p.pointers}
    threads = {t.name for t in p.threads}

    def check_addr(a: AddrOf):
        if a.index is None:
            if a.name not in scalars:
                raise ParseError(f"cannot take address of {a.name!r}")
        else:
            if a.name not in arrays:
                raise ParseError(f"unknown array {a.name!r}")
            if not 0 <= a.index < arrays[a.name].length:
                raise ParseError(f"index {a.index} out of bounds for {a.name}")

    for q in p.pointers:
        if q.init is not None:
            check_addr(q.init)

    def simple_index(e):
        for s in subexprs(e):
            if isinstance(s, (ArrayRef, Deref)):
                raise ParseError("array indices must not read arrays or pointers")

    def typ(e) -> str:
        if isinstance(e, Const):
            return "int"
        if isinstance(e, BoolConst):
            return "bool"
        if isinstance(e, (Null, AddrOf)):
            if isinstance(e, AddrOf):
                check_addr(e)
            return "ptr"
        if isinstance(e, VarRef):
            if e.name in scalars:
                return "int"
            if e.name in ptrs:
                return "ptr"
            raise ParseError(f"unknown identifier {e.name!r}")
        if isinstance(e, ArrayRef):
            if e.name not in arrays:
                raise ParseError(f"unknown array {e.name!r}")
            simple_index(e.index)
            if typ(e.index) != "int":
                raise ParseError("array index must be an integer")
            if isinstance(e.index, Const) and not 0 <= e.index.value < arrays[e.name].length:
                raise ParseError(f"index {e.index.value} out of bounds for {e.name}")
            return "int"
        if isinstance(e, Deref):
            if e.pointer not in ptrs:
                raise ParseError(f"unknown pointer {e.pointer!r}")
            return "int"
        if isinstance(e, Not):
            if typ(e.operand) != "bool":
                raise ParseError("'!' needs a boolean operand")
            return "bool"
        lt, rt = typ(e.left), typ(e.right)
        if e.op in ARITH_OPS:
            if lt != "int" or rt != "int":
                raise ParseError(f"'{e.op}' needs integer operands")
            return "int"
        if e.op in BOOL_OPS:
            if lt != "bool" or rt != "bool":
                raise ParseError(f"'{e.op}' needs boolean operands")
            return "bool"
        if lt != rt or lt == "bool" or (lt == "ptr" and e.op not in ("==", "!=")):
            raise ParseError(f"bad operand types for '{e.op}'")
        return "bool"

    def need_bool(e):
        if typ(e) != "bool":
            raise ParseError("condition must be boolean")

    def lval_type(lv) -> str:
        if isinstance(lv, VarRef):
            if lv.name in ptrs:
                return "ptr"
            if lv.name in scalars:
                return "int"
            raise ParseError(f"unknown identifier {lv.name!r}")
        return typ(lv)

    if p.property is not None:
        need_bool(p.property)
    for t in p.threads:
        for e in t.edges:
            a = e.action
            if isinstance(a, (Guard, Assert)):
                need_bool(a.cond)
            elif isinstance(a, (Start, Join)):
                if a.thread not in threads:
                    raise ParseError(f"unknown thread {a.thread!r}")
            elif isinstance(a, Assign):
                if a.when is not None:
                    need_bool(a.when)
                if lval_type(a.target) != typ(a.value):
                    raise ParseError(f"type mismatch in assignment in thread {t.name}")
            elif isinstance(a, Cas):
                if a.when is not None:
                    need_bool(a.when)
                ty = lval_type(a.target)
                if typ(a.expected) != ty or typ(a.new) != ty:
                    raise ParseError(f"type mismatch in cas in thread {t.name}")
                if a.result is not None and a.result not in scalars:
                    raise ParseError(f"cas result {a.result!r} must be an int variable")


# ---------------------------------------------------------------------------
# Printer

_PREC = {"||": 1, "&&": 2, "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5}


def format_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, Null):
        return "null"
    if isinstance(e, AddrOf):
        return f"&{e.name}" if e.index is None else f"&{e.name}[{e.index}]"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, ArrayRef):
        return f"{e.name}[{format_expr(e.index)}]"
    if isinstance(e, Deref):
        return f"*{e.pointer}"
    if isinstance(e, Not):
        inner = format_expr(e.operand)
        return "!" + (inner if isinstance(e.operand, (Not, BoolConst, VarRef)) else f"({inner})")
    p = _PREC[e.op]
    # left-associative; comparisons do not chain
    lp = p + 1 if p == 4 else p
    s = f"{format_expr(e.left, lp)} {e.op} {format_expr(e.right, p + 1)}"
    return f"({s})" if p < prec else s


def format_action(a: Action) -> str:
    def when(w):
        return f"when ({format_expr(w)}) " if w is not None else ""

    if isinstance(a, Assign):
        return f"{when(a.when)}{format_expr(a.target)} := {format_expr(a.value)}"
    if isinstance(a, Guard):
        return f"when ({format_expr(a.cond)}) skip"
    if isinstance(a, Cas):
        args = [format_expr(a.target), format_expr(a.expected), format_expr(a.new)]
        if a.result is not None:
            args.append(a.result)
        return f"{when(a.when)}cas({', '.join(args)})"
    if isinstance(a, Skip):
        return "skip"
    if isinstance(a, Assert):
        return f"assert({format_expr(a.cond)})"
    if isinstance(a, Start):
        return f"start {a.thread}"
    if isinstance(a, Join):
        return f"join {a.thread}"
    raise TypeError(a)


def print_program(p: Program) -> str:
    """Render ``p`` in the input syntax (parse(print(p)) == p for parsed programs)."""
    out = []
    for v in p.vars:
        out.append(f"var {v.name}: int[{v.lo}..{v.hi}] = {v.init};")
    for a in p.arrays:
        init = ", ".join(str(x) for x in a.init)
        out.append(f"array {a.name}[{a.length}]: int[{a.lo}..{a.hi}] = {{{init}}};")
    for q in p.pointers:
        out.append(f"ptr {q.name} = {format_expr(q.init) if q.init else 'null'};")
    for t in p.threads:
        out.append(f"thread {t.name} {{")
        for e in t.edges:
            out.append(f"  {e.source}: {format_action(e.action)} goto {e.target};")
        out.append("}")
    if p.property is not None:
        out.append(f"assert({format_expr(p.property)});")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Lowering

def fault_expr(a: Action, p: Program) -> Optional[Expr]:
    """Condition under which evaluating ``a`` dereferences null or indexes out of bounds.

    Returns None when ``a`` provably never faults.  The expression itself
    never faults when evaluated with short-circuit connectives.
    """
    scalars = {v.name: v for v in p.vars}
    arrays = {x.name: x for x in p.arrays}
    from .analysis import may_alias
    never_null = {n for n, targets in may_alias(p).sets.items() if 0 not in targets}
    false = BoolConst(False)

    def oob(name, idx):
        n = arrays[name].length
        if isinstance(idx, Const):
            return false
        lo_ok = hi_ok = False
        if isinstance(idx, VarRef) and idx.name in scalars:
            v = scalars[idx.name]
            lo_ok, hi_ok = v.lo >= 0, v.hi <= n - 1
        parts = []
        if not lo_ok:
            parts.append(BinOp("<", idx, Const(0)))
        if not hi_ok:
            parts.append(BinOp(">", idx, Const(n - 1)))
        return disj(*parts)

    def F(e):
        if isinstance(e, ArrayRef):
            return oob(e.name, e.index)
        if isinstance(e, Deref):
            if e.pointer in never_null:
                return false
            return BinOp("==", VarRef(e.pointer), Null())
        if isinstance(e, Not):
            return F(e.operand)
        if isinstance(e, BinOp):
            fl, fr = F(e.left), F(e.right)
            if fr == false:
                return fl
            if e.op == "&&":
                return disj(fl, conj(e.left, fr))
            if e.op == "||":
                return disj(fl, conj(Not(e.left), fr))
            return disj(fl, fr)
        return false

    def F_lval(lv):
        if isinstance(lv, ArrayRef):
            return oob(lv.name, lv.index)
        if isinstance(lv, Deref):
            return F(lv)
        return false

    if isinstance(a, Guard):
        f = F(a.cond)
    elif isinstance(a, Assign):
        rest = disj(F_lval(a.target), F(a.value))
        f = rest if a.when is None else disj(F(a.when), conj(a.when, rest) if rest != false else false)
    elif isinstance(a, Cas):
        rest = disj(F_lval(a.target), F(a.expected), F(a.new))
        f = rest if a.when is None else disj(F(a.when), conj(a.when, rest) if rest != false else false)
    else:
        f = false
    return None if f == false else f


def _fresh_var(p_names: set, name: str) -> str:
    if name in p_names:
        raise ParseError(f"lowering needs variable name {name!r}, which is taken")
    p_names.add(name)
    return name


def lower_sugar(p: Program) -> Program:
    """Replace sugar by core actions and make errors explicit sink edges.

    * ``assert(b)`` becomes ``Guard(b)`` to the continuation and ``Guard(!b)``
      to the thread sink.
    * ``start t`` sets ``started_t``; ``t`` waits in a fresh initial location
      ``_start`` until the flag is set.
    * ``join t`` waits for ``done_t``, which ``t`` sets on a fresh ``_fin``
      edge in front of ``end``.
    * The global property is checked by every thread right after it sets its
      completion flag, and only once all threads are complete.
    * Every action that may fault gets an extra guarded edge to the sink.
    """
    if p.lowered:
        return p
    names = {v.name for v in p.vars} | {a.name for a in p.arrays} \
        | {q.name for q in p.pointers} | {t.name for t in p.threads}
    started, joined = set(), set()
    for t in p.threads:
        for e in t.edges:
            if isinstance(e.action, Start):
                started.add(e.action.thread)
            elif isinstance(e.action, Join):
                joined.add(e.action.thread)
    has_prop = p.property is not None
    completes = [t.name for t in p.threads
                 if (t.name in joined or has_prop) and END in t.locations]
    new_vars = list(p.vars)
    started_var = {}
    for t in p.threads:
        if t.name in started:
            started_var[t.name] = _fresh_var(names, f"started_{t.name}")
            new_vars.append(VarDecl(started_var[t.name], 0, 1, 0))
    done_var = {}
    for name in completes:
        done_var[name] = _fresh_var(names, f"done_{name}")
        new_vars.append(VarDecl(done_var[name], 0, 1, 0))
    # fault analysis must see the final variable set
    base = replace(p, vars=tuple(new_vars))

    all_done = conj(*(BinOp("==", VarRef(done_var[n]), Const(1)) for n in completes)) \
        if has_prop and len(completes) == len(p.threads) else None

    threads = []
    for t in p.threads:
        edges = []
        needs_sink = False
        completion = t.name in done_var
        for e in t.edges:
            a = e.action
            tgt = "_fin" if completion and e.target == END else e.target
            if isinstance(a, Assert):
                edges.append(Edge(e.source, Guard(a.cond), tgt))
                f = fault_expr(Guard(a.cond), base)
                if f is not None:
                    edges.append(Edge(e.source, Guard(f), SINK))
                edges.append(Edge(e.source, Guard(negate(a.cond)), SINK))
                needs_sink = True
                continue
            if isinstance(a, Start):
                a = Assign(VarRef(started_var[a.thread]), Const(1))
            elif isinstance(a, Join):
                if a.thread not in done_var:
                    raise ParseError(f"cannot join {a.thread}: it never reaches end")
                a = Guard(BinOp("==", VarRef(done_var[a.thread]), Const(1)))
            edges.append(Edge(e.source, a, tgt))
            f = fault_expr(a, base)
            if f is not None:
                edges.append(Edge(e.source, Guard(f), SINK))
                needs_sink = True
        locs = list(t.locations)
        initial = t.initial
        if t.name in started:
            flag = BinOp("==", VarRef(started_var[t.name]), Const(1))
            edges.insert(0, Edge("_start", Guard(flag), t.initial))
            locs.insert(0, "_start")
            initial = "_start"
        if completion:
            after = "_chk" if all_done is not None else END
            edges.append(Edge("_fin", Assign(VarRef(done_var[t.name]), Const(1)), after))
            locs.insert(locs.index(END), "_fin")
            if all_done is not None:
                locs.insert(locs.index(END), "_chk")
                edges.append(Edge("_chk", Guard(conj(all_done, negate(p.property))), SINK))
                edges.append(Edge("_chk", Guard(conj(all_done, p.property)), END))
                edges.append(Edge("_chk", Guard(negate(all_done)), END))
                needs_sink = True
        sink = None
        if needs_sink:
            locs.append(SINK)
            sink = SINK
        threads.append(ThreadCfg(t.name, tuple(locs), initial, sink, tuple(edges)))
    completion = tuple((n, done_var[n]) for n in completes)
    out = Program(tuple(new_vars), p.arrays, p.pointers, tuple(threads), p.property,
                  lowered=True, completion=completion)
    check_program(out)
    return out


# ---------------------------------------------------------------------------
# Semantics

class Fault(Exception):
    """Raised inside compiled expressions on null dereference or bad index."""


class _FaultOutcome:
    def __repr__(self):
        return "FAULT"


FAULT = _FaultOutcome()


def compile_expr(e: Expr, layout: Layout) -> Callable:
    """Compile an expression to a function of the data tuple."""
    if isinstance(e, Const):
        v = e.value
        return lambda d: v
    if isinstance(e, BoolConst):
        b = e.value
        return lambda d: b
    if isinstance(e, Null):
        return lambda d: 0
    if isinstance(e, AddrOf):
        a = layout.address_of(e)
        return lambda d: a
    if isinstance(e, VarRef):
        k = layout.slot_of[e.name]
        return lambda d: d[k]
    if isinstance(e, ArrayRef):
        base, n = layout.array_base[e.name]
        if isinstance(e.index, Const):
            k = base + e.index.value
            return lambda d: d[k]
        fi = compile_expr(e.index, layout)

        def read_cell(d):
            i = fi(d)
            if 0 <= i < n:
                return d[base + i]
            raise Fault
        return read_cell
    if isinstance(e, Deref):
        k = layout.slot_of[e.pointer]

        def deref(d):
            a = d[k]
            if a == 0:
                raise Fault
            return d[a - 1]
        return deref
    if isinstance(e, Not):
        f = compile_expr(e.operand, layout)
        return lambda d: not f(d)
    fl, fr = compile_expr(e.left, layout), compile_expr(e.right, layout)
    op = e.op
    if op == "&&":
        return lambda d: fl(d) and fr(d)
    if op == "||":
        return lambda d: fl(d) or fr(d)
    if op == "+":
        return lambda d: fl(d) + fr(d)
    if op == "-":
        return lambda d: fl(d) - fr(d)
    if op == "==":
        return lambda d: fl(d) == fr(d)
    if op == "!=":
        return lambda d: fl(d) != fr(d)
    if op == "<":
        return lambda d: fl(d) < fr(d)
    if op == "<=":
        return lambda d: fl(d) <= fr(d)
    if op == ">":
        return lambda d: fl(d) > fr(d)
    if op == ">=":
        return lambda d: fl(d) >= fr(d)
    raise ValueError(op)


def compile_lvalue(lv: LValue, layout: Layout) -> Callable:
    """Compile an lvalue to a function returning its slot index."""
    if isinstance(lv, VarRef):
        k = layout.slot_of[lv.name]
        return lambda d: k
    if isinstance(lv, ArrayRef):
        base, n = layout.array_base[lv.name]
        fi = compile_expr(lv.index, layout)

        def cell(d):
            i = fi(d)
            if 0 <= i < n:
                return base + i
            raise Fault
        return cell
    k = layout.slot_of[lv.pointer]

    def target(d):
        a = d[k]
        if a == 0:
            raise Fault
        return a - 1
    return target


def compile_action(a: Action, layout: Layout) -> Callable:
    """Compile a core action to ``f(data) -> data' | None | FAULT``.

    ``None`` means the action is blocked.
    """
    if isinstance(a, Skip):
        return lambda d: d
    if isinstance(a, Guard):
        fc = compile_expr(a.cond, layout)

        def guard(d):
            try:
                return d if fc(d) else None
            except Fault:
                return FAULT
        return guard
    fw = compile_expr(a.when, layout) if getattr(a, "when", None) is not None else None
    wrap = layout.wrap
    if isinstance(a, Assign):
        ft = compile_lvalue(a.target, layout)
        fv = compile_expr(a.value, layout)

        def assign(d):
            try:
                if fw is not None and not fw(d):
                    return None
                k = ft(d)
                v = wrap(k, fv(d))
            except Fault:
                return FAULT
            if d[k] == v:
                return d
            return d[:k] + (v,) + d[k + 1:]
        return assign
    if isinstance(a, Cas):
        ft = compile_lvalue(a.target, layout)
        fe = compile_expr(a.expected, layout)
        fn = compile_expr(a.new, layout)
        r = layout.slot_of[a.result] if a.result is not None else None

        def cas(d):
            try:
                if fw is not None and not fw(d):
                    return None
                k = ft(d)
                expected = fe(d)
                new = wrap(k, fn(d))
            except Fault:
                return FAULT
            out = list(d)
            if d[k] == expected:
                out[k] = new
                if r is not None:
                    out[r] = wrap(r, 1)
            elif r is not None:
                out[r] = wrap(r, 0)
            return tuple(out)
        return cas
    raise TypeError(f"cannot execute sugar action {a!r}; lower the program first")


def eval_action(a: Action, d: tuple, p: Program):
    """Data semantics of one action.

    Returns a frozenset with zero (blocked) or one successor valuation, or
    the ``FAULT`` marker on a null dereference / out-of-bounds index.
    """
    out = compile_action(a, p.layout)(d)
    if out is FAULT:
        return FAULT
    return frozenset() if out is None else frozenset({out})


def eval_expr(e: Expr, d: tuple, p: Program):
    return compile_expr(e, p.layout)(d)


def format_data(d: tuple, p: Program) -> str:
    lay = p.layout
    parts = []
    for k, name in enumerate(lay.slot_names):
        v = d[k]
        parts.append(f"{name}={lay.address_name(v) if lay.is_pointer_slot(k) else v}")
    return ", ".join(parts)


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())
