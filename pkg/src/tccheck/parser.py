"""Parser for the declaration DSL (.tc), carrier tables (.car) and goals.

Both file formats start with a `version 1` line. Comments run from `--`
to end of line. The grammar is documented in full in docs/dsl.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    column: int  # 1-based
    length: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.diagnostic = Diagnostic(message, span)


# ---------------------------------------------------------------------------
# surface syntax trees (not yet scope-resolved; the registry elaborates them)

@dataclass(frozen=True)
class SType:
    head: str
    args: tuple["SType", ...]
    span: SourceSpan


@dataclass(frozen=True)
class SConstraint:
    cls: str
    args: tuple[SType, ...]
    span: SourceSpan


@dataclass(frozen=True)
class SVar:
    name: str
    span: SourceSpan


@dataclass(frozen=True)
class SNat:
    value: int
    span: SourceSpan


@dataclass(frozen=True)
class SLam:
    binders: tuple[str, ...]
    body: "STerm"
    span: SourceSpan


@dataclass(frozen=True)
class SApp:
    fn: "STerm"
    arg: "STerm"
    span: SourceSpan


STerm = SVar | SNat | SLam | SApp


@dataclass(frozen=True)
class SOpField:
    name: str
    signature: tuple[SType, ...]  # argument types then result type
    span: SourceSpan


@dataclass(frozen=True)
class SAxiom:
    name: str
    binders: tuple[tuple[str, str], ...]  # (variable, class param it ranges over)
    lhs: STerm
    rhs: STerm
    span: SourceSpan


@dataclass(frozen=True)
class SClassDecl:
    name: str
    params: tuple[str, ...]
    premises: tuple[SConstraint, ...]
    extends: tuple[SConstraint, ...]
    ops: tuple[SOpField, ...]
    axioms: tuple[SAxiom, ...]
    span: SourceSpan


@dataclass(frozen=True)
class SInstanceDecl:
    name: str
    typevars: tuple[str, ...]
    premises: tuple[SConstraint, ...]
    head: SConstraint
    op_defs: Optional[tuple[tuple[str, STerm], ...]]  # None for opaque instances
    priority: Optional[int]
    span: SourceSpan


SDecl = SClassDecl | SInstanceDecl


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>--[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<fatarrow>=>)
  | (?P<assign>:=)
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.']*)
  | (?P<punct>[(){}\[\],:=])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "version", "class", "instance", "op", "axiom", "requires", "extends",
    "fun", "forall", "priority", "natrec",
    "carrier", "elems", "declares",
}


@dataclass(frozen=True)
class Token:
    kind: str  # arrow | fatarrow | assign | nat | ident | punct | eof
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, line, pos - line_start + 1, 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        assert kind is not None
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            span = SourceSpan(filename, line, m.start() - line_start + 1, m.end() - m.start())
            tokens.append(Token(kind, m.group(), span))
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, line, n - line_start + 1, 0)))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "arrow", "fatarrow", "assign")

    def at_ident(self, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and (text is None or tok.text == text)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return tok

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected {what}, found {tok.text!r}", tok.span)
        return tok


# ---------------------------------------------------------------------------
# declaration files

def _parse_type_atom(c: _Cursor) -> SType:
    if c.at("("):
        c.next()
        t = _parse_type(c)
        c.expect(")")
        return t
    tok = c.expect_ident("type name")
    return SType(tok.text, (), tok.span)


def _parse_type(c: _Cursor) -> SType:
    head = c.expect_ident("type name")
    args: list[SType] = []
    while c.at("(") or (c.at_ident() and c.peek().text not in KEYWORDS):
        args.append(_parse_type_atom(c))
    return SType(head.text, tuple(args), head.span)


def _parse_constraint(c: _Cursor) -> SConstraint:
    cls = c.expect_ident("class name")
    args: list[SType] = []
    while c.at("(") or (c.at_ident() and c.peek().text not in KEYWORDS):
        args.append(_parse_type_atom(c))
    return SConstraint(cls.text, tuple(args), cls.span)


def _parse_params(c: _Cursor) -> tuple[str, ...]:
    # zero or more groups of the shape (M : Type) or (M A : Type)
    names: list[str] = []
    while c.at("("):
        c.next()
        group = [c.expect_ident("parameter name").text]
        while c.at_ident() and not c.at(":"):
            group.append(c.expect_ident().text)
        c.expect(":")
        c.expect("Type")
        c.expect(")")
        names.extend(group)
    return tuple(names)


def _parse_premises(c: _Cursor) -> tuple[SConstraint, ...]:
    if c.at_ident("requires"):
        c.next()
    out: list[SConstraint] = []
    while c.at("["):
        c.next()
        out.append(_parse_constraint(c))
        c.expect("]")
    return tuple(out)


def _parse_term_atom(c: _Cursor) -> STerm:
    tok = c.peek()
    if c.at("("):
        c.next()
        t = _parse_term(c)
        c.expect(")")
        return t
    if tok.kind == "nat":
        c.next()
        return SNat(int(tok.text), tok.span)
    if tok.kind == "ident":
        c.next()
        return SVar(tok.text, tok.span)
    raise ParseError(f"expected a term, found {tok.text!r}", tok.span)


def _parse_term(c: _Cursor) -> STerm:
    tok = c.peek()
    if c.at_ident("fun"):
        c.next()
        binders = [c.expect_ident("binder").text]
        while c.at_ident() and not c.peek().text == "=>":
            binders.append(c.expect_ident().text)
        arrow = c.next()
        if arrow.text != "=>":
            raise ParseError(f"expected '=>', found {arrow.text!r}", arrow.span)
        body = _parse_term(c)
        return SLam(tuple(binders), body, tok.span)
    t = _parse_term_atom(c)
    while True:
        nxt = c.peek()
        if c.at("(") or nxt.kind == "nat" or (nxt.kind == "ident" and nxt.text not in KEYWORDS):
            arg = _parse_term_atom(c)
            t = SApp(t, arg, nxt.span)
        else:
            return t


def _parse_op_field(c: _Cursor) -> SOpField:
    kw = c.expect("op")
    name = c.expect_ident("operation name")
    c.expect(":")
    parts = [_parse_type_atom(c) if c.at("(") else _parse_type_arrow_atom(c)]
    while c.peek().kind == "arrow":
        c.next()
        parts.append(_parse_type_atom(c) if c.at("(") else _parse_type_arrow_atom(c))
    return SOpField(name.text, tuple(parts), kw.span)


def _parse_type_arrow_atom(c: _Cursor) -> SType:
    # inside an op signature, application binds tighter than ->
    head = c.expect_ident("type name")
    args: list[SType] = []
    while c.at("(") or (c.at_ident() and c.peek().text not in KEYWORDS):
        args.append(_parse_type_atom(c))
    return SType(head.text, tuple(args), head.span)


def _parse_axiom(c: _Cursor) -> SAxiom:
    kw = c.expect("axiom")
    name = c.expect_ident("axiom name")
    c.expect(":")
    c.expect("forall")
    binders: list[tuple[str, str]] = []
    while c.at("("):
        c.next()
        group = [c.expect_ident("bound variable").text]
        while c.at_ident() and not c.at(":"):
            group.append(c.expect_ident().text)
        c.expect(":")
        ty = c.expect_ident("class parameter")
        c.expect(")")
        binders.extend((v, ty.text) for v in group)
    c.expect(",")
    lhs = _parse_term(c)
    c.expect("=")
    rhs = _parse_term(c)
    return SAxiom(name.text, tuple(binders), lhs, rhs, kw.span)


def _parse_class(c: _Cursor) -> SClassDecl:
    kw = c.expect("class")
    name = c.expect_ident("class name")
    params = _parse_params(c)
    premises = _parse_premises(c)
    extends: tuple[SConstraint, ...] = ()
    if c.at_ident("extends"):
        c.next()
        ext = [_parse_constraint(c)]
        while c.at(","):
            c.next()
            ext.append(_parse_constraint(c))
        extends = tuple(ext)
    ops: list[SOpField] = []
    axioms: list[SAxiom] = []
    if c.at("{"):
        c.next()
        while not c.at("}"):
            if c.at_ident("op"):
                ops.append(_parse_op_field(c))
            elif c.at_ident("axiom"):
                axioms.append(_parse_axiom(c))
            else:
                tok = c.peek()
                raise ParseError(f"expected 'op', 'axiom' or '}}', found {tok.text!r}", tok.span)
        c.expect("}")
    return SClassDecl(name.text, params, premises, extends, tuple(ops), tuple(axioms), kw.span)


def _parse_instance(c: _Cursor) -> SInstanceDecl:
    kw = c.expect("instance")
    name = c.expect_ident("instance name")
    typevars = _parse_params(c)
    premises = _parse_premises(c)
    c.expect(":")
    head = _parse_constraint(c)
    priority: Optional[int] = None
    if c.at_ident("priority"):
        c.next()
        tok = c.next()
        if tok.kind != "nat":
            raise ParseError(f"expected a priority number, found {tok.text!r}", tok.span)
        priority = int(tok.text)
    op_defs: Optional[tuple[tuple[str, STerm], ...]] = None
    if c.at("{"):
        c.next()
        defs: list[tuple[str, STerm]] = []
        while not c.at("}"):
            op_name = c.expect_ident("operation name")
            tok = c.next()
            if tok.kind != "assign":
                raise ParseError(f"expected ':=', found {tok.text!r}", tok.span)
            defs.append((op_name.text, _parse_term(c)))
        c.expect("}")
        op_defs = tuple(defs) if defs else None
    return SInstanceDecl(name.text, typevars, premises, head, op_defs, priority, kw.span)


def _expect_version(c: _Cursor) -> None:
    tok = c.peek()
    if not c.at_ident("version"):
        raise ParseError("file must start with 'version 1'", tok.span)
    c.next()
    num = c.next()
    if num.text != "1":
        raise ParseError(f"unsupported format version {num.text!r}", num.span)


def parse_file(text: str, filename: str = "<string>") -> list[SDecl]:
    """Parse a .tc declaration file. Raises ParseError with a span."""
    c = _Cursor(tokenize(text, filename))
    _expect_version(c)
    decls: list[SDecl] = []
    while c.peek().kind != "eof":
        if c.at_ident("class"):
            decls.append(_parse_class(c))
        elif c.at_ident("instance"):
            decls.append(_parse_instance(c))
        else:
            tok = c.peek()
            raise ParseError(f"expected 'class' or 'instance', found {tok.text!r}", tok.span)
    return decls


def parse_goal(text: str, filename: str = "<goal>") -> SConstraint:
    """Parse a goal constraint; free names become opaque ground atoms."""
    c = _Cursor(tokenize(text, filename))
    goal = _parse_constraint(c)
    tok = c.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input after goal: {tok.text!r}", tok.span)
    return goal


def parse_term_text(text: str, filename: str = "<term>") -> STerm:
    c = _Cursor(tokenize(text, filename))
    t = _parse_term(c)
    tok = c.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input after term: {tok.text!r}", tok.span)
    return t


# ---------------------------------------------------------------------------
# carrier files

@dataclass(frozen=True)
class SCarrier:
    name: str
    elements: tuple[str, ...]
    declares: tuple[str, ...]
    # op name -> (arity, rows); rows flat for 0/1-ary, nested for 2-ary
    tables: dict[str, tuple[int, tuple]]
    span: SourceSpan


class CarrierFormatError(ParseError):
    pass


class PartialTable(CarrierFormatError):
    pass


class UnknownElement(CarrierFormatError):
    pass


def parse_carrier(text: str, filename: str = "<carrier>") -> SCarrier:
    c = _Cursor(tokenize(text, filename))
    _expect_version(c)
    kw = c.expect("carrier")
    name = c.expect_ident("carrier name")
    c.expect("elems")
    elements: list[str] = []
    while c.at_ident() and not c.peek().text in ("op", "declares") or c.peek().kind == "nat":
        tok = c.next()
        elements.append(tok.text)
    index = {e: i for i, e in enumerate(elements)}
    if len(index) != len(elements):
        raise CarrierFormatError("duplicate element names", name.span)
    declares: list[str] = []
    if c.at_ident("declares"):
        c.next()
        while c.at_ident() and c.peek().text != "op":
            declares.append(c.next().text)

    def elem_index(tok: Token) -> int:
        if tok.text not in index:
            raise UnknownElement(f"unknown element {tok.text!r}", tok.span)
        return index[tok.text]

    tables: dict[str, tuple[int, tuple]] = {}
    while c.at_ident("op"):
        c.next()
        op = c.expect_ident("operation name")
        tok = c.next()
        if tok.text == "=":
            tables[op.text] = (0, (elem_index(c.next()),))
            continue
        if tok.text != ":":
            raise ParseError(f"expected '=' or ':', found {tok.text!r}", tok.span)
        arity_tok = c.next()
        if arity_tok.kind != "nat" or int(arity_tok.text) not in (1, 2):
            raise ParseError("table arity must be 1 or 2", arity_tok.span)
        arity = int(arity_tok.text)
        n = len(elements)
        if arity == 1:
            row = tuple(elem_index(c.next()) for _ in range(n))
            tables[op.text] = (1, row)
        else:
            rows = []
            for _ in range(n):
                nxt = c.peek()
                if nxt.text in ("op", "") or nxt.kind == "eof":
                    raise PartialTable(f"table for {op.text!r} is missing rows", op.span)
                rows.append(tuple(elem_index(c.next()) for _ in range(n)))
            tables[op.text] = (2, tuple(rows))
    tok = c.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected input in carrier file: {tok.text!r}", tok.span)
    return SCarrier(name.text, tuple(elements), tuple(declares), tables, kw.span)


# ---------------------------------------------------------------------------
# pretty-printing (round-trip partner of the parsers above)

def type_to_str(t: SType) -> str:
    if not t.args:
        return t.head
    parts = []
    for a in t.args:
        s = type_to_str(a)
        parts.append(f"({s})" if a.args else s)
    return t.head + " " + " ".join(parts)


def constraint_to_str(con: SConstraint) -> str:
    if not con.args:
        return con.cls
    parts = []
    for a in con.args:
        s = type_to_str(a)
        parts.append(f"({s})" if a.args else s)
    return con.cls + " " + " ".join(parts)


def sterm_to_str(t: STerm) -> str:
    if isinstance(t, SVar):
        return t.name
    if isinstance(t, SNat):
        return str(t.value)
    if isinstance(t, SLam):
        return f"fun {' '.join(t.binders)} => {sterm_to_str(t.body)}"
    if isinstance(t, SApp):
        fn = sterm_to_str(t.fn)
        if isinstance(t.fn, SLam):
            fn = f"({fn})"
        arg = sterm_to_str(t.arg)
        if isinstance(t.arg, (SApp, SLam)):
            arg = f"({arg})"
        return f"{fn} {arg}"
    raise TypeError(t)


def decl_to_str(d: SDecl) -> str:
    if isinstance(d, SClassDecl):
        out = f"class {d.name}"
        for p in d.params:
            out += f" ({p} : Type)"
        if d.premises:
            out += " requires " + " ".join(f"[{constraint_to_str(p)}]" for p in d.premises)
        if d.extends:
            out += " extends " + ", ".join(constraint_to_str(e) for e in d.extends)
        if d.ops or d.axioms:
            lines = [out + " {"]
            for op in d.ops:
                sig = " -> ".join(
                    f"({type_to_str(p)})" if p.args else type_to_str(p) for p in op.signature
                )
                lines.append(f"  op {op.name} : {sig}")
            for ax in d.axioms:
                binders = " ".join(f"({v} : {p})" for v, p in ax.binders)
                lines.append(
                    f"  axiom {ax.name} : forall {binders}, "
                    f"{sterm_to_str(ax.lhs)} = {sterm_to_str(ax.rhs)}"
                )
            lines.append("}")
            return "\n".join(lines)
        return out
    out = f"instance {d.name}"
    for v in d.typevars:
        out += f" ({v} : Type)"
    for p in d.premises:
        out += f" [{constraint_to_str(p)}]"
    out += f" : {constraint_to_str(d.head)}"
    if d.priority is not None:
        out += f" priority {d.priority}"
    if d.op_defs:
        lines = [out + " {"]
        for name, term in d.op_defs:
            lines.append(f"  {name} := {sterm_to_str(term)}")
        lines.append("}")
        return "\n".join(lines)
    return out


def file_to_str(decls: list[SDecl]) -> str:
    return "version 1\n\n" + "\n\n".join(decl_to_str(d) for d in decls) + "\n"
