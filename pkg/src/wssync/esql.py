"""E-SQL: SELECT-FROM-WHERE view definitions annotated with evolution preferences.

A view definition looks like::

    CREATE VIEW V1 VE='⊇' AS
    SELECT D.IdD, D.Name (AD=false, AR=true)
    FROM S1.Doctor D (RD=false, RR=true)
    WHERE (D.Speciality = "Cardiologist") (CD=false, CR=true);

Every select item, relation and primitive clause may carry a parameter group
saying whether it is dispensable (``XD``) and replaceable (``XR``); omitted
groups default to ``false``.  ``VE`` states which extent relation a rewrite of
the view may have with the original and defaults to ``≡``.

Keywords are case-insensitive and contextual, so ``Date`` or ``Name`` remain
usable as attribute names.  The WHERE clause is a flat conjunction; clauses
are separated by ``AND`` or a comma.  ``parse_view(print_view(v)) == v`` holds
for every well-formed ``ViewDefinition``.
"""

from __future__ import annotations

import datetime as _dt
import re
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Union

from wssync.errors import EsqlSemanticError, EsqlSyntaxError
from wssync.model import ExtentRelation, RelationRef

COMPARATORS = ("=", "<>", "<", "<=", ">", ">=")

# Words that may not be used as aliases or bare identifiers in positions where
# the grammar would become ambiguous.
RESERVED = frozenset({"CREATE", "VIEW", "VE", "AS", "SELECT", "FROM", "WHERE", "AND", "DATE", "TRUE", "FALSE"})


@dataclass(frozen=True)
class EvolutionParams:
    dispensable: bool = False
    replaceable: bool = False

    @property
    def is_default(self) -> bool:
        return not self.dispensable and not self.replaceable


DEFAULT_PARAMS = EvolutionParams()


@dataclass(frozen=True)
class AttributeTerm:
    alias: str
    attribute: str

    def __str__(self) -> str:
        return f"{self.alias}.{self.attribute}"


@dataclass(frozen=True)
class NumberLiteral:
    value: int | float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class StringLiteral:
    value: str

    def __str__(self) -> str:
        return quote_string(self.value)


@dataclass(frozen=True)
class DateLiteral:
    value: _dt.date

    def __str__(self) -> str:
        return f"DATE '{self.value.isoformat()}'"


Term = Union[AttributeTerm, NumberLiteral, StringLiteral, DateLiteral]


@dataclass(frozen=True)
class SelectItem:
    attribute: AttributeTerm
    params: EvolutionParams = DEFAULT_PARAMS


@dataclass(frozen=True)
class FromItem:
    relation: RelationRef
    alias: str
    params: EvolutionParams = DEFAULT_PARAMS


@dataclass(frozen=True)
class PrimitiveClause:
    lhs: Term
    comparator: str
    rhs: Term
    params: EvolutionParams = DEFAULT_PARAMS

    def __post_init__(self) -> None:
        if self.comparator == "!=":
            object.__setattr__(self, "comparator", "<>")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        if not isinstance(self.lhs, AttributeTerm) and not isinstance(self.rhs, AttributeTerm):
            raise ValueError("a primitive clause needs an attribute on at least one side")

    @property
    def attribute_terms(self) -> tuple[AttributeTerm, ...]:
        return tuple(t for t in (self.lhs, self.rhs) if isinstance(t, AttributeTerm))

    def mentions_alias(self, alias: str) -> bool:
        return any(t.alias == alias for t in self.attribute_terms)


@dataclass(frozen=True)
class ViewDefinition:
    name: str
    select: tuple[SelectItem, ...]
    from_: tuple[FromItem, ...]
    where: tuple[PrimitiveClause, ...] = ()
    ve: ExtentRelation = ExtentRelation.EQUIVALENT
    column_list: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "select", tuple(self.select))
        object.__setattr__(self, "from_", tuple(self.from_))
        object.__setattr__(self, "where", tuple(self.where))
        if self.column_list is not None:
            object.__setattr__(self, "column_list", tuple(self.column_list))

    @property
    def aliases(self) -> dict[str, RelationRef]:
        return {f.alias: f.relation for f in self.from_}

    def aliases_of(self, relation: RelationRef) -> tuple[str, ...]:
        return tuple(f.alias for f in self.from_ if f.relation == relation)

    def check(self) -> None:
        """Raise EsqlSemanticError unless the aliases and arities are consistent."""
        if not self.select:
            raise EsqlSemanticError(f"view {self.name}: SELECT is empty")
        if not self.from_:
            raise EsqlSemanticError(f"view {self.name}: FROM is empty")
        seen: set[str] = set()
        for item in self.from_:
            if item.alias in seen:
                raise EsqlSemanticError(f"view {self.name}: duplicate alias {item.alias!r}")
            seen.add(item.alias)
        used = [s.attribute for s in self.select]
        used += [t for c in self.where for t in c.attribute_terms]
        for term in used:
            if term.alias not in seen:
                raise EsqlSemanticError(f"view {self.name}: undeclared alias {term.alias!r} in {term}")
        if self.column_list is not None and len(self.column_list) != len(self.select):
            raise EsqlSemanticError(
                f"view {self.name}: column list has {len(self.column_list)} names "
                f"for {len(self.select)} select items"
            )


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {v[1]: k for k, v in _ESCAPES.items()}


def quote_string(value: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in value) + '"'


def _params(prefix: str, params: EvolutionParams) -> str:
    if params.is_default:
        return ""
    d = "true" if params.dispensable else "false"
    r = "true" if params.replaceable else "false"
    return f" ({prefix}D={d}, {prefix}R={r})"


def print_term(term: Term) -> str:
    return str(term)


def print_clause(clause: PrimitiveClause, with_params: bool = True) -> str:
    body = f"({clause.lhs} {clause.comparator} {clause.rhs})"
    return body + (_params("C", clause.params) if with_params else "")


def print_select_item(item: SelectItem) -> str:
    return f"{item.attribute}{_params('A', item.params)}"


def print_from_item(item: FromItem) -> str:
    return f"{item.relation} {item.alias}{_params('R', item.params)}"


def print_view(view: ViewDefinition) -> str:
    """Canonical E-SQL text: one SQL clause per line, VE always explicit."""
    head = f"CREATE VIEW {view.name}"
    if view.column_list is not None:
        head += " (" + ", ".join(view.column_list) + ")"
    head += f" VE='{view.ve.symbol}' AS"
    lines = [
        head,
        "SELECT " + ", ".join(print_select_item(s) for s in view.select),
        "FROM " + ", ".join(print_from_item(f) for f in view.from_),
    ]
    if view.where:
        lines.append("WHERE " + " AND ".join(print_clause(c) for c in view.where))
    return "\n".join(lines) + ";"


# ---------------------------------------------------------------------------
# Tokenizing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<dstring>"(?:[^"\\]|\\.)*")
  | (?P<sstring>'(?:[^'\\]|\\.)*')
  | (?P<op><>|<=|>=|!=|[=<>(),.;])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # word, number, string, op, eof
    text: str
    line: int
    column: int
    value: object = None

    def is_word(self, *words: str) -> bool:
        return self.kind == "word" and self.text.upper() in words

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops


def _unescape(body: str, line: int, column: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _UNESCAPES and nxt != "'":
                raise EsqlSyntaxError(f"unknown escape \\{nxt}", line, column)
            out.append(_UNESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            raise EsqlSyntaxError(f"unexpected character {text[pos]!r}", line, column)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "number":
            value: object = float(chunk) if any(c in chunk for c in ".eE") else int(chunk)
            tokens.append(Token("number", chunk, line, column, value))
        elif kind in ("dstring", "sstring"):
            tokens.append(Token("string", chunk, line, column, _unescape(chunk[1:-1], line, column)))
        elif kind in ("word", "op"):
            tokens.append(Token(kind, chunk, line, column))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None) -> EsqlSyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return EsqlSyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def expect_word(self, word: str) -> Token:
        if not self.tok.is_word(word):
            raise self.fail(f"expected {word}")
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.fail(f"expected {op!r}")
        return self.advance()

    def identifier(self, what: str) -> str:
        tok = self.tok
        if tok.kind != "word":
            raise self.fail(f"expected {what}")
        if tok.text.upper() in RESERVED:
            raise self.fail(f"expected {what}, keyword not allowed here")
        self.advance()
        return tok.text

    def name_after_dot(self, what: str) -> str:
        # After a dot any word is a name, keywords included.
        if self.tok.kind != "word":
            raise self.fail(f"expected {what}")
        return self.advance().text

    # -- statements ------------------------------------------------------

    def views(self) -> list[ViewDefinition]:
        out = []
        while self.tok.kind != "eof":
            if self.tok.is_op(";"):
                self.advance()
                continue
            out.append(self.view())
        return out

    def view(self) -> ViewDefinition:
        start = self.tok
        self.expect_word("CREATE")
        self.expect_word("VIEW")
        name = self.identifier("view name")
        column_list = None
        if self.tok.is_op("("):
            self.advance()
            column_list = [self.identifier("column name")]
            while self.tok.is_op(","):
                self.advance()
                column_list.append(self.identifier("column name"))
            self.expect_op(")")
        ve = ExtentRelation.EQUIVALENT
        if self.tok.is_word("VE"):
            self.advance()
            self.expect_op("=")
            tok = self.tok
            symbol = tok.value if tok.kind == "string" else tok.text
            try:
                ve = ExtentRelation.from_symbol(symbol)
            except ValueError:
                raise self.fail("expected one of '≡', '⊇', '⊆', '≈'") from None
            self.advance()
        self.expect_word("AS")

        self.expect_word("SELECT")
        raw_select = [self.select_item()]
        while self.tok.is_op(","):
            self.advance()
            raw_select.append(self.select_item())

        self.expect_word("FROM")
        from_items = [self.from_item()]
        while self.tok.is_op(","):
            self.advance()
            from_items.append(self.from_item())

        where: list[PrimitiveClause] = []
        if self.tok.is_word("WHERE"):
            self.advance()
            where.append(self.clause())
            while self.tok.is_op(",") or self.tok.is_word("AND"):
                self.advance()
                where.append(self.clause())

        if self.tok.is_op(";"):
            self.advance()
        elif self.tok.kind != "eof" and not self.tok.is_word("CREATE"):
            raise self.fail("expected ';'")

        select = []
        for (alias, attr, tok), params in raw_select:
            if alias is None:
                if len(from_items) != 1:
                    raise EsqlSemanticError(
                        f"unqualified attribute {attr!r} at line {tok.line}, column {tok.column} "
                        "needs an alias when FROM lists several relations"
                    )
                alias = from_items[0].alias
            select.append(SelectItem(AttributeTerm(alias, attr), params))

        view = ViewDefinition(
            name=name,
            select=tuple(select),
            from_=tuple(from_items),
            where=tuple(where),
            ve=ve,
            column_list=tuple(column_list) if column_list is not None else None,
        )
        try:
            view.check()
        except EsqlSemanticError as exc:
            raise EsqlSemanticError(f"{exc} (view starting at line {start.line})") from None
        return view

    def params(self, prefix: str) -> EvolutionParams:
        """Optional ``(XD=b, XR=b)`` group; either entry may be omitted."""
        if not (self.tok.is_op("(") and self.peek().kind == "word" and self.peek(2).is_op("=")):
            return DEFAULT_PARAMS
        if self.peek().text.upper() not in (prefix + "D", prefix + "R"):
            raise self.fail(f"expected {prefix}D or {prefix}R", self.peek())
        self.advance()
        values: dict[str, bool] = {}
        while True:
            key_tok = self.tok
            key = key_tok.text.upper() if key_tok.kind == "word" else ""
            if key not in (prefix + "D", prefix + "R"):
                raise self.fail(f"expected {prefix}D or {prefix}R")
            if key in values:
                raise self.fail(f"{key} given twice")
            self.advance()
            self.expect_op("=")
            if self.tok.is_word("TRUE"):
                values[key] = True
            elif self.tok.is_word("FALSE"):
                values[key] = False
            else:
                raise self.fail("expected true or false")
            self.advance()
            if self.tok.is_op(","):
                self.advance()
                continue
            self.expect_op(")")
            break
        return EvolutionParams(values.get(prefix + "D", False), values.get(prefix + "R", False))

    def select_item(self):
        tok = self.tok
        first = self.identifier("attribute")
        if self.tok.is_op("."):
            self.advance()
            ref = (first, self.name_after_dot("attribute name"), tok)
        else:
            ref = (None, first, tok)
        return ref, self.params("A")

    def from_item(self) -> FromItem:
        source = self.identifier("source name")
        self.expect_op(".")
        relation = self.name_after_dot("relation name")
        alias = relation
        if self.tok.kind == "word" and self.tok.text.upper() not in RESERVED:
            alias = self.advance().text
        return FromItem(RelationRef(source, relation), alias, self.params("R"))

    def clause(self) -> PrimitiveClause:
        if self.tok.is_op("("):
            self.advance()
            lhs, op, rhs = self.comparison()
            self.expect_op(")")
        else:
            lhs, op, rhs = self.comparison()
        params = self.params("C")
        try:
            return PrimitiveClause(lhs, op, rhs, params)
        except ValueError as exc:
            raise self.fail(str(exc)) from None

    def comparison(self) -> tuple[Term, str, Term]:
        lhs = self.term()
        tok = self.tok
        if not tok.is_op(*COMPARATORS, "!="):
            raise self.fail("expected a comparator")
        self.advance()
        rhs = self.term()
        return lhs, tok.text, rhs

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return NumberLiteral(tok.value)
        if tok.kind == "string":
            self.advance()
            return StringLiteral(tok.value)
        if tok.is_word("DATE") and self.peek().kind == "string":
            self.advance()
            lit = self.advance()
            try:
                return DateLiteral(_dt.date.fromisoformat(lit.value))
            except ValueError:
                raise self.fail("expected an ISO date YYYY-MM-DD", lit) from None
        alias = self.identifier("attribute or literal")
        self.expect_op(".")
        return AttributeTerm(alias, self.name_after_dot("attribute name"))


def parse_view(text: str) -> ViewDefinition:
    """Parse exactly one ``CREATE VIEW`` statement."""
    views = parse_views(text)
    if len(views) != 1:
        raise EsqlSyntaxError(f"expected exactly one view definition, got {len(views)}", 1, 1)
    return views[0]


def parse_views(text: str) -> list[ViewDefinition]:
    """Parse a file of ``CREATE VIEW ...;`` statements with ``--`` comments."""
    return _Parser(text).views()


def parse_condition(text: str) -> tuple[PrimitiveClause, ...]:
    """Parse a bare conjunction such as ``Hospital.Localization = "Tunis"``."""
    p = _Parser(text)
    if p.tok.kind == "eof":
        return ()
    clauses = [p.clause()]
    while p.tok.is_op(",") or p.tok.is_word("AND"):
        p.advance()
        clauses.append(p.clause())
    if p.tok.kind != "eof":
        raise p.fail("expected end of condition")
    return tuple(clauses)


def iter_attribute_terms(view: ViewDefinition) -> Iterator[AttributeTerm]:
    for item in view.select:
        yield item.attribute
    for clause in view.where:
        yield from clause.attribute_terms


def rename_terms(clause: PrimitiveClause, mapping: dict[AttributeTerm, AttributeTerm]) -> PrimitiveClause:
    def sub(term: Term) -> Term:
        return mapping.get(term, term) if isinstance(term, AttributeTerm) else term

    return PrimitiveClause(sub(clause.lhs), clause.comparator, sub(clause.rhs), clause.params)


def canonical(view: ViewDefinition) -> ViewDefinition:
    """Normalize a view through a print/parse cycle."""
    return parse_view(print_view(view))

