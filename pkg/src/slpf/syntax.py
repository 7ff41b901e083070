"""Regular expression front end.

Parses a textual RE into an AST, partitions the character classes that occur
in it into disjoint cells, and numbers every node in left-to-right preorder.
The numbered form is what the rest of the engine works on: operator number i
owns the parenthesis pair i( )i, terminal/epsilon leaves keep their number as
a subscript (a4, ε7).

Supported syntax: literals, backslash escapes (\\n \\t \\r \\xHH and escaped
punctuation), ``.`` (any byte but newline), ``[...]`` / ``[^...]`` classes
with ranges, ``|``, ``*``, ``+``, ``?``, ``{h}``, ``{h,k}``, ``{h,}`` and
grouping parentheses.  No backreferences, lookaround, lazy quantifiers or
named groups.  Patterns and subject texts are byte strings; char codes above
255 are rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

__all__ = [
    "ReError",
    "ReSyntaxError",
    "UnsupportedReError",
    "ReAst",
    "AlphabetPartition",
    "NumNode",
    "NumberedRE",
    "parse_re",
    "partition_classes",
    "number_re",
    "render_source",
    "render_numbered",
]

_METACHARS = frozenset(b"\\()[]|*+?{}.")
_ITERATORS = frozenset({"star", "cross", "optional", "repeat"})
_OPERATORS = frozenset(
    {"union", "concat", "star", "cross", "optional", "repeat", "group"}
)
_LEAF_KINDS = frozenset({"terminal", "charclass", "wildcard", "epsilon"})

WILDCARD_CHARS = frozenset(range(256)) - {0x0A}


class ReError(ValueError):
    """Base class for RE front-end errors; carries the source byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ReSyntaxError(ReError):
    pass


class UnsupportedReError(ReError):
    pass


@dataclass
class ReAst:
    """One AST node.

    kind is one of terminal | epsilon | charclass | wildcard | concat |
    union | star | cross | optional | repeat | group.  Matchable leaves
    carry ``chars`` (the set of byte values they accept); ``repeat`` carries
    ``low``/``high`` (high None = unbounded).  ``span`` is the source byte
    range the node was parsed from.
    """

    kind: str
    children: tuple["ReAst", ...] = ()
    chars: frozenset[int] | None = None
    low: int | None = None
    high: int | None = None
    span: tuple[int, int] = (0, 0)

    def __post_init__(self):
        k = self.kind
        n = len(self.children)
        if k in ("concat", "union"):
            assert n >= 2, f"{k} node needs >= 2 children, got {n}"
        elif k in ("star", "cross", "optional", "group", "repeat"):
            assert n == 1, f"{k} node needs exactly 1 child, got {n}"
        elif k in _LEAF_KINDS:
            assert n == 0
        else:
            raise AssertionError(f"unknown AST kind {k!r}")
        if k == "repeat":
            assert self.low is not None and self.low >= 0
            assert self.high is None or self.high >= self.low
        if k in ("terminal", "charclass", "wildcard"):
            assert self.chars, f"{k} node needs a non-empty char set"


class _Parser:
    """Recursive-descent parser over the pattern bytes."""

    def __init__(self, src: bytes):
        self.src = src
        self.pos = 0

    def error(self, message: str, offset: int | None = None) -> ReError:
        return ReSyntaxError(message, self.pos if offset is None else offset)

    def unsupported(self, message: str, offset: int | None = None) -> ReError:
        return UnsupportedReError(message, self.pos if offset is None else offset)

    def peek(self) -> int | None:
        return self.src[self.pos] if self.pos < len(self.src) else None

    def take(self) -> int:
        b = self.src[self.pos]
        self.pos += 1
        return b

    def parse(self) -> ReAst:
        if not self.src:
            raise self.error("empty pattern")
        node = self.union()
        if self.pos != len(self.src):
            raise self.error("unbalanced ')'" if self.peek() == 0x29 else "trailing junk")
        return node

    def union(self) -> ReAst:
        start = self.pos
        parts = [self.concatenation()]
        while self.peek() == 0x7C:  # |
            self.take()
            parts.append(self.concatenation())
        if len(parts) == 1:
            return parts[0]
        return ReAst("union", tuple(parts), span=(start, self.pos))

    def concatenation(self) -> ReAst:
        start = self.pos
        factors = []
        while True:
            b = self.peek()
            if b is None or b in (0x7C, 0x29):  # | )
                break
            factors.append(self.factor())
        if not factors:
            # an empty branch or group body denotes epsilon
            return ReAst("epsilon", span=(start, self.pos))
        if len(factors) == 1:
            return factors[0]
        return ReAst("concat", tuple(factors), span=(start, self.pos))

    def factor(self) -> ReAst:
        start = self.pos
        node = self.atom()
        b = self.peek()
        if b == 0x2A:  # *
            self.take()
            node = ReAst("star", (node,), span=(start, self.pos))
        elif b == 0x2B:  # +
            self.take()
            node = ReAst("cross", (node,), span=(start, self.pos))
        elif b == 0x3F:  # ?
            self.take()
            node = ReAst("optional", (node,), span=(start, self.pos))
        elif b == 0x7B:  # {
            low, high = self.brace()
            node = ReAst("repeat", (node,), low=low, high=high, span=(start, self.pos))
        nxt = self.peek()
        if nxt == 0x3F and node.kind in _ITERATORS:
            raise self.unsupported("lazy quantifiers are not supported")
        if nxt in (0x2A, 0x2B, 0x3F, 0x7B) and node.kind in _ITERATORS:
            raise self.error("stacked quantifiers need parentheses")
        return node

    def brace(self) -> tuple[int, int | None]:
        self.take()  # {
        low = self.number()
        b = self.peek()
        if b == 0x7D:  # }
            self.take()
            return low, low
        if b != 0x2C:  # ,
            raise self.error("expected ',' or '}' in repetition")
        self.take()
        if self.peek() == 0x7D:
            self.take()
            return low, None
        high = self.number()
        if self.peek() != 0x7D:
            raise self.error("expected '}' in repetition")
        self.take()
        if high < low:
            raise self.error(f"bad repetition bounds {{{low},{high}}}")
        return low, high

    def number(self) -> int:
        start = self.pos
        while self.peek() is not None and 0x30 <= self.peek() <= 0x39:
            self.take()
        if self.pos == start:
            raise self.error("expected a number")
        return int(self.src[start : self.pos])

    def atom(self) -> ReAst:
        start = self.pos
        b = self.peek()
        if b is None:
            raise self.error("unexpected end of pattern")
        if b == 0x28:  # (
            self.take()
            if self.peek() == 0x3F:  # (?...
                raise self.unsupported(
                    "(?...) groups (lookaround/non-capturing/named) are not supported"
                )
            body = self.union()
            if self.peek() != 0x29:
                raise self.error("missing ')'", start)
            self.take()
            return ReAst("group", (body,), span=(start, self.pos))
        if b == 0x5B:  # [
            return self.charclass()
        if b == 0x2E:  # .
            self.take()
            return ReAst("wildcard", chars=WILDCARD_CHARS, span=(start, self.pos))
        if b == 0x5C:  # backslash
            c = self.escape()
            return ReAst("terminal", chars=frozenset({c}), span=(start, self.pos))
        if b in (0x2A, 0x2B, 0x3F):  # * + ?
            raise self.error("nothing to repeat")
        if b == 0x7B:
            raise self.error("nothing to repeat")
        if b == 0x29:
            raise self.error("unbalanced ')'")
        self.take()
        return ReAst("terminal", chars=frozenset({b}), span=(start, self.pos))

    def escape(self) -> int:
        self.take()  # backslash
        b = self.peek()
        if b is None:
            raise self.error("dangling backslash")
        if 0x31 <= b <= 0x39:  # \1..\9
            raise self.unsupported("backreferences are not supported")
        self.take()
        if b == 0x6E:  # n
            return 0x0A
        if b == 0x74:  # t
            return 0x09
        if b == 0x72:  # r
            return 0x0D
        if b == 0x78:  # xHH
            hexpart = self.src[self.pos : self.pos + 2]
            if len(hexpart) < 2 or any(c not in b"0123456789abcdefABCDEF" for c in hexpart):
                raise self.error("\\x needs two hex digits")
            self.pos += 2
            return int(hexpart, 16)
        if 0x41 <= b <= 0x5A or 0x61 <= b <= 0x7A or 0x30 <= b <= 0x39:
            raise self.unsupported(f"unknown escape \\{chr(b)}")
        return b  # escaped punctuation stands for itself

    def charclass(self) -> ReAst:
        start = self.pos
        self.take()  # [
        negate = False
        if self.peek() == 0x5E:  # ^
            self.take()
            negate = True
        chars: set[int] = set()
        saw_item = False
        while True:
            b = self.peek()
            if b is None:
                raise self.error("missing ']'", start)
            if b == 0x5D and saw_item:  # ]
                self.take()
                break
            if b == 0x5D:
                raise self.error("empty character class", start)
            lo = self.escape() if b == 0x5C else self.take()
            if self.peek() == 0x2D and self.src[self.pos + 1 : self.pos + 2] not in (b"]", b""):
                self.take()  # -
                hi = self.escape() if self.peek() == 0x5C else self.take()
                if hi < lo:
                    raise self.error("reversed range in character class")
                chars.update(range(lo, hi + 1))
            else:
                chars.add(lo)
            saw_item = True
        if negate:
            chars = set(range(256)) - chars
            if not chars:
                raise self.error("character class matches nothing", start)
        return ReAst("charclass", chars=frozenset(chars), span=(start, self.pos))


def _strip_groups(node: ReAst, parent_kind: str | None) -> ReAst:
    """Drop parentheses that only delimit scope; keep genuinely extra ones.

    A group pair is structural (removed) when its parent is an iterator and
    its body is an operator, or when its parent is a concatenation and its
    body is a union.  Everything else the user wrote beyond what precedence
    requires stays as a group node with its own pair.
    """
    if node.kind == "group":
        child = node.children[0]
        structural = (
            parent_kind in _ITERATORS and child.kind in _OPERATORS
        ) or (parent_kind == "concat" and child.kind == "union")
        if structural:
            return _strip_groups(child, parent_kind)
        return replace(node, children=(_strip_groups(child, "group"),))
    if node.children:
        kids = tuple(_strip_groups(c, node.kind) for c in node.children)
        return replace(node, children=kids)
    return node


def parse_re(source: bytes | str) -> ReAst:
    """Parse a pattern into its AST.

    Raises ReSyntaxError / UnsupportedReError with the offending byte offset.
    The returned tree has structural parentheses removed and, when the whole
    pattern is a bare leaf, a root group wrapped around it so that every
    pattern has an outermost operator.
    """
    if isinstance(source, str):
        try:
            source = source.encode("latin-1")
        except UnicodeEncodeError as exc:
            raise UnsupportedReError(
                "char codes above 255 are not supported", exc.start
            ) from None
    ast = _Parser(source).parse()
    ast = _strip_groups(ast, None)
    if ast.kind in _LEAF_KINDS:
        ast = ReAst("group", (ast,), span=ast.span)
    return ast


# ---------------------------------------------------------------------------
# alphabet partition


@dataclass(frozen=True)
class AlphabetPartition:
    """Disjoint byte-set cells covering exactly the bytes some leaf accepts.

    cells are sorted by smallest member; byte_to_cell maps each byte value to
    its cell id, with 0xFF marking bytes outside every cell.  (Cell ids are
    capped at 254 so the sentinel stays unambiguous.)
    """

    cells: tuple[frozenset[int], ...]
    byte_to_cell: bytes

    NO_CELL = 0xFF

    def cell_of(self, byte: int) -> int | None:
        c = self.byte_to_cell[byte]
        return None if c == self.NO_CELL else c

    def cells_of(self, chars: frozenset[int]) -> tuple[int, ...]:
        hit = sorted({self.byte_to_cell[b] for b in chars})
        assert self.NO_CELL not in hit
        return tuple(hit)

    def display(self, cid: int) -> str:
        cell = self.cells[cid]
        if len(cell) == 1:
            return _char_repr(next(iter(cell)))
        return "[" + _ranges_repr(cell) + "]"


def partition_classes(source) -> AlphabetPartition:
    """Partition the char sets of an AST (or an iterable of sets) into cells.

    Two bytes land in the same cell iff exactly the same leaf char sets
    contain them, so every leaf set is a disjoint union of whole cells.
    """
    if isinstance(source, ReAst):
        sets: list[frozenset[int]] = []

        def walk(node: ReAst):
            if node.chars is not None:
                sets.append(node.chars)
            for c in node.children:
                walk(c)

        walk(source)
    else:
        sets = [frozenset(s) for s in source]
    distinct = sorted(set(sets), key=lambda s: (min(s), len(s), sorted(s)))
    signatures: dict[int, int] = {}
    for b in range(256):
        sig = 0
        for i, s in enumerate(distinct):
            if b in s:
                sig |= 1 << i
        if sig:
            signatures[b] = sig
    by_sig: dict[int, set[int]] = {}
    for b, sig in signatures.items():
        by_sig.setdefault(sig, set()).add(b)
    cells = tuple(sorted((frozenset(v) for v in by_sig.values()), key=min))
    if len(cells) > 254:
        raise ValueError(f"alphabet partition has {len(cells)} cells (max 254)")
    table = bytearray([AlphabetPartition.NO_CELL]) * 256
    for cid, cell in enumerate(cells):
        for b in cell:
            table[b] = cid
    return AlphabetPartition(cells, bytes(table))


# ---------------------------------------------------------------------------
# numbering


@dataclass(frozen=True)
class NumNode:
    """Node of the numbered (repetition-expanded) tree.

    kind: terminal | epsilon | concat | union | star | cross | optional |
    group | repeat | opttail.  Operators own parenthesis pair ``num``;
    leaves are a_num / ε_num.  ``opttail`` is the optional chain a {h,k}
    repetition expands into (each level: its own pair around copy j plus the
    next level).
    """

    kind: str
    num: int
    children: tuple["NumNode", ...] = ()
    chars: frozenset[int] | None = None


@dataclass
class NumberedRE:
    """A parsed pattern with every node numbered in left-to-right preorder.

    root is the numbered tree with bounded repetitions expanded (one pair
    plus the mandatory copies plus an optional/star tail).  op_table lists
    (number, kind, arity) for the operators in preorder; terminals maps leaf
    number -> accepted byte set; term_cells maps it to partition cell ids.
    """

    source: bytes
    ast: ReAst
    root: NumNode
    op_table: list[tuple[int, str, int]]
    terminals: dict[int, frozenset[int]]
    term_cells: dict[int, tuple[int, ...]]
    epsilons: set[int]
    partition: AlphabetPartition
    size: int

    def token(self, num: int, cell: int | None = None) -> str:
        """Render one numbered symbol (operators render their open paren)."""
        if num in self.terminals:
            assert cell is not None
            return f"{self.partition.display(cell)}{num}"
        if num in self.epsilons:
            return f"ε{num}"
        return f"{num}("


def number_re(ast: ReAst, source: bytes = b"") -> NumberedRE:
    """Number an AST in preorder, expanding bounded repetitions.

    {h,k} becomes one pair with h mandatory copies of the body followed by a
    nested optional tail (one pair per extra copy); {h,} gets a star pair
    over one more copy instead.  ``?`` stays a single optional pair.
    """
    partition = partition_classes(ast)
    counter = itertools.count(1)
    op_table: list[tuple[int, str, int]] = []
    terminals: dict[int, frozenset[int]] = {}
    term_cells: dict[int, tuple[int, ...]] = {}
    epsilons: set[int] = set()

    def operator(kind: str, make_children) -> NumNode:
        num = next(counter)
        slot = len(op_table)
        op_table.append((num, kind, 0))
        children = tuple(make_children())
        op_table[slot] = (num, kind, len(children))
        return NumNode(kind, num, children)

    def build(node: ReAst) -> NumNode:
        kind = node.kind
        if kind in ("terminal", "charclass", "wildcard"):
            num = next(counter)
            terminals[num] = node.chars
            term_cells[num] = partition.cells_of(node.chars)
            return NumNode("terminal", num, (), node.chars)
        if kind == "epsilon":
            num = next(counter)
            epsilons.add(num)
            return NumNode("epsilon", num)
        if kind == "repeat":
            body = node.children[0]
            low, high = node.low, node.high

            def repeat_children():
                kids = [build(body) for _ in range(low)]
                if high is None:
                    kids.append(operator("star", lambda: [build(body)]))
                elif high > low:

                    def tail(j):
                        def tail_children():
                            inner = [build(body)]
                            if j < high:
                                inner.append(tail(j + 1))
                            return inner

                        return operator("opttail", tail_children)

                    kids.append(tail(low + 1))
                return kids

            return operator("repeat", repeat_children)
        return operator(kind, lambda: [build(c) for c in node.children])

    root = build(ast)
    return NumberedRE(
        source=source,
        ast=ast,
        root=root,
        op_table=op_table,
        terminals=terminals,
        term_cells=term_cells,
        epsilons=epsilons,
        partition=partition,
        size=next(counter) - 1,
    )


# ---------------------------------------------------------------------------
# rendering

_CLASS_ESCAPES = frozenset(b"]\\^-[")


def _char_repr(b: int, in_class: bool = False) -> str:
    if b == 0x0A:
        return "\\n"
    if b == 0x09:
        return "\\t"
    if b == 0x0D:
        return "\\r"
    if in_class and b in _CLASS_ESCAPES:
        return "\\" + chr(b)
    if not in_class and b in _METACHARS:
        return "\\" + chr(b)
    if 0x20 < b < 0x7F:
        return chr(b)
    return f"\\x{b:02x}"


def _ranges_repr(cell: frozenset[int]) -> str:
    vals = sorted(cell)
    parts = []
    i = 0
    while i < len(vals):
        j = i
        while j + 1 < len(vals) and vals[j + 1] == vals[j] + 1:
            j += 1
        if j - i >= 2:
            parts.append(f"{_char_repr(vals[i], True)}-{_char_repr(vals[j], True)}")
        else:
            parts.extend(_char_repr(vals[k], True) for k in range(i, j + 1))
        i = j + 1
    return "".join(parts)


def render_source(ast: ReAst) -> str:
    """Unparse an AST to pattern text that reparses to the same tree."""

    def leaf(node: ReAst) -> str:
        if node.kind == "wildcard" and node.chars == WILDCARD_CHARS:
            return "."
        if node.kind == "epsilon":
            return "()"
        chars = node.chars
        if len(chars) == 1:
            return _char_repr(next(iter(chars)))
        if len(chars) > 128:
            inverse = frozenset(range(256)) - chars
            return "[^" + _ranges_repr(inverse) + "]"
        return "[" + _ranges_repr(chars) + "]"

    def needs_parens(child: ReAst, parent_kind: str) -> bool:
        if parent_kind in _ITERATORS:
            return child.kind in _OPERATORS
        if parent_kind == "concat":
            return child.kind == "union"
        return False

    def render(node: ReAst, parent_kind: str | None) -> str:
        k = node.kind
        if k in _LEAF_KINDS:
            return leaf(node)
        if k == "group":
            return "(" + render(node.children[0], "group") + ")"
        if k == "union":
            body = "|".join(
                "" if c.kind == "epsilon" else render(c, "union") for c in node.children
            )
        elif k == "concat":
            body = "".join(render(c, "concat") for c in node.children)
        elif k in ("star", "cross", "optional"):
            suffix = {"star": "*", "cross": "+", "optional": "?"}[k]
            body = render(node.children[0], k) + suffix
        elif k == "repeat":
            if node.high is None:
                reps = f"{{{node.low},}}"
            elif node.high == node.low:
                reps = f"{{{node.low}}}"
            else:
                reps = f"{{{node.low},{node.high}}}"
            body = render(node.children[0], k) + reps
        else:
            raise AssertionError(k)
        if parent_kind is not None and needs_parens(node, parent_kind):
            return "(" + body + ")"
        return body

    return render(ast, None)


def render_numbered(nre: NumberedRE) -> str:
    """Decorated display of the numbered pattern, e.g. 1( 2( a3 b4 )2 )1*."""

    def walk(node: NumNode) -> str:
        if node.kind == "terminal":
            cells = nre.term_cells[node.num]
            disp = (
                nre.partition.display(cells[0])
                if len(cells) == 1
                else "[" + _ranges_repr(node.chars) + "]"
            )
            return f"{disp}{node.num}"
        if node.kind == "epsilon":
            return f"ε{node.num}"
        n = node.num
        inner = [walk(c) for c in node.children]
        if node.kind == "union":
            body = " | ".join(inner)
        else:
            body = " ".join(inner)
        suffix = {"star": "*", "cross": "+", "optional": "?", "opttail": "?"}.get(
            node.kind, ""
        )
        if body:
            return f"{n}( {body} ){n}{suffix}"
        return f"{n}( ){n}{suffix}"

    return walk(nre.root)
