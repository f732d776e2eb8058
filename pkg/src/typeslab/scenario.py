"""Scenario files: an indentation-based key/value tree.

Example::

    name: S2
    alphabet:
      labels: a b
    source: 1/2 1/2
    set:
      piece: p[1] <= 1/4
      piece:
        p[1] >= 3/4
    sweep:
      n: 100 500 2000
      prefix: a
      seed: 42

A ``key: value`` line opens a node; deeper-indented lines are its children;
a line without a colon is a bare item (constraints under ``piece``).  Keys
may repeat, which is how a set lists several pieces.  ``#`` starts a comment.

Constraints have the form ``<lhs> <rel> <number>`` with ``<rel>`` one of
``=``, ``<=``, ``>=`` and ``<lhs>`` one of ``p[i]`` (1-based index or
label), ``mean``, ``moment(k)`` or ``sum(a_1, ..., a_m)``.  Numbers are
integers, ``num/den`` rationals or decimals; constraint numbers are always
read exactly.  Source weights written as decimals make a float source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .core import Alphabet, Pmf, _format_number
from .feasible import ConvexPiece, FeasibleSet, LinearConstraint


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


@dataclass
class Node:
    key: str | None
    value: str
    line: int
    col: int
    value_col: int = 0
    children: list[Node] = field(default_factory=list)

    def error(self, message: str, offset: int = 0) -> ScenarioError:
        return ScenarioError(message, self.line, self.col + offset)


_KEY = re.compile(r"([A-Za-z_]\w*)\s*:\s?(.*)$")


def parse_tree(text: str) -> list[Node]:
    root = Node(None, "", 0, 0)
    stack: list[tuple[int, Node]] = [(-1, root)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.lstrip(" ")
        if stripped.startswith("\t") or "\t" in line[: len(line) - len(stripped)]:
            raise ScenarioError("tabs are not allowed for indentation", lineno, 1)
        indent = len(line) - len(stripped)
        col = indent + 1
        match = _KEY.match(stripped)
        if match:
            node = Node(match.group(1), match.group(2).strip(), lineno, col,
                        value_col=col + match.start(2))
        else:
            node = Node(None, stripped.strip(), lineno, col, value_col=col)
        while stack[-1][0] >= indent:
            stack.pop()
        parent_indent, parent = stack[-1]
        if parent.children and parent is not root:
            sibling_indent = parent.children[0].col - 1
            if indent != sibling_indent:
                raise ScenarioError("inconsistent indentation", lineno, col)
        parent.children.append(node)
        stack.append((indent, node))
    return root.children


# -- numbers -----------------------------------------------------------------


_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?$")


def parse_number(token: str, exact: bool = True):
    token = token.strip()
    if not _NUMBER.match(token):
        raise ValueError(f"not a number: {token!r}")
    if "/" in token:
        num, den = token.split("/")
        if "." in num or "e" in num.lower():
            raise ValueError(f"rational literal needs an integer numerator: {token!r}")
        if int(den) == 0:
            raise ValueError(f"zero denominator in {token!r}")
        return Fraction(int(num), int(den))
    if not exact and ("." in token or "e" in token.lower()):
        return float(token)
    return Fraction(token)


def format_number(x) -> str:
    return _format_number(x)


# -- constraints -------------------------------------------------------------


_RELATION = re.compile(r"(<=|>=|==|=|<|>)")


def parse_constraint(text: str, alphabet: Alphabet, line: int | None = None,
                     col: int = 1) -> LinearConstraint:
    """Parse one constraint of the scenario grammar."""
    depth = 0
    rel_at = None
    for i, ch in enumerate(text):
        depth += ch in "(["
        depth -= ch in ")]"
        if depth == 0 and ch in "<>=":
            rel_at = i
            break
    if rel_at is None:
        raise ScenarioError(f"constraint {text!r} has no relation (=, <=, >=)", line, col)
    rel = _RELATION.match(text, rel_at).group(1)
    if rel in ("<", ">"):
        raise ScenarioError(
            f"strict inequality {rel!r} not allowed; feasible sets must be closed",
            line, col + rel_at)
    if rel == "==":
        raise ScenarioError("use '=' for equality", line, col + rel_at)
    lhs = text[:rel_at].strip()
    rhs = text[rel_at + len(rel):].strip()
    rhs_col = col + text.index(rhs, rel_at + len(rel)) if rhs else col + len(text)
    try:
        bound = parse_number(rhs)
    except ValueError as exc:
        raise ScenarioError(str(exc), line, rhs_col) from None
    coeffs = _parse_lhs(lhs, alphabet, line, col + (len(text) - len(text.lstrip())))
    return LinearConstraint(coeffs, rel, bound)


def _parse_lhs(lhs: str, alphabet: Alphabet, line, col) -> tuple:
    m = alphabet.m
    if match := re.fullmatch(r"p\[\s*([^\]]+?)\s*\]", lhs):
        ref = match.group(1)
        if re.fullmatch(r"\d+", ref):
            i = int(ref)
            if not 1 <= i <= m:
                raise ScenarioError(f"index p[{i}] out of range 1..{m}", line, col)
            i -= 1
        elif ref in alphabet.labels:
            i = alphabet.index(ref)
        else:
            raise ScenarioError(f"unknown letter {ref!r} in {lhs!r}", line, col)
        return tuple(Fraction(int(j == i)) for j in range(m))
    if lhs == "mean" or (match := re.fullmatch(r"moment\(\s*(\d+)\s*\)", lhs)):
        if alphabet.values is None:
            raise ScenarioError(
                f"unknown moment label {lhs!r}: the alphabet has no numeric values", line, col)
        k = 1 if lhs == "mean" else int(match.group(1))
        if k < 1:
            raise ScenarioError("moment order must be >= 1", line, col)
        return tuple(v**k for v in alphabet.values)
    if match := re.fullmatch(r"sum\((.*)\)", lhs):
        parts = [p for p in match.group(1).split(",")]
        if len(parts) != m:
            raise ScenarioError(
                f"sum(...) lists {len(parts)} coefficients but the alphabet has {m} letters",
                line, col)
        try:
            return tuple(parse_number(p) for p in parts)
        except ValueError as exc:
            raise ScenarioError(str(exc), line, col) from None
    raise ScenarioError(f"unknown moment label or expression {lhs!r}", line, col)


def format_constraint(c: LinearConstraint, alphabet: Alphabet) -> str:
    coeffs = c.coefficients
    nonzero = [i for i, a in enumerate(coeffs) if a != 0]
    if len(nonzero) == 1 and coeffs[nonzero[0]] == 1:
        lhs = f"p[{nonzero[0] + 1}]"
    elif alphabet.values is not None and tuple(coeffs) == tuple(alphabet.values):
        lhs = "mean"
    else:
        lhs = "sum(" + ", ".join(format_number(a) for a in coeffs) + ")"
    return f"{lhs} {c.relation} {format_number(c.bound)}"


def _piece_from_node(node: Node, alphabet: Alphabet) -> ConvexPiece:
    items = []
    if node.value:
        offset = node.value_col
        for part in node.value.split(";"):
            if part.strip():
                items.append((part.strip(), node.line, offset + len(part) - len(part.lstrip())))
            offset += len(part) + 1
    for child in node.children:
        if child.key is not None or child.children:
            raise child.error("expected a constraint under 'piece:'")
        for part in child.value.split(";"):
            if part.strip():
                items.append((part.strip(), child.line, child.col))
    constraints = tuple(parse_constraint(text, alphabet, line, col) for text, line, col in items)
    return ConvexPiece(alphabet.m, constraints)


def _set_from_nodes(nodes: list[Node], alphabet: Alphabet, name: str) -> FeasibleSet:
    pieces = []
    for node in nodes:
        if node.key != "piece":
            raise node.error(f"expected 'piece:', found {node.key or node.value!r}")
        pieces.append(_piece_from_node(node, alphabet))
    if not pieces:
        raise ScenarioError("a set needs at least one 'piece:' block")
    return FeasibleSet(tuple(pieces), name)


def parse_set(text: str, alphabet: Alphabet, name: str = "") -> FeasibleSet:
    """Parse ``piece:`` blocks (optionally wrapped in a ``set:`` block)."""
    nodes = parse_tree(text)
    if len(nodes) == 1 and nodes[0].key == "set":
        nodes = nodes[0].children
    return _set_from_nodes(nodes, alphabet, name)


def format_set(s: FeasibleSet, alphabet: Alphabet, indent: str = "") -> str:
    lines = []
    for piece in s.pieces:
        lines.append(f"{indent}piece:")
        for c in piece.constraints:
            lines.append(f"{indent}  {format_constraint(c, alphabet)}")
    return "\n".join(lines) + "\n"


# -- scenarios ---------------------------------------------------------------


@dataclass(frozen=True)
class Sweep:
    n: tuple[int, ...] = ()
    epsilon: Fraction | None = None
    prefix: tuple[str, ...] = ()
    samples: int = 1_000_000
    seed: int = 0


@dataclass(frozen=True)
class Output:
    format: str = "csv"
    precision: int = 12
    mode: str = "auto"


@dataclass(frozen=True)
class Scenario:
    name: str
    alphabet: Alphabet
    source: Pmf
    set: FeasibleSet
    sweep: Sweep | None = None
    output: Output = Output()

    def with_overrides(self, **sweep_fields) -> Scenario:
        fields = {k: v for k, v in sweep_fields.items() if v is not None}
        return replace(self, sweep=replace(self.sweep or Sweep(), **fields))


def _single(nodes: list[Node], key: str, parent: str) -> Node | None:
    found = [n for n in nodes if n.key == key]
    if len(found) > 1:
        raise found[1].error(f"duplicate '{key}:' in {parent}")
    return found[0] if found else None


def _check_keys(nodes: list[Node], allowed: set[str], where: str):
    for node in nodes:
        if node.key not in allowed:
            raise node.error(f"unexpected {node.key or node.value!r} in {where}; "
                             f"expected one of {sorted(allowed)}")


def _int_list(node: Node) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in node.value.split())
    except ValueError:
        raise node.error(f"expected integers, got {node.value!r}") from None
    return values


def parse_scenario(text: str, name: str | None = None) -> Scenario:
    nodes = parse_tree(text)
    _check_keys(nodes, {"name", "alphabet", "source", "set", "sweep", "output"}, "scenario")
    name_node = _single(nodes, "name", "scenario")
    name = name_node.value if name_node else (name or "scenario")

    alpha_node = _single(nodes, "alphabet", "scenario")
    if alpha_node is None:
        raise ScenarioError("missing 'alphabet:' block")
    alphabet = _parse_alphabet(alpha_node)

    source_node = _single(nodes, "source", "scenario")
    if source_node is None:
        raise ScenarioError("missing 'source:' line")
    tokens = source_node.value.split()
    if len(tokens) != alphabet.m:
        raise source_node.error(
            f"inconsistent alphabet size: source has {len(tokens)} weights, "
            f"alphabet has {alphabet.m} letters")
    try:
        source = Pmf(tuple(parse_number(tok, exact=False) for tok in tokens))
    except ValueError as exc:
        raise source_node.error(str(exc)) from None

    set_node = _single(nodes, "set", "scenario")
    if set_node is None:
        raise ScenarioError("missing 'set:' block")
    feasible = _set_from_nodes(set_node.children, alphabet, name)

    sweep_node = _single(nodes, "sweep", "scenario")
    sweep = _parse_sweep(sweep_node, alphabet) if sweep_node else None
    output_node = _single(nodes, "output", "scenario")
    output = _parse_output(output_node) if output_node else Output()
    return Scenario(name, alphabet, source, feasible, sweep, output)


def _parse_alphabet(node: Node) -> Alphabet:
    _check_keys(node.children, {"labels", "values"}, "alphabet")
    labels_node = _single(node.children, "labels", "alphabet")
    values_node = _single(node.children, "values", "alphabet")
    labels = node.value.split() if node.value else None
    if labels_node:
        labels = labels_node.value.split()
    values = None
    if values_node:
        try:
            values = tuple(parse_number(tok) for tok in values_node.value.split())
        except ValueError as exc:
            raise values_node.error(str(exc)) from None
    if labels is None and values is None:
        raise node.error("alphabet needs labels or values")
    try:
        if labels is None:
            return Alphabet.numeric(values)
        if values is not None and len(values) != len(labels):
            raise values_node.error(
                f"inconsistent alphabet size: {len(labels)} labels, {len(values)} values")
        return Alphabet(tuple(labels), values)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise node.error(str(exc)) from None


def _parse_sweep(node: Node, alphabet: Alphabet) -> Sweep:
    _check_keys(node.children, {"n", "epsilon", "prefix", "t", "samples", "seed"}, "sweep")
    kw = {}
    if n_node := _single(node.children, "n", "sweep"):
        ns = _int_list(n_node)
        if not ns or any(n < 1 for n in ns):
            raise n_node.error("n values must be positive integers")
        if list(ns) != sorted(set(ns)):
            raise n_node.error("n values must be strictly increasing")
        kw["n"] = ns
    if eps_node := _single(node.children, "epsilon", "sweep"):
        try:
            kw["epsilon"] = parse_number(eps_node.value)
        except ValueError as exc:
            raise eps_node.error(str(exc)) from None
        if kw["epsilon"] <= 0:
            raise eps_node.error("epsilon must be positive")
    if prefix_node := _single(node.children, "prefix", "sweep"):
        letters = tuple(prefix_node.value.split())
        for x in letters:
            if x not in alphabet.labels:
                raise prefix_node.error(f"prefix letter {x!r} not in alphabet {alphabet.labels}")
        kw["prefix"] = letters
    if t_node := _single(node.children, "t", "sweep"):
        (t,) = _int_list(t_node) or (None,)
        if t != len(kw.get("prefix", ())):
            raise t_node.error(f"t={t} does not match the prefix length")
    for key in ("samples", "seed"):
        if sub := _single(node.children, key, "sweep"):
            values = _int_list(sub)
            if len(values) != 1:
                raise sub.error(f"{key} takes one integer")
            kw[key] = values[0]
    return Sweep(**kw)


def _parse_output(node: Node) -> Output:
    _check_keys(node.children, {"format", "precision", "mode"}, "output")
    kw = {}
    if sub := _single(node.children, "format", "output"):
        if sub.value not in ("csv", "json"):
            raise sub.error("format must be csv or json")
        kw["format"] = sub.value
    if sub := _single(node.children, "precision", "output"):
        (kw["precision"],) = _int_list(sub)
    if sub := _single(node.children, "mode", "output"):
        if sub.value not in ("auto", "exact", "log"):
            raise sub.error("mode must be auto, exact or log")
        kw["mode"] = sub.value
    return Output(**kw)


def dump_scenario(sc: Scenario) -> str:
    """Serialize in the grammar read by :func:`parse_scenario` (a fixed point)."""
    lines = [f"name: {sc.name}", "alphabet:", "  labels: " + " ".join(sc.alphabet.labels)]
    if sc.alphabet.values is not None:
        lines.append("  values: " + " ".join(format_number(v) for v in sc.alphabet.values))
    lines.append("source: " + " ".join(format_number(w) for w in sc.source.weights))
    lines.append("set:")
    lines.append(format_set(sc.set, sc.alphabet, "  ").rstrip("\n"))
    if sc.sweep is not None:
        sw = sc.sweep
        lines.append("sweep:")
        if sw.n:
            lines.append("  n: " + " ".join(str(n) for n in sw.n))
        if sw.epsilon is not None:
            lines.append(f"  epsilon: {format_number(sw.epsilon)}")
        if sw.prefix:
            lines.append("  prefix: " + " ".join(sw.prefix))
        lines.append(f"  samples: {sw.samples}")
        lines.append(f"  seed: {sw.seed}")
    out = sc.output
    lines += ["output:", f"  format: {out.format}", f"  precision: {out.precision}",
              f"  mode: {out.mode}"]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)
