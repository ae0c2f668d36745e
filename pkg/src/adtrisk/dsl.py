"""Parser and serializer for the .adt model format.

File layout:

    model "name" {
      control mfa { cost 3; class preventive; transform PR L -> H; }
      goal G1 {
        impact C: 0 I: 0.56 A: 0;
        or {
          sand B1 {
            pre or footholds {
              leaf a { cve "CVE-2025-1111" vector AV:N AC:L PR:N UI:N; defenses [mfa]; }
              b
            }
            exec leaf v { cve "CVE-2025-2222" vector AV:N AC:L PR:N UI:N; }
          }
        }
      }
      scenario S1 { path B1; apply mfa -> a; }
    }

`#` starts a line comment.  A bare identifier in node position references a
leaf defined elsewhere in the same goal (forward references allowed).
or/and/sand take an optional name, used for branch reporting and as the
exec(NAME) scenario target.  Impact components accept numbers in [0, 1] or
the named levels N/L/H.  Scope never appears except as an optional trailing
S:U (redundant, warned) -- S:C is rejected outright.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import model as m
from .cvss import IMPACT_LEVELS, METRICS, WEIGHTS, ImpactTriple, MetricVector
from .diagnostics import Diagnostic, SourceSpan, error, has_errors, warning

KEYWORDS = frozenset({
    "model", "control", "cost", "class", "preventive", "detective", "transform",
    "goal", "impact", "or", "and", "sand", "pre", "exec", "leaf", "cve",
    "vector", "defenses", "scenario", "apply", "path", "note",
})

_PUNCT = {
    "{": "LBRACE", "}": "RBRACE", "[": "LBRACKET", "]": "RBRACKET",
    "(": "LPAREN", ")": "RPAREN", ";": "SEMI", ",": "COMMA", ":": "COLON",
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    def span(self, file: str) -> SourceSpan:
        return SourceSpan(file, self.line, self.col, max(len(self.text), 1))


@dataclass
class ParseResult:
    model: Optional[m.Model]
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None and not has_errors(self.diagnostics)


class _ParseFailure(Exception):
    """Internal: carries the diagnostic that aborted the parse."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class _Lexer:
    def __init__(self, text: str, file: str):
        self.text = text
        self.file = file

    def tokenize(self) -> list:
        tokens = []
        line, col, i = 1, 1, 0
        text = self.text
        n = len(text)
        while i < n:
            ch = text[i]
            if ch == "\n":
                line += 1
                col = 1
                i += 1
                continue
            if ch in " \t\r":
                i += 1
                col += 1
                continue
            if ch == "#":
                while i < n and text[i] != "\n":
                    i += 1
                continue
            if ch in _PUNCT:
                tokens.append(Token(_PUNCT[ch], ch, line, col))
                i += 1
                col += 1
                continue
            if ch == "-" and i + 1 < n and text[i + 1] == ">":
                tokens.append(Token("ARROW", "->", line, col))
                i += 2
                col += 2
                continue
            if ch == '"':
                start_line, start_col = line, col
                i += 1
                col += 1
                buf = []
                while i < n and text[i] != '"':
                    if text[i] == "\n":
                        break
                    if text[i] == "\\" and i + 1 < n and text[i + 1] in ('"', "\\"):
                        buf.append(text[i + 1])
                        i += 2
                        col += 2
                        continue
                    buf.append(text[i])
                    i += 1
                    col += 1
                if i >= n or text[i] != '"':
                    raise _ParseFailure(error(
                        "E-LEX", "unterminated string",
                        SourceSpan(self.file, start_line, start_col, 1)))
                i += 1
                col += 1
                tokens.append(Token("STRING", "".join(buf), start_line, start_col))
                continue
            if ch.isdigit():
                start_col = col
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                    j += 1
                    while j < n and text[j].isdigit():
                        j += 1
                tokens.append(Token("NUMBER", text[i:j], line, start_col))
                col += j - i
                i = j
                continue
            if ch.isalpha() or ch == "_":
                start_col = col
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_" or text[j] == "-"):
                    j += 1
                # CVE ids live in strings; a trailing "-" before ">" belongs
                # to an arrow, not the identifier.
                while j > i and text[j - 1] == "-":
                    j -= 1
                tokens.append(Token("IDENT", text[i:j], line, start_col))
                col += j - i
                i = j
                continue
            raise _ParseFailure(error(
                "E-LEX", f"illegal character {ch!r}", SourceSpan(self.file, line, col, 1)))
        tokens.append(Token("EOF", "", line, col))
        return tokens


class _Parser:
    def __init__(self, tokens: list, file: str):
        self.tokens = tokens
        self.file = file
        self.pos = 0
        self.diagnostics = []

    # Token plumbing

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("IDENT", word)

    def fail(self, code: str, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise _ParseFailure(error(code, message, tok.span(self.file)))

    def expect(self, kind: str, what: str) -> Token:
        if not self.at(kind):
            self.fail("E-SYNTAX", f"expected {what}, found {self._describe(self.peek())}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            self.fail("E-SYNTAX", f"expected '{word}', found {self._describe(self.peek())}")
        return self.advance()

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of file" if tok.kind == "EOF" else repr(tok.text)

    def name(self, what: str) -> Token:
        tok = self.expect("IDENT", what)
        if tok.text in KEYWORDS:
            self.fail("E-SYNTAX", f"reserved word {tok.text!r} cannot be used as {what}", tok)
        return tok

    # Grammar

    def parse_model(self) -> m.Model:
        self.expect_keyword("model")
        name_tok = self.expect("STRING", "model name string")
        self.expect("LBRACE", "'{'")
        result = m.Model(name=name_tok.text)
        while not self.at("RBRACE"):
            if self.at_keyword("control"):
                self._parse_control(result)
            elif self.at_keyword("goal"):
                self._parse_goal(result)
            elif self.at_keyword("scenario"):
                self._parse_scenario(result)
            else:
                self.fail("E-SYNTAX",
                          f"expected 'control', 'goal' or 'scenario', "
                          f"found {self._describe(self.peek())}")
        self.expect("RBRACE", "'}'")
        if not self.at("EOF"):
            self.fail("E-SYNTAX", f"trailing input after model block: {self._describe(self.peek())}")
        return result

    def _parse_control(self, result: m.Model):
        self.expect_keyword("control")
        name_tok = self.name("control name")
        self.expect("LBRACE", "'{'")
        self.expect_keyword("cost")
        cost_tok = self.expect("NUMBER", "cost level")
        if "." in cost_tok.text:
            self.fail("E-SYNTAX", "cost must be an integer", cost_tok)
        self.expect("SEMI", "';'")
        self.expect_keyword("class")
        kind_tok = self.expect("IDENT", "'preventive' or 'detective'")
        if kind_tok.text not in m.CONTROL_KINDS:
            self.fail("E-SYNTAX", "expected 'preventive' or 'detective'", kind_tok)
        self.expect("SEMI", "';'")
        transforms = []
        while self.at_keyword("transform"):
            transforms.append(self._parse_transform())
        self.expect("RBRACE", "'}'")
        if name_tok.text in result.controls:
            self.diagnostics.append(error(
                "E-DUP-NAME", f"duplicate control {name_tok.text!r}", name_tok.span(self.file)))
            return
        result.controls[name_tok.text] = m.Control(
            name=name_tok.text, kind=kind_tok.text, cost=int(cost_tok.text),
            transforms=transforms, span=name_tok.span(self.file))

    def _parse_transform(self) -> m.Transform:
        start = self.expect_keyword("transform")
        metric_tok = self.advance()
        if metric_tok.text not in METRICS:
            self.fail("E-BAD-METRIC", f"unknown metric {metric_tok.text!r}", metric_tok)
        frm_tok = self.advance()
        if frm_tok.text not in WEIGHTS[metric_tok.text]:
            self.fail("E-BAD-METRIC",
                      f"bad {metric_tok.text} value {frm_tok.text!r}", frm_tok)
        self.expect("ARROW", "'->'")
        to_tok = self.advance()
        if to_tok.text not in WEIGHTS[metric_tok.text]:
            self.fail("E-BAD-METRIC", f"bad {metric_tok.text} value {to_tok.text!r}", to_tok)
        self.expect("SEMI", "';'")
        return m.Transform(metric=metric_tok.text, frm=frm_tok.text, to=to_tok.text,
                           span=start.span(self.file))

    def _parse_goal(self, result: m.Model):
        self.expect_keyword("goal")
        name_tok = self.name("goal name")
        self.expect("LBRACE", "'{'")
        self.expect_keyword("impact")
        impact = self._parse_impact()
        child = self._parse_node()
        self.expect("RBRACE", "'}'")
        goal = m.Goal(name=name_tok.text, impact=impact, child=child,
                      span=name_tok.span(self.file))
        self._resolve_leaf_refs(goal)
        result.trees.append(goal)

    def _parse_impact(self) -> ImpactTriple:
        values = []
        for axis in ("C", "I", "A"):
            tag = self.advance()
            if tag.kind != "IDENT" or tag.text != axis:
                self.fail("E-SYNTAX", f"expected impact component '{axis}:'", tag)
            self.expect("COLON", "':'")
            values.append(self._parse_impact_value())
        self.expect("SEMI", "';'")
        return ImpactTriple(*values)

    def _parse_impact_value(self) -> float:
        tok = self.advance()
        if tok.kind == "NUMBER":
            value = float(tok.text)
            if not 0.0 <= value <= 1.0:
                self.fail("E-IMPACT-RANGE", f"impact component {tok.text} outside [0, 1]", tok)
            return value
        if tok.kind == "IDENT" and tok.text in IMPACT_LEVELS:
            return IMPACT_LEVELS[tok.text]
        self.fail("E-BAD-METRIC",
                  f"expected an impact number in [0, 1] or one of N/L/H, "
                  f"found {self._describe(tok)}", tok)

    def _parse_node(self):
        if self.at_keyword("or") or self.at_keyword("and"):
            kind_tok = self.advance()
            name = None
            if self.at("IDENT") and self.peek().text not in KEYWORDS:
                name = self.name("node name").text
            self.expect("LBRACE", "'{'")
            children = []
            while not self.at("RBRACE"):
                children.append(self._parse_node())
            close = self.expect("RBRACE", "'}'")
            cls = m.OrNode if kind_tok.text == "or" else m.AndNode
            node = cls(children=children, name=name, span=kind_tok.span(self.file))
            if not children:
                self.fail("E-SYNTAX", f"empty '{kind_tok.text}' block", close)
            return node
        if self.at_keyword("sand"):
            kind_tok = self.advance()
            name = None
            if self.at("IDENT") and self.peek().text not in KEYWORDS:
                name = self.name("node name").text
            self.expect("LBRACE", "'{'")
            self.expect_keyword("pre")
            pre = self._parse_node()
            self.expect_keyword("exec")
            execution = self._parse_node()
            self.expect("RBRACE", "'}'")
            return m.SandNode(pre=pre, execution=execution, name=name,
                              span=kind_tok.span(self.file))
        if self.at_keyword("leaf"):
            return self._parse_leaf()
        if self.at("IDENT") and self.peek().text not in KEYWORDS:
            tok = self.advance()
            return _LeafRef(tok.text, tok.span(self.file))
        self.fail("E-SYNTAX",
                  f"expected a node ('or', 'and', 'sand', 'leaf' or a leaf reference), "
                  f"found {self._describe(self.peek())}")

    def _parse_leaf(self) -> m.Leaf:
        self.expect_keyword("leaf")
        name_tok = self.name("leaf name")
        self.expect("LBRACE", "'{'")
        candidates = []
        while self.at_keyword("cve"):
            candidates.append(self._parse_cve())
        defenses = []
        if self.at_keyword("defenses"):
            self.advance()
            self.expect("LBRACKET", "'['")
            defenses.append(self.name("control name").text)
            while self.at("COMMA"):
                self.advance()
                defenses.append(self.name("control name").text)
            self.expect("RBRACKET", "']'")
            self.expect("SEMI", "';'")
        self.expect("RBRACE", "'}'")
        return m.Leaf(name=name_tok.text, candidates=candidates, defenses=defenses,
                      span=name_tok.span(self.file))

    def _parse_cve(self) -> m.CveRef:
        self.expect_keyword("cve")
        id_tok = self.expect("STRING", "cve id string")
        self.expect_keyword("vector")
        vector = self._parse_vector()
        note = None
        if self.at_keyword("note"):
            self.advance()
            note = self.expect("STRING", "note string").text
        self.expect("SEMI", "';'")
        return m.CveRef(id=id_tok.text, vector=vector, note=note,
                        span=id_tok.span(self.file))

    def _parse_vector(self) -> MetricVector:
        values = {}
        for metric in METRICS:
            tag = self.advance()
            if tag.kind != "IDENT" or tag.text != metric:
                self.fail("E-SYNTAX", f"expected '{metric}:'", tag)
            self.expect("COLON", "':'")
            value_tok = self.advance()
            if value_tok.text not in WEIGHTS[metric]:
                self.fail("E-BAD-METRIC",
                          f"bad {metric} value {self._describe(value_tok)}", value_tok)
            values[metric] = value_tok.text
        if self.at("IDENT", "S"):
            tag = self.advance()
            self.expect("COLON", "':'")
            value_tok = self.advance()
            if value_tok.text == "C":
                self.fail("E-SCOPE-CHANGED",
                          "Scope:Changed is not supported; scoring fixes S:U", value_tok)
            if value_tok.text != "U":
                self.fail("E-BAD-METRIC", f"bad S value {self._describe(value_tok)}", value_tok)
            self.diagnostics.append(warning(
                "W-SCOPE", "S:U is implied and can be omitted", tag.span(self.file)))
        return MetricVector(values["AV"], values["AC"], values["PR"], values["UI"])

    def _parse_scenario(self, result: m.Model):
        self.expect_keyword("scenario")
        name_tok = self.name("scenario name")
        self.expect("LBRACE", "'{'")
        path = None
        if self.at_keyword("path"):
            self.advance()
            path = self.name("branch name").text
            self.expect("SEMI", "';'")
        applications = []
        while self.at_keyword("apply"):
            start = self.advance()
            control = self.name("control name").text
            self.expect("ARROW", "'->'")
            if self.at_keyword("exec"):
                self.advance()
                self.expect("LPAREN", "'('")
                target = self.name("execution node name").text
                self.expect("RPAREN", "')'")
                is_exec = True
            else:
                target = self.name("target leaf name").text
                is_exec = False
            self.expect("SEMI", "';'")
            applications.append(m.Application(control=control, target=target,
                                              is_exec=is_exec, span=start.span(self.file)))
        self.expect("RBRACE", "'}'")
        if name_tok.text in result.scenarios:
            self.diagnostics.append(error(
                "E-DUP-NAME", f"duplicate scenario {name_tok.text!r}", name_tok.span(self.file)))
            return
        result.scenarios[name_tok.text] = m.Scenario(
            name=name_tok.text, applications=applications, path=path,
            span=name_tok.span(self.file))

    def _resolve_leaf_refs(self, goal: m.Goal):
        """Swap _LeafRef placeholders for the leaf objects they name."""
        defs = {}

        def collect(node):
            if isinstance(node, m.Leaf):
                defs.setdefault(node.name, node)
            elif isinstance(node, (m.OrNode, m.AndNode)):
                for child in node.children:
                    collect(child)
            elif isinstance(node, m.SandNode):
                collect(node.pre)
                collect(node.execution)

        def substitute(node):
            if isinstance(node, _LeafRef):
                target = defs.get(node.name)
                if target is None:
                    self.diagnostics.append(error(
                        "E-UNRESOLVED",
                        f"leaf reference {node.name!r} matches no leaf in goal {goal.name!r}",
                        node.span))
                    return m.Leaf(name=node.name, span=node.span)
                return target
            if isinstance(node, (m.OrNode, m.AndNode)):
                node.children = [substitute(c) for c in node.children]
            elif isinstance(node, m.SandNode):
                node.pre = substitute(node.pre)
                node.execution = substitute(node.execution)
            return node

        collect(goal.child)
        goal.child = substitute(goal.child)


@dataclass
class _LeafRef:
    name: str
    span: Optional[SourceSpan] = None


def parse(text: str, filename: str = "<string>") -> ParseResult:
    """Parse .adt text; the model is None whenever error diagnostics exist."""
    try:
        tokens = _Lexer(text, filename).tokenize()
    except _ParseFailure as failure:
        return ParseResult(None, [failure.diagnostic])
    parser = _Parser(tokens, filename)
    try:
        parsed = parser.parse_model()
    except _ParseFailure as failure:
        return ParseResult(None, parser.diagnostics + [failure.diagnostic])
    diagnostics = parser.diagnostics
    if not has_errors(diagnostics):
        diagnostics = diagnostics + m.validate(parsed)
    if has_errors(diagnostics):
        return ParseResult(None, diagnostics)
    return ParseResult(parsed, diagnostics)


def parse_file(path: str) -> ParseResult:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        return ParseResult(None, [error("E-IO", f"cannot read {path}: {exc.strerror or exc}")])
    return parse(text, filename=path)


# Serialization.  Canonical form: 2-space indent, LF, controls alphabetical,
# defenses alphabetical, leaves defined at first occurrence and referenced by
# bare name afterwards.

def serialize(model: m.Model) -> str:
    lines = [f'model "{_escape(model.name)}" {{']
    for name in sorted(model.controls):
        control = model.controls[name]
        lines.append(f"  control {control.name} {{")
        lines.append(f"    cost {control.cost};")
        lines.append(f"    class {control.kind};")
        for t in control.transforms:
            lines.append(f"    transform {t.metric} {t.frm} -> {t.to};")
        lines.append("  }")
    for goal in model.trees:
        lines.append(f"  goal {goal.name} {{")
        c, i, a = (_format_impact(v) for v in goal.impact.as_tuple())
        lines.append(f"    impact C: {c} I: {i} A: {a};")
        lines.extend(_node_lines(goal.child, indent=2, seen=set()))
        lines.append("  }")
    for scenario in model.scenarios.values():
        lines.append(f"  scenario {scenario.name} {{")
        if scenario.path is not None:
            lines.append(f"    path {scenario.path};")
        for app in scenario.applications:
            target = f"exec({app.target})" if app.is_exec else app.target
            lines.append(f"    apply {app.control} -> {target};")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _node_lines(node, indent: int, seen: set, prefix: str = "") -> list:
    pad = "  " * indent
    if isinstance(node, m.Leaf):
        if id(node) in seen:
            return [f"{pad}{prefix}{node.name}"]
        seen.add(id(node))
        lines = [f"{pad}{prefix}leaf {node.name} {{"]
        for cve in node.candidates:
            note = f' note "{_escape(cve.note)}"' if cve.note else ""
            lines.append(f'{pad}  cve "{_escape(cve.id)}" vector {cve.vector.short_form().replace("/", " ")}{note};')
        if node.defenses:
            lines.append(f"{pad}  defenses [{', '.join(sorted(node.defenses))}];")
        lines.append(f"{pad}}}")
        return lines
    if isinstance(node, (m.OrNode, m.AndNode)):
        keyword = "or" if isinstance(node, m.OrNode) else "and"
        head = f"{keyword} {node.name}" if node.name else keyword
        lines = [f"{pad}{prefix}{head} {{"]
        for child in node.children:
            lines.extend(_node_lines(child, indent + 1, seen))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(node, m.SandNode):
        head = f"sand {node.name}" if node.name else "sand"
        lines = [f"{pad}{prefix}{head} {{"]
        lines.extend(_node_lines(node.pre, indent + 1, seen, prefix="pre "))
        lines.extend(_node_lines(node.execution, indent + 1, seen, prefix="exec "))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot serialize node {node!r}")


def _format_impact(value: float) -> str:
    return f"{value:g}"


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


# Structured export for machine consumers: stable key order, snake_case keys,
# short vector strings.

def model_to_dict(model: m.Model) -> dict:
    return {
        "name": model.name,
        "controls": [
            {
                "name": c.name,
                "class": c.kind,
                "cost": c.cost,
                "transforms": [
                    {"metric": t.metric, "from": t.frm, "to": t.to} for t in c.transforms
                ],
            }
            for c in (model.controls[k] for k in sorted(model.controls))
        ],
        "trees": [
            {
                "goal": g.name,
                "impact": {"c": g.impact.c, "i": g.impact.i, "a": g.impact.a},
                "root": _node_dict(g.child, seen=set()),
            }
            for g in model.trees
        ],
        "scenarios": [
            {
                "name": s.name,
                "path": s.path,
                "applications": [
                    {"control": a.control, "target": a.target, "exec": a.is_exec}
                    for a in s.applications
                ],
            }
            for s in model.scenarios.values()
        ],
    }


def _node_dict(node, seen: set) -> dict:
    if isinstance(node, m.Leaf):
        if id(node) in seen:
            return {"type": "leaf_ref", "name": node.name}
        seen.add(id(node))
        return {
            "type": "leaf",
            "name": node.name,
            "cves": [
                {"id": c.id, "vector": c.vector.short_form(),
                 **({"note": c.note} if c.note else {})}
                for c in node.candidates
            ],
            "defenses": sorted(node.defenses),
        }
    if isinstance(node, (m.OrNode, m.AndNode)):
        return {
            "type": "or" if isinstance(node, m.OrNode) else "and",
            "name": node.name,
            "children": [_node_dict(c, seen) for c in node.children],
        }
    if isinstance(node, m.SandNode):
        return {
            "type": "sand",
            "name": node.name,
            "pre": _node_dict(node.pre, seen),
            "exec": _node_dict(node.execution, seen),
        }
    raise TypeError(f"cannot export node {node!r}")


def model_to_json(model: m.Model) -> str:
    return json.dumps(model_to_dict(model), indent=2)
