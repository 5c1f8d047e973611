"""Recursive-descent parsers for inscriptions and arc expressions.

One tokenizer serves the expression language, arc expressions, annotated
fragments and the MPI-like mini-language.  Errors carry line/column and
the set of tokens that would have been accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import exprs as E
from . import values as V
from .errors import ParseError

KEYWORDS = {
    "unit", "true", "false", "ANY", "and", "or", "not", "div", "mod",
    "if", "then", "else",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<sym>->|!=|<=|>=|[=<>+\-*(){}\[\],.@;])
""", re.VERBOSE)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str           # 'nat' | 'ident' | 'keyword' | 'string' | 'sym' | 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "nat":
            tokens.append(Token("nat", lexeme, line, col))
        elif kind == "ident":
            tok_kind = "keyword" if lexeme in KEYWORDS else "ident"
            tokens.append(Token(tok_kind, lexeme, line, col))
        elif kind == "string":
            tokens.append(Token("string", lexeme[1:-1], line, col))
        elif kind == "sym":
            tokens.append(Token("sym", lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, *texts) -> bool:
        return self.peek().text in texts and self.peek().kind != "string"

    def accept(self, text) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            self.fail(f"found {self._describe(self.peek())}", {text})
        return self.advance()

    def expect_kind(self, kind, what) -> Token:
        if self.peek().kind != kind:
            self.fail(f"found {self._describe(self.peek())}", {what})
        return self.advance()

    def fail(self, message, expected=()):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.column, expected)

    @staticmethod
    def _describe(tok):
        return "end of input" if tok.kind == "eof" else f"{tok.text!r}"


# ---------------------------------------------------------------------------
# expressions

def parse_expr(text: str) -> E.Expression:
    ts = TokenStream(tokenize(text))
    e = _expr(ts)
    if ts.peek().kind != "eof":
        ts.fail(f"trailing input {ts._describe(ts.peek())}", {"end of input"})
    return e


def _expr(ts: TokenStream) -> E.Expression:
    if ts.at("if"):
        ts.advance()
        cond = _expr(ts)
        ts.expect("then")
        then = _expr(ts)
        ts.expect("else")
        orelse = _expr(ts)
        return E.IfExpr(cond, then, orelse)
    return _or(ts)


def _or(ts):
    e = _and(ts)
    while ts.at("or"):
        ts.advance()
        e = E.BinOp("or", e, _and(ts))
    return e


def _and(ts):
    e = _cmp(ts)
    while ts.at("and"):
        ts.advance()
        e = E.BinOp("and", e, _cmp(ts))
    return e


def _cmp(ts):
    e = _add(ts)
    if ts.at(*E.CMP_OPS):
        op = ts.advance().text
        return E.BinOp(op, e, _add(ts))
    return e


def _add(ts):
    e = _mul(ts)
    while ts.at("+", "-"):
        op = ts.advance().text
        e = E.BinOp(op, e, _mul(ts))
    return e


def _mul(ts):
    e = _unary(ts)
    while ts.at("*", "div", "mod"):
        op = ts.advance().text
        e = E.BinOp(op, e, _unary(ts))
    return e


def _unary(ts):
    if ts.at("not"):
        ts.advance()
        return E.Not(_unary(ts))
    return _postfix(ts)


def _postfix(ts):
    e = _atom(ts)
    while ts.at("."):
        ts.advance()
        tok = ts.peek()
        if tok.kind == "nat":
            ts.advance()
            index = int(tok.text)
            if index < 1:
                ts.fail("tuple indices are 1-based", {"positive index"})
            e = E.IndexAccess(e, index)
        elif tok.kind == "ident":
            ts.advance()
            e = E.FieldAccess(e, tok.text)
        else:
            ts.fail(f"found {ts._describe(tok)}", {"field name", "tuple index"})
    return e


def _atom(ts):
    tok = ts.peek()
    if tok.kind == "nat":
        ts.advance()
        return E.Lit(V.Nat(int(tok.text)))
    if tok.text == "unit" and tok.kind == "keyword":
        ts.advance()
        return E.Lit(V.UNIT)
    if tok.text == "true" and tok.kind == "keyword":
        ts.advance()
        return E.Lit(V.TRUE)
    if tok.text == "false" and tok.kind == "keyword":
        ts.advance()
        return E.Lit(V.FALSE)
    if tok.text == "ANY" and tok.kind == "keyword":
        ts.advance()
        return E.Lit(V.ANY)
    if tok.kind == "ident":
        ts.advance()
        if ts.at("("):
            return _call(ts, tok)
        return E.Var(tok.text)
    if ts.at("("):
        ts.advance()
        if ts.accept(")"):
            return E.TupleExpr(())
        first = _expr(ts)
        if ts.accept(")"):
            return first          # grouping, not a 1-tuple
        items = [first]
        trailing = False
        while ts.accept(","):
            if ts.at(")"):
                trailing = True
                break
            items.append(_expr(ts))
        ts.expect(")")
        if len(items) == 1 and not trailing:
            return items[0]
        return E.TupleExpr(tuple(items))
    if ts.at("{"):
        ts.advance()
        fields = []
        seen = set()
        while True:
            name = ts.expect_kind("ident", "field name").text
            if name in seen:
                ts.fail(f"duplicate field '{name}'")
            seen.add(name)
            ts.expect("=")
            fields.append((name, _expr(ts)))
            if not ts.accept(","):
                break
        ts.expect("}")
        return E.RecordExpr(tuple(fields))
    ts.fail(f"found {ts._describe(tok)}",
            {"literal", "identifier", "'('", "'{'"})


def _call(ts, name_tok):
    ts.expect("(")
    args = []
    if not ts.at(")"):
        args.append(_call_arg(ts, name_tok.text))
        while ts.accept(","):
            args.append(_call_arg(ts, name_tok.text))
    ts.expect(")")
    name = name_tok.text
    if name == "opaque":
        if len(args) != 1 or not isinstance(args[0], str):
            ts.fail('opaque(...) takes one string literal')
        return E.Lit(V.Opaque(args[0].encode("utf-8"), "inline"))
    if name == "opaque_hex":
        if len(args) != 1 or not isinstance(args[0], str):
            ts.fail('opaque_hex(...) takes one string literal')
        try:
            data = bytes.fromhex(args[0])
        except ValueError:
            ts.fail("opaque_hex(...) argument is not hexadecimal")
        return E.Lit(V.Opaque(data, "inline"))
    if name in E.BUILTINS:
        if any(isinstance(a, str) for a in args):
            ts.fail(f"{name}(...) does not take string literals")
        return E.Call(name, tuple(args))
    raise ParseError(f"unknown function '{name}'", name_tok.line,
                     name_tok.column, {"pick_address", "opaque", "opaque_hex"})


def _call_arg(ts, func):
    if ts.peek().kind == "string":
        return ts.advance().text
    return _expr(ts)


# ---------------------------------------------------------------------------
# arc expressions

def _conditions(ts) -> tuple[E.Expression, ...]:
    if not ts.accept("["):
        return ()
    conds = [_expr(ts)]
    while ts.accept(","):
        conds.append(_expr(ts))
    ts.expect("]")
    return tuple(conds)


def _whole_paren_group(ts) -> bool:
    """True when the remaining input is one parenthesized group, which is
    the explicit (pattern, size, values) form; a leading '(' that closes
    before the end is just a tuple in a bare pattern list.
    """
    if not ts.at("("):
        return False
    depth = 0
    for i in range(ts.pos, len(ts.tokens)):
        tok = ts.tokens[i]
        if tok.kind == "sym" and tok.text == "(":
            depth += 1
        elif tok.kind == "sym" and tok.text == ")":
            depth -= 1
            if depth == 0:
                return ts.tokens[i + 1].kind == "eof"
    return False


def parse_input_arc(text: str) -> E.InputArcExpr:
    ts = TokenStream(tokenize(text))
    conds = _conditions(ts)
    if _whole_paren_group(ts):
        ts.expect("(")
        pattern = _expr(ts)
        size = None
        values_var = None
        if ts.accept(","):
            size = _parse_size(ts)
            if ts.accept(","):
                tok = ts.peek()
                if tok.kind == "ident":
                    ts.advance()
                    if tok.text != "_":
                        values_var = tok.text
                else:
                    ts.fail(f"found {ts._describe(tok)}", {"values variable", "'_'"})
        ts.expect(")")
        arc = E.InputArcExpr(conds, (pattern,), size, values_var)
    else:
        pattern = [_expr(ts)]
        while ts.accept(","):
            pattern.append(_expr(ts))
        arc = E.InputArcExpr(conds, tuple(pattern), None, None)
    if ts.peek().kind != "eof":
        ts.fail(f"trailing input {ts._describe(ts.peek())}", {"end of input"})
    return arc


def _parse_size(ts):
    tok = ts.peek()
    if tok.kind == "nat":
        ts.advance()
    elif tok.kind == "ident" and tok.text != "_":
        ts.advance()
    else:
        ts.fail("size not a Nat literal or single variable",
                {"natural number", "variable"})
    if not ts.at(",") and not ts.at(")"):
        ts.fail("size not a Nat literal or single variable",
                {"natural number", "variable"})
    return int(tok.text) if tok.kind == "nat" else tok.text


def parse_output_arc(text: str) -> E.OutputArcExpr:
    ts = TokenStream(tokenize(text))
    conds = _conditions(ts)
    pattern = [_expr(ts)]
    while ts.accept(","):
        pattern.append(_expr(ts))
    location = None
    if ts.accept("@"):
        location = _expr(ts)
    if ts.peek().kind != "eof":
        ts.fail(f"trailing input {ts._describe(ts.peek())}", {"end of input"})
    return E.OutputArcExpr(conds, tuple(pattern), location)
