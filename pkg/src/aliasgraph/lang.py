"""Parser, class table and static checks for the analyzed mini-language.

The language covers exactly what the analysis rules speak about: reference
assignment, object creation, sequencing, conditionals, non-deterministic
choice, condition-blind loops, and unqualified/qualified calls over a
single-inheritance class system with routine redefinition.

Concrete grammar (keyword-driven; newlines and ';' are insignificant):

    program   ::=  (class_decl | routine_decl)*
    class_decl::=  "class" NAME ["inherit" NAME ["redefine" names "end"]]
                   "feature" (attr_decl | routine_decl)* "end"
    attr_decl ::=  names ":" NAME
    routine   ::=  NAME ["(" params ")"] [":" NAME] ["local" decl*] "do" body "end"
    params    ::=  names ":" NAME (";" names ":" NAME)*
    body      ::=  instr*
    instr     ::=  [NAME ":"] core          -- program-point label prefix
    core      ::=  "create" NAME
                |  path ":=" ("Void" | path | call)
                |  "if" cond "then" body
                   {"elseif" cond "then" body} ["else" body] "end"
                |  "then" body {"else" body} "end"       -- free choice
                |  "loop" body ["until" cond] "end"
                |  "skip"
                |  call                                   -- as a statement
    cond      ::=  "not" cond | operand ("=" | "/=") operand
    operand   ::=  "Void" | path
    path      ::=  NAME {"." NAME}           -- Current allowed as first name
    call      ::=  path ["(" [operand {"," operand}] ")"]

Top-level routines (outside any class) are allowed; they form the implicit
program scope that `--entry` can name directly.  Loop exit conditions are
parsed but deliberately ignored by the analysis (a warning says so).
Function calls may appear only as a whole right-hand side; nesting them
inside paths is a syntax error by construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from aliasgraph.diagram import ExprUniverse, NamePath, parse_name_path

KEYWORDS = {
    "class", "inherit", "redefine", "feature", "end", "do", "local",
    "create", "if", "then", "elseif", "else", "loop", "until", "not",
    "skip", "Void", "Current",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<assign>:=)
  | (?P<neq>/=)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[().,;:=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self):
        return "%d:%d" % (self.line, self.col)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    message: str
    pos: Optional[Pos] = None
    source: str = "<input>"

    def render(self) -> str:
        where = "%s:%s" % (self.source, self.pos) if self.pos else self.source
        return "%s: %s: %s" % (where, self.severity, self.message)


class ParseError(Exception):
    def __init__(self, diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class Token:
    kind: str  # "name" | "punct" | "assign" | "neq" | "eof"
    text: str
    pos: Pos


def tokenize(text, source="<input>"):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(Diagnostic("error", "unexpected character %r" % text[i], Pos(line, col), source))
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, Pos(line, col)))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        i = m.end()
    tokens.append(Token("eof", "", Pos(line, col)))
    return tokens


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

# Right-hand sides and condition operands: a NamePath, or None meaning Void.
Operand = Optional[NamePath]


@dataclass
class CallExpr:
    target: Operand  # None for unqualified calls; a path for x.f(...)
    name: str
    actuals: List[Operand] = field(default_factory=list)
    pos: Optional[Pos] = None


@dataclass
class Assign:
    target: NamePath
    source: Union[None, NamePath, CallExpr]  # None = Void
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class Create:
    target: str
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class Compound:
    instrs: List["Instr"] = field(default_factory=list)
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class Guard:
    cond: "Cond"
    body: Compound
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class Choice:
    branches: List["Instr"]  # each a Compound or a Guard
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class If:
    arms: List[Tuple["Cond", Compound]]
    else_body: Optional[Compound]
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class Loop:
    body: Compound
    until: Optional["Cond"] = None
    pos: Optional[Pos] = None
    point: Optional[str] = None


@dataclass
class CallInstr:
    call: CallExpr
    pos: Optional[Pos] = None
    point: Optional[str] = None


Instr = Union[Assign, Create, Compound, Guard, Choice, If, Loop, CallInstr]


@dataclass
class CondEq:
    left: Operand
    right: Operand
    pos: Optional[Pos] = None


@dataclass
class CondNeq:
    left: Operand
    right: Operand
    pos: Optional[Pos] = None


@dataclass
class CondNot:
    inner: "Cond"
    pos: Optional[Pos] = None


Cond = Union[CondEq, CondNeq, CondNot]


@dataclass
class RoutineDecl:
    name: str
    formals: List[Tuple[str, str]] = field(default_factory=list)
    result_type: Optional[str] = None
    locals: Dict[str, str] = field(default_factory=dict)
    body: Compound = field(default_factory=Compound)
    owner: Optional[str] = None  # class name; None for top-level routines
    pos: Optional[Pos] = None

    def is_function(self):
        return self.result_type is not None

    def formal_names(self):
        return [n for n, _ in self.formals]


@dataclass
class ClassDecl:
    name: str
    parent: Optional[str] = None
    redefines: List[str] = field(default_factory=list)
    attrs: Dict[str, str] = field(default_factory=dict)
    routines: Dict[str, RoutineDecl] = field(default_factory=dict)
    pos: Optional[Pos] = None


@dataclass
class Program:
    classes: Dict[str, ClassDecl] = field(default_factory=dict)
    routines: Dict[str, RoutineDecl] = field(default_factory=dict)  # top-level
    source: str = "<input>"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens, source):
        self.tokens = tokens
        self.source = source
        self.i = 0

    # -- token plumbing

    @property
    def tok(self):
        return self.tokens[self.i]

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("name", "punct", "assign", "neq")

    def at_name(self):
        return self.tok.kind == "name" and self.tok.text not in KEYWORDS

    def peek(self, k=1):
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self):
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text, what=None):
        if not self.at(text):
            raise self.fail("expected %r%s, found %r" % (text, " (%s)" % what if what else "", self.tok.text or "end of input"))
        return self.advance()

    def expect_name(self, what="a name"):
        if not self.at_name():
            raise self.fail("expected %s, found %r" % (what, self.tok.text or "end of input"))
        return self.advance()

    def fail(self, message):
        return ParseError(Diagnostic("error", message, self.tok.pos, self.source))

    def skip_semis(self):
        while self.at(";"):
            self.advance()

    # -- grammar: program ::= (class_decl | routine_decl)*

    def parse_program(self):
        prog = Program(source=self.source)
        self.skip_semis()
        while self.tok.kind != "eof":
            if self.at("class"):
                c = self.parse_class()
                if c.name in prog.classes:
                    raise ParseError(Diagnostic("error", "duplicate class %r" % c.name, c.pos, self.source))
                prog.classes[c.name] = c
            elif self.at_name():
                r = self.parse_routine(owner=None)
                if r.name in prog.routines:
                    raise ParseError(Diagnostic("error", "duplicate routine %r" % r.name, r.pos, self.source))
                prog.routines[r.name] = r
            else:
                raise self.fail("expected a class or routine declaration, found %r" % self.tok.text)
            self.skip_semis()
        return prog

    # -- class_decl ::= "class" NAME [inherit ...] "feature" members "end"

    def parse_class(self):
        pos = self.expect("class").pos
        name = self.expect_name("a class name").text
        decl = ClassDecl(name=name, pos=pos)
        if self.at("inherit"):
            self.advance()
            decl.parent = self.expect_name("a parent class name").text
            if self.at("redefine"):
                self.advance()
                decl.redefines.append(self.expect_name("a routine name").text)
                while self.at(","):
                    self.advance()
                    decl.redefines.append(self.expect_name("a routine name").text)
                self.expect("end", "closing the redefine clause")
        self.expect("feature", "starting the class body")
        self.skip_semis()
        while not self.at("end"):
            self.parse_member(decl)
            self.skip_semis()
        self.expect("end", "closing class %r" % name)
        return decl

    # A member is an attribute (names ":" TYPE) or a routine.  Both start
    # with a name; the routine forms are told apart by what follows:
    # '(' opens formals, and "do"/"local", or ':' TYPE then "do"/"local",
    # mean a body follows.

    def parse_member(self, decl):
        start = self.i
        names = [self.expect_name("an attribute or routine name").text]
        while self.at(","):
            self.advance()
            names.append(self.expect_name("an attribute name").text)
        if len(names) == 1:
            if self.at("(") or self.at("do") or self.at("local"):
                self.i = start
                r = self.parse_routine(owner=decl.name)
                self._declare_routine(decl, r)
                return
            if self.at(":"):
                # could still be `name : TYPE do` (a function)
                save = self.i
                self.advance()
                self.expect_name("a type name")
                if self.at("do") or self.at("local"):
                    self.i = start
                    r = self.parse_routine(owner=decl.name)
                    self._declare_routine(decl, r)
                    return
                self.i = save
        self.expect(":", "after attribute name(s)")
        type_name = self.expect_name("a type name").text
        for n in names:
            if n in decl.attrs or n in decl.routines:
                raise self.fail("duplicate declaration of %r in class %r" % (n, decl.name))
            decl.attrs[n] = type_name

    def _declare_routine(self, decl, r):
        if r.name in decl.routines or r.name in decl.attrs:
            raise ParseError(Diagnostic("error", "duplicate declaration of %r in class %r" % (r.name, decl.name), r.pos, self.source))
        decl.routines[r.name] = r

    # -- routine ::= NAME ["(" params ")"] [":" TYPE] ["local" decls] "do" body "end"

    def parse_routine(self, owner):
        name_tok = self.expect_name("a routine name")
        r = RoutineDecl(name=name_tok.text, owner=owner, pos=name_tok.pos)
        if self.at("("):
            self.advance()
            while not self.at(")"):
                names = [self.expect_name("a formal name").text]
                while self.at(","):
                    self.advance()
                    names.append(self.expect_name("a formal name").text)
                self.expect(":", "after formal name(s)")
                type_name = self.expect_name("a type name").text
                for n in names:
                    r.formals.append((n, type_name))
                if self.at(";"):
                    self.advance()
            self.expect(")")
        if self.at(":"):
            self.advance()
            r.result_type = self.expect_name("a result type").text
        if self.at("local"):
            self.advance()
            while self.at_name():
                names = [self.advance().text]
                while self.at(","):
                    self.advance()
                    names.append(self.expect_name("a local name").text)
                self.expect(":", "after local name(s)")
                type_name = self.expect_name("a type name").text
                for n in names:
                    if n in r.locals:
                        raise self.fail("duplicate local %r" % n)
                    r.locals[n] = type_name
                self.skip_semis()
        self.expect("do", "starting the routine body")
        r.body = self.parse_body(("end",))
        self.expect("end", "closing routine %r" % r.name)
        return r

    # -- body ::= instr* ; stops before any of the given closers

    def parse_body(self, closers):
        body = Compound(pos=self.tok.pos)
        self.skip_semis()
        while not (self.tok.kind == "eof" or self.tok.text in closers):
            body.instrs.append(self.parse_instr())
            self.skip_semis()
        return body

    def parse_instr(self):
        point = None
        # a label is NAME ':' not followed by '=' (which would be ':=',
        # already one token) and not a declaration context
        if self.at_name() and self.peek().text == ":" and self.peek().kind == "punct":
            point = self.advance().text
            self.advance()
        instr = self.parse_core()
        instr.point = point
        return instr

    def parse_core(self):
        pos = self.tok.pos
        if self.at("skip"):
            self.advance()
            return Compound(pos=pos)
        if self.at("create"):
            self.advance()
            target = self.expect_name("a variable name").text if self.at_name() else self.expect_result()
            return Create(target=target, pos=pos)
        if self.at("if"):
            return self.parse_if()
        if self.at("then"):
            return self.parse_choice()
        if self.at("loop"):
            return self.parse_loop()
        if self.at_name() or self.at("Current") or self.at("Result"):
            path = self.parse_path()
            if self.at(":="):
                self.advance()
                return Assign(target=path, source=self.parse_rhs(), pos=pos)
            if self.at("("):
                return CallInstr(call=self.finish_call(path, pos), pos=pos)
            # bare call statement: `f` or `x.f`
            target = path[:-1] if len(path) > 1 else None
            return CallInstr(call=CallExpr(target=target, name=path[-1], pos=pos), pos=pos)
        raise self.fail("expected an instruction, found %r" % (self.tok.text or "end of input"))

    def expect_result(self):
        if self.tok.text == "Result":
            self.advance()
            return "Result"
        raise self.fail("expected a variable name after 'create'")

    def parse_if(self):
        pos = self.expect("if").pos
        arms = []
        cond = self.parse_cond()
        self.expect("then")
        arms.append((cond, self.parse_body(("elseif", "else", "end"))))
        while self.at("elseif"):
            self.advance()
            cond = self.parse_cond()
            self.expect("then")
            arms.append((cond, self.parse_body(("elseif", "else", "end"))))
        else_body = None
        if self.at("else"):
            self.advance()
            else_body = self.parse_body(("end",))
        self.expect("end", "closing the if")
        return If(arms=arms, else_body=else_body, pos=pos)

    # -- "then" body {"else" body} "end": free (condition-less) choice

    def parse_choice(self):
        pos = self.expect("then").pos
        branches = [self.parse_body(("else", "end"))]
        while self.at("else"):
            self.advance()
            branches.append(self.parse_body(("else", "end")))
        self.expect("end", "closing the choice")
        if len(branches) < 2:
            raise ParseError(Diagnostic("error", "a choice needs at least two branches", pos, self.source))
        return Choice(branches=list(branches), pos=pos)

    def parse_loop(self):
        pos = self.expect("loop").pos
        body = self.parse_body(("until", "end"))
        until = None
        if self.at("until"):
            self.advance()
            until = self.parse_cond()
        self.expect("end", "closing the loop")
        return Loop(body=body, until=until, pos=pos)

    def parse_rhs(self):
        if self.at("Void"):
            self.advance()
            return None
        pos = self.tok.pos
        path = self.parse_path()
        if self.at("("):
            return self.finish_call(path, pos)
        return path

    def finish_call(self, path, pos):
        target = path[:-1] if len(path) > 1 else None
        call = CallExpr(target=target, name=path[-1], pos=pos)
        self.expect("(")
        while not self.at(")"):
            call.actuals.append(self.parse_operand())
            if self.at(","):
                self.advance()
            elif not self.at(")"):
                raise self.fail("expected ',' or ')' in the argument list")
        self.expect(")")
        return call

    def parse_operand(self):
        if self.at("Void"):
            self.advance()
            return None
        return self.parse_path()

    def parse_path(self):
        segs = []
        if self.at("Current"):
            self.advance()
        else:
            segs.append(self.expect_name("a name").text)
        while self.at("."):
            self.advance()
            segs.append(self.expect_name("a name after '.'").text)
        return tuple(segs)

    def parse_cond(self):
        if self.at("not"):
            pos = self.advance().pos
            return CondNot(inner=self.parse_cond(), pos=pos)
        pos = self.tok.pos
        left = self.parse_operand()
        if self.at("="):
            self.advance()
            return CondEq(left=left, right=self.parse_operand(), pos=pos)
        if self.tok.kind == "neq":
            self.advance()
            return CondNeq(left=left, right=self.parse_operand(), pos=pos)
        raise self.fail("expected '=' or '/=' in a condition")


def parse_program(text, source="<input>"):
    """Parse source text into a Program.  Raises ParseError."""
    parser = _Parser(tokenize(text, source), source)
    return parser.parse_program()


def parse_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(fh.read(), source=str(path))


# ---------------------------------------------------------------------------
# Conditional desugaring
# ---------------------------------------------------------------------------


def negate_cond(cond):
    # fold double negation and =//= flips instead of stacking Not nodes
    if isinstance(cond, CondNot):
        return cond.inner
    if isinstance(cond, CondEq):
        return CondNeq(left=cond.left, right=cond.right, pos=cond.pos)
    if isinstance(cond, CondNeq):
        return CondEq(left=cond.left, right=cond.right, pos=cond.pos)
    return CondNot(inner=cond, pos=getattr(cond, "pos", None))


def desugar_conditional(node):
    """Turn an If into the choice-of-guarded-branches form.

    Each arm keeps its own condition only; a missing else becomes a
    guarded skip under the negation of the last condition.  Dropping the
    earlier arms' negations from later guards can only add executions,
    which is safe for a may-analysis.
    """
    assert isinstance(node, If)
    branches = [Guard(cond=c, body=b, pos=b.pos) for c, b in node.arms]
    last_cond = node.arms[-1][0]
    else_body = node.else_body if node.else_body is not None else Compound(pos=node.pos)
    branches.append(Guard(cond=negate_cond(last_cond), body=else_body, pos=else_body.pos))
    return Choice(branches=list(branches), pos=node.pos, point=node.point)


# ---------------------------------------------------------------------------
# Class table and static checks
# ---------------------------------------------------------------------------


class ClassTable:
    """Resolved view of a program: inheritance-aware lookup tables."""

    def __init__(self, program):
        self.program = program
        self.classes = program.classes

    def ancestry(self, cname):
        """cname and its ancestors, nearest first.  Assumes acyclicity."""
        chain = []
        seen = set()
        while cname is not None and cname in self.classes and cname not in seen:
            seen.add(cname)
            chain.append(cname)
            cname = self.classes[cname].parent
        return chain

    def find_attr(self, cname, attr):
        for c in self.ancestry(cname):
            if attr in self.classes[c].attrs:
                return self.classes[c].attrs[attr]
        return None

    def find_routine(self, cname, rname):
        """The version of rname visible on cname, walking up the parents."""
        for c in self.ancestry(cname):
            if rname in self.classes[c].routines:
                return self.classes[c].routines[rname]
        return None

    def descendants(self, cname):
        """Proper descendants in deterministic order: by distance, then name."""
        out = []
        frontier = [cname]
        while frontier:
            children = sorted(
                c.name for c in self.classes.values() if c.parent in frontier
            )
            out.extend(children)
            frontier = children
        return out

    def dispatch_versions(self, cname, rname):
        """All routine bodies a call on a static type may land in.

        The static type's own (possibly inherited) version first, then
        each descendant's redefinition, nearest generation first and
        alphabetical within one generation.
        """
        versions = []
        base = self.find_routine(cname, rname)
        if base is not None:
            versions.append(base)
        for d in self.descendants(cname):
            decl = self.classes[d]
            if rname in decl.redefines and rname in decl.routines:
                versions.append(decl.routines[rname])
        return versions


def _walk_instrs(body):
    for instr in body.instrs:
        yield instr
        if isinstance(instr, Compound):
            yield from _walk_instrs(instr)
        elif isinstance(instr, Guard):
            yield from _walk_instrs(instr.body)
        elif isinstance(instr, Choice):
            for b in instr.branches:
                if isinstance(b, Guard):
                    yield b
                    yield from _walk_instrs(b.body)
                else:
                    yield from _walk_instrs(b)
        elif isinstance(instr, If):
            for _, b in instr.arms:
                yield from _walk_instrs(b)
            if instr.else_body is not None:
                yield from _walk_instrs(instr.else_body)
        elif isinstance(instr, Loop):
            yield from _walk_instrs(instr.body)


def _all_routines(program):
    for r in program.routines.values():
        yield r
    for c in program.classes.values():
        for r in c.routines.values():
            yield r


class Resolver:
    """Static checks; collects diagnostics instead of raising.

    Checks are name-based, not a full type system: every used name must
    be declared somewhere sensible, inheritance must be acyclic, redefines
    must override something, formals must stay read-only, and paths must
    follow declared attributes.  Class names used only as types (never
    looked into) may stay undeclared: they are opaque.
    """

    def __init__(self, program):
        self.program = program
        self.table = ClassTable(program)
        self.diagnostics = []

    def error(self, message, pos=None):
        self.diagnostics.append(Diagnostic("error", message, pos, self.program.source))

    def warning(self, message, pos=None):
        self.diagnostics.append(Diagnostic("warning", message, pos, self.program.source))

    def run(self):
        self.check_inheritance()
        for routine in _all_routines(self.program):
            self.check_routine(routine)
        return self.diagnostics

    def check_inheritance(self):
        for c in self.program.classes.values():
            seen = {c.name}
            p = c.parent
            while p is not None:
                if p in seen:
                    self.error("inheritance cycle through class %r" % c.name, c.pos)
                    break
                seen.add(p)
                p = self.program.classes[p].parent if p in self.program.classes else None
            if c.parent is not None and c.parent not in self.program.classes:
                self.error("class %r inherits unknown class %r" % (c.name, c.parent), c.pos)
            for rname in c.redefines:
                parent_version = self.table.find_routine(c.parent, rname) if c.parent else None
                if parent_version is None:
                    self.error("class %r redefines %r, which no ancestor declares" % (c.name, rname), c.pos)
                elif rname not in c.routines:
                    self.error("class %r lists %r under redefine but gives no body" % (c.name, rname), c.pos)

    # -- per-routine checks

    def var_types(self, routine):
        types = {}
        for n, t in routine.formals:
            types[n] = t
        for n, t in routine.locals.items():
            if n in types:
                self.error("local %r of %r collides with a formal" % (n, routine.name), routine.pos)
            types[n] = t
        if routine.result_type is not None:
            types["Result"] = routine.result_type
        if routine.owner is not None:
            for n in types:
                if n != "Result" and self.table.find_attr(routine.owner, n) is not None:
                    self.error("%r in routine %r hides an attribute of class %r" % (n, routine.name, routine.owner), routine.pos)
        return types

    def check_routine(self, routine):
        types = self.var_types(routine)
        formals = set(routine.formal_names())
        points = set()
        for instr in _walk_instrs(routine.body):
            if instr.point is not None:
                if instr.point in points:
                    self.error("duplicate program point %r in %r" % (instr.point, routine.name), instr.pos)
                points.add(instr.point)
            self.check_instr(instr, routine, types, formals)

    def check_instr(self, instr, routine, types, formals):
        if isinstance(instr, Assign):
            self.check_target(instr.target, routine, types, formals, instr.pos)
            if isinstance(instr.source, CallExpr):
                self.check_call(instr.source, routine, types)
            elif instr.source is not None:
                self.check_path(instr.source, routine, types, instr.pos)
        elif isinstance(instr, Create):
            name = instr.target
            if name in formals:
                self.error("cannot create into formal %r" % name, instr.pos)
            elif name not in types and (routine.owner is None or self.table.find_attr(routine.owner, name) is None):
                self.error("unknown variable %r in create" % name, instr.pos)
        elif isinstance(instr, (If, Guard)):
            conds = [c for c, _ in instr.arms] if isinstance(instr, If) else [instr.cond]
            for c in conds:
                self.check_cond(c, routine, types)
        elif isinstance(instr, Loop):
            if instr.until is not None:
                self.warning("loop exit condition is ignored by the analysis", instr.pos)
                self.check_cond(instr.until, routine, types)
        elif isinstance(instr, CallInstr):
            self.check_call(instr.call, routine, types)

    def check_cond(self, cond, routine, types):
        if isinstance(cond, CondNot):
            self.check_cond(cond.inner, routine, types)
            return
        for side in (cond.left, cond.right):
            if side is not None:
                self.check_path(side, routine, types, cond.pos)

    def check_target(self, path, routine, types, formals, pos):
        if len(path) == 0:
            self.error("cannot assign to Current", pos)
            return
        if len(path) == 1 and path[0] in formals:
            self.error("formals are read-only; cannot assign to %r" % path[0], pos)
            return
        self.check_path(path, routine, types, pos)

    def check_path(self, path, routine, types, pos):
        """Follow the path through declared names and attributes.

        Returns the static type of the path, or None when it cannot be
        resolved (an error diagnostic is emitted in that case, except for
        opaque types reached at the final segment).
        """
        if len(path) == 0:
            return routine.owner
        head = path[0]
        if head in types:
            t = types[head]
        elif routine.owner is not None and self.table.find_attr(routine.owner, head) is not None:
            t = self.table.find_attr(routine.owner, head)
        else:
            self.error("unknown name %r" % head, pos)
            return None
        for seg in path[1:]:
            if t not in self.program.classes:
                self.error("cannot follow %r: type %r is opaque (no class declaration)" % (seg, t), pos)
                return None
            nxt = self.table.find_attr(t, seg)
            if nxt is None:
                self.error("type %r has no attribute %r" % (t, seg), pos)
                return None
            t = nxt
        return t

    def check_call(self, call, routine, types):
        if call.target is None:
            version = None
            if routine.owner is not None:
                version = self.table.find_routine(routine.owner, call.name)
            if version is None:
                version = self.program.routines.get(call.name)
            if version is None:
                self.error("unknown routine %r" % call.name, call.pos)
        else:
            t = self.check_path(call.target, routine, types, call.pos)
            if t is None:
                version = None
            elif t not in self.program.classes:
                self.error("cannot call %r on opaque type %r" % (call.name, t), call.pos)
                version = None
            else:
                version = self.table.find_routine(t, call.name)
                if version is None:
                    self.error("type %r has no routine %r" % (t, call.name), call.pos)
        for a in call.actuals:
            if a is not None:
                self.check_path(a, routine, types, call.pos)
        if version is not None and len(call.actuals) != len(version.formals):
            self.error(
                "call to %r passes %d argument(s), expected %d"
                % (call.name, len(call.actuals), len(version.formals)),
                call.pos,
            )


def resolve(program):
    """Run all static checks; returns the diagnostics list."""
    return Resolver(program).run()


# ---------------------------------------------------------------------------
# Expression universe
# ---------------------------------------------------------------------------


def build_expr_universe(program):
    """Every dotted path the program text mentions, prefix-closed."""
    u = ExprUniverse()

    def add(path):
        if path:
            u.add(path)

    def add_operand(op):
        if op is not None:
            add(op)

    def add_cond(cond):
        if isinstance(cond, CondNot):
            add_cond(cond.inner)
        else:
            add_operand(cond.left)
            add_operand(cond.right)

    def add_call(call):
        if call.target is not None:
            add(call.target)
        for a in call.actuals:
            add_operand(a)

    for routine in _all_routines(program):
        for instr in _walk_instrs(routine.body):
            if isinstance(instr, Assign):
                add(instr.target)
                if isinstance(instr.source, CallExpr):
                    add_call(instr.source)
                else:
                    add_operand(instr.source)
            elif isinstance(instr, Create):
                add((instr.target,))
            elif isinstance(instr, (If, Guard)):
                conds = [c for c, _ in instr.arms] if isinstance(instr, If) else [instr.cond]
                for c in conds:
                    add_cond(c)
            elif isinstance(instr, Loop):
                if instr.until is not None:
                    add_cond(instr.until)
            elif isinstance(instr, CallInstr):
                add_call(instr.call)
    return u


# ---------------------------------------------------------------------------
# Pretty printing (round-trip support)
# ---------------------------------------------------------------------------


def _fmt_operand(op):
    return "Void" if op is None else ".".join(op)


def _fmt_cond(cond):
    if isinstance(cond, CondNot):
        return "not " + _fmt_cond(cond.inner)
    op = "=" if isinstance(cond, CondEq) else "/="
    return "%s %s %s" % (_fmt_operand(cond.left), op, _fmt_operand(cond.right))


def _fmt_call(call):
    head = ".".join(call.target) + "." + call.name if call.target else call.name
    return "%s (%s)" % (head, ", ".join(_fmt_operand(a) for a in call.actuals))


def _fmt_instr(instr, indent):
    pad = "  " * indent
    prefix = pad + (instr.point + ": " if instr.point else "")
    if isinstance(instr, Assign):
        src = _fmt_call(instr.source) if isinstance(instr.source, CallExpr) else _fmt_operand(instr.source)
        return [prefix + "%s := %s" % (".".join(instr.target), src)]
    if isinstance(instr, Create):
        return [prefix + "create " + instr.target]
    if isinstance(instr, Compound):
        if not instr.instrs:
            return [prefix + "skip"]
        lines = []
        for i, sub in enumerate(instr.instrs):
            sub_lines = _fmt_instr(sub, indent)
            if i == 0 and instr.point:
                sub_lines[0] = prefix + sub_lines[0].lstrip()
            lines.extend(sub_lines)
        return lines
    if isinstance(instr, If):
        lines = [prefix + "if %s then" % _fmt_cond(instr.arms[0][0])]
        lines += _fmt_body(instr.arms[0][1], indent + 1)
        for cond, body in instr.arms[1:]:
            lines.append(pad + "elseif %s then" % _fmt_cond(cond))
            lines += _fmt_body(body, indent + 1)
        if instr.else_body is not None:
            lines.append(pad + "else")
            lines += _fmt_body(instr.else_body, indent + 1)
        lines.append(pad + "end")
        return lines
    if isinstance(instr, Choice):
        lines = [prefix + "then"]
        lines += _fmt_body(instr.branches[0], indent + 1)
        for b in instr.branches[1:]:
            lines.append(pad + "else")
            lines += _fmt_body(b, indent + 1)
        lines.append(pad + "end")
        return lines
    if isinstance(instr, Loop):
        lines = [prefix + "loop"]
        lines += _fmt_body(instr.body, indent + 1)
        if instr.until is not None:
            lines.append(pad + "until " + _fmt_cond(instr.until))
        lines.append(pad + "end")
        return lines
    if isinstance(instr, CallInstr):
        return [prefix + _fmt_call(instr.call)]
    if isinstance(instr, Guard):
        lines = [prefix + "if %s then" % _fmt_cond(instr.cond)]
        lines += _fmt_body(instr.body, indent + 1)
        lines.append(pad + "end")
        return lines
    raise AssertionError("unhandled instruction %r" % (instr,))


def _fmt_body(body, indent):
    if isinstance(body, Compound):
        lines = []
        for sub in body.instrs:
            lines.extend(_fmt_instr(sub, indent))
        return lines
    return _fmt_instr(body, indent)


def to_source(program):
    lines = []
    for c in program.classes.values():
        head = "class " + c.name
        if c.parent:
            head += " inherit " + c.parent
            if c.redefines:
                head += " redefine " + ", ".join(c.redefines) + " end"
        lines.append(head)
        lines.append("feature")
        for name, t in c.attrs.items():
            lines.append("  %s: %s" % (name, t))
        for r in c.routines.values():
            lines.extend(_fmt_routine(r, 1))
        lines.append("end")
        lines.append("")
    for r in program.routines.values():
        lines.extend(_fmt_routine(r, 0))
        lines.append("")
    return "\n".join(lines)


def _fmt_routine(r, indent):
    pad = "  " * indent
    head = pad + r.name
    if r.formals:
        groups = "; ".join("%s: %s" % (n, t) for n, t in r.formals)
        head += " (%s)" % groups
    if r.result_type:
        head += ": " + r.result_type
    lines = [head]
    if r.locals:
        lines.append(pad + "  local")
        for n, t in r.locals.items():
            lines.append(pad + "    %s: %s" % (n, t))
    lines.append(pad + "  do")
    lines += _fmt_body(r.body, indent + 2)
    lines.append(pad + "  end")
    return lines


# -- structural identity for round-trip tests (positions ignored) -------------


def ast_key(node):
    if isinstance(node, Program):
        return (
            "program",
            tuple(sorted((n, ast_key(c)) for n, c in node.classes.items())),
            tuple(sorted((n, ast_key(r)) for n, r in node.routines.items())),
        )
    if isinstance(node, ClassDecl):
        return (
            "class", node.name, node.parent, tuple(node.redefines),
            tuple(sorted(node.attrs.items())),
            tuple(sorted((n, ast_key(r)) for n, r in node.routines.items())),
        )
    if isinstance(node, RoutineDecl):
        return (
            "routine", node.name, tuple(node.formals), node.result_type,
            tuple(sorted(node.locals.items())), node.owner, ast_key(node.body),
        )
    if isinstance(node, Assign):
        return ("assign", node.point, node.target, ast_key(node.source) if isinstance(node.source, CallExpr) else node.source)
    if isinstance(node, Create):
        return ("create", node.point, node.target)
    if isinstance(node, Compound):
        return ("compound", node.point, tuple(ast_key(i) for i in node.instrs))
    if isinstance(node, Guard):
        return ("guard", node.point, ast_key(node.cond), ast_key(node.body))
    if isinstance(node, Choice):
        return ("choice", node.point, tuple(ast_key(b) for b in node.branches))
    if isinstance(node, If):
        return (
            "if", node.point,
            tuple((ast_key(c), ast_key(b)) for c, b in node.arms),
            ast_key(node.else_body) if node.else_body is not None else None,
        )
    if isinstance(node, Loop):
        return ("loop", node.point, ast_key(node.body), ast_key(node.until) if node.until else None)
    if isinstance(node, CallInstr):
        return ("call", node.point, ast_key(node.call))
    if isinstance(node, CallExpr):
        return ("callexpr", node.target, node.name, tuple(node.actuals))
    if isinstance(node, CondEq):
        return ("eq", node.left, node.right)
    if isinstance(node, CondNeq):
        return ("neq", node.left, node.right)
    if isinstance(node, CondNot):
        return ("not", ast_key(node.inner))
    raise AssertionError("unhandled node %r" % (node,))
