"""Shared helpers and fixture programs for the test suite."""

from aliasgraph.calculus import AnalysisConfig, Engine
from aliasgraph.diagram import AliasDiagram, Label
from aliasgraph.lang import parse_program, resolve

# The list-copy benchmark: a recursive structural copy of a linked list,
# with the program points the reports and property checks refer to.
DEUTSCH_SRC = """
class LST feature
  hd: T
  tl: LST
end

copy_ (L: LST): LST
  local
    t1: LST
  do
    if L = Void then
      create Result
    else
      create Result
      t1 := L.tl
      Result.tl := copy_ (t1)
      Result.hd := L.hd
    end
  end

main
  local
    X: LST
    Y: LST
    t2: LST
  do
    L0: create X
    L1: t2 := X
    L2: Y := copy_ (t2)
    L3: create X
  end
"""

# Two routine versions for the same call: the analysis must keep one
# world per version.
DISPATCH_SRC = """
class T1 feature
  b: T1
  c: T1
  set (o: T1) do b := o end
end
class T2 inherit T1 redefine set end feature
  set (o: T1) do c := o end
end
main local t: T1 a: T1 u: T1 v: T1 do
  create t create u create v create a
  t.c := u
  t.b := v
  u := Void
  v := Void
  t.set (a)
end
"""

# Exactly one branch assigns in each world.
FLOW_SRC = """
class C feature end
main local a: C x: C b: C do
  create a
  create x
  create b
  then a := x else b := x end
end
"""


def run(source, entry="main", **config_kwargs):
    """Parse, resolve, and analyze; fail the test on static errors."""
    prog = parse_program(source)
    diags = resolve(prog)
    errors = [d for d in diags if d.severity == "error"]
    assert not errors, "static errors: %s" % [d.render() for d in errors]
    engine = Engine(prog, AnalysisConfig(**config_kwargs) if config_kwargs else None)
    engine.analyze(entry)
    return engine


def build(roots, edges):
    """Expected-diagram builder with explicit node ids."""
    d = AliasDiagram()
    for n in roots:
        d.include(n)
        d.roots.add(n)
    for lbl, s, t in edges:
        d.include(s)
        d.include(t)
        d.add_edge(Label(lbl), s, t)
    return d


def path(expr):
    """'a.b.c' -> label tuple, in entry-scope terms."""
    return tuple(Label(seg) for seg in expr.split("."))


def aliased(engine, p, q):
    return engine.diagram.may_alias(path(p), path(q))


def values(engine, p):
    return engine.diagram.value_set(path(p))


def same_shape(engine, expected):
    got = engine.diagram.canonical_form()
    want = expected.canonical_form()
    assert got == want, "diagram shape differs:\n  got:  %r\n  want: %r" % (got, want)
