"""Independent answer generators for the acceptance suite.

Nothing here reuses the engine's machinery: a seeded random program
generator, a concrete interpreter that forks at every choice and runs a
real heap, and an explicit union-over-iterations evaluator for loops
working on raw edge triples.  Each exists so the engine's answers can
be compared against something computed a different way.
"""

import random

from aliasgraph.diagram import Label

# Structured instruction forms, shared by the generator, the renderer,
# the interpreter, and the loop evaluator:
#   ("create", i)       create vi
#   ("assign", i, j)    vi := vj
#   ("void", i)         vi := Void
#   ("read", i, j)      vi := vj.n
#   ("write", i, j)     vi.n := vj
#   ("choice", a, b)    then <a> else <b> end


def gen_program(seed):
    """A random loop-free call-free program: (nvars, block)."""
    rng = random.Random(seed)
    nv = rng.randint(3, 6)
    budget = rng.randint(6, 12)
    block, _ = _gen_block(rng, nv, budget, 0)
    return nv, block


def _gen_block(rng, nv, budget, depth):
    block, used = [], 0
    while used < budget:
        left = budget - used
        kinds = ["create", "create", "create", "assign", "assign", "assign",
                 "void", "read", "read", "write", "write"]
        if depth < 2 and left >= 4:
            kinds += ["choice", "choice"]
        kind = rng.choice(kinds)
        i, j = rng.randrange(nv), rng.randrange(nv)
        if kind == "create":
            block.append(("create", i))
            used += 1
        elif kind == "assign":
            block.append(("assign", i, j))
            used += 1
        elif kind == "void":
            block.append(("void", i))
            used += 1
        elif kind == "read":
            block.append(("read", i, j))
            used += 1
        elif kind == "write":
            block.append(("write", i, j))
            used += 1
        else:
            na = rng.randint(1, min(3, left - 2))
            nb = rng.randint(1, min(3, left - 1 - na))
            a, ua = _gen_block(rng, nv, na, depth + 1)
            b, ub = _gen_block(rng, nv, nb, depth + 1)
            block.append(("choice", a, b))
            used += ua + ub
    return block, used


def gen_loop_program(seed):
    """A straight-line prefix plus one loop: (nvars, prefix, body)."""
    rng = random.Random(seed)
    nv = rng.randint(3, 5)
    prefix = [("create", i) for i in range(nv) if rng.random() < 0.8]
    for _ in range(rng.randint(1, 4)):
        kind = rng.choice(["assign", "write", "create"])
        i, j = rng.randrange(nv), rng.randrange(nv)
        prefix.append(("create", i) if kind == "create" else (kind, i, j))
    body = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(["assign", "assign", "read", "read", "read", "void"])
        i, j = rng.randrange(nv), rng.randrange(nv)
        body.append(("void", i) if kind == "void" else (kind, i, j))
    return nv, prefix, body


def render(nv, block):
    lines = ["class C feature n: C end",
             "main local " + " ".join("v%d: C" % i for i in range(nv)) + " do"]
    _render_block(block, lines, 1)
    lines.append("end")
    return "\n".join(lines) + "\n"


def render_loop(nv, prefix, body):
    lines = ["class C feature n: C end",
             "main local " + " ".join("v%d: C" % i for i in range(nv)) + " do"]
    _render_block(prefix, lines, 1)
    lines.append("  P: skip")
    lines.append("  loop")
    _render_block(body, lines, 2)
    lines.append("  end")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _render_block(block, lines, indent):
    pad = "  " * indent
    for op in block:
        if op[0] == "create":
            lines.append(pad + "create v%d" % op[1])
        elif op[0] == "assign":
            lines.append(pad + "v%d := v%d" % (op[1], op[2]))
        elif op[0] == "void":
            lines.append(pad + "v%d := Void" % op[1])
        elif op[0] == "read":
            lines.append(pad + "v%d := v%d.n" % (op[1], op[2]))
        elif op[0] == "write":
            lines.append(pad + "v%d.n := v%d" % (op[1], op[2]))
        else:
            lines.append(pad + "then")
            _render_block(op[1], lines, indent + 1)
            lines.append(pad + "else")
            _render_block(op[2], lines, indent + 1)
            lines.append(pad + "end")


def observed_names(nv):
    return ["v%d" % i for i in range(nv)] + ["v%d.n" % i for i in range(nv)]


def concrete_alias_pairs(nv, block):
    """Union of final alias pairs over every way the choices can go.

    Real heap, real references.  A path that dereferences a void value
    dies on the spot, as the execution would, and contributes nothing.
    """
    finals = []
    counter = [0]

    def walk(ops, env, heap):
        for at, op in enumerate(ops):
            kind = op[0]
            if kind == "choice":
                rest = ops[at + 1:]
                for branch in (op[1], op[2]):
                    walk(branch + rest, list(env), {o: dict(f) for o, f in heap.items()})
                return
            if kind == "create":
                heap[counter[0]] = {"n": None}
                env[op[1]] = counter[0]
                counter[0] += 1
            elif kind == "assign":
                env[op[1]] = env[op[2]]
            elif kind == "void":
                env[op[1]] = None
            elif kind == "read":
                if env[op[2]] is None:
                    return
                env[op[1]] = heap[env[op[2]]]["n"]
            elif kind == "write":
                if env[op[1]] is None:
                    return
                heap[env[op[1]]]["n"] = env[op[2]]
        finals.append((env, heap))

    walk(block, [None] * nv, {})
    pairs = set()
    for env, heap in finals:
        vals = {}
        for i in range(nv):
            if env[i] is not None:
                vals["v%d" % i] = env[i]
                if heap[env[i]]["n"] is not None:
                    vals["v%d.n" % i] = heap[env[i]]["n"]
        names = sorted(vals)
        for x in range(len(names)):
            for y in range(x + 1, len(names)):
                if vals[names[x]] == vals[names[y]]:
                    pairs.add((names[x], names[y]))
    return pairs


def iterated_union(triples, root, body):
    """Union of the states a straight-line loop body steps through.

    Applies the body to a raw edge-triple set over and over, joining
    every state reached, until the state revisits one already seen.
    """
    attr = Label("n")

    def targets_of(G, lbl):
        return {t for (l, s, t) in G if s == root and l == lbl}

    def step(G):
        G = set(G)
        for op in body:
            lbl = Label("v%d" % op[1])
            if op[0] == "assign":
                vals = targets_of(G, Label("v%d" % op[2]))
            elif op[0] == "read":
                vals = {u for t in targets_of(G, Label("v%d" % op[2]))
                        for (l, s, u) in G if s == t and l == attr}
            else:
                vals = set()
            G = {(l, s, t) for (l, s, t) in G if not (s == root and l == lbl)}
            G |= {(lbl, root, v) for v in vals}
        return frozenset(G)

    cur = frozenset(triples)
    union, seen = set(cur), set()
    while cur not in seen:
        seen.add(cur)
        cur = step(cur)
        union |= cur
    return union


def union_alias_pairs(union, root, names):
    """Alias pairs read straight off a triple set."""
    def value(dotted):
        segs = dotted.split(".")
        cur = {t for (l, s, t) in union if s == root and l == Label(segs[0])}
        for seg in segs[1:]:
            cur = {u for t in cur for (l, s, u) in union if s == t and l == Label(seg)}
        return cur

    vals = {n: value(n) for n in names}
    out = set()
    for p in names:
        for q in names:
            if p < q and vals[p] & vals[q]:
                out.add((p, q))
    return sorted(out)
