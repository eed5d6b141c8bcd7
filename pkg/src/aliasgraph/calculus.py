"""The instruction rules: how each construct transforms an alias diagram.

The engine walks a routine body and rewrites one shared diagram in place:

  * assignment relinks the target's edges, per root, to the source's
    per-root value sets (strong update: the old edges go away);
  * creation adds an isolated node and relinks the target to it;
  * a conditional or free choice analyzes every live branch and keeps
    the union of all branch outcomes, realized by delta replay (below);
  * loops iterate the body until the state revisits one already seen,
    then keep the union of all iteration-boundary states, so the result
    covers every iteration count including zero;
  * calls bind formals to the actuals' value sets, analyze the callee
    body in a fresh activation, then scope the callee's names back out;
    qualified calls reroot the diagram into the target objects first,
    leaving primed back-pointer edges so the caller's variables stay
    expressible, and restore everything on exit;
  * dynamically bound calls become a choice over every routine version
    the receiver's static type admits.

Choice handling never copies whole diagrams.  Each branch runs against
the shared diagram while a delta frame records its net added and removed
edges; the branch is then rolled back.  Replay applies branch one in
place and, for every further branch, re-keys its delta onto fresh clones
of the roots (and of any other touched node), first copying the restored
state's edges onto those clones.  Nodes untouched by any branch stay
shared between the worlds, which is what keeps the representation small.

Termination of loop and recursion fixpoints rests on three policies:
iteration stops when the live state repeats (the step is deterministic,
so a repeat closes the orbit and the boundary union is complete), each
creation site may mint at most `cap` fresh nodes per enclosing fixpoint
(then its capped node is reused), and branch clones made inside a
fixpoint are memoized per (choice, branch, root) so re-executions reuse
them instead of minting more.

Recursive calls descend while their context is new.  A context is the
routine plus its target objects plus the actuals' value sets; when an
identical context is already on the stack (or the per-routine unroll
allowance runs out), the engine binds the actuals into that frame,
returns its accumulated result values, and marks it dirty: when the
dirty frame's own body finishes, it is re-analyzed to a fixpoint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple

from aliasgraph.diagram import AliasDiagram, Edge, Label, NodeId
from aliasgraph.lang import (
    Assign,
    CallExpr,
    CallInstr,
    Choice,
    ClassTable,
    Compound,
    CondEq,
    CondNeq,
    CondNot,
    Create,
    Diagnostic,
    Guard,
    If,
    Loop,
    Program,
    RoutineDecl,
    build_expr_universe,
    desugar_conditional,
)

# three-valued condition verdicts
TRUE = "definitely-true"
FALSE = "definitely-false"
UNKNOWN = "unknown"


@dataclass
class AnalysisConfig:
    cap: int = 1  # creation allowance per site per enclosing fixpoint
    max_iters: int = 1000  # fixpoint iteration ceiling
    max_path_len: int = 6  # query-time path enumeration bound
    choice_mode: str = "replay"  # "replay" | "clone" (naive reference mode)
    unroll_limit: int = 4  # distinct-context recursion depth per routine
    record_points: bool = True

    def __post_init__(self):
        assert self.cap >= 1, "the creation cap must be at least 1"
        assert self.max_iters >= 1
        assert self.choice_mode in ("replay", "clone")


class AnalysisError(Exception):
    """Raised for unusable inputs (unknown entry, unresolved program)."""


@dataclass
class _DeltaFrame:
    """Net edge effects of one choice branch, with cancellation."""

    added: Set[Edge] = field(default_factory=set)
    removed: Set[Edge] = field(default_factory=set)
    roots_added: Set[NodeId] = field(default_factory=set)

    def record_add(self, e):
        if e in self.removed:
            self.removed.discard(e)
        else:
            self.added.add(e)

    def record_remove(self, e):
        if e in self.added:
            self.added.discard(e)
        else:
            self.removed.add(e)


@dataclass
class _FixpointScope:
    """Per-fixpoint bookkeeping: the union of iteration-boundary
    states, creation counters, and the world registry that keeps
    re-executed choices stable."""

    union_edges: Set[Edge] = field(default_factory=set)
    counters: Dict[int, int] = field(default_factory=dict)
    capped: Dict[int, NodeId] = field(default_factory=dict)
    clone_memo: Dict[Tuple[NodeId, FrozenSet[Tuple[int, int]]], NodeId] = field(default_factory=dict)
    iterations: int = 0


@dataclass
class _Frame:
    """One activation on the analysis call stack."""

    version: RoutineDecl
    context_key: tuple
    act: int
    targets: FrozenSet[NodeId]
    scope: Dict[str, Label]
    actual_paths: List[Optional[Tuple[Label, ...]]]
    acc: Dict[NodeId, Set[NodeId]] = field(default_factory=dict)
    dirty: bool = False


class Engine:
    """Analyzes one entry routine over one shared diagram."""

    def __init__(self, program: Program, config: Optional[AnalysisConfig] = None):
        self.program = program
        self.config = config or AnalysisConfig()
        self.table = ClassTable(program)
        self.diagram = AliasDiagram()
        self.universe = build_expr_universe(program)
        self.diagnostics: List[Diagnostic] = []
        self._diag_seen = set()
        self.snapshots: Dict[str, Tuple[AliasDiagram, Dict[str, Label]]] = {}
        self.snapshot_order: List[str] = []
        self.delta_stack: List[_DeltaFrame] = []
        self.fix_stack: List[_FixpointScope] = []
        self.call_stack: List[_Frame] = []
        self.lineage: Dict[NodeId, Tuple[NodeId, FrozenSet[Tuple[int, int]]]] = {}
        self.closed_acts: Set[int] = set()
        self._next_act = 0
        self._desugared: Dict[int, Choice] = {}
        self._var_types: Dict[int, Dict[str, str]] = {}
        self.entry_name: Optional[str] = None
        self.elapsed: float = 0.0

    # ------------------------------------------------------------------
    # diagnostics
    # ------------------------------------------------------------------

    def _diag(self, severity, message, pos=None):
        key = (severity, message, pos)
        if key in self._diag_seen:
            return
        self._diag_seen.add(key)
        self.diagnostics.append(Diagnostic(severity, message, pos, self.program.source))

    def has_errors(self):
        return any(d.severity == "error" for d in self.diagnostics)

    # ------------------------------------------------------------------
    # the single mutation funnel: every semantic edge change goes through
    # here so delta frames stay trustworthy
    # ------------------------------------------------------------------

    def _add(self, label, s, t):
        if self.diagram.add_edge(label, s, t) and self.delta_stack:
            self.delta_stack[-1].record_add((label, s, t))

    def _remove(self, label, s, t):
        if self.diagram.remove_edge(label, s, t) and self.delta_stack:
            self.delta_stack[-1].record_remove((label, s, t))

    def _remove_all(self, label, source):
        for t in sorted(self.diagram.successors(source, label)):
            self._remove(label, source, t)

    # ------------------------------------------------------------------
    # name resolution at analysis time
    # ------------------------------------------------------------------

    def _types_for(self, routine):
        key = id(routine)
        if key not in self._var_types:
            types = {n: t for n, t in routine.formals}
            types.update(routine.locals)
            if routine.result_type is not None:
                types["Result"] = routine.result_type
            self._var_types[key] = types
        return self._var_types[key]

    def _path_labels(self, names, frame):
        if not names:
            return ()
        head = frame.scope.get(names[0], Label(names[0]))
        return (head,) + tuple(Label(s) for s in names[1:])

    def _static_type(self, names, frame):
        routine = frame.version
        types = self._types_for(routine)
        if not names:
            return routine.owner
        t = types.get(names[0])
        if t is None and routine.owner is not None:
            t = self.table.find_attr(routine.owner, names[0])
        for seg in names[1:]:
            if t is None or t not in self.program.classes:
                return None
            t = self.table.find_attr(t, seg)
        return t

    # ------------------------------------------------------------------
    # conditions (three-valued, over merged value sets)
    # ------------------------------------------------------------------

    def eval_cond(self, cond, frame):
        if isinstance(cond, CondNot):
            inner = self.eval_cond(cond.inner, frame)
            if inner == TRUE:
                return FALSE
            if inner == FALSE:
                return TRUE
            return UNKNOWN
        left, right = cond.left, cond.right
        if isinstance(cond, CondEq):
            verdict = self._eval_eq(left, right, frame)
        else:
            assert isinstance(cond, CondNeq)
            verdict = self._eval_eq(left, right, frame)
            if verdict == TRUE:
                return FALSE
            if verdict == FALSE:
                return TRUE
            return UNKNOWN
        return verdict

    def _eval_eq(self, left, right, frame):
        if left == right:
            # same expression, including Void = Void
            return TRUE
        if left is None or right is None:
            path = right if left is None else left
            vals = self.diagram.value_set(self._path_labels(path, frame))
            return TRUE if not vals else UNKNOWN
        lv = self.diagram.value_set(self._path_labels(left, frame))
        rv = self.diagram.value_set(self._path_labels(right, frame))
        if lv and rv and not (lv & rv):
            # over-approximated value sets that cannot meet prove the
            # objects differ; emptiness on either side proves nothing
            # definite about equality, so stay Unknown
            return FALSE
        return UNKNOWN

    # ------------------------------------------------------------------
    # instruction dispatch
    # ------------------------------------------------------------------

    def exec_instr(self, instr, frame):
        if isinstance(instr, Assign):
            self.apply_assign(instr, frame)
        elif isinstance(instr, Create):
            self.apply_create(instr, frame)
        elif isinstance(instr, Compound):
            self.apply_compound(instr, frame)
        elif isinstance(instr, If):
            choice = self._desugared.get(id(instr))
            if choice is None:
                choice = desugar_conditional(instr)
                self._desugared[id(instr)] = choice
            self.apply_choice(choice, frame)
        elif isinstance(instr, Choice):
            self.apply_choice(instr, frame)
        elif isinstance(instr, Guard):
            self.apply_guard(instr, frame)
        elif isinstance(instr, Loop):
            self.apply_loop(instr, frame)
        elif isinstance(instr, CallInstr):
            self._run_call(instr.call, frame, assign_target=None)
        else:
            raise AssertionError("unhandled instruction %r" % (instr,))
        if instr.point is not None and self.config.record_points:
            self._record_point(instr.point, frame)

    def apply_compound(self, instr, frame):
        for sub in instr.instrs:
            self.exec_instr(sub, frame)

    def _record_point(self, point, frame):
        if point not in self.snapshots:
            self.snapshot_order.append(point)
        self.snapshots[point] = (self.diagram.snapshot(), dict(frame.scope))

    # ------------------------------------------------------------------
    # assignment and creation
    # ------------------------------------------------------------------

    def apply_assign(self, instr, frame):
        if isinstance(instr.source, CallExpr):
            self._run_call(instr.source, frame, assign_target=instr.target, pos=instr.pos)
            return
        if instr.source is None:
            per_root = {r: frozenset() for r in self.diagram.roots}
        else:
            src = self._path_labels(instr.source, frame)
            self._check_void_prefix(instr.source, src, instr.pos)
            per_root = self.diagram.value_sets_by_root(src)
        self._relink_target(instr.target, per_root, frame, instr.pos)

    def _check_void_prefix(self, names, labels, pos):
        # a strict prefix with an empty value set means the tail
        # dereferences a definitely void reference
        for i in range(1, len(labels)):
            if not self.diagram.value_set(labels[:i]):
                self._diag(
                    "warning",
                    "'%s' is definitely void here; '%s' has no value" % (".".join(names[:i]), ".".join(names)),
                    pos,
                )
                return

    def _relink_target(self, target_names, per_root_vals, frame, pos):
        labels = self._path_labels(target_names, frame)
        if len(labels) == 1:
            lbl = labels[0]
            for r in sorted(self.diagram.roots):
                self._remove_all(lbl, r)
                for v in sorted(per_root_vals.get(r, ())):
                    self._add(lbl, r, v)
            return
        # x.a := s  --  strong update at every object x may denote.
        # Roots can disagree on both halves of that sentence: which
        # objects x denotes, and what s evaluates to.  A shared owner
        # node must not be overwritten with one world's values while
        # another world still reads the old ones through it, so roots
        # are grouped by update intent and each group writes through
        # private copies of whatever part of its view is also visible
        # elsewhere (copy on write).  All copying happens against the
        # pre-update graph; the overwrites land afterwards.  Where a
        # private copy cannot be made (the owner is another world's
        # root, or we are iterating a fixpoint and fresh copies would
        # keep the state from ever repeating), the contested owner is
        # updated weakly instead: new values join the old ones, and
        # the removals that make the update strong are skipped.
        prefix, attr = labels[:-1], labels[-1]
        owners_by_root = self.diagram.value_sets_by_root(prefix)
        if not any(owners_by_root.values()):
            self._diag(
                "warning",
                "assignment target '%s' is definitely void; no effect" % ".".join(target_names),
                pos,
            )
            return
        classes: Dict[tuple, List[NodeId]] = {}
        for r in sorted(self.diagram.roots):
            intent = (
                frozenset(owners_by_root.get(r, ())),
                frozenset(per_root_vals.get(r, ())),
            )
            classes.setdefault(intent, []).append(r)
        updating = sorted(
            ((owners, vals, roots) for (owners, vals), roots in classes.items() if owners),
            key=lambda c: c[2],
        )
        plans = []
        for owners, vals, class_roots in updating:
            copies, weak = self._privatize(owners, class_roots)
            plans.append((owners, vals, copies, weak))
        for owners, vals, copies, weak in plans:
            for o in sorted(owners):
                mine = copies.get(o, o)
                if o not in weak:
                    self._remove_all(attr, mine)
                for v in sorted(vals):
                    self._add(attr, mine, copies.get(v, v))

    def _reach(self, start):
        seen = {start}
        work = [start]
        while work:
            for _, t in self.diagram.out_edges(work.pop()):
                if t not in seen:
                    seen.add(t)
                    work.append(t)
        return seen

    def _privatize(self, owners, class_roots):
        """Give one group of roots private copies of the shared part of
        the region it is about to overwrite.

        Returns (copies, weak): the original-to-copy map, and the owners
        that stay shared and therefore only tolerate a weak update.
        Both are empty when no other root sees the owners, so the whole
        update can land in place.

        The copied region is the contested owners' ancestor cone inside
        the group's own reach: every node on a path from a group root to
        such an owner.  The cone is closed under in-edges taken within
        that reach, so moving the roots' and cone-internal edges onto
        the copies carries the whole region over in one pass; nothing
        outside the cone can point into it from the group's side, and
        every other root keeps the originals untouched.

        No copies are made while a fixpoint is running: a fresh copy per
        pass would keep the state from ever repeating, so the iteration
        could not close.  Contested owners are then all reported weak;
        edge growth is monotone over a fixed node supply and the
        iteration still terminates.
        """
        reach_others = set()
        for r in sorted(self.diagram.roots):
            if r not in class_roots:
                reach_others |= self._reach(r)
        contested = {o for o in owners if o in reach_others}
        if not contested:
            return {}, frozenset()
        forkable = {o for o in contested if o not in self.diagram.roots}
        if self.fix_stack or not forkable:
            return {}, frozenset(contested)
        reach_mine = set()
        for r in sorted(class_roots):
            reach_mine |= self._reach(r)
        cone = set(forkable)
        grew = True
        while grew:
            grew = False
            for (l, s, t) in self.diagram.edge_set():
                if t in cone and s in reach_mine and s not in cone:
                    cone.add(s)
                    grew = True
        shared = {n for n in cone if n in reach_others and n not in self.diagram.roots}
        copies = {}
        for orig in sorted(shared):
            copies[orig] = self.diagram.fresh_node()
        for orig in sorted(shared):
            for l, t in sorted(self.diagram.out_edges(orig)):
                self._add(l, copies[orig], copies.get(t, t))
        # entry edges: a source inside the group's reach that feeds a
        # copied node is, by cone closure, itself in the cone; if it was
        # not copied it is either a group root or private to the group,
        # so rerouting it in place is invisible to every other world.
        # Roots of other worlds are never rerouted even when reachable.
        roots_outside = self.diagram.roots - set(class_roots)
        for (l, s, t) in sorted(self.diagram.edge_set()):
            if t in copies and s in reach_mine and s not in copies and s not in roots_outside:
                self._remove(l, s, t)
                self._add(l, s, copies[t])
        return copies, frozenset(contested - forkable)

    def apply_create(self, instr, frame):
        node = self._creation_node(id(instr))
        per_root = {r: frozenset({node}) for r in self.diagram.roots}
        self._relink_target((instr.target,), per_root, frame, instr.pos)

    def _creation_node(self, site):
        if not self.fix_stack:
            return self.diagram.include()
        for scope in self.fix_stack:
            scope.counters[site] = scope.counters.get(site, 0) + 1
        if any(scope.counters[site] > self.config.cap for scope in self.fix_stack):
            # over allowance: reuse the site's capped node so iteration
            # cannot mint fresh objects forever
            for scope in reversed(self.fix_stack):
                if scope.counters[site] > self.config.cap and site in scope.capped:
                    return scope.capped[site]
            for scope in reversed(self.fix_stack):
                if site in scope.capped:
                    return scope.capped[site]
            raise AssertionError("creation counter exceeded with no capped node")
        node = self.diagram.include()
        for scope in self.fix_stack:
            if scope.counters[site] == self.config.cap:
                scope.capped[site] = node
        return node

    # ------------------------------------------------------------------
    # guards and choices
    # ------------------------------------------------------------------

    def apply_guard(self, instr, frame):
        if self.eval_cond(instr.cond, frame) == FALSE:
            return
        self.apply_compound(instr.body, frame)

    def apply_choice(self, instr, frame):
        live: List[Callable[[], None]] = []
        for branch in instr.branches:
            if isinstance(branch, Guard) and self.eval_cond(branch.cond, frame) == FALSE:
                continue
            live.append((lambda b=branch: self.exec_instr(b, frame)))
        self._run_branches(id(instr), live, instr.pos)

    def _run_branches(self, site, live, pos):
        if not live:
            self._diag("note", "all branches are definitely skipped; state unchanged", pos)
            return
        if len(live) == 1:
            live[0]()
            return
        if self.config.choice_mode == "clone":
            self._branches_by_cloning(live)
        else:
            self._branches_by_replay(site, live)

    # -- naive reference mode: fork a full copy per branch and union.
    # Counters are synced before cloning so the united worlds cannot
    # collide on node ids.  Kept simple on purpose: it is the oracle the
    # replay implementation is tested against, and it ignores the memo
    # machinery, so it is only safe outside fixpoints.

    def _branches_by_cloning(self, live):
        base = self.diagram
        worlds = []
        for i, thunk in enumerate(live):
            self.diagram = base.snapshot()
            thunk()
            worlds.append(self.diagram)
        merged = worlds[0]
        cursor = max(w._next_id for w in worlds)
        for w in worlds[1:]:
            w._next_id = cursor
            renamed, _ = w.clone()
            cursor = renamed._next_id
            merged._next_id = cursor
            merged.union(renamed)
        self.diagram = merged

    # -- delta replay

    def _branches_by_replay(self, site, live):
        pre_roots = sorted(self.diagram.roots)
        watermark = self.diagram._next_id
        frames: List[_DeltaFrame] = []
        for thunk in live:
            frame = _DeltaFrame()
            self.delta_stack.append(frame)
            thunk()
            self.delta_stack.pop()
            # roots introduced but later dropped again (a rerooting call
            # returned) are not part of the branch's net effect
            frame.roots_added &= self.diagram.roots
            # roll back, off the record: the next branch starts from the
            # same state, and replay below re-applies the net effects
            for (l, s, t) in frame.added:
                self.diagram.remove_edge(l, s, t)
            for (l, s, t) in frame.removed:
                self.diagram.add_edge(l, s, t)
            for r in frame.roots_added:
                self.diagram.roots.discard(r)
            assert self.diagram.roots == set(pre_roots), "a branch left the root set unbalanced"
            frames.append(frame)

        in_fixpoint = bool(self.fix_stack)
        touched_first = {s for (_, s, _) in frames[0].added | frames[0].removed}
        mappings: List[Dict[NodeId, NodeId]] = []
        for b in range(1, len(frames)):
            frame = frames[b]
            mapping: Dict[NodeId, NodeId] = {}
            touched = {s for (_, s, _) in frame.added | frame.removed}
            clone_sources = set(pre_roots) | {
                s for s in (touched | touched_first) if s < watermark and s not in pre_roots
            }
            for orig in sorted(clone_sources):
                mapping[orig] = self._branch_clone(site, b, orig, in_fixpoint, is_root=orig in self.diagram.roots)
            mappings.append(mapping)

        # copy the restored state onto the clones before any branch
        # effect lands; clone-to-clone references stay inside the world
        for mapping in mappings:
            for orig in sorted(mapping):
                copy = mapping[orig]
                if copy == orig:
                    continue
                for l, t in sorted(self.diagram.out_edges(orig)):
                    self._add(l, copy, mapping.get(t, t))
                # unmapped parents must reach this world's version too,
                # otherwise effects behind a shared node would be lost
                for (l, s, t) in sorted(self.diagram.edge_set()):
                    if t == orig and s not in mapping:
                        self._add(l, s, copy)

        # branch one applies in place
        for (l, s, t) in sorted(frames[0].added):
            self._add(l, s, t)
        for (l, s, t) in sorted(frames[0].removed):
            self._remove(l, s, t)
        for r in sorted(frames[0].roots_added):
            self._add_root(r)
        # the rest apply through their mappings
        for b in range(1, len(frames)):
            frame, mapping = frames[b], mappings[b - 1]
            for (l, s, t) in sorted(frame.added):
                self._add(l, mapping.get(s, s), mapping.get(t, t))
            for (l, s, t) in sorted(frame.removed):
                self._remove(l, mapping.get(s, s), mapping.get(t, t))
            for r in sorted(frame.roots_added):
                self._add_root(mapping.get(r, r))

    def _branch_clone(self, site, b, orig, in_fixpoint, is_root):
        if not in_fixpoint:
            clone = self.diagram.fresh_node()
            if is_root:
                self._add_root(clone)
            return clone
        # Inside a fixpoint a re-executed choice must not keep growing
        # the diagram, so clones carry a world identity: the node their
        # chain started from plus one (site, branch) entry per choice
        # passed through, the newest entry per site winning.  Forking a
        # node at a site already on its record lands on an identity that
        # exists, so the fork reuses that world's node instead of
        # chaining a fresh one (two choices forking each other's clones
        # would otherwise alternate new worlds every pass).  The registry
        # is consulted across every enclosing fixpoint: an inner loop's
        # scope is fresh on each outer iteration, so the outer scope
        # must remember the worlds too.
        base, anc = self.lineage.get(orig, (orig, frozenset()))
        key = (base, frozenset(p for p in anc if p[0] != site) | {(site, b)})
        if key == (base, anc):
            return orig
        for scope in reversed(self.fix_stack):
            if key in scope.clone_memo:
                clone = scope.clone_memo[key]
                if is_root:
                    self._add_root(clone)
                return clone
        clone = self.diagram.fresh_node()
        self.lineage[clone] = key
        for scope in self.fix_stack:
            scope.clone_memo[key] = clone
        if is_root:
            self._add_root(clone)
        return clone

    def _add_root(self, node):
        self.diagram.ensure_node(node)
        if node not in self.diagram.roots:
            self.diagram.roots.add(node)
            if self.delta_stack:
                self.delta_stack[-1].roots_added.add(node)

    # ------------------------------------------------------------------
    # loops
    # ------------------------------------------------------------------

    def apply_loop(self, instr, frame):
        scope = _FixpointScope()
        self.fix_stack.append(scope)
        # Iterate until the live state revisits one seen before.  The body
        # is a deterministic step, so a revisit closes the orbit: every
        # further iteration replays edges the union already has.  (A plain
        # "unchanged since last pass" check can quit one pass early when
        # the body oscillates between states whose union looks stable.)
        scope.union_edges |= self.diagram.edge_set()
        seen = {self._state_key()}
        while True:
            scope.iterations += 1
            if scope.iterations > self.config.max_iters:
                self._diag(
                    "error",
                    "loop fixpoint exceeded %d iterations; result may be partial" % self.config.max_iters,
                    instr.pos,
                )
                break
            self.apply_compound(instr.body, frame)
            scope.union_edges |= self.diagram.edge_set()
            key = self._state_key()
            if key in seen:
                break
            seen.add(key)
        self.fix_stack.pop()
        self._restore_union(scope)

    def _state_key(self):
        # Node identity matters: a fresh creation changes the key for
        # good, so orbit detection can only trigger once per-site caps
        # have made the step stationary.
        return (
            self.diagram.edge_set(),
            frozenset(self.diagram.nodes),
            frozenset(self.diagram.roots),
        )

    def _restore_union(self, scope):
        # the result is the union over all iteration counts, so edges an
        # iteration-boundary state had come back.  Edges that only lived
        # mid-pass do not: no iteration count ever exhibits them.  Names
        # of activations that closed meanwhile stay out (their scopes no
        # longer exist), as do call-return markers of finished calls.
        missing = scope.union_edges - self.diagram.edge_set()
        for (l, s, t) in sorted(missing):
            if l.tag in self.closed_acts or l.prime:
                continue
            self._add(l, s, t)

    # ------------------------------------------------------------------
    # calls
    # ------------------------------------------------------------------

    def _run_call(self, call, frame, assign_target, pos=None):
        pos = pos or call.pos
        if call.target is None:
            version = None
            if frame.version.owner is not None:
                version = self.table.find_routine(frame.version.owner, call.name)
            if version is None:
                version = self.program.routines.get(call.name)
            if version is None:
                self._diag("error", "unknown routine %r" % call.name, pos)
                return
            actual_paths = self._caller_actuals(call, frame, pos)
            result = self._call_on_targets(version, actual_paths, frozenset(self.diagram.roots), pos)
            if assign_target is not None:
                self._relink_target(assign_target, result, frame, pos)
            return
        self._qualified_call(call, frame, assign_target, pos)

    def _caller_actuals(self, call, frame, pos):
        paths = []
        for a in call.actuals:
            if a is None:
                paths.append(None)
            else:
                labels = self._path_labels(a, frame)
                self._check_void_prefix(a, labels, pos)
                paths.append(labels)
        return paths

    def _qualified_call(self, call, frame, assign_target, pos):
        static_t = self._static_type(call.target, frame)
        versions = self.table.dispatch_versions(static_t, call.name) if static_t else []
        if not versions:
            self._diag("error", "cannot resolve call %r on %r" % (call.name, ".".join(call.target)), pos)
            return
        if len(versions) == 1:
            self._qualified_one(versions[0], call, frame, assign_target, pos)
            return
        # dynamic binding: one branch per version the receiver may carry
        thunks = [
            (lambda v=v: self._qualified_one(v, call, frame, assign_target, pos))
            for v in versions
        ]
        self._run_branches(id(call), thunks, pos)

    def _qualified_one(self, version, call, frame, assign_target, pos):
        target_labels = self._path_labels(call.target, frame)
        self._check_void_prefix(call.target, target_labels, pos)
        owners_by_root = self.diagram.value_sets_by_root(target_labels)
        callee_roots = set()
        for owners in owners_by_root.values():
            callee_roots |= owners
        if not callee_roots:
            self._diag("error", "call target '%s' is definitely void" % ".".join(call.target), pos)
            return
        actual_paths = self._caller_actuals(call, frame, pos)
        # transpose the caller's context into the callee's: every target
        # object gets a primed back-pointer to the current roots, and the
        # actuals are re-expressed through it
        back = Label(".".join(call.target), prime=len(self.call_stack))
        for o in sorted(callee_roots):
            for r in sorted(self.diagram.roots):
                self._add(back, o, r)
        saved_roots = self.diagram.reroot(callee_roots)
        rewritten = [None if p is None else (back,) + p for p in actual_paths]
        result = self._call_on_targets(version, rewritten, frozenset(callee_roots), pos)
        self.diagram.reroot(saved_roots)
        # back-pointers may have been copied onto branch clones inside
        # the callee, so sweep by label rather than by target object
        for (l, s, t) in sorted(e for e in self.diagram.edge_set() if e[0] == back):
            self._remove(l, s, t)
        if assign_target is not None:
            # re-read the target's owners: choices inside the callee may
            # have grown them with branch clones carrying result values
            owners_post = self.diagram.value_sets_by_root(target_labels)
            caller_result = {}
            for r in sorted(self.diagram.roots):
                vals = set()
                for o in owners_post.get(r, frozenset()):
                    vals |= result.get(o, set())
                caller_result[r] = frozenset(vals)
            self._relink_target(assign_target, caller_result, frame, pos)

    def _call_on_targets(self, version, actual_paths, targets, pos):
        """Analyze one routine version against the current roots.

        Returns the per-root result value sets (empty for procedures).
        """
        actuals_key = tuple(
            frozenset(self.diagram.value_set(p)) if p is not None else None
            for p in actual_paths
        )
        context_key = (id(version), targets, actuals_key)

        for fr in reversed(self.call_stack):
            if fr.context_key == context_key:
                return self._recursive_cutoff(fr, actual_paths)
        same_routine = [fr for fr in self.call_stack if fr.version is version]
        if len(same_routine) >= self.config.unroll_limit:
            return self._recursive_cutoff(same_routine[-1], actual_paths)

        self._next_act += 1
        act = self._next_act
        scope = {name: Label(name, act) for name in version.formal_names()}
        scope.update({name: Label(name, act) for name in version.locals})
        if version.is_function():
            scope["Result"] = Label("Result", act)
        new_frame = _Frame(
            version=version,
            context_key=context_key,
            act=act,
            targets=targets,
            scope=scope,
            actual_paths=list(actual_paths),
        )
        self.call_stack.append(new_frame)
        self._bind_formals(new_frame)
        self.apply_compound(version.body, new_frame)
        self._accumulate_result(new_frame)
        if new_frame.dirty:
            self._frame_fixpoint(new_frame)
        result = {r: frozenset(vs) for r, vs in new_frame.acc.items()}
        self._unbind_activation(act)
        self.call_stack.pop()
        self.closed_acts.add(act)
        return result

    def _recursive_cutoff(self, fr, actual_paths):
        # an already-active context absorbs the call: feed it the new
        # actuals (additively) and answer with what it has produced so far
        fr.dirty = True
        self._bind_formals(fr, frame_override_paths=actual_paths)
        return {r: frozenset(fr.acc.get(r, ())) for r in self.diagram.roots}

    def _bind_formals(self, fr, frame_override_paths=None):
        paths = fr.actual_paths if frame_override_paths is None else frame_override_paths
        staged = []
        for (fname, _), p in zip(fr.version.formals, paths):
            if p is None:
                continue
            flabel = Label(fname, fr.act)
            for r in sorted(self.diagram.roots):
                for v in sorted(self.diagram.value_set(p, start=(r,))):
                    staged.append((flabel, r, v))
        for e in staged:
            self._add(*e)

    def _accumulate_result(self, fr):
        if not fr.version.is_function():
            return
        rl = fr.scope["Result"]
        for r in self.diagram.roots:
            fr.acc.setdefault(r, set()).update(self.diagram.value_set((rl,), start=(r,)))

    def _frame_fixpoint(self, fr):
        scope = _FixpointScope()
        self.fix_stack.append(scope)
        scope.union_edges |= self.diagram.edge_set()
        seen = {self._state_key()}
        while True:
            scope.iterations += 1
            if scope.iterations > self.config.max_iters:
                self._diag(
                    "error",
                    "recursion fixpoint for %r exceeded %d iterations" % (fr.version.name, self.config.max_iters),
                    fr.version.pos,
                )
                break
            self._bind_formals(fr)
            self.apply_compound(fr.version.body, fr)
            self._accumulate_result(fr)
            scope.union_edges |= self.diagram.edge_set()
            key = self._state_key()
            if key in seen:
                break
            seen.add(key)
        self.fix_stack.pop()
        self._restore_union(scope)

    def _unbind_activation(self, act):
        doomed = [e for e in self.diagram.edge_set() if e[0].tag == act]
        for (l, s, t) in sorted(doomed):
            self._remove(l, s, t)

    # ------------------------------------------------------------------
    # entry
    # ------------------------------------------------------------------

    def _find_entry(self, name):
        if "." in name:
            cname, rname = name.split(".", 1)
            if cname not in self.program.classes:
                raise AnalysisError("unknown class %r in entry %r" % (cname, name))
            version = self.table.find_routine(cname, rname)
            if version is None:
                raise AnalysisError("class %r has no routine %r" % (cname, rname))
            return version
        version = self.program.routines.get(name)
        if version is None:
            for c in sorted(self.program.classes):
                if name in self.program.classes[c].routines:
                    raise AnalysisError(
                        "routine %r belongs to class %r; use --entry %s.%s" % (name, c, c, name)
                    )
            raise AnalysisError("unknown entry routine %r" % name)
        return version

    def analyze(self, entry_name):
        """Run the analysis from the named entry routine."""
        start = time.perf_counter()
        version = self._find_entry(entry_name)
        self.entry_name = entry_name
        root = self.diagram.add_root()
        scope = {name: Label(name, 0) for name in version.formal_names()}
        scope.update({name: Label(name, 0) for name in version.locals})
        if version.is_function():
            scope["Result"] = Label("Result", 0)
        frame = _Frame(
            version=version,
            context_key=(id(version), frozenset({root}), ()),
            act=0,
            targets=frozenset({root}),
            scope=scope,
            actual_paths=[],
        )
        if version.formals:
            self._diag(
                "warning",
                "entry routine %r has formals; they start unbound" % version.name,
                version.pos,
            )
        self.call_stack.append(frame)
        self.apply_compound(version.body, frame)
        # the entry scope deliberately stays bound: final reports speak
        # about its locals
        self.call_stack.pop()
        self.entry_frame = frame
        self.elapsed = time.perf_counter() - start
        return self

    def report_scope(self):
        """Name-to-label view for queries against the final diagram."""
        return dict(self.entry_frame.scope) if hasattr(self, "entry_frame") else {}


def analyze_program(program, entry, config=None):
    """Convenience wrapper: build an engine and run it."""
    engine = Engine(program, config)
    engine.analyze(entry)
    return engine
