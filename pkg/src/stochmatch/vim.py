"""Vertex-independent matching on realized crucial edges.

The construction is recursive: at each level it draws fresh realizations of
the crucial graph into profile slots, recursively matches each slot,
enumerates augmenting hyperwalks whose endpoints are still unsaturated,
selects a vertex-disjoint subset of them with a round-limited randomized
independent set, and applies them.  The returned matching is slot 0's.

Saturation compares each vertex's matched frequency at the previous level
(a memoized Monte Carlo table, so the whole level shares one estimate)
against its crucial matched mass minus a fixed slack.

Every random draw is addressed by (recursion path, object id), and each
address carries the set of vertices it concerns.  That makes the output at a
vertex a measurable function of a bounded ball around it in the crucial
graph, which ``dependency_radius`` verifies empirically by resampling all
randomness outside a ball and checking the vertex's output never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .decomposition import EdgeClassification
from .errors import ConflictGraphCapError, ParameterOverflowError
from .graph import Matching, Realization
from .mis import luby_rounds, mis_round_budget
from .randomness import keyed_uniform

__all__ = [
    "VimParams",
    "Profile",
    "Hyperwalk",
    "is_augmenting",
    "enumerate_augmenting_hyperwalks",
    "build_conflict_graph",
    "apply_hyperwalks",
    "VimEngine",
    "find_matching",
    "estimate_gamma",
    "dependency_radius",
    "locality_bound",
]


@dataclass(frozen=True)
class VimParams:
    """Knobs of the recursive construction.

    Desk-scale defaults keep hyperwalk enumeration tractable; ``paper`` builds
    the faithful constants and refuses to run past the guards unless forced.
    """

    epsilon: float
    alpha: int = 7
    depth: int = 3
    walk_cap: int = 3
    gamma_samples: int = 400
    saturation_slack: float | None = None
    gamma_ci_factor: float = 3.0
    mis_round_factor: float = 2.0
    conflict_cap: int = 100_000

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.alpha < 0 or self.depth < 0 or self.walk_cap < 1 or self.gamma_samples < 1:
            raise ValueError("alpha, depth >= 0; walk_cap, gamma_samples >= 1")

    @property
    def slack(self) -> float:
        if self.saturation_slack is not None:
            return self.saturation_slack
        return 2.0 * self.epsilon * self.epsilon

    @classmethod
    def paper(cls, epsilon: float, *, force: bool = False, alpha_cap: int = 10**4,
              depth_cap: int = 10**4, work_bits_cap: float = 24.0,
              **overrides) -> "VimParams":
        """Paper-scale alpha = 1/eps^7 - 1, depth = 1/eps^9, walk cap < 2/eps.

        The recursion evaluates about (alpha + 1)^depth nodes, so the guard
        checks that log2 of the tree size stays under ``work_bits_cap`` too.
        """
        alpha = round(epsilon**-7) - 1
        depth = math.ceil(epsilon**-9)
        walk_cap = max(1, math.ceil(2.0 / epsilon) - 1)
        work_bits = depth * math.log2(alpha + 1) if alpha >= 0 else 0.0
        if not force and (alpha > alpha_cap or depth > depth_cap
                          or work_bits > work_bits_cap):
            raise ParameterOverflowError(
                f"paper-scale constants for epsilon={epsilon}: alpha={alpha}, "
                f"depth={depth}, walk_cap={walk_cap}, recursion tree about "
                f"2^{work_bits:.0f} nodes; guards are alpha_cap={alpha_cap}, "
                f"depth_cap={depth_cap}, work_bits_cap={work_bits_cap}; pass "
                f"force=True or use desk-scale parameters"
            )
        return cls(epsilon=epsilon, alpha=alpha, depth=depth, walk_cap=walk_cap, **overrides)


@dataclass(frozen=True)
class Hyperwalk:
    """A walk in the crucial graph whose steps carry profile-slot labels."""

    steps: tuple[tuple[int, int], ...]
    vertices: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) != len(self.steps) + 1:
            raise ValueError("a walk on k edges visits k + 1 vertices")
        if not self.steps:
            raise ValueError("hyperwalks have size at least 1")

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.vertices[0], self.vertices[-1]

    def rand_key(self) -> tuple:
        flat: list[int] = [self.vertices[0]]
        for e, s in self.steps:
            flat.extend((e, s))
        return tuple(flat)


def _canonical_walk(steps, vertices) -> Hyperwalk:
    """A walk and its reversal are the same object; keep the smaller form."""
    fwd = (tuple(steps), tuple(vertices))
    rev = (tuple(reversed(steps)), tuple(reversed(vertices)))
    return Hyperwalk(*min(fwd, rev))


class Profile:
    """Pairs (realized slot, matching of that slot) over the crucial graph."""

    __slots__ = ("cls", "realized", "matchings", "cover")

    def __init__(self, classification: EdgeClassification, realized, matchings):
        if len(realized) != len(matchings):
            raise ValueError("one matching per realized slot")
        g = classification.graph
        self.cls = classification
        self.realized = [frozenset(r) for r in realized]
        self.matchings = [frozenset(m) for m in matchings]
        self.cover: list[dict[int, int]] = []
        for i, (real, mat) in enumerate(zip(self.realized, self.matchings)):
            if not mat <= real:
                raise AssertionError(f"slot {i}: matching contains unrealized edges")
            cov: dict[int, int] = {}
            for e in sorted(mat):
                u, v = g.endpoints(e)
                if u in cov or v in cov:
                    raise AssertionError(f"slot {i}: edges are not a matching")
                cov[u] = e
                cov[v] = e
            self.cover.append(cov)

    @property
    def n_slots(self) -> int:
        return len(self.realized)

    def d(self, v: int) -> int:
        return sum(1 for cov in self.cover if v in cov)

    def sum_d(self) -> int:
        return sum(len(cov) for cov in self.cover)


def is_augmenting(profile: Profile, walk: Hyperwalk) -> bool:
    """Whether applying the walk keeps every slot a matching, preserves the
    slot-membership count of interior vertices, and raises it by exactly one
    at both (distinct) endpoints."""
    v0, vk = walk.endpoints
    if v0 == vk:
        # Coincident endpoints cannot each gain one slot; ruling these out
        # also keeps the per-level counting identity exact.
        return False
    adds: dict[int, set[int]] = {}
    rems: dict[int, set[int]] = {}
    for pos, (e, s) in enumerate(walk.steps, start=1):
        if not (0 <= s < profile.n_slots):
            return False
        target = adds if pos % 2 == 1 else rems
        target.setdefault(s, set()).add(e)
    g = profile.cls.graph
    new_cover: dict[int, dict[int, int]] = {}
    for s in set(adds) | set(rems):
        edges = (profile.matchings[s] | adds.get(s, set())) - rems.get(s, set())
        if not edges <= profile.realized[s]:
            return False
        cov: dict[int, int] = {}
        for e in edges:
            u, v = g.endpoints(e)
            if u in cov or v in cov:
                return False
            cov[u] = e
            cov[v] = e
        new_cover[s] = cov
    for v in set(walk.vertices):
        before = profile.d(v)
        after = 0
        for s in range(profile.n_slots):
            cov = new_cover.get(s)
            if cov is None:
                cov = profile.cover[s]
            if v in cov:
                after += 1
        expected = before + 1 if v in (v0, vk) else before
        if after != expected:
            return False
    return True


def enumerate_augmenting_hyperwalks(profile: Profile, saturated, walk_cap: int):
    """All augmenting hyperwalks up to ``walk_cap`` steps with unsaturated endpoints.

    Search is restricted to walks whose odd steps add a realized unmatched
    edge and whose even steps remove a matched edge; decorated variants that
    pad such a walk with self-cancelling steps are skipped, since they share
    the core walk's vertices and have the same effect when applied.
    Enumeration order is canonical: walks are deduplicated against their
    reversal and sorted by first endpoint, then steps.
    """
    cadj = profile.cls.crucial_adjacency()
    n_slots = profile.n_slots
    found: dict[tuple, Hyperwalk] = {}

    def consider(steps, verts):
        walk = _canonical_walk(steps, verts)
        key = (walk.steps, walk.vertices)
        if key not in found and is_augmenting(profile, walk):
            found[key] = walk

    def extend(cur, steps, verts, used):
        pos = len(steps) + 1
        odd = pos % 2 == 1
        for nbr, e in cadj.get(cur, ()):
            for s in range(n_slots):
                step = (e, s)
                if step in used:
                    continue
                if odd:
                    if e not in profile.realized[s] or e in profile.matchings[s]:
                        continue
                else:
                    if e not in profile.matchings[s]:
                        continue
                steps.append(step)
                verts.append(nbr)
                used.add(step)
                if odd and nbr not in saturated:
                    consider(steps, verts)
                if len(steps) < walk_cap:
                    extend(nbr, steps, verts, used)
                steps.pop()
                verts.pop()
                used.discard(step)

    for v0 in sorted(cadj):
        if v0 in saturated:
            continue
        extend(v0, [], [v0], set())
    return sorted(found.values(), key=lambda w: (w.vertices[0], w.steps))


def build_conflict_graph(walks) -> list[set[int]]:
    """One node per walk; an edge whenever two walks share a vertex."""
    by_vertex: dict[int, list[int]] = {}
    for i, w in enumerate(walks):
        for v in set(w.vertices):
            by_vertex.setdefault(v, []).append(i)
    adj: list[set[int]] = [set() for _ in walks]
    for group in by_vertex.values():
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                adj[group[a]].add(group[b])
                adj[group[b]].add(group[a])
    return adj


def apply_hyperwalks(profile: Profile, walks) -> Profile:
    """Apply vertex-disjoint augmenting hyperwalks; slot-wise union minus removal."""
    seen: set[int] = set()
    for w in walks:
        wv = set(w.vertices)
        if wv & seen:
            raise AssertionError("hyperwalks passed to apply must be vertex-disjoint")
        seen |= wv
    matchings = [set(m) for m in profile.matchings]
    for w in walks:
        adds: dict[int, set[int]] = {}
        rems: dict[int, set[int]] = {}
        for pos, (e, s) in enumerate(w.steps, start=1):
            (adds if pos % 2 == 1 else rems).setdefault(s, set()).add(e)
        for s, es in adds.items():
            matchings[s] |= es
        for s, es in rems.items():
            matchings[s] -= es
    return Profile(profile.cls, profile.realized, matchings)


class KeyedUniforms:
    """Addressable uniforms; the locus records which vertices a draw concerns."""

    __slots__ = ("master_seed", "prefix")

    def __init__(self, master_seed: int, prefix: tuple = ()):
        self.master_seed = int(master_seed)
        self.prefix = tuple(prefix)

    def u(self, key: tuple, locus=None) -> float:
        return keyed_uniform(self.master_seed, self.prefix + key)


class PerturbedUniforms:
    """Wraps a base source, resampling every draw whose locus leaves a region."""

    __slots__ = ("base", "trial", "keep")

    def __init__(self, base: KeyedUniforms, trial: int, keep: Callable):
        self.base = base
        self.trial = trial
        self.keep = keep

    def u(self, key: tuple, locus=None) -> float:
        if locus is not None and self.keep(locus):
            return self.base.u(key, locus)
        return self.base.u(key + ("pert", self.trial), locus)


@dataclass
class LevelTrace:
    level: int
    sum_d_before: int
    sum_d_after: int
    selected: int
    candidates: int
    mis_rounds: int
    slot_sizes: tuple[int, ...]


class VimEngine:
    """Runs the recursive construction for one (classification, params, seed).

    Gamma tables (per-vertex matched frequency at each level) are memoized on
    the engine, so every saturation decision at a level shares one estimate
    and the tables act as constants of any individual run.
    """

    def __init__(self, classification: EdgeClassification, params: VimParams, seed: int):
        self.cls = classification
        self.params = params
        self.master_seed = int(seed)
        self.rand = KeyedUniforms(self.master_seed, ("vim",))
        self._gamma: dict[int, np.ndarray] = {}
        self._gamma_se: dict[int, np.ndarray] = {}
        self._saturated: dict[int, frozenset[int]] = {}
        self.max_mis_rounds = 0
        self.perturbations_run = 0
        g = classification.graph
        self._cedges = classification.crucial_edges
        self._cedge_set = frozenset(self._cedges)
        self._cp = {e: float(g.ps[e]) for e in self._cedges}
        self._ends = {e: g.endpoints(e) for e in self._cedges}

    # -- randomness ---------------------------------------------------------

    def input_realization(self, key: tuple, rand=None) -> frozenset[int]:
        """Sample a fresh realization of the crucial graph, bit per edge."""
        rand = rand or self.rand
        out = set()
        for e in self._cedges:
            if rand.u(key + ("input", e), locus=self._ends[e]) < self._cp[e]:
                out.add(e)
        return frozenset(out)

    # -- gamma tables and saturation ----------------------------------------

    def gamma_table(self, r: int) -> np.ndarray:
        if r not in self._gamma:
            self._build_gamma(r)
        return self._gamma[r]

    def gamma_se(self, r: int) -> np.ndarray:
        self.gamma_table(r)
        return self._gamma_se[r]

    def _build_gamma(self, r: int):
        n = self.cls.graph.n
        if r == 0:
            self._gamma[0] = np.zeros(n)
            self._gamma_se[0] = np.zeros(n)
            return
        samples = self.params.gamma_samples
        counts = np.zeros(n)
        for s in range(samples):
            key = ("gamma", r, s)
            creal = self.input_realization(key)
            z = self._find(r, creal, key, self.rand, None)
            for e in z:
                u, v = self._ends[e]
                counts[u] += 1
                counts[v] += 1
        gam = counts / samples
        self._gamma[r] = gam
        self._gamma_se[r] = np.sqrt(gam * (1.0 - gam) / samples)

    def saturated_set(self, r: int) -> frozenset[int]:
        """Vertices saturated at level r, from the level r-1 gamma table.

        A vertex is saturated when its estimated matched frequency already
        reaches c_v - slack, minus a confidence margin so that estimation
        noise errs toward saturating early (never toward overshooting).
        """
        if r not in self._saturated:
            gam = self.gamma_table(r - 1)
            se = self._gamma_se[r - 1]
            threshold = self.cls.c_v - self.params.slack - self.params.gamma_ci_factor * se
            self._saturated[r] = frozenset(int(v) for v in np.flatnonzero(gam >= threshold))
        return self._saturated[r]

    # -- the construction ----------------------------------------------------

    def run(self, depth: int, crealization, key: tuple = ("run",), rand=None,
            trace: list | None = None) -> frozenset[int]:
        """Matching (edge ids) of the given crucial realization at ``depth``."""
        creal = frozenset(int(e) for e in crealization)
        if not creal <= self._cedge_set:
            raise ValueError("input realization contains non-crucial edges")
        return self._find(depth, creal, key, rand or self.rand, trace)

    def _find(self, r: int, creal: frozenset[int], key: tuple, rand, trace):
        if r == 0:
            return frozenset()
        alpha = self.params.alpha
        slots = [creal]
        for i in range(1, alpha + 1):
            drawn = set()
            for e in self._cedges:
                if rand.u(key + ("real", r, i, e), locus=self._ends[e]) < self._cp[e]:
                    drawn.add(e)
            slots.append(frozenset(drawn))
        matchings = [
            self._find(r - 1, slots[i], key + ("rec", r, i), rand, trace)
            for i in range(alpha + 1)
        ]
        profile = Profile(self.cls, slots, matchings)
        saturated = self.saturated_set(r)
        walks = enumerate_augmenting_hyperwalks(profile, saturated, self.params.walk_cap)
        if len(walks) > self.params.conflict_cap:
            raise ConflictGraphCapError(
                f"{len(walks)} candidate hyperwalks exceed the cap of "
                f"{self.params.conflict_cap}; reduce walk_cap or alpha"
            )
        adj = build_conflict_graph(walks)
        max_deg = max((len(a) for a in adj), default=0)
        budget = mis_round_budget(max_deg, self.params.epsilon, self.params.mis_round_factor)
        self.max_mis_rounds = max(self.max_mis_rounds, budget)
        walk_keys = [w.rand_key() for w in walks]

        def priority(rnd: int, node: int) -> float:
            return rand.u(key + ("mis", r, rnd) + walk_keys[node],
                          locus=walks[node].vertices)

        result = luby_rounds(adj, budget, priority)
        chosen = [walks[i] for i in result.in_set]
        after = apply_hyperwalks(profile, chosen)
        d_before = profile.sum_d()
        d_after = after.sum_d()
        if d_before + 2 * len(chosen) != d_after:
            raise AssertionError(
                f"counting identity failed at level {r}: "
                f"{d_before} + 2*{len(chosen)} != {d_after}"
            )
        if trace is not None:
            trace.append(
                LevelTrace(
                    level=r,
                    sum_d_before=d_before,
                    sum_d_after=d_after,
                    selected=len(chosen),
                    candidates=len(walks),
                    mis_rounds=result.rounds,
                    slot_sizes=tuple(len(m) for m in after.matchings),
                )
            )
        z = after.matchings[0]
        if not z <= creal:
            raise AssertionError("returned matching left the input realization")
        return z

    # -- locality ------------------------------------------------------------

    def dependency_radius(self, v: int, depth: int, trials: int = 20,
                          key_tag: tuple = ()) -> int:
        """Smallest rho such that resampling all randomness whose locus leaves
        the rho-ball around v (in the crucial graph) never changes whether v
        is matched, over ``trials`` perturbations per radius."""
        # Freeze gamma tables with the engine's own randomness first, so the
        # saturation thresholds are constants of the perturbed runs.
        for level in range(1, depth + 1):
            self.saturated_set(level)
        dist = self.cls.crucial_distances(v)
        ecc = max(dist.values()) if dist else 0
        key = ("dep", v) + key_tag
        base_real = self.input_realization(key)
        base_z = self._find(depth, base_real, key, self.rand, None) if depth else frozenset()
        base_x = any(v in self._ends[e] for e in base_z)
        for rho in range(0, ecc + 1):
            def keep(locus, _rho=rho):
                return all(dist.get(w, math.inf) <= _rho for w in locus)

            stable = True
            for trial in range(trials):
                perturbed = PerturbedUniforms(self.rand, trial, keep)
                creal = self.input_realization(key, rand=perturbed)
                z = self._find(depth, creal, key, perturbed, None) if depth else frozenset()
                self.perturbations_run += 1
                x = any(v in self._ends[e] for e in z)
                if x != base_x:
                    stable = False
                    break
            if stable:
                return rho
        return ecc


def locality_bound(depth: int, walk_cap: int, mis_rounds: int) -> int:
    """Radius bound from the round structure: each level reaches at most one
    walk span per MIS hop plus the walk around the vertex itself."""
    return depth * walk_cap * (2 * mis_rounds + 1)


# -- module-level convenience wrappers ---------------------------------------


def find_matching(r: int, crealization, params: VimParams,
                  classification: EdgeClassification, seed: int) -> Matching:
    """One-shot construction; fresh engine, so gamma tables are rebuilt."""
    if isinstance(crealization, Realization):
        ids = [e for e in crealization.edge_ids() if e in set(classification.crucial_edges)]
    else:
        ids = list(crealization)
    engine = VimEngine(classification, params, seed)
    z = engine.run(r, ids)
    return Matching(classification.graph, z)


def estimate_gamma(r: int, params: VimParams, classification: EdgeClassification,
                   samples: int, seed: int) -> np.ndarray:
    """Per-vertex matched frequency of the level-r construction."""
    engine = VimEngine(classification, replace(params, gamma_samples=samples), seed)
    return engine.gamma_table(r)


def dependency_radius(v: int, r: int, params: VimParams,
                      classification: EdgeClassification, seed: int,
                      trials: int = 20) -> int:
    engine = VimEngine(classification, params, seed)
    return engine.dependency_radius(v, r, trials=trials)
