"""Reachable state enumeration, indexing, and mirror-symmetry partitioning.

The state space is closed under the slot dynamics: every slot-boundary
state reaches only listed intermediate states through ageing plus
generation, and every (intermediate state, action, swap outcome) lands on a
listed slot-boundary state.  All states containing an end-to-end link are
collapsed into a single terminal state, since the process stops there and
the remaining delivery time is zero regardless of link ages.

Enumeration proceeds breadth-first from the empty state, so only states the
process can actually visit are indexed.  Index 0 is always the empty state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .chain import (
    ChainParams,
    ChainState,
    Link,
    age_links,
    apply_generation,
    canonical,
    empty_state,
    encode_state,
    generation_pairs,
    is_absorbing,
    mirror,
    swap_outcomes,
    valid_swap_nodes,
)

__all__ = [
    "DEFAULT_STATE_CAP",
    "MirrorSplit",
    "StateCapExceeded",
    "StateSpace",
    "SymmetryPartition",
    "action_space",
    "count_lower_bound",
    "distinct_labeled_states",
    "enumerate_states",
    "mirror_maps",
    "partition",
    "terminal_state",
]

#: Default ceiling on boundary + intermediate state counts.
DEFAULT_STATE_CAP = 50_000_000


class StateCapExceeded(RuntimeError):
    """Enumeration would exceed the configured state cap."""


def terminal_state(n: int) -> ChainState:
    """Representative of all absorbing states (collapsed end-to-end class)."""
    return ChainState(n=n, links=(Link(1, n, 0),))


def action_space(state: ChainState) -> tuple[frozenset[int], ...]:
    """All swap actions available in a state: every subset of the eligible nodes.

    Ordered by (size, node tuple), so the empty action comes first and the
    ordering doubles as the deterministic tie-break order for solvers.
    """
    nodes = sorted(valid_swap_nodes(state))
    actions = []
    for r in range(len(nodes) + 1):
        for combo in combinations(nodes, r):
            actions.append(frozenset(combo))
    return tuple(actions)


@dataclass(frozen=True)
class StateSpace:
    """Indexed reachable states of a chain, plus per-state action lists.

    ``boundary_states[0]`` is the empty state and
    ``boundary_states[terminal_index]`` the collapsed absorbing state.
    ``raw_absorbing`` keeps the age-vector encodings of the absorbing states
    as they were actually produced, before collapsing.
    """

    params: ChainParams
    boundary_states: tuple[ChainState, ...]
    intermediate_states: tuple[ChainState, ...]
    boundary_index: dict[ChainState, int]
    intermediate_index: dict[ChainState, int]
    terminal_index: int
    actions: tuple[tuple[frozenset[int], ...], ...]
    raw_absorbing: frozenset[tuple[int, ...]]
    bunched: bool = False

    @property
    def initial_index(self) -> int:
        return 0

    @property
    def num_boundary(self) -> int:
        return len(self.boundary_states)

    @property
    def num_intermediate(self) -> int:
        return len(self.intermediate_states)

    @property
    def num_decidable(self) -> int:
        """Intermediate states in which at least one swap can be performed."""
        return sum(1 for acts in self.actions if len(acts) > 1)

    def respecialized(self, p: float | None = None, p_s: float | None = None) -> "StateSpace":
        """Same state space with different success probabilities.

        Enumeration depends only on (n, t_cut), so sweeps over p and p_s can
        share one space.
        """
        params = replace(
            self.params,
            p=self.params.p if p is None else p,
            p_s=self.params.p_s if p_s is None else p_s,
        )
        return replace(self, params=params)


def enumerate_states(params: ChainParams, state_cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    """Breadth-first closure of the slot dynamics starting from the empty state.

    Raises :class:`StateCapExceeded` if boundary plus intermediate counts
    pass ``state_cap``.
    """
    n, t_cut = params.n, params.t_cut
    s0 = empty_state(n)
    term = terminal_state(n)
    boundary: list[ChainState] = [s0]
    boundary_index: dict[ChainState, int] = {s0: 0}
    intermediates: list[ChainState] = []
    intermediate_index: dict[ChainState, int] = {}
    actions: list[tuple[frozenset[int], ...]] = []
    raw_absorbing: set[tuple[int, ...]] = set()
    terminal_index = -1

    queue: deque[ChainState] = deque([s0])
    while queue:
        s = queue.popleft()
        aged = age_links(s)
        pairs = sorted(generation_pairs(aged))
        for mask in range(1 << len(pairs)):
            chosen = [pairs[b] for b in range(len(pairs)) if mask >> b & 1]
            r = apply_generation(aged, chosen)
            if r in intermediate_index:
                continue
            intermediate_index[r] = len(intermediates)
            intermediates.append(r)
            acts = action_space(r)
            actions.append(acts)
            for a in acts:
                _, outcomes = swap_outcomes(r, a, t_cut)
                for _, target in outcomes:
                    if is_absorbing(target):
                        raw_absorbing.add(encode_state(target))
                        if terminal_index < 0:
                            terminal_index = len(boundary)
                            boundary_index[term] = terminal_index
                            boundary.append(term)
                        continue
                    if target not in boundary_index:
                        boundary_index[target] = len(boundary)
                        boundary.append(target)
                        queue.append(target)
            if len(boundary) + len(intermediates) > state_cap:
                raise StateCapExceeded(
                    f"state cap {state_cap} exceeded at n={n}, t_cut={t_cut}"
                )
    if terminal_index < 0:
        # Unreachable for valid parameters (p, p_s > 0), kept for safety.
        terminal_index = len(boundary)
        boundary_index[term] = terminal_index
        boundary.append(term)
    return StateSpace(
        params=params,
        boundary_states=tuple(boundary),
        intermediate_states=tuple(intermediates),
        boundary_index=boundary_index,
        intermediate_index=intermediate_index,
        terminal_index=terminal_index,
        actions=tuple(actions),
        raw_absorbing=frozenset(raw_absorbing),
    )


@dataclass(frozen=True)
class MirrorSplit:
    """Index partition of one state list under mirroring.

    ``sym`` holds the self-mirrored states; ``half_one`` and ``half_two``
    split the remainder so that neither half contains a state together with
    its mirror.  Representatives (``sym | half_one``) are the canonical
    members of each mirror pair.
    """

    sym: frozenset[int]
    half_one: frozenset[int]
    half_two: frozenset[int]


@dataclass(frozen=True)
class SymmetryPartition:
    """Mirror partitions of the boundary and intermediate state lists."""

    boundary: MirrorSplit
    intermediate: MirrorSplit


def _split(states, index) -> MirrorSplit:
    sym, one, two = set(), set(), set()
    for i, s in enumerate(states):
        m = mirror(s)
        if m == s:
            sym.add(i)
        elif canonical(s) == s:
            one.add(i)
        else:
            two.add(i)
        if m not in index:
            raise ValueError(f"mirror of state {i} is not in the space")
    return MirrorSplit(frozenset(sym), frozenset(one), frozenset(two))


def partition(space: StateSpace) -> SymmetryPartition:
    """Partition both state lists into symmetric states and mirror-pair halves."""
    return SymmetryPartition(
        boundary=_split(space.boundary_states, space.boundary_index),
        intermediate=_split(space.intermediate_states, space.intermediate_index),
    )


def mirror_maps(space: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """Index maps sending each state to its mirror (boundary, intermediate)."""
    b = np.array(
        [space.boundary_index[mirror(s)] for s in space.boundary_states], dtype=np.int64
    )
    i = np.array(
        [space.intermediate_index[mirror(s)] for s in space.intermediate_states],
        dtype=np.int64,
    )
    return b, i


def count_lower_bound(n: int, t_cut: int) -> int:
    """Analytic lower bound on the total number of states with ages 0..t_cut.

    ``1 + (n^2-n-4)/2 * t + (n^2-n-6)(n-2)/6 * t^2 + t^(n-1)`` for an n-node
    chain with cutoff ``t``; grows as ``t^(n-1)``.
    """
    if n < 3 or t_cut < 1:
        raise ValueError("need n >= 3 and t_cut >= 1")
    linear = (n * n - n - 4) * t_cut // 2
    quadratic = (n * n - n - 6) * (n - 2) * t_cut * t_cut // 6
    return 1 + linear + quadratic + t_cut ** (n - 1)


def distinct_labeled_states(space: StateSpace) -> int:
    """Number of distinct age-vector labelings the dynamics can produce.

    Counts the union of boundary states (excluding the artificial collapsed
    terminal), intermediate states, and absorbing states as actually
    produced with their ages.  This is the count comparable to
    :func:`count_lower_bound`, which counts labelings rather than
    phase-tagged states.
    """
    encodings = {
        encode_state(s)
        for i, s in enumerate(space.boundary_states)
        if i != space.terminal_index
    }
    encodings.update(encode_state(s) for s in space.intermediate_states)
    encodings.update(space.raw_absorbing)
    return len(encodings)
