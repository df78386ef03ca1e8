"""Exact two-phase transition probabilities of the chain Markov decision process.

Each time slot factorizes into two stochastic phases:

* phase A (no decision): ages increase, then every free neighbour pair
  generates a link independently with probability ``p``.  This maps a
  slot-boundary state to a distribution over intermediate states.
* phase B (decision): the chosen swaps are measured, each run surviving
  independently (a run with ``k`` swaps survives with probability
  ``p_s ** k``), then cutoffs are applied.  This maps an (intermediate
  state, action) pair to a distribution over slot-boundary states.

Probabilities are stored structurally as success/failure exponents, so a
model can be materialized exactly for any ``(p, p_s)`` without re-walking
the dynamics.  Mirror bunching redirects all probability mass on one half
of the mirror pairs onto their canonical representatives, halving the
effective state space without changing any expected delivery time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .chain import age_links, apply_generation, canonical, generation_pairs, swap_outcomes
from .statespace import StateSpace, SymmetryPartition

__all__ = [
    "ChoiceTable",
    "TransitionModel",
    "bunch",
    "write_phase_a",
    "write_phase_b",
]

# Phase-A arc: (intermediate index, successes, failures, multiplicity).
_AArc = tuple[int, int, int, int]


@dataclass(frozen=True)
class _BTable:
    """Swap outcomes of one (intermediate state, action) pair.

    ``run_sizes[b]`` is the number of swaps in run ``b``; ``outcomes`` maps
    each survival mask to the resulting boundary-state index.
    """

    run_sizes: tuple[int, ...]
    outcomes: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ChoiceTable:
    """Flattened phase-B matrix with one row per (intermediate, action) pair.

    ``offsets[r] : offsets[r + 1]`` are the rows of intermediate state ``r``,
    in the action order of ``StateSpace.actions[r]``.
    """

    matrix: sp.csr_matrix
    offsets: np.ndarray


class TransitionModel:
    """Sparse exact transition probabilities over an enumerated state space."""

    def __init__(
        self,
        space: StateSpace,
        a_arcs: tuple[tuple[_AArc, ...], ...],
        b_arcs: tuple[tuple[_BTable, ...], ...],
        source_space: StateSpace | None = None,
    ):
        self.space = space
        self.params = space.params
        self._a_arcs = a_arcs
        self._b_arcs = b_arcs
        self.source_space = source_space
        self._mat_a: sp.csr_matrix | None = None
        self._choices: ChoiceTable | None = None

    @classmethod
    def build(cls, space: StateSpace) -> "TransitionModel":
        """Walk the slot dynamics once and record all arcs structurally."""
        t_cut = space.params.t_cut
        a_arcs: list[tuple[_AArc, ...]] = []
        for idx, s in enumerate(space.boundary_states):
            if idx == space.terminal_index:
                a_arcs.append(())
                continue
            aged = age_links(s)
            pairs = sorted(generation_pairs(aged))
            arcs = []
            for mask in range(1 << len(pairs)):
                chosen = [pairs[b] for b in range(len(pairs)) if mask >> b & 1]
                r = apply_generation(aged, chosen)
                k = len(chosen)
                arcs.append((space.intermediate_index[r], k, len(pairs) - k, 1))
            a_arcs.append(tuple(arcs))

        term = space.terminal_index
        b_arcs: list[tuple[_BTable, ...]] = []
        for r_idx, r in enumerate(space.intermediate_states):
            tables = []
            for action in space.actions[r_idx]:
                sizes, outcomes = swap_outcomes(r, action, t_cut)
                rows = []
                for mask, target in outcomes:
                    if target in space.boundary_index:
                        rows.append((mask, space.boundary_index[target]))
                    else:
                        # Absorbing states collapse onto the terminal index.
                        rows.append((mask, term))
                tables.append(_BTable(sizes, tuple(rows)))
            b_arcs.append(tuple(tables))
        return cls(space, tuple(a_arcs), tuple(b_arcs))

    def respecialized(self, p: float | None = None, p_s: float | None = None) -> "TransitionModel":
        """Same dynamics with different success probabilities.

        The structural arcs depend only on (n, t_cut) and are shared; only
        the numeric matrices are rebuilt.  Used by parameter sweeps.
        """
        space = self.space.respecialized(p=p, p_s=p_s)
        return TransitionModel(space, self._a_arcs, self._b_arcs, source_space=self.source_space)

    # -- dense-free numeric views -------------------------------------------------

    def phase_a(self, s_idx: int) -> dict[int, float]:
        """P_A(. | s): distribution over intermediate-state indices."""
        if s_idx == self.space.terminal_index:
            raise ValueError("the terminal state has no outgoing transitions")
        p = self.params.p
        out: dict[int, float] = {}
        for r_idx, k, m, mult in self._a_arcs[s_idx]:
            prob = mult * p**k * (1.0 - p) ** m
            if prob > 0.0:
                out[r_idx] = out.get(r_idx, 0.0) + prob
        return out

    def _table(self, r_idx: int, action: Iterable[int]) -> _BTable:
        action = frozenset(action)
        try:
            a_idx = self.space.actions[r_idx].index(action)
        except ValueError:
            raise ValueError(f"action {sorted(action)} invalid in intermediate state {r_idx}")
        return self._b_arcs[r_idx][a_idx]

    def phase_b(self, r_idx: int, action: Iterable[int]) -> dict[int, float]:
        """P_B(. | r, a): distribution over slot-boundary state indices."""
        table = self._table(r_idx, action)
        ps = self.params.p_s
        survive = [ps**k for k in table.run_sizes]
        out: dict[int, float] = {}
        for mask, s_idx in table.outcomes:
            prob = 1.0
            for b, q in enumerate(survive):
                prob *= q if mask >> b & 1 else 1.0 - q
            if prob > 0.0:
                out[s_idx] = out.get(s_idx, 0.0) + prob
        return out

    def composed(self, s_idx: int, actions: Sequence[Iterable[int]]) -> dict[int, float]:
        """One-slot transition P(. | s, pi) for a policy given per-intermediate actions."""
        out: dict[int, float] = {}
        for r_idx, pa in self.phase_a(s_idx).items():
            for t_idx, pb in self.phase_b(r_idx, actions[r_idx]).items():
                out[t_idx] = out.get(t_idx, 0.0) + pa * pb
        return out

    # -- matrix views --------------------------------------------------------------

    def phase_a_matrix(self) -> sp.csr_matrix:
        """P_A as a (boundary x intermediate) CSR matrix; terminal row is zero."""
        if self._mat_a is None:
            p = self.params.p
            rows, cols, data = [], [], []
            for s_idx, arcs in enumerate(self._a_arcs):
                for r_idx, k, m, mult in arcs:
                    prob = mult * p**k * (1.0 - p) ** m
                    if prob > 0.0:
                        rows.append(s_idx)
                        cols.append(r_idx)
                        data.append(prob)
            self._mat_a = sp.coo_matrix(
                (data, (rows, cols)),
                shape=(self.space.num_boundary, self.space.num_intermediate),
            ).tocsr()
        return self._mat_a

    def choice_table(self) -> ChoiceTable:
        """P_B for every (intermediate, action) pair as one stacked CSR matrix."""
        if self._choices is None:
            ps = self.params.p_s
            offsets = np.zeros(self.space.num_intermediate + 1, dtype=np.int64)
            rows, cols, data = [], [], []
            row = 0
            for r_idx, tables in enumerate(self._b_arcs):
                offsets[r_idx] = row
                for table in tables:
                    survive = [ps**k for k in table.run_sizes]
                    for mask, s_idx in table.outcomes:
                        prob = 1.0
                        for b, q in enumerate(survive):
                            prob *= q if mask >> b & 1 else 1.0 - q
                        if prob > 0.0:
                            rows.append(row)
                            cols.append(s_idx)
                            data.append(prob)
                    row += 1
            offsets[-1] = row
            matrix = sp.coo_matrix(
                (data, (rows, cols)), shape=(row, self.space.num_boundary)
            ).tocsr()
            self._choices = ChoiceTable(matrix=matrix, offsets=offsets)
        return self._choices


def bunch(model: TransitionModel, split: SymmetryPartition) -> TransitionModel:
    """Fold mirror pairs onto canonical representatives.

    All probability mass flowing to a non-representative state is redirected
    to its mirror, exactly as substituting T(s) = T(mirror(s)) into the
    delivery-time equations.  The returned model lives on a reduced space
    whose state lists keep their original relative order (the empty state
    stays at index 0); ``source_space`` links back to the full space.
    """
    space = model.space
    if space.bunched:
        raise ValueError("model is already bunched")

    def reduce_states(states, index, keep: frozenset[int]):
        kept = [i for i in range(len(states)) if i in keep]
        new_index = {old: new for new, old in enumerate(kept)}
        rep = np.empty(len(states), dtype=np.int64)
        for i, s in enumerate(states):
            rep[i] = new_index[i] if i in keep else new_index[index[canonical(s)]]
        return kept, new_index, rep

    b_keep = split.boundary.sym | split.boundary.half_one
    i_keep = split.intermediate.sym | split.intermediate.half_one
    b_kept, b_new, b_rep = reduce_states(space.boundary_states, space.boundary_index, b_keep)
    i_kept, i_new, i_rep = reduce_states(
        space.intermediate_states, space.intermediate_index, i_keep
    )

    boundary_states = tuple(space.boundary_states[i] for i in b_kept)
    intermediate_states = tuple(space.intermediate_states[i] for i in i_kept)
    reduced = StateSpace(
        params=space.params,
        boundary_states=boundary_states,
        intermediate_states=intermediate_states,
        boundary_index={s: i for i, s in enumerate(boundary_states)},
        intermediate_index={s: i for i, s in enumerate(intermediate_states)},
        terminal_index=b_new[space.terminal_index],
        actions=tuple(space.actions[i] for i in i_kept),
        raw_absorbing=space.raw_absorbing,
        bunched=True,
    )

    a_arcs = []
    for old_idx in b_kept:
        merged: dict[tuple[int, int, int], int] = {}
        for r_idx, k, m, mult in model._a_arcs[old_idx]:
            key = (int(i_rep[r_idx]), k, m)
            merged[key] = merged.get(key, 0) + mult
        a_arcs.append(tuple((r, k, m, mult) for (r, k, m), mult in merged.items()))

    b_arcs = []
    for old_idx in i_kept:
        tables = []
        for table in model._b_arcs[old_idx]:
            outcomes = tuple((mask, int(b_rep[s_idx])) for mask, s_idx in table.outcomes)
            tables.append(_BTable(table.run_sizes, outcomes))
        b_arcs.append(tuple(tables))

    return TransitionModel(reduced, tuple(a_arcs), tuple(b_arcs), source_space=space)


def write_phase_a(model: TransitionModel, fh) -> None:
    """Dump P_A in coordinate-list form: one 'row col prob' line per entry."""
    for s_idx in range(model.space.num_boundary):
        if s_idx == model.space.terminal_index:
            continue
        for r_idx, prob in sorted(model.phase_a(s_idx).items()):
            fh.write(f"{s_idx} {r_idx} {prob:.17g}\n")


def write_phase_b(model: TransitionModel, fh) -> None:
    """Dump P_B in coordinate-list form, one row per (intermediate, action) pair.

    Row indices match :meth:`TransitionModel.choice_table` ordering.
    """
    table = model.choice_table()
    row = 0
    for r_idx in range(model.space.num_intermediate):
        for action in model.space.actions[r_idx]:
            for s_idx, prob in sorted(model.phase_b(r_idx, action).items()):
                fh.write(f"{row} {s_idx} {prob:.17g}\n")
            row += 1
