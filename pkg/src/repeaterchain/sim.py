"""Monte Carlo trajectory simulation of a policy on the chain dynamics.

Trajectories execute the exact same slot phases as the Markov model (via
the ``chain`` primitives), so agreement between sample means and solved
expected delivery times validates only the probability calculus, which is
the part that can silently drift.

Per-trial randomness comes from a counter-based generator keyed by
``(master_seed, trial index)``: trials are reproducible individually and
independent of execution order, so they can be distributed freely.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chain import (
    ChainParams,
    ChainState,
    age_links,
    apply_cutoff,
    apply_generation,
    check_state,
    empty_state,
    generation_pairs,
    is_absorbing,
    resolve_swaps,
)

__all__ = [
    "DeliverySample",
    "SimConfig",
    "SimResult",
    "TrajectoryError",
    "estimate",
    "run_trial",
    "trial_rng",
]


class TrajectoryError(RuntimeError):
    """A trajectory left the domain of the supplied policy or ran too long."""


@dataclass(frozen=True)
class SimConfig:
    """Trial count, seeding and safety limits for a simulation batch."""

    trials: int
    master_seed: int = 0
    max_slots: int = 1_000_000
    validate: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.max_slots < 1:
            raise ValueError("max_slots must be positive")


@dataclass(frozen=True)
class DeliverySample:
    """Delivery time (slots until end-to-end entanglement) of one trial."""

    delivery_time: int
    trial: int


@dataclass(frozen=True)
class SimResult:
    """Summary of a simulation batch."""

    mean: float
    stderr: float
    histogram: dict[int, int]
    trials: int
    master_seed: int


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream: key = (master_seed, trial index)."""
    key = np.array([master_seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _SlotStepper:
    """Executes slots through the chain primitives, memoizing per-state results.

    The reachable state space is finite, so ageing results, generation
    outcomes and swap resolutions are cached after their first computation;
    every cached value was produced by the corresponding ``chain`` function.
    """

    def __init__(self, params: ChainParams, policy_map: Mapping[ChainState, frozenset[int]], validate: bool = False):
        self.params = params
        self.policy_map = policy_map
        self.validate = validate
        self._aged: dict[ChainState, tuple[ChainState, tuple[tuple[int, int], ...]]] = {}
        self._generated: dict[tuple[ChainState, int], ChainState] = {}
        self._resolved: dict[tuple[ChainState, int], ChainState] = {}
        self._actions: dict[ChainState, tuple[int, ...]] = {}

    def step(self, state: ChainState, rng: np.random.Generator) -> ChainState:
        params = self.params
        cached = self._aged.get(state)
        if cached is None:
            aged = age_links(state)
            cached = (aged, tuple(sorted(generation_pairs(aged))))
            self._aged[state] = cached
        aged, pairs = cached

        gen_mask = 0
        if pairs:
            draws = rng.random(len(pairs)) < params.p
            for b in range(len(pairs)):
                if draws[b]:
                    gen_mask |= 1 << b
        key = (state, gen_mask)
        r = self._generated.get(key)
        if r is None:
            chosen = [pairs[b] for b in range(len(pairs)) if gen_mask >> b & 1]
            r = apply_generation(aged, chosen)
            self._generated[key] = r

        try:
            action = self.policy_map[r]
        except KeyError:
            raise TrajectoryError(
                f"trajectory reached a state outside the policy domain: {r}"
            ) from None
        nodes = self._actions.get(r)
        if nodes is None:
            nodes = tuple(sorted(action))
            self._actions[r] = nodes

        swap_mask = 0
        if nodes:
            draws = rng.random(len(nodes)) < params.p_s
            for b in range(len(nodes)):
                if draws[b]:
                    swap_mask |= 1 << b
        key = (r, swap_mask)
        nxt = self._resolved.get(key)
        if nxt is None:
            pattern = {k: bool(swap_mask >> b & 1) for b, k in enumerate(nodes)}
            nxt = apply_cutoff(resolve_swaps(r, nodes, pattern), params.t_cut)
            self._resolved[key] = nxt
        if self.validate:
            check_state(r, params.t_cut)
            check_state(nxt, params.t_cut)
        return nxt


def run_trial(
    params: ChainParams,
    policy_map: Mapping[ChainState, frozenset[int]],
    master_seed: int,
    trial: int = 0,
    max_slots: int = 1_000_000,
    validate: bool = False,
    _stepper: _SlotStepper | None = None,
) -> DeliverySample:
    """Run one trajectory from the empty state until end-to-end delivery.

    ``policy_map`` must assign an action to every intermediate state the
    trajectory visits; reaching an unmapped state raises
    :class:`TrajectoryError` rather than defaulting, so enumeration bugs
    surface instead of skewing statistics.
    """
    stepper = _stepper or _SlotStepper(params, policy_map, validate)
    rng = trial_rng(master_seed, trial)
    state = empty_state(params.n)
    for slot in range(1, max_slots + 1):
        state = stepper.step(state, rng)
        if is_absorbing(state):
            return DeliverySample(delivery_time=slot, trial=trial)
    raise TrajectoryError(
        f"no delivery within {max_slots} slots (trial {trial}); "
        "policy or parameters look pathological"
    )


def estimate(
    params: ChainParams,
    policy_map: Mapping[ChainState, frozenset[int]],
    config: SimConfig,
) -> SimResult:
    """Sample mean, standard error and histogram of the delivery time."""
    stepper = _SlotStepper(params, policy_map, config.validate)
    times = np.empty(config.trials, dtype=np.int64)
    histogram: Counter[int] = Counter()
    for trial in range(config.trials):
        sample = run_trial(
            params,
            policy_map,
            config.master_seed,
            trial,
            max_slots=config.max_slots,
            validate=config.validate,
            _stepper=stepper,
        )
        times[trial] = sample.delivery_time
        histogram[sample.delivery_time] += 1
    mean = float(np.mean(times))
    stderr = float(np.std(times, ddof=1) / np.sqrt(config.trials)) if config.trials > 1 else 0.0
    return SimResult(
        mean=mean,
        stderr=stderr,
        histogram=dict(sorted(histogram.items())),
        trials=config.trials,
        master_seed=config.master_seed,
    )
