"""How big do these problems get, and what mirror symmetry buys back.

The number of reachable states grows like t_cut^(n-1); an analytic lower
bound makes that concrete.  Relabeling the chain right-to-left maps every
state to a mirror image with the same delivery time, so mirror pairs can
be folded onto one representative ("bunching"), nearly halving the state
space without changing any value.

Run with:  python3 demos/05_state_space_and_bunching.py
"""

import time

from repeaterchain import (
    ChainParams,
    TransitionModel,
    bunch,
    count_lower_bound,
    distinct_labeled_states,
    enumerate_states,
    partition,
    policy_iteration,
)

print("state-space growth (boundary + decision states, vs analytic bound):")
print("  n  t_cut   boundary   decision   labelings   lower bound")
for n, t_cut in [(3, 1), (3, 3), (4, 2), (4, 4), (5, 2), (5, 4), (6, 2)]:
    space = enumerate_states(ChainParams(n=n, p=0.5, p_s=0.5, t_cut=t_cut))
    print(
        f"  {n}  {t_cut:5d}   {space.num_boundary:8d}   {space.num_intermediate:8d}"
        f"   {distinct_labeled_states(space):9d}   {count_lower_bound(n, t_cut):11d}"
    )

print()
print("mirror bunching on a five-node chain with cutoff 4:")
params = ChainParams(n=5, p=0.7, p_s=0.5, t_cut=4)
space = enumerate_states(params)
model = TransitionModel.build(space)
split = partition(space)
sym = len(split.boundary.sym)
print(f"  boundary states: {space.num_boundary} total, {sym} self-mirrored, "
      f"{len(split.boundary.half_one)} mirror pairs")

start = time.perf_counter()
full, _ = policy_iteration(space, model)
full_time = time.perf_counter() - start

bmodel = bunch(model, split)
start = time.perf_counter()
folded, _ = policy_iteration(bmodel.space, bmodel)
folded_time = time.perf_counter() - start

print(f"  full solve:    {space.num_boundary:5d} states  T = {full.t0:.12f}  ({full_time:.2f} s)")
print(f"  bunched solve: {bmodel.space.num_boundary:5d} states  T = {folded.t0:.12f}  ({folded_time:.2f} s)")
print(f"  difference: {abs(full.t0 - folded.t0):.2e}")
