"""How long may an entangled link sit in memory before it is useless?

Werner pairs decay towards the maximally mixed state while stored, and
every entanglement swap multiplies their quality parameters.  Given the
fidelity of freshly generated links, the decay constant of the memories,
and the end-to-end fidelity an application demands, there is a sharp
maximum storage window: the cutoff time.  This script walks through the
pieces and prints the cutoff budget for a few chain lengths.

Run with:  python3 demos/01_cutoff_from_fidelity_budget.py
"""

from repeaterchain import (
    FidelityParams,
    InfeasibleCutoffError,
    chain_swap_fidelity,
    decay_fidelity,
    max_cutoff,
    swap_fidelity,
    worst_case_fidelity,
)

F_NEW = 0.95  # fidelity of a freshly generated elementary link
F_MIN = 0.80  # what the application still accepts end to end
TAU = 50.0    # memory decay constant, in time-slot units

print("Storage decay of a single link (f_new = %.2f, tau = %.0f):" % (F_NEW, TAU))
for dt in (0, 5, 10, 25, 50, 100):
    print(f"  after {dt:3d} slots: F = {decay_fidelity(F_NEW, dt, TAU):.4f}")

print()
print("Swap composition eats fidelity multiplicatively:")
for hops in range(1, 5):
    print(f"  {hops} link(s) fused: F = {chain_swap_fidelity([F_NEW] * hops):.4f}")
assert abs(chain_swap_fidelity([F_NEW, F_NEW]) - swap_fidelity(F_NEW, F_NEW)) < 1e-12

print()
print(f"Cutoff budget for f_new = {F_NEW}, f_min = {F_MIN}, tau = {TAU}:")
print("  n   max cutoff   whole slots   worst-case F at the bound")
params = FidelityParams(f_new=F_NEW, f_min=F_MIN, tau=TAU)
for n in range(2, 8):
    try:
        bound = max_cutoff(params, n)
    except InfeasibleCutoffError:
        print(f"  {n}   unreachable: even fresh links fall short after {n - 2} swaps")
        continue
    f_worst = worst_case_fidelity(params, n, bound)
    print(f"  {n}   {bound:10.3f}   {int(bound):11d}   {f_worst:.9f}")

print()
print("The worst case is every link generated at once and swapped only at the")
print("end of the window; the bound is exactly where that case hits f_min.")
