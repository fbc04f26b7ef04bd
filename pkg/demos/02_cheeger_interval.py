"""Check the Cheeger inequality against exhaustive cut enumeration.

For every connected graph the conductance h(G) (minimum over cuts of
crossing edges divided by the smaller side's degree volume) is sandwiched:

    lambda2 / 2  <=  h(G)  <=  sqrt(2 * lambda2)

The brute-force oracle enumerates all 2^(n-1) cuts, so it only runs on
small graphs; that is exactly what makes it a trustworthy reference.

Run:  python demos/02_cheeger_interval.py
"""

import numpy as np

from chcl import Graph, brute_force_cheeger, lambda2
from chcl.graphs import is_connected

rng = np.random.default_rng(8)
ones = lambda n: np.ones((n, 1))

print(f"{'graph':<14} {'lambda2/2':>10} {'h(G)':>8} {'sqrt(2 l2)':>11}")

named = {
    "K2": Graph(2, ((0, 1),), ones(2)),
    "C4": Graph(4, ((0, 1), (1, 2), (2, 3), (0, 3)), ones(4)),
    "barbell": Graph(6, ((0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)), ones(6)),
    "K6": Graph(6, tuple((i, j) for i in range(6) for j in range(i + 1, 6)), ones(6)),
}

checked = 0
while checked < 8:
    n = int(rng.integers(4, 11))
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.45)
    g = Graph(n, edges, ones(n))
    if not is_connected(g):
        continue
    named[f"random-{checked}"] = g
    checked += 1

violations = 0
for name, g in named.items():
    lam = lambda2(g)
    h = brute_force_cheeger(g)
    low, high = lam / 2.0, np.sqrt(2.0 * lam)
    ok = low <= h <= high
    violations += not ok
    print(f"{name:<14} {low:>10.4f} {h:>8.4f} {high:>11.4f}  {'ok' if ok else 'VIOLATION'}")

print(f"\nviolations: {violations} (the interval is a theorem; expect zero)")
