"""Compare each zero-aliasing design with its conventional counterpart.

Trains one filter per shape class for every design, scores every test scene
against every filter and reports the recognition rate averaged over seeds.

    python demos/shapes_comparison.py [n_seeds]
"""

import sys

import numpy as np

from zacf import protocols

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
rec = {k: [] for k in protocols.DESIGN_KINDS}
for seed in range(n_seeds):
    metrics, _ = protocols.shapes_suite(seed)
    for row in metrics:
        rec[row[0]].append(row[5])

print(f"{'pair':<20}{'conventional':>14}{'zero-aliasing':>16}")
for conv, za in protocols.PAIRS:
    print(f"{conv + ' / ' + za:<20}{np.mean(rec[conv]):>14.3f}{np.mean(rec[za]):>16.3f}")
