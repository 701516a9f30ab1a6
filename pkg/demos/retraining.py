"""Hard-negative mining on infrared-like frames with hot decoys.

An MMCF per vehicle class is trained, run over target-free frames, and every
strong false peak is added back as a negative before retraining.

    python demos/retraining.py [seed]
"""

import sys

from zacf import protocols

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
(pre, post), mined = protocols.retrain_suite(seed)
print(f"windows mined: {mined}")
for row in (pre, post):
    print(f"{row[0]:<10} recognition {row[5]:.3f}  localization {row[4]:.3f}  rank1 {row[2]:.3f}")
