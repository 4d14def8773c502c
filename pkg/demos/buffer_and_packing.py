"""
The two building blocks: an LRU buffer and a greedy page packer
===============================================================
"""

import random

from ooclust.policies import cactis_greedy_pack, colocated_weight, random_packing
from ooclust.storage import BufferPool

# An LRU buffer of two frames. Page 2 is the least recently used when 3 arrives.
pool = BufferPool(2)
for page in [1, 2, 1, 3]:
    hit, evicted, _ = pool.touch(page)
    print(f"access {page}: {'hit ' if hit else 'miss'} evicted={evicted}")
print("resident:", pool.resident)

# Six objects, pages that hold three. Objects 0-2 are traversed together often,
# 3-5 a little, and there is a weak link between the two groups.
sizes = {i: 1 for i in range(6)}
access = {0: 9, 1: 7, 2: 6, 3: 3, 4: 2, 5: 1}
traversals = {(0, 1): 5, (1, 2): 4, (0, 2): 3, (3, 4): 2, (4, 5): 2, (2, 3): 1}

packing = cactis_greedy_pack(sizes, access, traversals, page_capacity=3)
print("greedy pages:", packing)
print("co-located traversals:", colocated_weight(packing, traversals))

rng = random.Random(0)
baseline = [colocated_weight(random_packing(sizes, 3, rng), traversals) for _ in range(1000)]
print("random packing average:", sum(baseline) / len(baseline))
