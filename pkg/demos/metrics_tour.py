"""
Accuracy, diversity and popularity metrics
==========================================

Two hand-made recommenders on the same tiny log: one always suggests the
most popular items, the other spreads over the long tail.
"""

from kgflex.dataset import InteractionLog
from kgflex.metrics import evaluate, popularity_partition

# 'a' and 'b' are the blockbusters
train = InteractionLog.from_positives({
    "u1": ["a", "b"], "u2": ["a", "b"], "u3": ["a", "b", "c"], "u4": ["a", "d"],
}, items="abcdefgh")
test = InteractionLog.from_positives({
    "u1": ["e"], "u2": ["f", "a"], "u3": ["g"], "u4": ["b", "h"],
}, items="abcdefgh")

part = popularity_partition(train, 0.8)
print("short head:", sorted(part.short_head), "long tail:", sorted(part.long_tail))

def unseen(u, order):
    return [i for i in order if i not in train.positives[u]][:2]

most_popular = {u: unseen(u, "abcdefgh") for u in train.users}
long_tail = {u: unseen(u, "efghcdab") for u in train.users}

for name, lists in (("most popular", most_popular), ("long tail", long_tail)):
    rep = evaluate(lists, train, test, 2, part)
    print(name)
    for metric, cutoff, value in rep.records():
        print(f"  {metric}@{cutoff}\t{value:.4f}")
