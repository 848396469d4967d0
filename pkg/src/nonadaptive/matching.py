"""Hopcroft-Karp maximum bipartite matching and Hall-violator extraction.

Left vertices are ``0..len(adj)-1``; ``adj[i]`` lists right vertices in
``[0, n_right)`` in the order they should be tried.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

UNMATCHED = -1


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> tuple[list[int], list[int]]:
    """Return ``(match_left, match_right)`` for a maximum matching.

    Left vertices are processed in index order and each adjacency list in
    its given order, so the result is a deterministic function of ``adj``.
    """
    n_left = len(adj)
    match_l = [UNMATCHED] * n_left
    match_r = [UNMATCHED] * n_right
    while True:
        dist = [-1] * n_left
        queue = deque()
        for i in range(n_left):
            if match_l[i] == UNMATCHED:
                dist[i] = 0
                queue.append(i)
        reachable_free = False
        while queue:
            i = queue.popleft()
            for c in adj[i]:
                j = match_r[c]
                if j == UNMATCHED:
                    reachable_free = True
                elif dist[j] == -1:
                    dist[j] = dist[i] + 1
                    queue.append(j)
        if not reachable_free:
            return match_l, match_r

        cursor = [0] * n_left
        for root in range(n_left):
            if match_l[root] != UNMATCHED:
                continue
            stack = [root]
            while stack:
                i = stack[-1]
                if cursor[i] == len(adj[i]):
                    dist[i] = -1  # dead end for the rest of this phase
                    stack.pop()
                    continue
                c = adj[i][cursor[i]]
                cursor[i] += 1
                j = match_r[c]
                if j == UNMATCHED:
                    # flip the alternating path; each stacked vertex takes the
                    # cell it last stepped through
                    for v in stack:
                        cell = adj[v][cursor[v] - 1]
                        match_l[v] = cell
                        match_r[cell] = v
                    break
                if dist[j] == dist[i] + 1:
                    stack.append(j)


def hall_witness(adj: Sequence[Sequence[int]], match_l: Sequence[int], match_r: Sequence[int]) -> frozenset[int] | None:
    """Left set ``S`` with ``|Γ(S)| < |S|``, or None if the matching is left-perfect.

    Grows the alternating-path closure of the smallest unmatched left vertex.
    In a maximum matching every cell reached is matched back into the set, so
    the closure has exactly one more member than neighbors.
    """
    try:
        root = match_l.index(UNMATCHED)
    except ValueError:
        return None
    members = {root}
    seen_cells: set[int] = set()
    queue = deque([root])
    while queue:
        i = queue.popleft()
        for c in adj[i]:
            if c in seen_cells:
                continue
            seen_cells.add(c)
            j = match_r[c]
            if j == UNMATCHED:
                raise ValueError("matching is not maximum: augmenting path exists")
            if j not in members:
                members.add(j)
                queue.append(j)
    return frozenset(members)
