"""Independent reference implementations used by the tests."""

import numpy as np


def brute_force_sticky(x, m, v, T, same_point=1e-9):
    """Zero-potential sticky particles by exhaustive pairwise search.

    Every round scans all cluster pairs (O(N^2)) for the earliest meeting
    time, advances everyone to it and fuses all clusters found at a common
    point; there are at most N - 1 rounds, so O(N^3) overall. Returns the
    events as ``(time, participants)`` with participants named by their
    leftmost atom, and the final partition as lists of atom indices.
    """
    clusters = [{"atoms": [i], "m": float(m[i]), "x": float(x[i]), "v": float(v[i])} for i in range(len(x))]
    t = 0.0
    events = []
    while len(clusters) > 1:
        best = np.inf
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                ca, cb = clusters[a], clusters[b]
                dv = ca["v"] - cb["v"]
                if dv > 0:
                    best = min(best, t + (cb["x"] - ca["x"]) / dv)
        if best > T:
            break
        for c in clusters:
            c["x"] += c["v"] * (best - t)
        t = best
        fused = [clusters[0]]
        group_sizes = [1]
        for c in clusters[1:]:
            last = fused[-1]
            if abs(c["x"] - last["x"]) <= same_point:
                if group_sizes[-1] == 1:
                    last["members_pre"] = [last["atoms"][0]]
                last["members_pre"].append(c["atoms"][0])
                mt = last["m"] + c["m"]
                last["v"] = (last["m"] * last["v"] + c["m"] * c["v"]) / mt
                last["x"] = (last["m"] * last["x"] + c["m"] * c["x"]) / mt
                last["m"] = mt
                last["atoms"] = last["atoms"] + c["atoms"]
                group_sizes[-1] += 1
            else:
                fused.append(c)
                group_sizes.append(1)
        for c, size in zip(fused, group_sizes):
            if size > 1:
                events.append((t, tuple(c.pop("members_pre"))))
        clusters = fused
    return events, [c["atoms"] for c in clusters]
