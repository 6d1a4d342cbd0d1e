"""File-based matplotlib renderings of the simulation outputs.

Each function draws one figure and writes it to the given path (the
extension picks the format).  The Agg backend is forced so the module
works in headless batch runs; nothing here opens a window.
"""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .conditions import TreeCondition
from .errors import TowerTreeError
from .growth import GrowthProfile, seq_N, seq_P

_DPI = 150


def _save(fig, path: str) -> str:
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def growth_figure(profile: GrowthProfile, k_max: int, path: str) -> str:
    """Bit lengths of P_k and N_k until they outgrow plain integers."""
    ks, p_bits, n_bits = [], [], []
    for k in range(k_max + 1):
        try:
            p = seq_P(profile, k).to_int(1 << 14).bit_length()
            n = seq_N(profile, k).to_int(1 << 14).bit_length()
        except TowerTreeError:
            break
        ks.append(k)
        p_bits.append(p)
        n_bits.append(n)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ks, p_bits, "o-", label="bits of P_k")
    ax.semilogy(ks, n_bits, "s-", label="bits of N_k")
    if ks and ks[-1] < k_max:
        ax.axvline(ks[-1] + 0.5, linestyle="--", color="gray")
        ax.text(
            ks[-1] + 0.55,
            max(n_bits),
            "symbolic beyond here",
            fontsize=8,
            color="gray",
        )
    ax.set_xlabel("k")
    ax.set_ylabel("bit length")
    ax.set_title(f"growth of the {profile.profile_id} profile")
    ax.legend()
    return _save(fig, path)


def remark_figure(cert: dict, path: str) -> str:
    """Verification windows of one branching-richness certificate."""
    fig, ax = plt.subplots(figsize=(7, 2.4))
    for row, key in enumerate(("direct_window", "inductive_window")):
        for rec in cert.get(key, []):
            color = "tab:green" if rec["holds"] else "tab:red"
            marker = "o" if rec["holds"] else "x"
            ax.plot(rec["k"], 1 - row, marker, color=color, markersize=6)
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["inductive", "direct"])
    ax.set_ylim(-0.5, 1.5)
    ax.set_xlabel("k")
    ax.set_title(f"richness windows for m = {cert['m']} (K = {cert['K']})")
    return _save(fig, path)


def condition_figure(cond: TreeCondition, path: str) -> str:
    """The explicit part of a condition, tails marked as triangles."""
    nodes = list(cond.explicit_nodes())
    kids = {a: [] for a in nodes}
    for a in nodes:
        if a and a[:-1] in kids:
            kids[a[:-1]].append(a)
    xs: dict = {}
    slot = 0
    # children come before parents in reverse (length, lex) order, so
    # every internal node can average positions already assigned
    for a in sorted(nodes, key=lambda n: (len(n), n), reverse=True):
        if kids[a]:
            xs[a] = sum(xs[b] for b in kids[a]) / len(kids[a])
        else:
            xs[a] = slot
            slot += 1
    fig, ax = plt.subplots(figsize=(max(4, slot * 0.35), 4))
    tails = set(cond.tails)
    for a in nodes:
        for b in kids[a]:
            ax.plot([xs[a], xs[b]], [-len(a), -len(b)], "-", color="0.6", lw=0.8)
    for a in nodes:
        marker = "v" if a in tails else "o"
        color = "tab:orange" if a in tails else "tab:blue"
        ax.plot(xs[a], -len(a), marker, color=color, markersize=5)
    ax.set_yticks(range(0, -1 - max(len(a) for a in nodes), -1))
    ax.set_yticklabels([str(-y) for y in range(0, -1 - max(len(a) for a in nodes), -1)])
    ax.set_ylabel("level")
    ax.set_xticks([])
    ax.set_title(
        f"{len(nodes)} explicit nodes, {len(tails)} tails "
        f"({cond.profile.profile_id})"
    )
    return _save(fig, path)


def minimality_figure(fusion, path: str) -> str:
    """Marker-level survivors and pair separations of a splitting run."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    sizes = [len(s) for s in fusion.level_sets]
    ax1.bar(range(len(sizes)), sizes, color="tab:blue")
    ax1.set_xticks(range(len(sizes)))
    ax1.set_xticklabels([f"l={l}" for l in fusion.levels])
    ax1.set_ylabel("marker-level survivors")
    ax1.set_title("survivors per state")
    pairs = fusion.to_json_dict()["pairs"]
    by_step: dict = {}
    for rec in pairs:
        by_step[rec["step"]] = by_step.get(rec["step"], 0) + 1
    steps = sorted(by_step)
    ax2.bar(steps, [by_step[s] for s in steps], color="tab:orange")
    ax2.set_xticks(steps)
    ax2.set_xlabel("step")
    ax2.set_title("pairs separated")
    return _save(fig, path)


def rigidity_figure(fusion, path: str) -> str:
    """Frontier growth and the final per-index bound of a bounding run."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    states = range(1, fusion.states + 1)
    ax1.plot(states, [len(s) for s in fusion.level_sets], "o-", label="frontier")
    ax1.plot(states, fusion.thresholds, "s--", label="threshold")
    ax1.set_xticks(list(states))
    ax1.set_xlabel("state")
    ax1.set_title("frontier and threshold")
    ax1.legend()
    try:
        bound = fusion.final_bound()
    except TowerTreeError:
        ax2.text(0.5, 0.5, "bound incomplete", ha="center", va="center")
        ax2.set_xticks([])
        ax2.set_yticks([])
    else:
        ks = sorted(bound)
        got = [len(bound[k]) for k in ks]
        caps = []
        for k in ks:
            try:
                caps.append(fusion.profile.P(k).to_int(64))
            except TowerTreeError:
                caps.append(None)
        ax2.bar([k - 0.18 for k in ks], got, width=0.36, label="|u(k)|")
        if all(c is not None for c in caps):
            ax2.bar(
                [k + 0.18 for k in ks],
                caps,
                width=0.36,
                color="0.75",
                label="P_k cap",
            )
        ax2.set_xticks(ks)
        ax2.set_xlabel("tracked index k")
        ax2.set_title("final bound vs cap")
        ax2.legend()
    return _save(fig, path)
