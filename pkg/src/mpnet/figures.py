"""Report figures for exploration runs.

Rendered to files next to the delimited report output: a states-per-depth
profile and a branching (out-degree) histogram, which together show where
the nondeterminism lives.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def explore_figures(depths: list[int], out_degrees: list[int],
                    outdir: str) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    written = []

    by_depth: dict[int, int] = {}
    for d in depths:
        by_depth[d] = by_depth.get(d, 0) + 1
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = sorted(by_depth)
    ax.bar(xs, [by_depth[x] for x in xs], width=0.9, color="#4878a8")
    ax.set_xlabel("depth (steps from initial marking)")
    ax.set_ylabel("states")
    ax.set_title("state-space depth profile")
    fig.tight_layout()
    path = os.path.join(outdir, "explore_depth.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    by_degree: dict[int, int] = {}
    for d in out_degrees:
        by_degree[d] = by_degree.get(d, 0) + 1
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = sorted(by_degree)
    ax.bar(xs, [by_degree[x] for x in xs], width=0.9, color="#a85448")
    ax.set_xlabel("enabled candidates per state")
    ax.set_ylabel("states")
    ax.set_title("branching histogram (>1 means nondeterminism)")
    fig.tight_layout()
    path = os.path.join(outdir, "explore_branching.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    return written
