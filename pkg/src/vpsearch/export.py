"""Tree export for auditing: Graphviz dot and a parse-back structured form."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from vpsearch.errors import SnapshotError
from vpsearch.tree import REJECTED, ExplorationTree

STRUCTURED_KIND = "vpsearch-tree-export"


def _label(node) -> str:
    idea = node.idea if len(node.idea) <= 40 else node.idea[:39] + "\u2026"
    reward = f"{node.reward:.3f}" if node.reward is not None else "-"
    return f"#{node.id} [{node.status}]\\nR={reward} n={node.visit_count}\\n{idea}"


def to_dot(tree: ExplorationTree) -> str:
    """Graphviz digraph with one declaration per node and parent->child edges."""
    lines = ["digraph exploration {", "  node [shape=box, fontsize=10];"]
    for node in tree.nodes():
        attrs = [f'label="{_label(node)}"']
        if node.status == REJECTED:
            attrs.append("style=dashed")
            attrs.append('rejected="true"')
        elif node.reward is not None:
            attrs.append("style=filled")
            attrs.append('fillcolor="#e8f0fe"')
        lines.append(f"  n{node.id} [{', '.join(attrs)}];")
    for node in tree.nodes():
        for child_id in node.children:
            lines.append(f"  n{node.id} -> n{child_id};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_structured(tree: ExplorationTree) -> dict[str, Any]:
    """Lossless structured form: full histories and priority components."""
    return {"kind": STRUCTURED_KIND, "tree": tree.to_dict()}


def parse_structured(document: dict[str, Any]) -> ExplorationTree:
    if document.get("kind") != STRUCTURED_KIND:
        raise SnapshotError(f"not a structured tree export (kind={document.get('kind')!r})")
    return ExplorationTree.from_dict(document["tree"])


def write_export(tree: ExplorationTree, fmt: str, out_path: str | Path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "graph-dot":
        out_path.write_text(to_dot(tree))
    elif fmt == "structured":
        out_path.write_text(json.dumps(to_structured(tree), indent=2, sort_keys=True) + "\n")
    else:
        raise SnapshotError(f"unknown export format {fmt!r}")
