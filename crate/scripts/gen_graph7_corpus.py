"""Write all connected non-isomorphic 7-vertex graphs in graph6 format.

Uses the graph atlas shipped with networkx (all graphs up to 7 vertices).
"""
import sys

import networkx as nx


def main(path: str) -> None:
    graphs = [
        g for g in nx.graph_atlas_g()
        if g.number_of_nodes() == 7 and nx.is_connected(g)
    ]
    with open(path, "wb") as out:
        for g in graphs:
            out.write(nx.to_graph6_bytes(g, header=False))
    print(f"wrote {len(graphs)} graphs to {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/graph7c.g6")
