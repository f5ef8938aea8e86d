"""Build the desk corpus: small instances where the myopic upper bound is a
fair proxy for the optimum, so end-to-end ratio columns stay meaningful."""
import pathlib

import numpy as np

from netrev import SocialNetwork, generate, save_network

OUT = pathlib.Path(__file__).resolve().parents[1] / "corpus"
OUT.mkdir(exist_ok=True)

nets = {
    "cycle4.txt": generate("cycle", 4),
    "cycle5.txt": generate("cycle", 5),
    "cycle6.txt": generate("cycle", 6),
    "path6.txt": generate("path", 6),
    "bipartite33.txt": generate("bipartite", 6, parts=(3, 3)),
    "random12.txt": generate("random", 12, density=0.18, weight_range=(0.2, 1.0),
                             self_weight_range=(0.05, 0.15), seed=12),
    "dag4.txt": generate("complete_dag", 4),
    "dag6.txt": generate("complete_dag", 6),
    "dbipartite33.txt": SocialNetwork(
        True, 6, [(i, 3 + j, 1.0) for i in range(3) for j in range(3)]),
}

rng = np.random.default_rng(10)
edges = [(i, j, float(rng.uniform(0.2, 1.0)))
         for i in range(10) for j in range(i + 1, 10) if rng.random() < 0.4]
nets["dagrand10.txt"] = SocialNetwork(True, 10, edges)

rng = np.random.default_rng(21)
tree = []
for v in range(1, 12):
    u = int(rng.integers(0, v))
    tree.append((u, v, float(rng.uniform(0.2, 1.0))))
nets["randtree12.txt"] = SocialNetwork(False, 12, tree)

for name, g in nets.items():
    (OUT / name).write_text(save_network(g) + "\n")
    print(f"{name}: n={g.n} directed={g.directed} W={g.W:.3f} N={g.N:.3f}")
