"""
What the conditioning field looks like
======================================

The network's third input is the strain-energy field of a uniform design,
squashed into [0, 0.4]. Raw energies span several orders of magnitude; the
gamma filter clips the top percentile and compresses with a power, the log
filter compresses with a logarithm.
"""
import sys
from pathlib import Path

import numpy as np

from neurotopo import problem_from_config
from neurotopo.condfield import gamma_filter, log_filter
from neurotopo.export import write_pgm
from neurotopo.optimize import initial_reference

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

problem = problem_from_config({"preset": "beam"})
c0, energy = initial_reference(problem)
print(f"uniform-design compliance {c0:.3f}; energies from {energy.min():.2e} to {energy.max():.2e}")

###############################################################################
# Histogram of each representation, ten bins over its own range. The raw field
# piles almost everything into the lowest bin; the filters spread it out.

fields = {
    "raw (scaled)": 0.4 * energy / energy.max(),
    "gamma": gamma_filter(energy, problem.volfrac, problem.domain).values,
    "log": log_filter(energy, problem.domain).values,
}
for name, values in fields.items():
    counts, _ = np.histogram(values, bins=10, range=(0, 0.4))
    print(f"{name:>13}: " + " ".join(f"{c:4d}" for c in counts))

###############################################################################
# Images: bright where the energy is high.

d = problem.domain
for name, values in fields.items():
    img = values.reshape(d.nelx, d.nely).T / 0.4
    write_pgm(out / f"field_{name.split()[0]}.pgm", 1 - img)
