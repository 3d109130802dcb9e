"""
Against a classical SIMP optimizer
==================================

The optimality-criteria SIMP loop with a sensitivity filter is the usual yard
stick. Here it runs to its own stopping tolerance on the cantilever, and the
conditioned network gets its standard 1000 epochs.
"""
import sys
from pathlib import Path

import numpy as np

from neurotopo import OptimizationConfig, problem_from_config, run_optimization, run_simp
from neurotopo.export import density_image, write_pgm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)
problem = problem_from_config({"preset": "beam"})

simp = run_simp(problem)
neural = run_optimization(problem, OptimizationConfig(epochs=1000, filter="log"))

###############################################################################
# SIMP designs are nearly black and white; the network's sigmoid output leaves
# more intermediate density, which the compliance pays for through the
# penalization exponent.

for name, hist in (("SIMP", simp), ("network + log field", neural)):
    grey = np.mean((hist.density > 0.1) & (hist.density < 0.9))
    print(f"{name:>20}: {len(hist):4d} iterations, compliance {hist.compliance[-1]:8.3f}, "
          f"volume {hist.vol_frac[-1]:.4f}, grey fraction {grey:.2f}, {hist.wall_time:.1f}s")
    write_pgm(out / f"compare_{name.split()[0].lower()}.pgm", density_image(hist.density, problem.domain))
