"""Cost-versus-precision curves for the two regimes (d = 1, nu = 1.25)."""
import math

import numpy as np

from mlgp import CostModel, DomainBox, KernelSpec, ModelSpec
from mlgp.bench import asymptotics_study

CASES = {
    "variance-dominated": (math.exp(-2.0), math.exp(0.5)),
    "cost-dominated": (math.exp(-1.0), math.e),
}


def main():
    eps = np.geomspace(1e-2, 1e-5, 13)
    for name, (lam2, a) in CASES.items():
        rep = asymptotics_study(ModelSpec(lam2, 1.0, 0, KernelSpec(1.25), DomainBox.unit(1)), CostModel(a), eps)
        print(f"{name}: lambda^2 = {lam2:.6g}, a = {a:.6g}, regime {rep.regime}")
        print(f"  MLGP slope {rep.mlgp_slope:.4f} (predicted {rep.predicted_mlgp_slope:.4f})")
        print(f"  single-level slope {rep.single_slope:.4f} (predicted {rep.predicted_single_slope:.4f})")


if __name__ == "__main__":
    main()
