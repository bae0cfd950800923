"""Print MLGP designs for the 2D lambda^2 sweep and budget sweep (nu = 1.25, cost ratio 4)."""
import argparse

from mlgp import BudgetProblem, CostModel, DomainBox, KernelSpec, ModelSpec, budget_allocation


def design(budget, lam2, eta_search):
    model = ModelSpec(lam2, 1.0, 2, KernelSpec(1.25), DomainBox.unit(2))
    return budget_allocation(BudgetProblem(budget, model, CostModel(4.0), eta_search=eta_search))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-search", choices=("binary", "integer"), default="binary")
    args = ap.parse_args()
    print("lambda_sq sweep at B = 192")
    for lam2 in (1 / 8, 1 / 4, 1 / 2, 3 / 4):
        s = design(192.0, lam2, args.eta_search)
        print(f"  {lam2:<6.4g} {s.counts}  cost {s.total_cost:g}")
    print("budget sweep at lambda_sq = 1/2")
    for B in (96, 144, 192, 240):
        s = design(float(B), 0.5, args.eta_search)
        print(f"  {B:<6d} {s.counts}  cost {s.total_cost:g}")


if __name__ == "__main__":
    main()
