"""Divergences between the two tree models and the power bound of the test.

Also runs a small calibration: how often the test accepts Yule on trees
drawn from each model.  Run with ``python demos/power_curve.py``.
"""

from phylorank.model_selection import kl_uniform_yule, kl_yule_uniform, lr_test, power_bound
from phylorank.simulate import replicate_rng, sample_uniform, sample_yule_ranked


def table() -> None:
    print(f"{'n':>6} {'KL(Y||U)':>10} {'KL(U||Y)':>10} {'power >=':>9}")
    for n in (5, 10, 50, 100, 300, 588, 1000):
        print(f"{n:>6} {kl_yule_uniform(n):>10.4f} {kl_uniform_yule(n):>10.4f} {power_bound(n):>9.4f}")
    first = next(n for n in range(3, 5000) if power_bound(n) > 0.85)
    print(f"bound first exceeds 0.85 at n = {first}")


def calibration(n: int = 100, reps: int = 500, seed: int = 1) -> None:
    yule_acc = sum(lr_test(sample_yule_ranked(n, replicate_rng(seed, i))[0]).accepts_yule for i in range(reps))
    unif_acc = sum(lr_test(sample_uniform(n, replicate_rng(seed + 1, i))).accepts_yule for i in range(reps))
    print(f"\nn = {n}, {reps} trees per model")
    print(f"  Yule trees accepted    {yule_acc / reps:.3f}")
    print(f"  uniform trees accepted {unif_acc / reps:.3f} (bound {1 - power_bound(n):.3f})")


if __name__ == "__main__":
    table()
    calibration()
