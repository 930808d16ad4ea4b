"""Walk through the main quantities on two small example trees.

Run with ``python demos/worked_examples.py``.
"""

from phylorank.branch_lengths import edge_length_report
from phylorank.model_selection import lr_test
from phylorank.rank_inference import compare, expected_rank, rank_count, rank_prob
from phylorank.tree_core import parse_newick
from phylorank.tree_models import count_rank_functions, model_probabilities

ELEVEN = parse_newick("((((a,b),(c,d)),(e,f)),(((g,h),i),(j,k)));")
NINE = parse_newick("((((E,F),G),(H,I)),((A,B),(C,D)));")


def model_section() -> None:
    m = model_probabilities(ELEVEN)
    print("11-leaf tree")
    print(f"  rank functions         {count_rank_functions(ELEVEN)}")
    print(f"  P_Y[T, r]              {float(m.p_ranked_yule):.4e}")
    print(f"  P_Y[T]                 {float(m.p_yule):.4e}")
    print(f"  P[r | T]               {float(m.p_rank_given_tree):.4e}")
    print(f"  P_U[T]                 {float(m.p_uniform):.4e}")
    print(f"  P_Y / P_U              {float(m.bayes_factor_yule_over_uniform):.4f}")
    rep = lr_test(ELEVEN)
    print(f"  log ratio {rep.log_lr:.4f} -> {rep.decision}")


def rank_section() -> None:
    v = NINE.find_clade("E,F,G")
    print("\n9-leaf tree, clade E,F,G")
    print(f"  counts  {rank_count(NINE, v)}")
    print(f"  probs   {[str(p) for p in rank_prob(NINE, v).probs]}")
    mu, var = expected_rank(NINE, v)
    print(f"  mean {mu} ~ {float(mu):.3f}, variance {var} ~ {float(var):.3f}")
    u = NINE.find_clade("A,B")
    print(f"  P[r(A,B) < r(E,F,G)] = {compare(NINE, u, v)}")


def edge_section() -> None:
    print("\n9-leaf tree, expected interior edge durations")
    for parent, child, length in edge_length_report(NINE).as_rows():
        if length is not None:
            print(f"  {parent:>20} -> {child:<10} {length:.4f}")


if __name__ == "__main__":
    model_section()
    rank_section()
    edge_section()
