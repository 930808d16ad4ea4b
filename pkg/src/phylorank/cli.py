"""Command-line interface: ``phylorank <command> [options]``.

Every command writes deterministic output.  JSON objects keep their key
order, floats are rounded to 12 significant digits, and exact rationals
are also emitted as ``"num/den"`` strings.

Exit codes: 0 success, 1 other error, 2 unparseable input or usage,
3 unknown vertex, 4 missing or malformed leaf states.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .branch_lengths import PENDANT_TO_LAST_EVENT, PENDANT_UNDEFINED, edge_length_report
from .model_selection import (
    entropy_uniform,
    entropy_yule,
    kl_uniform_yule,
    kl_yule_uniform,
    lr_test,
    power_bound,
    s_n,
    s_prime_n,
)
from .rank_inference import compare, rank_count, rank_prob, rank_prob_gen
from .simulate import MODELS, SimConfig, simulate
from .trait_rates import GAMMA_NAMES, RateParams, psi_statistics
from .tree_core import (
    NewickError,
    PhyloTree,
    StatesError,
    TreeError,
    UnknownVertexError,
    lambda_values,
    parse_newick_many,
    read_states,
    resolve_vertex,
    topology_key,
    write_newick,
)
from .tree_models import (
    PolytomyError,
    bayes_factor_with_polytomies,
    count_rank_functions,
    model_probabilities,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_VERTEX = 3
EXIT_STATES = 4

THREADS_ENV = "PHYLORANK_THREADS"


class CliError(Exception):
    def __init__(self, message: str, code: int, **extra: Any):
        super().__init__(message)
        self.code = code
        self.extra = extra


# --------------------------------------------------------------------------
# formatting helpers


def fnum(x: float | None) -> float | None:
    """Round to 12 significant digits; non-finite values become ``None``."""
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def frac_json(q: Fraction) -> dict[str, Any]:
    try:
        val = float(q)
    except OverflowError:
        val = math.inf
    out: dict[str, Any] = {"exact": f"{q.numerator}/{q.denominator}", "float": fnum(val)}
    if q > 0:
        out["log"] = fnum(math.log(q.numerator) - math.log(q.denominator))
    return out


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    cpus = os.cpu_count() or 1
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{THREADS_ENV} must be an integer, got {raw!r}", EXIT_ERROR) from None
    return max(1, min(n, cpus))


# --------------------------------------------------------------------------
# input helpers


def _read_text(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_ERROR) from None


def _digest(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def _load_trees(path: str) -> tuple[list[PhyloTree], str]:
    text = _read_text(path)
    try:
        return parse_newick_many(text), text
    except NewickError as exc:
        raise CliError(str(exc), EXIT_PARSE, offset=exc.offset) from None
    except TreeError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None


def _load_tree(path: str) -> tuple[PhyloTree, str]:
    trees, text = _load_trees(path)
    if len(trees) != 1:
        raise CliError(f"expected one tree in {path}, found {len(trees)}", EXIT_PARSE)
    return trees[0], text


def _vertex(t: PhyloTree, spec: str, *, interior: bool = True) -> int:
    try:
        v = resolve_vertex(t, spec)
    except UnknownVertexError as exc:
        raise CliError(str(exc), EXIT_VERTEX) from None
    if interior and t.is_leaf(v):
        raise CliError(f"vertex {spec!r} is a leaf; an interior vertex is required", EXIT_VERTEX)
    return v


def _envelope(command: str, digest: str, result: Any) -> dict[str, Any]:
    return {"command": command, "inputs_sha256": digest, "result": result}


# --------------------------------------------------------------------------
# commands


def tree_stats(t: PhyloTree) -> dict[str, Any]:
    lam = lambda_values(t)
    out: dict[str, Any] = {
        "n": t.n_leaves,
        "n_interior": t.n_interior,
        "binary": t.is_binary,
        "lambda_product": str(lam.product),
        "rank_function_count": str(count_rank_functions(t)) if t.n_interior else "0",
    }
    if t.is_binary and t.n_interior:
        mp = model_probabilities(t)
        out.update(
            {
                "p_uniform": frac_json(mp.p_uniform),
                "p_yule": frac_json(mp.p_yule),
                "p_rank_given_tree": frac_json(mp.p_rank_given_tree),
                "p_ranked_yule": frac_json(mp.p_ranked_yule),
                "bayes_factor": frac_json(mp.bayes_factor_yule_over_uniform),
            }
        )
    else:
        out.update({"p_uniform": None, "p_yule": None, "p_rank_given_tree": None, "p_ranked_yule": None})
        try:
            out["bayes_factor"] = frac_json(bayes_factor_with_polytomies(t)) if t.n_interior else None
            out["bayes_factor_approximate"] = True
        except PolytomyError:
            out["bayes_factor"] = None
    return out


def cmd_stats(args: argparse.Namespace) -> str:
    trees, text = _load_trees(args.tree)
    digest = _digest(text)
    if args.aggregate:
        counts = Counter(topology_key(t) for t in trees)
        total = len(trees)
        rows = [
            {"topology": k, "count": c, "frequency": fnum(c / total)}
            for k, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        result: Any = {"n_trees": total, "n_topologies": len(counts), "topologies": rows}
    else:
        workers = worker_count()
        if workers > 1 and len(trees) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                per = list(pool.map(tree_stats, trees, chunksize=max(1, len(trees) // (4 * workers))))
        else:
            per = [tree_stats(t) for t in trees]
        result = per[0] if len(per) == 1 else {"n_trees": len(per), "trees": per}
    return dump_json(_envelope("stats", digest, result))


def cmd_rankprob(args: argparse.Namespace) -> str:
    t, text = _load_tree(args.tree)
    v = _vertex(t, args.vertex)
    counts = None
    if args.general or not t.is_binary:
        dist = rank_prob_gen(t, v)
    else:
        dist = rank_prob(t, v)
        counts = rank_count(t, v)
    mean, var = dist.mean(), dist.variance()
    rows = []
    for i, p in enumerate(dist.probs, 1):
        row: dict[str, Any] = {"rank": i, "prob": f"{p.numerator}/{p.denominator}", "float": fnum(float(p))}
        if counts is not None:
            row["count"] = str(counts[i - 1])
        rows.append(row)
    result = {
        "vertex": args.vertex,
        "clade": t.clade_key(v),
        "method": "general" if counts is None else "binary",
        "distribution": rows,
        "mean": frac_json(mean),
        "variance": {"exact": f"{var.numerator}/{var.denominator}", "float": fnum(float(var))},
    }
    return dump_json(_envelope("rankprob", _digest(text, args.vertex), result))


def cmd_compare(args: argparse.Namespace) -> str:
    t, text = _load_tree(args.tree)
    u = _vertex(t, args.u)
    v = _vertex(t, args.v)
    if u == v:
        raise CliError("--u and --v name the same vertex", EXIT_VERTEX)
    try:
        p = compare(t, u, v)
    except TreeError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    result = {
        "u": t.clade_key(u),
        "v": t.clade_key(v),
        "p_u_before_v": {"exact": f"{p.numerator}/{p.denominator}", "float": fnum(float(p))},
    }
    return dump_json(_envelope("compare", _digest(text, args.u, args.v), result))


def cmd_edgelens(args: argparse.Namespace) -> str:
    t, text = _load_tree(args.tree)
    try:
        report = edge_length_report(
            t,
            pendant_policy=args.pendant_policy,
            terminal_offset=args.terminal_offset,
            workers=worker_count(),
        )
    except PolytomyError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    if args.format == "json":
        rows = [
            {
                "parent_clade": e.parent_clade,
                "child_clade": e.child_clade,
                "expected_length": fnum(e.expected_length),
                "pendant": e.pendant,
            }
            for e in report.edges
        ]
        result = {"pendant_policy": report.pendant_policy, "terminal_offset": report.terminal_offset, "edges": rows}
        return dump_json(_envelope("edgelens", _digest(text, args.pendant_policy), result))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parent_clade", "child_clade", "expected_length"])
    for e in report.edges:
        val = fnum(e.expected_length)
        w.writerow([e.parent_clade, e.child_clade, "undefined" if val is None else repr(val)])
    return buf.getvalue()


def cmd_modeltest(args: argparse.Namespace) -> str:
    t, text = _load_tree(args.tree)
    try:
        rep = lr_test(t, resolve_polytomies=args.resolve_polytomies)
    except TreeError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    result = {
        "n": rep.n,
        "log_lr": fnum(rep.log_lr),
        "decision": rep.decision,
        "bayes_factor": frac_json(rep.bayes_factor),
        "approximate": rep.approximate,
        "power_bound": fnum(rep.power_bound),
        "kl_yu": fnum(rep.kl_yu),
        "kl_uy": fnum(rep.kl_uy),
    }
    return dump_json(_envelope("modeltest", _digest(text), result))


def cmd_klstats(args: argparse.Namespace) -> str:
    n = args.n
    if n < 3:
        raise CliError("--n must be at least 3", EXIT_ERROR)
    result = {
        "n": n,
        "J_Y": fnum(entropy_yule(n)),
        "J_U": fnum(entropy_uniform(n)),
        "kl_yu": fnum(kl_yule_uniform(n)),
        "kl_uy": fnum(kl_uniform_yule(n)),
        "S_n": fnum(s_n(n)),
        "S_prime_n": fnum(s_prime_n(n)),
        "power_bound": fnum(power_bound(n)),
    }
    return dump_json(_envelope("klstats", _digest(str(n)), result))


def cmd_specrate(args: argparse.Namespace) -> str:
    t, text = _load_tree(args.tree)
    states_text = _read_text(args.states)
    try:
        states = read_states(states_text, is_text=True)
        rates = RateParams(args.ralpha, args.rbeta)
    except StatesError as exc:
        raise CliError(str(exc), EXIT_STATES) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    try:
        stats = psi_statistics(t, states, rates)
    except StatesError as exc:
        raise CliError(str(exc), EXIT_STATES) from None
    except TreeError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    edges = []
    for u, v in t.edges():
        post = stats.posteriors[v]
        edges.append(
            {
                "parent_clade": t.clade_key(u),
                "child_clade": t.clade_key(v),
                "length": fnum(t.length(v)),
                "posterior": {g: fnum(float(p)) for g, p in zip(GAMMA_NAMES, post)},
            }
        )
    result = {
        "r_alpha": fnum(args.ralpha),
        "r_beta": fnum(args.rbeta),
        "psi": {g: fnum(x) for g, x in zip(GAMMA_NAMES, stats.psi)},
        "expected_count": {g: fnum(x) for g, x in zip(GAMMA_NAMES, stats.denominators)},
        "expected_length": {g: fnum(x) for g, x in zip(GAMMA_NAMES, stats.numerators)},
        "edges": edges,
    }
    digest = _digest(text, states_text, repr(args.ralpha), repr(args.rbeta))
    return dump_json(_envelope("specrate", digest, result))


def _states_path(base: str, index: int, total: int) -> Path:
    p = Path(base)
    if total == 1:
        return p
    return p.with_name(f"{p.stem}_{index:0{len(str(total - 1))}d}{p.suffix}")


def cmd_simulate(args: argparse.Namespace) -> str:
    rates = None
    if args.ralpha is not None or args.rbeta is not None:
        if args.ralpha is None or args.rbeta is None:
            raise CliError("--ralpha and --rbeta must be given together", EXIT_ERROR)
        rates = RateParams(args.ralpha, args.rbeta)
    if args.states_out and rates is None:
        raise CliError("--states-out needs --ralpha and --rbeta", EXIT_ERROR)
    try:
        config = SimConfig(args.model, args.n, args.seed, args.replicates, rates, args.terminal_offset)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_ERROR) from None
    lines = []
    for rep in simulate(config, workers=worker_count()):
        lines.append(write_newick(rep.tree))
        if args.states_out and rep.states is not None:
            path = _states_path(args.states_out, rep.index, config.replicates)
            body = "".join(f"{lab}\t{rep.states[lab]}\n" for lab in sorted(rep.states))
            path.write_text(body, encoding="utf-8")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError(message, EXIT_PARSE, usage=True)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phylorank", description="Exact rank and tree-model statistics for rooted phylogenies.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("stats", help="tree counts, model probabilities and Bayes factor")
    s.add_argument("--tree", required=True, help="Newick file ('-' for stdin); may hold several trees")
    s.add_argument("--aggregate", action="store_true", help="report topology frequencies across all trees")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("rankprob", help="rank distribution of an interior vertex")
    s.add_argument("--tree", required=True)
    s.add_argument("--vertex", required=True, help="interior label or comma-joined clade leaf set")
    s.add_argument("--general", action="store_true", help="use the polytomy-capable recursion")
    s.set_defaults(func=cmd_rankprob)

    s = sub.add_parser("compare", help="probability that u precedes v")
    s.add_argument("--tree", required=True)
    s.add_argument("--u", required=True)
    s.add_argument("--v", required=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("edgelens", help="expected edge durations under the continuous Yule process")
    s.add_argument("--tree", required=True)
    s.add_argument(
        "--pendant-policy",
        choices=[PENDANT_UNDEFINED, PENDANT_TO_LAST_EVENT],
        default=PENDANT_UNDEFINED,
    )
    s.add_argument("--terminal-offset", type=float, default=0.0)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_edgelens)

    s = sub.add_parser("modeltest", help="Yule-versus-uniform likelihood-ratio test")
    s.add_argument("--tree", required=True)
    s.add_argument("--resolve-polytomies", action="store_true")
    s.set_defaults(func=cmd_modeltest)

    s = sub.add_parser("klstats", help="entropies, divergences and the power bound for n leaves")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_klstats)

    s = sub.add_parser("specrate", help="gamma-edge posteriors and Psi statistics")
    s.add_argument("--tree", required=True, help="Newick file with edge lengths")
    s.add_argument("--states", required=True, help="TSV: <leaf_label>\\t<alpha|beta>")
    s.add_argument("--ralpha", type=float, required=True)
    s.add_argument("--rbeta", type=float, required=True)
    s.add_argument("--format", choices=["json"], default="json")
    s.set_defaults(func=cmd_specrate)

    s = sub.add_parser("simulate", help="sample trees (one Newick per line)")
    s.add_argument("--model", choices=MODELS, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--ralpha", type=float)
    s.add_argument("--rbeta", type=float)
    s.add_argument("--terminal-offset", type=float, default=0.0)
    s.add_argument("--states-out", help="write leaf states TSV (suffixed by replicate index when >1)")
    s.add_argument("--out", help="write trees here instead of stdout")
    s.set_defaults(func=cmd_simulate)
    return p


def run(argv: Sequence[str] | None = None) -> tuple[int, str, str]:
    """Run a command and return ``(exit_code, stdout, stderr)``."""
    try:
        args = build_parser().parse_args(argv)
        out = args.func(args)
        if getattr(args, "out", None):
            Path(args.out).write_text(out, encoding="utf-8")
            out = ""
        return EXIT_OK, out, ""
    except CliError as exc:
        err = {"error": str(exc), "exit_code": exc.code}
        err.update(exc.extra)
        return exc.code, "", dump_json(err)
    except (TreeError, ValueError) as exc:
        return EXIT_ERROR, "", dump_json({"error": str(exc), "exit_code": EXIT_ERROR})
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0), "", ""


def main(argv: Sequence[str] | None = None) -> int:
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
