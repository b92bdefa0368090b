"""Command-line experiment driver: one subcommand per capability.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 resource limit, 4 internal or numerical anomaly.  Every failure also
writes one JSON diagnostic line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import TextIO

import numpy as np

from . import acceptance, bohr, configs, gridnorm, increment, sumfree
from .errors import AddcombError, InvalidArgument, NumericalAnomaly, PreconditionViolation, ResourceLimit
from .group import FiniteAbelianGroup, make_group
from .report import to_csv, to_text

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RESOURCE, EXIT_ANOMALY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgument(message)


# input helpers ------------------------------------------------------------------


def parse_group(text: str) -> FiniteAbelianGroup:
    try:
        moduli = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InvalidArgument(f"bad --group {text!r}; expected comma-separated moduli") from None
    return make_group(moduli)


def read_set_file(path: str, G: FiniteAbelianGroup | None = None) -> list[int]:
    """One entry per line: an integer, or comma-separated coordinates for product groups.

    Returns integers in interval mode and element indices in group mode.
    """
    p = Path(path)
    if not p.is_file():
        raise InvalidArgument(f"set file {path!r} does not exist")
    out = []
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            parts = [int(t) for t in line.strip("()").replace(" ", "").split(",")]
        except ValueError:
            raise InvalidArgument(f"{path}:{lineno}: cannot parse {raw!r}") from None
        if G is None or G.rank == 1:
            if len(parts) != 1:
                raise InvalidArgument(f"{path}:{lineno}: expected a single integer")
            out.append(parts[0] % G.order if G is not None else parts[0])
        else:
            if len(parts) != G.rank:
                raise InvalidArgument(f"{path}:{lineno}: expected {G.rank} coordinates")
            out.append(G.index_of(parts))
    return sorted(set(out))


def group_set(args, G: FiniteAbelianGroup) -> list[int]:
    if args.set_file:
        return read_set_file(args.set_file, G)
    if args.density is None:
        raise InvalidArgument("give --set-file or --density")
    return configs.random_set(G, args.density, args.seed)


def interval_set(args) -> list[int]:
    if args.set_file:
        return read_set_file(args.set_file)
    if args.interval is None or args.density is None:
        raise InvalidArgument("give --set-file, or --interval with --density")
    return configs.random_set(args.interval, args.density, args.seed)


def need_group(args) -> FiniteAbelianGroup:
    if not args.group:
        raise InvalidArgument("--group is required")
    return parse_group(args.group)


def parse_characters(text: str, G: FiniteAbelianGroup):
    """Characters separated by ';', coordinates by ','."""
    try:
        return [G.character([int(c) for c in part.split(",")]) for part in text.split(";") if part.strip()]
    except ValueError:
        raise InvalidArgument(f"bad --freqs {text!r}") from None


# subcommands -----------------------------------------------------------------------


def cmd_bohr(args):
    G = need_group(args)
    B = bohr.bohr_build(parse_characters(args.freqs, G), args.width, G)
    reg = bohr.is_regular(B)
    lam = bohr.find_regular_dilate(B)
    row = {"group": str(G), "rank": B.rank, "width": B.width, "size": B.size, "regular": reg.regular,
           "witness_delta": reg.witness, "regular_dilate": lam, "regular_dilate_size": B.dilate_size(lam)}
    if 0 <= B.width <= 2:
        sb = bohr.size_bound_check(B)
        row.update(size_lower_bound=sb.lower_bound, size_bound_ok=sb.passed)
    return [row], EXIT_OK


def _read_table(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise InvalidArgument(f"table file {path!r} does not exist")
    try:
        rows = [[float(t) for t in line.replace(",", " ").split()] for line in p.read_text().splitlines() if line.strip()]
        arr = np.array(rows, dtype=float)
    except ValueError:
        raise InvalidArgument(f"cannot parse table {path!r}") from None
    if arr.ndim != 2:
        raise InvalidArgument("table rows must have equal length")
    return arr


def cmd_gridnorm(args):
    if args.table_file:
        f = _read_table(args.table_file)
    else:
        rng = np.random.default_rng(args.seed)
        f = (rng.random((args.rows, args.cols)) < (0.5 if args.density is None else args.density)).astype(float)
    val = gridnorm.grid_norm(f, args.p or 1, args.q, cap=args.cap_grid)
    return [{"rows": f.shape[0], "cols": f.shape[1], "p": args.p or 1, "q": args.q, "mean": float(f.mean()), "grid_norm": val}], EXIT_OK


def cmd_count_hom(args):
    if args.instance_file:
        try:
            inst = gridnorm.CountingInstance.from_dict(json.loads(Path(args.instance_file).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InvalidArgument(f"cannot read instance: {exc}") from None
    else:
        k = args.k or 3
        H = gridnorm.OrientedGraph.transitive_complete(k)
        rng = np.random.default_rng(args.seed)
        dens = 0.5 if args.density is None else args.density
        n = args.size
        inst = gridnorm.CountingInstance(H, (n,) * k, {e: rng.random((n, n)) < dens for e in H.edges})
    eps = Fraction(args.eps if args.eps is not None else 0.5)
    count = gridnorm.homomorphism_count(inst, cap=args.cap_tuples)
    dev = gridnorm.deviation_test(inst, eps)
    row = {"k": inst.graph.k, "m": inst.graph.m, "count": count, "density": dev.density, "expected": dev.expected,
           "eps": eps, "fired": dev.fired, "delta": dev.delta}
    code = EXIT_OK
    if dev.fired:
        w = gridnorm.counting_dichotomy(inst, eps)
        ok = w.variant == "none" or gridnorm.verify_witness(inst, w)
        row.update(variant=w.variant, edge=list(w.edge) if w.edge else None, S=list(w.S), T=list(w.T),
                   witness_mean=w.mean, heuristic=w.heuristic, verified=ok)
        code = EXIT_OK if ok else EXIT_VERIFY
    return [row], code


def cmd_count_configs(args):
    G = need_group(args)
    A = group_set(args, G)
    r = configs.count_k_configurations(A, args.k or 3, G, cap=args.cap_nodes)
    return [{"group": str(G), "set_size": len(A), "k": args.k or 3, "count": r.count, "probability": r.probability,
             "probability_float": float(r.probability), "nondegenerate_ordered": r.nondegenerate_ordered}], EXIT_OK


def cmd_find_config(args):
    G = need_group(args)
    A = group_set(args, G)
    hit = configs.find_nondegenerate_configuration(A, args.k or 3, G, cap=args.cap_nodes)
    gens = [G.element(i).to_json() for i in hit] if hit else None
    return [{"group": str(G), "set_size": len(A), "k": args.k or 3, "found": hit is not None,
             "generators": json.dumps(gens) if gens else None}], EXIT_OK


def cmd_behrend(args):
    if args.n is None:
        raise InvalidArgument("--n is required")
    S = configs.behrend_set(args.n)
    return [{"n": args.n, "size": len(S), "three_ap_free": not configs.has_3ap(S), "elements": S}], EXIT_OK


def cmd_embed(args):
    N = args.n or args.interval
    if N is None:
        raise InvalidArgument("--n is required")
    args.interval = N
    A = interval_set(args)
    eq = configs.check_embedding(A, N, args.k or 3)
    return [{"n": N, "modulus": 2 * N + 1, "set_size": len(A), "k": args.k or 3,
             "integer_config": eq.integer_side, "group_config": eq.group_side, "agree": eq.agree}], \
        (EXIT_OK if eq.agree else EXIT_VERIFY)


def cmd_sift(args):
    G = need_group(args)
    dens = 0.5 if args.density is None else args.density
    if args.set_file:
        A1 = A2 = read_set_file(args.set_file, G)
    else:
        A1 = configs.random_set(G, dens, args.seed)
        A2 = configs.random_set(G, dens, args.seed + 1)
    everything = list(range(G.order))
    inst = increment.SiftInstance(G, A1, A2, everything, everything, args.p or 6,
                                  args.eps if args.eps is not None else 0.25,
                                  args.delta if args.delta is not None else 0.5, args.seed)
    out = increment.sift(inst, args.trials)
    ok = out.accepted and increment.verify_sift(inst, out)
    row = {"group": str(G), "seed": args.seed, "p": inst.p, "eps": inst.eps, "delta": inst.delta,
           "alpha1": inst.alpha1, "alpha2": inst.alpha2, "accepted": out.accepted, "trials": out.trials,
           "alpha1_prime": out.alpha1p, "alpha2_prime": out.alpha2p, "floor1": out.floor1, "floor2": out.floor2,
           "s_mass": out.s_mass, "verified": ok}
    return [row], (EXIT_OK if ok else EXIT_VERIFY)


def cmd_lifting_scan(args):
    G = need_group(args)
    dens = 0.5 if args.density is None else args.density
    A1 = configs.random_set(G, dens, args.seed) or [0]
    A2 = configs.random_set(G, dens, args.seed + 1) or [0]
    C = configs.random_set(G, dens / 2, args.seed + 2) or [0]
    everything = list(range(G.order))
    eps = args.eps if args.eps is not None else 0.25
    r = increment.holder_lifting_scan(G, A1, A2, everything, everything, C, eps, args.p or 32)
    return [{"group": str(G), "seed": args.seed, "eps": eps, "inner": r.inner, "deviation": r.deviation,
             "alternative_i": r.alt_i, "p": r.p, "target": r.target,
             "norm_at_p": r.norms[-1] if r.norms else None}], EXIT_OK


def cmd_increment_search(args):
    G = need_group(args)
    freqs = parse_characters(args.freqs or "1", G)
    B = bohr.regular_dilate(bohr.bohr_build(freqs, args.width, G))
    if args.set_file:
        A = read_set_file(args.set_file, G)
    else:
        rng = np.random.default_rng(args.seed)
        dens = 0.5 if args.density is None else args.density
        A = [int(b) for b in B.members if rng.random() < dens]
    A = [a for a in A if a in B]
    cfg = increment.IncrementConfig()
    if args.delta is not None:
        cfg.delta_target = args.delta
    rep = increment.increment_search(A, B, args.k or 3, cfg)
    w = rep.witness
    row = {"group": str(G), "seed": args.seed, "k": args.k or 3, "bohr_size": B.size, "alpha": rep.alpha,
           "proportion": rep.proportion, "threshold_shape": rep.threshold_shape, "delta_target": rep.delta_target,
           "found": w is not None, "x": w.x if w else None, "sigma": w.sigma if w else None,
           "new_rank": len(w.frequencies) if w else None, "new_width": w.width if w else None,
           "density": w.density if w else None, "verified": rep.verified, "candidates": rep.candidates_tried,
           "best_ratio": rep.best_ratio, "notes": rep.notes}
    return [row], (EXIT_VERIFY if w is not None and not rep.verified else EXIT_OK)


def cmd_sumfree_m(args):
    A = interval_set(args)
    r = sumfree.exact_M(A, cap=args.cap_set)
    return [{"set_size": len(A), "M": r.value, "witness": list(r.witness),
             "sumfree_verified": sumfree.is_sumfree_wrt(r.witness, A)}], EXIT_OK


def cmd_sumfree_greedy(args):
    A = interval_set(args)
    B = sumfree.greedy_sumfree(A)
    ok = sumfree.is_sumfree_wrt(B, A)
    return [{"set_size": len(A), "greedy_size": len(B), "log2_floor": int(np.floor(np.log2(len(A)))),
             "sumfree_verified": ok, "witness": list(B)}], (EXIT_OK if ok else EXIT_VERIFY)


def cmd_embed_freiman(args):
    A = interval_set(args)
    r = sumfree.ruzsa_embed(A, trials=args.trials, seed=args.seed)
    return [{"set_size": len(A), "N": r.N, "ok": r.ok, "trials": r.trials, "subset_size": len(r.A_prime),
             "quadruples_checked": r.quadruples_checked, "subset": list(r.A_prime),
             "image": [r.mapping[a] for a in r.A_prime]}], EXIT_OK


def cmd_pipeline(args):
    X = interval_set(args)
    Y = sorted(set(read_set_file(args.y_file)) | set(X)) if args.y_file else X
    S = sumfree.pipeline_extract(X, Y, args.k or 3, node_cap=args.cap_nodes)
    return [{"x_size": len(X), "y_size": len(Y), "k": args.k or 3, "found": S is not None,
             "S": list(S) if S else None}], EXIT_OK


def cmd_verify(args, stdout: TextIO):
    scope = [s.strip() for s in (args.scope or "all").split(",") if s.strip()]
    numbers = acceptance.select(scope)
    rows = []
    ok = True
    for n in numbers:
        res = acceptance.run_criterion(n)
        print(res.line, file=stdout)
        ok &= res.passed
        rows.append({"criterion": n, "title": res.title, "passed": res.passed})
    print(f"{sum(r['passed'] for r in rows)}/{len(rows)} criteria passed", file=stdout)
    return rows, (EXIT_OK if ok else EXIT_VERIFY)


COMMANDS = {
    "bohr": cmd_bohr,
    "gridnorm": cmd_gridnorm,
    "count-hom": cmd_count_hom,
    "count-configs": cmd_count_configs,
    "find-config": cmd_find_config,
    "behrend": cmd_behrend,
    "embed": cmd_embed,
    "sift": cmd_sift,
    "lifting-scan": cmd_lifting_scan,
    "increment-search": cmd_increment_search,
    "sumfree-m": cmd_sumfree_m,
    "sumfree-greedy": cmd_sumfree_greedy,
    "embed-freiman": cmd_embed_freiman,
    "pipeline": cmd_pipeline,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--group", help="moduli, comma separated, e.g. 3,5")
    common.add_argument("--interval", type=int, help="work inside [1, N]")
    common.add_argument("--set-file", help="one integer (or coordinate tuple) per line")
    common.add_argument("--density", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--p", type=int)
    common.add_argument("--trials", type=int, default=10_000)
    common.add_argument("--csv", metavar="PATH", help="write CSV to PATH ('-' for stdout)")
    common.add_argument("--cap-nodes", type=int, default=configs.CLIQUE_NODE_CAP)
    common.add_argument("--cap-tuples", type=int, default=gridnorm.TUPLE_SPACE_CAP)
    common.add_argument("--cap-grid", type=int, default=gridnorm.GRID_COST_CAP)
    common.add_argument("--cap-set", type=int, default=sumfree.MIS_CAP)

    parser = _Parser(prog="addcomb", description="Additive-combinatorics experiment driver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "bohr":
            sp.add_argument("--freqs", required=True, help="characters as coefficient tuples, ';'-separated")
            sp.add_argument("--width", type=float, required=True)
        elif name == "increment-search":
            sp.add_argument("--freqs", help="frequency set of the ambient Bohr set (default: 1)")
            sp.add_argument("--width", type=float, default=1.0)
        elif name == "gridnorm":
            sp.add_argument("--table-file")
            sp.add_argument("--rows", type=int, default=4)
            sp.add_argument("--cols", type=int, default=4)
            sp.add_argument("--q", type=int, default=1)
        elif name == "count-hom":
            sp.add_argument("--instance-file", help="JSON instance: k, edges, sizes, tables")
            sp.add_argument("--size", type=int, default=2)
        elif name in ("behrend", "embed"):
            sp.add_argument("--n", type=int)
        elif name == "pipeline":
            sp.add_argument("--y-file")
        elif name == "verify":
            sp.add_argument("--scope", help="comma-separated modules or criterion numbers (default: all)")
    return parser


def _diagnose(status: str, exc: BaseException, stderr: TextIO):
    print(json.dumps({"status": status, "error": type(exc).__name__, "message": str(exc)}), file=stderr)


def main(argv: list[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "verify":
            rows, code = cmd_verify(args, stdout)
        else:
            rows, code = COMMANDS[args.command](args)
        if args.csv:
            text = to_csv(rows)
            if args.csv == "-":
                stdout.write(text)
            else:
                Path(args.csv).write_text(text)
        elif args.command != "verify":
            stdout.write(to_text(rows))
        if code == EXIT_VERIFY:
            print(json.dumps({"status": "verify-failed", "command": args.command}), file=stderr)
        return code
    except (InvalidArgument, PreconditionViolation) as exc:
        _diagnose("invalid-config", exc, stderr)
        return EXIT_CONFIG
    except ResourceLimit as exc:
        _diagnose("resource-limit", exc, stderr)
        return EXIT_RESOURCE
    except (NumericalAnomaly, AddcombError) as exc:
        _diagnose("internal-anomaly", exc, stderr)
        return EXIT_ANOMALY
    except OSError as exc:
        _diagnose("invalid-config", exc, stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last-resort classification
        _diagnose("internal-anomaly", exc, stderr)
        return EXIT_ANOMALY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
