"""Command-line interface.

Exit codes: 0 success, 1 infeasible or no solution found, 2 invalid input,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .core import DemandSequence, Instance, Solution, random_instance, relabel_random, \
    round_robin_one_factorization, verify_instance, verify_solution
from .errors import ColourMatchError, InvalidInputError, InvariantViolation, PreconditionError, \
    SizeLimitError, SplitNotFound, EmbeddingFailure
from .hypermatch import nibble_matching, random_linear_hypergraph
from .necklace import Necklace, split_necklace
from .numeric import derive_seed, parse_rational
from .oracle import DEFAULT_CAP, exact_colourful_matching, exact_search
from .solver import STRATEGIES, solve
from .steiner import SteinerTripleSystem, Turkey, embed_turkey, sts_of_order

EXIT_OK, EXIT_NO, EXIT_INPUT, EXIT_BUG = 0, 1, 2, 3

log = logging.getLogger("colourmatch")


def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="seed for all randomness (default 0)")
    p.add_argument("--epsilon", default=d("1/10"), help="slack as a rational, e.g. 1/10 or 0.1")
    p.add_argument("--format", choices=("json", "text"), default=d("json"))
    p.add_argument("--fallback", choices=("on", "off"), default=d("on"))
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    p = argparse.ArgumentParser(prog="colourmatch", description="Colourful matchings in 1-factorizations.")
    p.add_argument("--version", action="version", version=__version__)
    _globals(p, suppress=False)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", parents=[common], help="circle-method instance")
    g.add_argument("--n2", type=int, required=True)
    g.add_argument("--ell", type=int, help="number of matchings (default n2-1, all rounds)")
    g.add_argument("--relabel", action="store_true", help="apply a seeded random vertex relabelling")

    s = sub.add_parser("solve", parents=[common], help="solve an instance")
    s.add_argument("--instance", default="-", help="instance JSON file ('-' for stdin)")
    s.add_argument("--demands", required=True, help="comma-separated demands")
    s.add_argument("--strategy", choices=STRATEGIES, default="auto")
    s.add_argument("--chosen", help="comma-separated matching indices, one per demand")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP, help="vertex cap for exhaustive search")
    s.add_argument("--dump-artifacts", help="write plan/chain/certificate JSON here")

    v = sub.add_parser("verify", parents=[common], help="check a solution")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", default="-")
    v.add_argument("--demands", help="defaults to the demands recorded in the solution")

    o = sub.add_parser("oracle", parents=[common], help="exhaustive search")
    o.add_argument("--instance", default="-")
    o.add_argument("--demands", required=True)
    o.add_argument("--chosen")
    o.add_argument("--cap", type=int, default=DEFAULT_CAP)

    nk = sub.add_parser("necklace", parents=[common], help="fair necklace split")
    nk.add_argument("--beads", required=True, help="colour letters, e.g. AABBC")
    nk.add_argument("--q", type=int, required=True)

    nb = sub.add_parser("nibble", parents=[common], help="nibble statistics as CSV")
    nb.add_argument("--nx", type=int, default=2000, help="x-vertices (even)")
    nb.add_argument("--degree", type=int, default=30)
    nb.add_argument("--seeds", type=int, default=20)

    e = sub.add_parser("embed", parents=[common], help="embed a turkey into a Steiner triple system")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--sts", help="STS JSON file: {'order': v, 'triples': [...]}")
    src.add_argument("--order", type=int, help="build a Bose/Skolem system of this order")
    e.add_argument("--turkey", required=True)

    b = sub.add_parser("bench", parents=[common], help="seeded solve benchmark as CSV")
    b.add_argument("--n2", default="8,16,32,64", help="comma-separated vertex counts")
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--strategies", default="auto")
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--load", default="1/3", help="total demand as a fraction of n")
    b.add_argument("--jobs", type=int, default=1)
    return p


# -- helpers --------------------------------------------------------------------


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc


def _read_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise InvalidInputError(f"bad {what}: {text!r}") from exc


def _load_instance(path: str) -> Instance:
    inst = Instance.from_json(_read_json(path))
    bad = verify_instance(inst)
    if bad:
        raise InvalidInputError("invalid instance: " + "; ".join(map(str, bad[:5])))
    return inst


class _Out:
    def __init__(self, args):
        self.args = args
        self.buf = io.StringIO()

    def write(self, text: str):
        self.buf.write(text)
        if not text.endswith("\n"):
            self.buf.write("\n")

    def emit(self, obj, text: str | None = None):
        if self.args.format == "text" and text is not None:
            self.write(text)
        else:
            self.write(json.dumps(obj, default=str))

    def flush(self):
        data = self.buf.getvalue()
        if self.args.out:
            with open(self.args.out, "w") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)


# -- commands -------------------------------------------------------------------


def cmd_generate(args, out: _Out) -> int:
    n2 = args.n2
    if args.ell is None:
        inst = round_robin_one_factorization(n2)
        if args.relabel:
            inst = relabel_random(inst, args.seed)
    else:
        inst = random_instance(n2, args.ell, args.seed)
    out.emit(inst.to_json(), f"n2={inst.n2} ell={inst.ell}")
    return EXIT_OK


def _solution_doc(sol: Solution | None, res, args, demands) -> dict:
    doc = sol.to_json() if sol else {"edges": [], "chosen": [], "counts": []}
    doc["meta"] = {"seed": args.seed, "status": res.status, "tier": res.tier,
                   "strategy": getattr(args, "strategy", "exact"), "ell_used": res.ell_used,
                   "demands": demands, "epsilon": str(parse_rational(args.epsilon))}
    return doc


def cmd_solve(args, out: _Out) -> int:
    inst = _load_instance(args.instance)
    demands = _ints(args.demands, "demands")
    dem = DemandSequence(demands, args.epsilon)
    chosen = _ints(args.chosen, "chosen") if args.chosen else None
    log.info("seed=%s strategy=%s", args.seed, args.strategy)
    res = solve(inst, dem, strategy=args.strategy, seed=args.seed, fallback=args.fallback == "on",
                chosen=chosen, cap=args.cap)
    for line in res.log:
        log.info(line)
    if args.dump_artifacts:
        art = {k: (v.to_json() if hasattr(v, "to_json") else v) for k, v in res.artifacts.items()}
        with open(args.dump_artifacts, "w") as fh:
            json.dump(art, fh, indent=1, default=str)
    doc = _solution_doc(res.solution, res, args, demands)
    text = f"status={res.status} tier={res.tier} counts={doc['counts']} demands={demands}"
    out.emit(doc, text)
    return EXIT_OK if res.feasible else EXIT_NO


def cmd_verify(args, out: _Out) -> int:
    inst = _load_instance(args.instance)
    data = _read_json(args.solution)
    sol = Solution.from_json(data)
    if args.demands:
        demands = _ints(args.demands, "demands")
    else:
        try:
            demands = [int(a) for a in data["meta"]["demands"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError("no --demands given and none recorded in the solution") from exc
    report = verify_solution(inst, demands, sol)
    doc = {"ok": not report, "violations": [{"kind": v.kind, "detail": v.detail} for v in report]}
    out.emit(doc, "ok" if not report else "\n".join(map(str, report)))
    if not report:
        return EXIT_OK
    for v in report:
        log.error(str(v))
    return EXIT_NO if all(v.kind == "demand" for v in report) else EXIT_INPUT


def cmd_oracle(args, out: _Out) -> int:
    inst = _load_instance(args.instance)
    demands = _ints(args.demands, "demands")
    DemandSequence(demands, args.epsilon)
    if args.chosen:
        sol = exact_colourful_matching(inst, demands, _ints(args.chosen, "chosen"), cap=args.cap)
    else:
        sol = exact_search(inst, demands, cap=args.cap)

    class R:
        status = "feasible" if sol else "infeasible"
        tier = "exact"
        ell_used = len(demands) if sol else 0

    doc = _solution_doc(sol, R, args, demands)
    out.emit(doc, f"status={R.status}")
    return EXIT_OK if sol else EXIT_NO


def cmd_necklace(args, out: _Out) -> int:
    neck = Necklace.from_string(args.beads)
    split = split_necklace(neck, args.q)
    letters = sorted(set(args.beads.strip()))
    doc = {"q": split.q, "cuts": split.cuts, "pieces": [list(p) for p in split.pieces],
           "owner": split.owner,
           "perThief": [{letters[c]: k for c, k in sorted(cnt.items())} for cnt in split.counts],
           "exact": split.exact}
    beads = args.beads.strip()
    parts = [f"{beads[a:b]}->{th}" for (a, b), th in zip(split.pieces, split.owner)]
    out.emit(doc, f"{len(split.cuts)} cuts: " + " ".join(parts))
    return EXIT_OK


def cmd_nibble(args, out: _Out) -> int:
    rows = []
    for i in range(args.seeds):
        s = args.seed + i
        triples = random_linear_hypergraph(args.nx, args.degree, s)
        res = nibble_matching(triples, s)
        rows.append([s, res.N, args.degree, f"{res.fraction:.4f}"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "N", "D", "covered_fraction"])
    w.writerows(rows)
    out.write(buf.getvalue())
    return EXIT_OK


def cmd_embed(args, out: _Out) -> int:
    S = sts_of_order(args.order) if args.order else SteinerTripleSystem.from_json(_read_json(args.sts))
    bad = S.violations()
    if bad:
        raise InvalidInputError("not a Steiner triple system: " + "; ".join(bad[:3]))
    T = Turkey.from_json(_read_json(args.turkey))
    emb = embed_turkey(S, T, parse_rational(args.epsilon), seed=args.seed)
    for line in emb.log:
        log.info(line)
    doc = emb.to_json()
    out.emit(doc, f"embedded {len(emb.used_triples)} triples")
    return EXIT_OK


def _bench_one(task):
    seed, strategy, n2, k, load, eps, fallback = task
    inst = random_instance(n2, min(n2 - 1, k), seed)
    n = n2 // 2
    total = max(k, int(load * n))
    base, rest = divmod(total, k)
    demands = [base + (1 if i < rest else 0) for i in range(k)]
    t0 = time.perf_counter()
    res = solve(inst, DemandSequence(demands, eps), strategy=strategy, seed=derive_seed(seed, "bench"),
                fallback=fallback)
    ms = (time.perf_counter() - t0) * 1000
    return [seed, strategy, n2, k, int(res.feasible), res.ell_used, f"{ms:.1f}"]


def cmd_bench(args, out: _Out) -> int:
    n2s = _ints(args.n2, "n2 list")
    strategies = [s for s in args.strategies.split(",") if s]
    for s in strategies:
        if s not in STRATEGIES:
            raise InvalidInputError(f"unknown strategy {s!r}")
    eps = parse_rational(args.epsilon)
    load = parse_rational(args.load)
    tasks = [(args.seed + i, st, n2, min(args.k, n2 - 1), load, eps, args.fallback == "on")
             for n2 in n2s for st in strategies for i in range(args.seeds)]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(_bench_one, tasks))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "strategy", "n2", "k", "feasible", "ell_used", "wall_ms"])
    w.writerows(rows)
    out.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "verify": cmd_verify, "oracle": cmd_oracle,
            "necklace": cmd_necklace, "nibble": cmd_nibble, "embed": cmd_embed, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    out = _Out(args)
    try:
        parse_rational(args.epsilon)
        code = COMMANDS[args.cmd](args, out)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_BUG
    except (InvalidInputError, SizeLimitError, PreconditionError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SplitNotFound, EmbeddingFailure) as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        out.flush()
        return EXIT_NO
    except ColourMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
