"""Command-line interface: ``urnlaw <subcommand> ...``.

Exit codes: 0 success, 2 validation or I/O error, 3 verification failure,
4 budget exceeded.  Rationals are printed as ``"num/den"`` strings; any
float column carries an ``_approx`` suffix.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from urnlaw import __version__
from urnlaw import acceptance
from urnlaw.definetti import (
    PriorMixture,
    SampleBatch,
    decompose,
    decompose_float,
    df_bound,
    df_gap,
    empirical_prior,
    mix,
    prior_tv,
    sample_exchangeable,
)
from urnlaw.errors import BudgetError, ValidationError, VerificationError
from urnlaw.extremal import (
    f_nk_bruteforce,
    f_nk_explicit,
    f_nk_partition,
    f_nk_recursive,
    f_nk_truncated,
    term_mass_table,
    truncation_bound,
)
from urnlaw.measures import DiscreteMeasure, QuantizedMeasure, SignedTensor, StateSpace, mass_norm
from urnlaw.mmot import CostTensor, convexify_ell2, solve_primal, solve_reformulated
from urnlaw.partitions import coefficient_c, coefficient_d, contributing_partitions, stirling_first_unsigned
from urnlaw.rational import as_fraction, format_fraction

EXIT_OK, EXIT_VALIDATION, EXIT_VERIFICATION, EXIT_BUDGET = 0, 2, 3, 4
OUTPUT_DIR_ENV = "URNLAW_OUTPUT_DIR"

ROUTES = {
    "explicit": f_nk_explicit,
    "recursive": f_nk_recursive,
    "partition": f_nk_partition,
}


class Ctx:
    """Per-run bookkeeping: input hashes for the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}

    def read_json(self, path: str):
        data = self.read_bytes(path)
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc

    def read_bytes(self, path: str) -> bytes:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        return data


def output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base) / p if base and not p.is_absolute() else p


def write_text(path: str, text: str) -> None:
    p = output_path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {p}: {exc.strerror}") from exc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def tensor_rows(T: SignedTensor):
    header = [f"i{r + 1}" for r in range(T.order)] + ["w", "w_approx"]
    rows = [[T.space.labels[i] for i in idx] + [format_fraction(w), float(w)] for idx, w in T.entries()]
    return header, rows


def emit(args, payload, table=None) -> None:
    """Print ``payload`` as JSON, or ``table = (header, rows)`` as CSV."""
    if args.format == "csv":
        if table is None:
            raise ValidationError(f"{args.command} has no CSV form")
        text = dump_csv(*table)
    else:
        text = dump_json(payload)
    if getattr(args, "out", None):
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


# ---- input parsing -------------------------------------------------------


def load_measure(data: dict) -> DiscreteMeasure | QuantizedMeasure:
    """``{"labels": [...], "counts": [...]}`` or ``{"labels": [...], "weights": ["a/b", ...]}``."""
    if not isinstance(data, dict):
        raise ValidationError("measure JSON must be an object")
    if "counts" in data:
        counts = tuple(int(c) for c in data["counts"])
        labels = data.get("labels") or StateSpace.of_size(len(counts)).labels
        return QuantizedMeasure(StateSpace(tuple(labels)), sum(counts), counts)
    if "weights" in data:
        weights = [as_fraction(w) for w in data["weights"]]
        labels = data.get("labels") or StateSpace.of_size(len(weights)).labels
        return DiscreteMeasure(StateSpace(tuple(labels)), tuple(weights))
    raise ValidationError("measure JSON needs 'counts' or 'weights'")


def as_plain(lam) -> DiscreteMeasure:
    return lam.to_measure() if isinstance(lam, QuantizedMeasure) else lam


def load_float_tensor(data: dict):
    import numpy as np

    space = StateSpace(tuple(data["labels"]))
    order = int(data["order"])
    arr = np.zeros((space.size,) * order)
    for e in data["entries"]:
        w = e["w"]
        arr[tuple(int(i) - 1 for i in e["idx"])] = float(Fraction(w)) if isinstance(w, str) else float(w)
    return space, order, arr


# ---- subcommands ---------------------------------------------------------


def cmd_coeffs(args, ctx):
    k = args.k
    js = [args.j] if args.j else list(range(1, k))
    rows = []
    summary = []
    for j in js:
        parts = contributing_partitions(k, j)
        for p in parts:
            rows.append({"j": j, "partition": list(p.parts), "d": format_fraction(coefficient_d(k, p))})
        summary.append({"j": j, "c": coefficient_c(k, j), "stirling": stirling_first_unsigned(k, k - j)})
    table = (["j", "partition", "d"], [[r["j"], "+".join(map(str, r["partition"])), r["d"]] for r in rows])
    emit(args, {"k": k, "rows": rows, "sums": summary}, table)


def cmd_fnk(args, ctx):
    if args.coeff_table:
        rows = term_mass_table(args.N, args.k)
        payload = {
            "N": args.N,
            "k": args.k,
            "rows": [{"j": j, "c_over_Nj": format_fraction(a), "term_mass": format_fraction(b)} for j, a, b in rows],
        }
        table = (["N", "j", "c_over_Nj", "term_mass", "term_mass_approx"],
                 [[args.N, j, format_fraction(a), format_fraction(b), float(b)] for j, a, b in rows])
        return emit(args, payload, table)
    if not args.lam:
        raise ValidationError("--lambda is required unless --coeff-table is given")
    lam = load_measure(ctx.read_json(args.lam))
    if args.truncate is not None:
        approx, residual = f_nk_truncated(args.N, as_plain(lam), args.k, args.truncate)
        payload = {
            "approx": approx.to_json(),
            "residual": residual.to_json(),
            "residual_mass": format_fraction(mass_norm(residual)),
            "bound": format_fraction(truncation_bound(args.N, args.k, args.truncate)),
        }
        return emit(args, payload, tensor_rows(approx))
    if args.verify:
        results = {name: fn(args.N, as_plain(lam), args.k) for name, fn in ROUTES.items()}
        if isinstance(lam, QuantizedMeasure):
            if lam.N != args.N:
                raise ValidationError(f"urn has {lam.N} balls, not N={args.N}")
            results["brute"] = f_nk_bruteforce(lam, args.k)
        ref = results["explicit"]
        bad = [name for name, T in results.items() if T != ref]
        if bad:
            raise VerificationError(f"routes disagree with explicit: {bad}")
        T = ref
    elif args.route == "brute":
        if not isinstance(lam, QuantizedMeasure) or lam.N != args.N:
            raise ValidationError("brute-force route needs an urn (counts) with N balls")
        T = f_nk_bruteforce(lam, args.k)
    else:
        T = ROUTES[args.route](args.N, as_plain(lam), args.k)
    emit(args, T.to_json(), tensor_rows(T))


def prior_payload(prior: PriorMixture):
    return prior.to_json()


def prior_rows(prior: PriorMixture):
    header = ["weight", "weight_approx"] + list(prior.space.labels)
    return header, [[format_fraction(w), float(w)] + list(u.counts) for w, u in prior.atoms]


def cmd_decompose(args, ctx):
    data = ctx.read_json(args.input)
    if args.tolerant:
        space, order, arr = load_float_tensor(data)
        if order != args.N:
            raise ValidationError(f"tensor has order {order}, expected N={args.N}")
        prior = decompose_float(arr, space, args.N)
    else:
        prior = decompose(SignedTensor.from_json(data), args.N)
    emit(args, prior_payload(prior), prior_rows(prior))


def _seed(args) -> int:
    if args.seed is None:
        raise ValidationError("sampling needs an explicit --seed")
    return args.seed


def cmd_sample(args, ctx):
    prior = PriorMixture.from_json(ctx.read_json(args.prior))
    seed = _seed(args)
    batch = sample_exchangeable(prior, args.k, args.n, seed)
    header = {
        "generator": "PCG64",
        "seed": seed,
        "N": prior.N,
        "k": args.k,
        "n": args.n,
        "labels": list(prior.space.labels),
        "prior_sha256": batch.prior_digest,
    }
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps([prior.space.labels[i] for i in seq]) for seq in batch.sequences]
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


def load_batch(raw: bytes, source: str) -> SampleBatch:
    lines = [ln for ln in raw.decode().splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{source}: empty sample file")
    try:
        header = json.loads(lines[0])
        space = StateSpace(tuple(header["labels"]))
        seqs = tuple(tuple(space.index(x) for x in json.loads(ln)) for ln in lines[1:])
        batch = SampleBatch(space, int(header["N"]), int(header["k"]), int(header["seed"]), header["prior_sha256"], seqs)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"{source}: malformed sample file ({exc})") from exc
    if any(len(s) != batch.k for s in seqs):
        raise ValidationError(f"{source}: sequence length differs from k={batch.k}")
    return batch


def cmd_recover(args, ctx):
    batch = load_batch(ctx.read_bytes(args.samples), args.samples)
    prior = empirical_prior(batch)
    payload = {"n": len(batch), "prior": prior_payload(prior)}
    if args.truth:
        truth = PriorMixture.from_json(ctx.read_json(args.truth))
        tv = prior_tv(prior, truth)
        payload["tv"] = format_fraction(tv)
        payload["tv_approx"] = float(tv)
    emit(args, payload, prior_rows(prior))


def cmd_dfgap(args, ctx):
    prior = PriorMixture.from_json(ctx.read_json(args.prior))
    mu = SignedTensor.from_json(ctx.read_json(args.mu)) if args.mu else mix(prior, args.k)
    gap = df_gap(mu, prior, args.p, args.variant)
    bound = df_bound(prior.N, mu.order, args.p)
    if gap > bound:
        raise VerificationError(f"gap {gap} exceeds certified bound {bound}")
    payload = {
        "N": prior.N,
        "k": mu.order,
        "p": args.p,
        "variant": args.variant,
        "gap": format_fraction(gap),
        "bound": format_fraction(bound),
        "gap_approx": float(gap),
    }
    emit(args, payload, (list(payload), [list(payload.values())]))


def _load_cost(args, ctx) -> CostTensor:
    phi = CostTensor.from_json(ctx.read_json(args.cost))
    if phi.k != args.k:
        raise ValidationError(f"cost has order {phi.k}, --k says {args.k}")
    return phi


def cmd_mmot(args, ctx):
    phi = _load_cost(args, ctx)
    rho = as_plain(load_measure(ctx.read_json(args.rho)))
    if rho.space != phi.space:
        raise ValidationError("rho and cost use different labels")
    result, prior = solve_reformulated(args.N, phi, rho, offdiag=args.offdiag)
    if prior is None:
        raise ValidationError(f"reformulated LP is {result.status}")
    payload = {"value": format_fraction(result.value), "prior": prior_payload(prior)["atoms"]}
    oracle = solve_primal(args.N, phi, rho) if args.oracle else None
    if oracle is not None:
        payload["oracle_value"] = format_fraction(oracle.value) if oracle.value is not None else None
    emit(args, payload, (["value", "oracle_value"], [[payload["value"], payload.get("oracle_value") or ""]]))
    if oracle is not None and oracle.value != result.value:
        raise VerificationError(f"oracle value {oracle.value} != reformulated {result.value}")


def cmd_hull(args, ctx):
    phi = _load_cost(args, ctx)
    hull = convexify_ell2(args.N, phi, args.k)
    pts = hull.to_json()
    emit(args, {"N": args.N, "k": args.k, "breakpoints": pts},
         (["x", "y", "y_approx"], [[p["x"], p["y"], float(Fraction(p["y"]))] for p in pts]))


def cmd_verify_all(args, ctx):
    def progress(c):
        print(acceptance.format_line(c), file=sys.stderr, flush=True)

    report = acceptance.verify_all(args.budget, progress=None if args.quiet else progress)
    if args.report:
        write_text(args.report, dump_json(report))
    table = (["id", "name", "passed", "expected", "actual", "seconds"],
             [[c["id"], c["name"], c["passed"], c["expected"], c["actual"], c["seconds"]] for c in report["checks"]])
    emit(args, report, table)
    if not report["passed"]:
        raise VerificationError("acceptance suite failed")


def emit_figure_data(k: int, N_list) -> list[tuple[int, int, Fraction]]:
    """Rows ``(N, j, prefactor * c_j / N^j)``."""
    if not 2 <= k <= 6:
        raise ValidationError("figure data supports 2 <= k <= 6")
    return [(N, j, mass) for N in N_list for j, _, mass in term_mass_table(N, k)]


def cmd_figure(args, ctx):
    rows = emit_figure_data(args.k, args.N)
    if args.format == "json":
        emit(args, [{"N": N, "j": j, "term_mass": format_fraction(m)} for N, j, m in rows])
    else:
        emit(args, None, (["N", "j", "term_mass", "term_mass_approx"], [[N, j, format_fraction(m), float(m)] for N, j, m in rows]))


# ---- parser --------------------------------------------------------------


def u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--manifest", metavar="PATH")
    common.add_argument("--seed", type=u64)
    common.add_argument("--out", metavar="PATH", help="write primary output here instead of stdout")

    parser = argparse.ArgumentParser(prog="urnlaw", description="Exact finite exchangeability toolkit.")
    parser.add_argument("--version", action="version", version=f"urnlaw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", parents=[common], help="expansion coefficients d_p and c_j")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--j", type=int)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("fnk", parents=[common], help="urn law F_{N,k}(lambda)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", metavar="PATH")
    p.add_argument("--route", choices=(*ROUTES, "brute"), default="explicit")
    p.add_argument("--truncate", type=int, metavar="P")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--coeff-table", action="store_true")
    p.set_defaults(func=cmd_fnk)

    p = sub.add_parser("decompose", parents=[common], help="prior of a symmetric N-plan")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--tolerant", action="store_true", help="accept float weights: rationalize and symmetrize first")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("sample", parents=[common], help="exchangeable sequences as JSONL")
    p.add_argument("--prior", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("recover", parents=[common], help="empirical prior from samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("dfgap", parents=[common], help="mixture-of-iid gap and its certified bound")
    p.add_argument("--prior", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--mu", help="plan to compare (defaults to the mixture of the prior)")
    p.add_argument("--variant", choices=("bare", "prefactor"), default="bare")
    p.set_defaults(func=cmd_dfgap)

    p = sub.add_parser("mmot", parents=[common], help="symmetric MMOT value and optimal prior")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--rho", required=True)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--offdiag", action="store_true")
    p.set_defaults(func=cmd_mmot)

    p = sub.add_parser("hull", parents=[common], help="two-state value function breakpoints")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--cost", required=True)
    p.set_defaults(func=cmd_hull)

    p = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    p.add_argument("--budget", choices=tuple(acceptance.PROFILES), default="quick")
    p.add_argument("--report", metavar="PATH")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify_all)

    p = sub.add_parser("figure", parents=[common], help="term-mass plot data")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--N", type=int, nargs="+", default=[5, 6, 10, 20, 50, 100])
    p.set_defaults(func=cmd_figure, default_format="csv")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    ctx = Ctx(args)
    t0 = time.perf_counter()
    code = EXIT_OK
    message = None
    try:
        args.func(args, ctx)
    except BudgetError as exc:
        code, message = EXIT_BUDGET, f"budget exceeded: {exc}"
    except VerificationError as exc:
        code, message = EXIT_VERIFICATION, f"verification failed: {exc}"
    except (ValidationError, ValueError) as exc:
        code, message = EXIT_VALIDATION, f"error: {exc}"
    if message:
        print(message, file=sys.stderr)
    if args.manifest:
        manifest = {
            "subcommand": args.command,
            "argv": argv,
            "seed": args.seed,
            "version": __version__,
            "inputs": ctx.inputs,
            "wall_time_s": round(time.perf_counter() - t0, 6),
            "exit_code": code,
        }
        try:
            write_text(args.manifest, dump_json(manifest))
        except ValidationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = code or EXIT_VALIDATION
    return code


if __name__ == "__main__":
    sys.exit(main())
