"""Command-line harness: every experiment as a reproducible subcommand.

Exit status is 0 when a check passes (or a command simply produces data),
2 when a check ran and its verdict is a failure or rejection, and 1 for
usage or input errors. Reports carry the tool version, the full argument
vector and the seed, and contain no timestamps.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import io as oio
from .dynamics import GOLDEN_ALPHA, PhasePoint, System, orbit_array, sample_invariant
from .equivalence import (
    baker_correlation_exact,
    baker_dyadic_chain,
    baker_dyadic_sequence,
    bernoulli_rejection_witness,
    coding_conjugacy_sample,
    epsilon_congruence_bound_check,
    markov_property_test,
    markov_replacement_certificate,
    mixing_estimate,
    rotation_correlation_exact,
)
from .errors import ObsEquivError
from .partitions import Box, coarse_grain, parse_partition
from .processes import (
    MarkovModel,
    bernoulli_sample,
    empirical_transition_matrix,
    is_aperiodic,
    is_irreducible,
    markov_sample,
    periods,
    stationarity_check,
)
from .shiftspace import entropy_rate_estimate, finite_window_equivalence, ks_entropy_bernoulli
from .stats import SIGNIFICANCE

DEFAULT_LEN = 1_000_000
TOOL = "obsequiv"


class UsageError(Exception):
    """Bad or missing flag; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _Result:
    def __init__(self, summary: str, report: dict, passed: bool = True, data: str | None = None, csv: str | None = None):
        self.summary = summary
        self.report = report
        self.passed = passed
        self.data = data
        self.csv = csv


# -- argument helpers ---------------------------------------------------------

def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required for {args.command}")
    return args.seed


def _length(args) -> int:
    n = DEFAULT_LEN if args.len is None else args.len
    if n < 1:
        raise UsageError("--len must be positive")
    return n


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _box(text: str, dim: int, flag: str) -> Box:
    v = _floats(text, flag)
    if len(v) != 2 * dim:
        raise UsageError(f"{flag}: expected {2 * dim} numbers (lo,hi per axis), got {len(v)}")
    return Box(tuple(v[0::2]), tuple(v[1::2]))


def _lags(text: str) -> list[int]:
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--lags: expected 'a:b' or a comma list, got {text!r}") from None


def _system(args) -> System:
    if args.system == "baker":
        return System.baker()
    return System.rotation(GOLDEN_ALPHA if args.alpha is None else args.alpha)


def _start(args, sys_: System, steps: int) -> PhasePoint:
    if args.x0 is not None:
        coords = (args.x0,) if sys_.dimension == 1 else (args.x0, 0.5 if args.y0 is None else args.y0)
        return PhasePoint(coords)
    seed = _need_seed(args)
    if sys_.kind == "baker":
        return sample_invariant(sys_, 1, seed, exact=True, width=steps + 64)[0]
    return sample_invariant(sys_, 1, seed)[0]


def _symbols(args, flag: str = "input"):
    path = getattr(args, flag)
    if path is None:
        raise UsageError(f"--{flag.replace('_', '-')} is required for {args.command}")
    seq = oio.read_symbols(path)
    if args.len is not None and args.len < len(seq):
        from .processes import SymbolSequence

        seq = SymbolSequence(seq.n_symbols, seq.data[: args.len], origin=seq.origin)
    return seq


def _chi(t) -> dict:
    return {"statistic": t.statistic, "dof": t.dof, "pvalue": t.pvalue}


# -- subcommands --------------------------------------------------------------

def cmd_orbit(args) -> _Result:
    sys_ = _system(args)
    steps = _length(args)
    p0 = _start(args, sys_, steps)
    pts = orbit_array(sys_, p0, steps)
    report = {"system": sys_.kind, "alpha": sys_.alpha, "steps": steps, "points": pts}
    return _Result(f"orbit: {steps} points", report, data=oio.orbit_to_csv(pts), csv=oio.orbit_to_csv(pts))


def cmd_coarse_grain(args) -> _Result:
    sys_ = _system(args)
    steps = _length(args)
    part = parse_partition(args.partition)
    p0 = _start(args, sys_, steps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        seq = coarse_grain(sys_, p0, steps, part)
    text = oio.symbols_to_text(seq)
    report = {"system": sys_.kind, "partition": args.partition, "alphabet": seq.n_symbols, "symbols": seq.data}
    return _Result(f"coarse-grain: {steps} symbols over {seq.n_symbols} cells", report, data=text, csv=text)


def cmd_transition(args) -> _Result:
    seq = _symbols(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = empirical_transition_matrix(seq)
    report = {
        "length": len(seq),
        "transition": est.transition,
        "counts": est.counts,
        "observed": est.observed,
        "degenerate": est.degenerate,
        "warnings": [str(w.message) for w in caught],
    }
    rows = "\n".join(",".join(repr(float(v)) for v in row) for row in est.transition) + "\n"
    summary = "\n".join(" ".join(f"{v:.6f}" for v in row) for row in est.transition)
    return _Result(summary, report, csv=rows)


def cmd_chain_analyze(args) -> _Result:
    if args.matrix is None:
        raise UsageError("--matrix is required for chain-analyze")
    model = MarkovModel(oio.read_matrix(args.matrix))
    irr = is_irreducible(model)
    aper = is_aperiodic(model)
    report = {
        "transition": model.transition,
        "stationary": model.stationary,
        "irreducible": irr,
        "aperiodic": aper,
        "periods": periods(model),
    }
    summary = f"irreducible={irr} aperiodic={aper} stationary=" + ",".join(f"{v:.6f}" for v in model.stationary)
    return _Result(summary, report)


def cmd_entropy(args) -> _Result:
    if args.probs is not None:
        probs = _floats(args.probs, "--probs")
        h = ks_entropy_bernoulli(probs)
        return _Result(repr(h), {"probs": probs, "entropy_bits": h})
    if args.input is not None:
        seq = _symbols(args)
        h = entropy_rate_estimate(seq, args.block)
        return _Result(repr(h), {"length": len(seq), "block": args.block, "entropy_rate_bits": h})
    raise UsageError("entropy needs --probs or --input")


def cmd_mixing(args) -> _Result:
    seed = _need_seed(args)
    sys_ = _system(args)
    samples = _length(args)
    dim = sys_.dimension
    default = "0,0.5,0,0.5" if dim == 2 else "0,0.5"
    a = _box(args.a or default, dim, "--a")
    b = _box(args.b or default, dim, "--b")
    rows = []
    for lag in _lags(args.lags):
        value, se = mixing_estimate(sys_, a, b, lag, samples, seed)
        if sys_.kind == "baker":
            try:
                exact = float(baker_correlation_exact(a, b, lag))
            except (ValueError, ObsEquivError):
                exact = None
        else:
            exact = rotation_correlation_exact(sys_.alpha, a, b, lag)
        rows.append({"lag": lag, "estimate": value, "stderr": se, "exact": exact})
    report = {"system": sys_.kind, "alpha": sys_.alpha, "a": a.to_json(), "b": b.to_json(), "samples": samples, "lags": rows}
    csv = "lag,estimate,stderr,exact\n" + "".join(
        f"{r['lag']},{r['estimate']!r},{r['stderr']!r},{'' if r['exact'] is None else repr(r['exact'])}\n" for r in rows
    )
    worst = max(abs(r["estimate"]) for r in rows)
    return _Result(f"mixing: {len(rows)} lags, max |correlation| {worst:.6f}", report, csv=csv)


def cmd_congruence(args) -> _Result:
    seed = _need_seed(args)
    n = args.n
    bound = epsilon_congruence_bound_check(n)
    conj = coding_conjugacy_sample(args.points, args.steps, seed)
    length = _length(args)
    seq = baker_dyadic_sequence(n, length, seed)
    ref = markov_sample(baker_dyadic_chain(n), length, seed + 1)
    weq = finite_window_equivalence(seq, ref, args.window, args.tol)
    checks = {
        "distance_bound": {"passed": bound.passed, "max_distance": bound.max_distance, "bound": bound.bound, "cells": bound.cells},
        "coding_conjugacy": conj,
        "window_equivalence": {
            "passed": weq.passed,
            "window": weq.window,
            "tolerance": weq.tolerance,
            "max_deviation": weq.max_deviation,
            "worst_word": weq.worst_word,
            "length": length,
        },
    }
    passed = all(c["passed"] for c in checks.values())
    summary = f"{'PASS' if passed else 'FAIL'} congruence n={n}: " + " ".join(
        f"{k}={'pass' if c['passed'] else 'fail'}" for k, c in checks.items()
    )
    return _Result(summary, {"n": n, "checks": checks, "passed": passed}, passed)


def cmd_certify_markov(args) -> _Result:
    seed = _need_seed(args)
    cert = markov_replacement_certificate(args.n, _length(args), seed, args.significance, args.stationary_tol)
    report = {
        "n": cert.n,
        "length": cert.length,
        "significance": cert.significance,
        "stationary_tolerance": cert.stationary_tol,
        "checks": cert.checks,
        "passed": cert.passed,
    }
    ok = sum(c["passed"] for c in cert.checks.values())
    summary = f"{'PASS' if cert.passed else 'FAIL'} certify-markov n={cert.n}: {ok}/{len(cert.checks)} checks passed"
    return _Result(summary, report, cert.passed)


def cmd_test_bernoulli(args) -> _Result:
    seq = _symbols(args)
    w = bernoulli_rejection_witness(seq, args.significance)
    report = {
        "length": len(seq),
        "rejected": w.rejected,
        "significance": w.significance,
        "test": _chi(w.test),
        "witness": {"pair": w.witness, "conditional": w.conditional, "marginal": w.marginal},
        "passed": not w.rejected,
    }
    i, j = w.witness
    verdict = "REJECT independence" if w.rejected else "independence not rejected"
    summary = f"{verdict} (p={w.test.pvalue:.3g}); witness ({i},{j}): P(j|i)={w.conditional:.4f} vs P(j)={w.marginal:.4f}"
    return _Result(summary, report, not w.rejected)


def cmd_test_markov(args) -> _Result:
    seq = _symbols(args)
    v = markov_property_test(seq, args.significance)
    report = {"length": len(seq), "passed": v.passed, "significance": v.significance, "test": _chi(v.test)}
    summary = f"{'PASS' if v.passed else 'FAIL'} Markov property (p={v.test.pvalue:.3g})"
    return _Result(summary, report, v.passed)


def cmd_test_stationary(args) -> _Result:
    seq = _symbols(args)
    v = stationarity_check(seq, args.blocks, args.significance)
    report = {
        "length": len(seq),
        "blocks": args.blocks,
        "passed": v.passed,
        "significance": v.significance,
        "symbol_test": _chi(v.symbol_test),
        "bigram_test": _chi(v.bigram_test),
        "block_frequencies": v.block_frequencies,
    }
    return _Result(f"{'PASS' if v.passed else 'FAIL'} stationarity over {args.blocks} blocks", report, v.passed)


def cmd_conjugacy(args) -> _Result:
    seed = _need_seed(args)
    res = coding_conjugacy_sample(args.points, args.steps, seed, args.width)
    summary = f"{'PASS' if res['passed'] else 'FAIL'} conjugacy: {res['failures']} failures in {res['points']} points x {res['steps']} steps"
    return _Result(summary, res, res["passed"])


def cmd_window_equiv(args) -> _Result:
    a = _symbols(args, "input")
    if args.input_b is not None:
        b = _symbols(args, "input_b")
        source = args.input_b
    elif args.probs is not None:
        b = bernoulli_sample(_floats(args.probs, "--probs"), len(a), _need_seed(args))
        source = f"bernoulli({args.probs})"
    else:
        raise UsageError("window-equiv needs --input-b or --probs")
    v = finite_window_equivalence(a, b, args.window, args.tol)
    report = {
        "reference": source,
        "passed": v.passed,
        "window": v.window,
        "tolerance": v.tolerance,
        "max_deviation": v.max_deviation,
        "worst_word": v.worst_word,
        "freq_a": v.freq_a,
        "freq_b": v.freq_b,
    }
    return _Result(f"{'PASS' if v.passed else 'FAIL'} window {v.window}: max deviation {v.max_deviation:.6f}", report, v.passed)


# -- parser -------------------------------------------------------------------

def _flatten(obj, prefix="") -> list[tuple[str, object]]:
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj):
            out.extend(_flatten(obj[k], f"{prefix}.{k}" if prefix else str(k)))
        return out
    return [(prefix, obj)]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="root seed (required for stochastic runs)")
    common.add_argument("--len", type=int, help=f"steps or symbols to generate (default {DEFAULT_LEN}); truncates file inputs")
    common.add_argument("--out", help="write the full report or data here")
    common.add_argument("--format", choices=("json", "csv"), help="output format for --out")
    common.add_argument("--significance", type=float, default=SIGNIFICANCE)

    parser = _Parser(prog=TOOL, description="Observational equivalence experiments")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    def dynamics_flags(p):
        p.add_argument("--system", choices=("baker", "rotation"), default="baker")
        p.add_argument("--alpha", type=float, help="rotation number (default golden mean)")
        p.add_argument("--x0", type=float, help="float start; otherwise a random start from --seed")
        p.add_argument("--y0", type=float)

    dynamics_flags(add("orbit", cmd_orbit, "dump an orbit"))
    p = add("coarse-grain", cmd_coarse_grain, "orbit to symbols under a partition")
    dynamics_flags(p)
    p.add_argument("--partition", default="leftright", help="leftright | halves | dyadic:N | JSON file")

    add("transition", cmd_transition, "empirical transition matrix").add_argument("--input")
    add("chain-analyze", cmd_chain_analyze, "stationary vector, irreducibility, periods").add_argument("--matrix")

    p = add("entropy", cmd_entropy, "entropy of a Bernoulli shift or a symbol file")
    p.add_argument("--probs")
    p.add_argument("--input")
    p.add_argument("--block", type=int, default=3)

    p = add("mixing", cmd_mixing, "correlation sweep over lags")
    dynamics_flags(p)
    p.add_argument("--a", help="box lo,hi per axis")
    p.add_argument("--b", help="box lo,hi per axis")
    p.add_argument("--lags", default="0:10")

    p = add("congruence", cmd_congruence, "distance bound, coding conjugacy and window equivalence")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--tol", type=float, default=0.01)

    p = add("certify-markov", cmd_certify_markov, "Markov replacement certificate")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--stationary-tol", type=float, default=0.01)

    for name, func, help_ in (
        ("test-bernoulli", cmd_test_bernoulli, "independence test with witness pair"),
        ("test-markov", cmd_test_markov, "order-1 Markov property test"),
        ("test-stationary", cmd_test_stationary, "block homogeneity test"),
    ):
        p = add(name, func, help_)
        p.add_argument("--input")
        if name == "test-stationary":
            p.add_argument("--blocks", type=int, default=10)

    p = add("conjugacy", cmd_conjugacy, "exact coding conjugacy on random points")
    p.add_argument("--points", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--width", type=int, default=64)

    p = add("window-equiv", cmd_window_equiv, "compare word frequencies of two sequences")
    p.add_argument("--input")
    p.add_argument("--input-b")
    p.add_argument("--probs", help="compare against a sampled Bernoulli sequence")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--tol", type=float, default=0.01)
    return parser


def _emit(args, argv, res: _Result) -> None:
    report = {
        "tool": TOOL,
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "seed": args.seed,
        "result": res.report,
        "passed": res.passed,
    }
    if args.out is None:
        print(res.data if res.data is not None else res.summary, end="" if res.data is not None else "\n")
        return
    if args.format == "csv":
        text = res.csv
        if text is None:
            text = "key,value\n" + "".join(f"{k},{v}\n" for k, v in _flatten(oio._plain(report)))
    elif args.format == "json" or res.data is None:
        text = oio.dumps_report(report)
    else:
        text = res.data
    Path(args.out).write_text(text)
    print(res.summary)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        res = args.func(args)
        _emit(args, argv, res)
    except UsageError as exc:
        print(f"{TOOL} {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (ObsEquivError, ValueError, OSError) as exc:
        print(f"{TOOL} {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0 if res.passed else 2


if __name__ == "__main__":
    sys.exit(main())
