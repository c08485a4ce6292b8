"""Command-line front end: channel inspection, gate metrics, extendibility,
fidelity floors, and the noise-sweep curve writer.

Exit codes: 0 success, 2 parse error, 3 invariant violation, 4 I/O error,
5 solver non-convergence.  A not_extendible or inconclusive verdict is a
result, not an error.  All configuration is by flags; no environment
variables are consulted.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import ConvergenceError, assessment_report
from .chanio import (
    ChannelFormatError,
    choi_json_doc,
    curve_csv_text,
    fmt,
    load_channel_file,
    write_text_atomic,
)
from .channels import as_choi, builtin
from .extendibility import (
    ExtensionProblem,
    HierarchyLevel,
    is_entanglement_breaking,
    is_ppt,
    test_k_extendible,
)
from .metrics import gate_reports, min_gate_fidelity

ANCHOR_CHECKS = (
    # (p, r, expected average fidelity, tolerance)
    (0.0, 1.0, 0.7071, 0.005),
    (2.0 / 3.0, 1.0, 0.9856, 0.005),
)


def _parse_number(token: str) -> float:
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return float(num) / float(den)
    return float(token)


def _estimator_note(report) -> str:
    if report.estimator == "monte_carlo":
        return f"monte_carlo, n={report.n_samples}, seed={report.seed}, std_error={fmt(report.std_error)}"
    if report.estimator == "quadrature":
        return f"quadrature, {report.scheme}"
    res = "x".join(str(v) for v in report.resolution)
    return f"grid_min, resolution {res}, refinement {report.refinement}"


def _print_matrix(m: np.ndarray) -> None:
    for row in m:
        print("  " + " ".join(fmt(v) for v in row))


def _level_json(level: HierarchyLevel | None):
    if level is None:
        return None
    if level.infinite:
        return "infinite"
    if level.exact:
        return level.k_lo
    return [level.k_lo, level.k_hi]


def cmd_choi(args) -> int:
    channel, name = load_channel_file(args.channel)
    choi = as_choi(channel)
    eigenvalues = sorted((float(v) for v in np.linalg.eigvalsh(choi.matrix)), reverse=True)
    ppt = is_ppt(choi.choi)
    eb = is_entanglement_breaking(choi)
    eb_exact = choi.d_a == 2 and choi.d_b == 2
    if args.json or args.out:
        doc = choi_json_doc(
            name,
            choi,
            eigenvalues=eigenvalues,
            ppt=ppt.ppt,
            min_pt_eigenvalue=ppt.min_eigenvalue,
            eb=eb,
            eb_exact=eb_exact,
        )
        text = json.dumps(doc, indent=2) + "\n"
        if args.out:
            write_text_atomic(args.out, text)
            print(f"wrote {args.out}")
        else:
            sys.stdout.write(text)
        return 0
    print(f"channel: {name} (d_a={choi.d_a}, d_b={choi.d_b})")
    print("choi matrix, real part:")
    _print_matrix(choi.matrix.real)
    print("choi matrix, imaginary part:")
    _print_matrix(choi.matrix.imag)
    print("eigenvalues: " + " ".join(fmt(v) for v in eigenvalues))
    print(f"ppt: {'yes' if ppt.ppt else 'no'} (min partial-transpose eigenvalue {fmt(ppt.min_eigenvalue)})")
    note = "" if eb_exact else " (PPT relaxation; necessary condition only)"
    print(f"entanglement-breaking: {'yes' if eb else 'no'}{note}")
    return 0


def cmd_fidelity(args) -> int:
    chan_a, name_a = load_channel_file(args.channel_a)
    chan_b, name_b = load_channel_file(args.channel_b)
    method = "quadrature" if args.method == "quad" else "monte_carlo"
    f_rep, d_rep = gate_reports(chan_a, chan_b, method=method, n_samples=args.samples, seed=args.seed)
    w_rep = min_gate_fidelity(chan_a, chan_b)
    if args.json:
        doc = {
            "channel_a": name_a,
            "channel_b": name_b,
            "avg_fidelity": f_rep.value,
            "min_fidelity": w_rep.value,
            "avg_trace_distance": d_rep.value,
            "estimator": f_rep.estimator,
            "std_error": f_rep.std_error,
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"channels: {name_a} vs {name_b}")
        print(f"average gate fidelity: {fmt(f_rep.value)} ({_estimator_note(f_rep)})")
        print(f"minimum gate fidelity: {fmt(w_rep.value)} ({_estimator_note(w_rep)})")
        print(f"average gate distance: {fmt(d_rep.value)} ({_estimator_note(d_rep)})")
    if args.out:
        header = "avg_fidelity,min_fidelity,avg_trace_distance,avg_fidelity_std_error"
        err = 0.0 if f_rep.std_error is None else f_rep.std_error
        row = ",".join(fmt(v) for v in (f_rep.value, w_rep.value, d_rep.value, err))
        write_text_atomic(args.out, header + "\n" + row + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_extend(args) -> int:
    channel, name = load_channel_file(args.channel)
    choi = as_choi(channel)
    print(f"target: {name} (d_a={choi.d_a}, d_b={choi.d_b})")
    if args.k is not None:
        cert = test_k_extendible(ExtensionProblem(choi, args.k))
        print(
            f"k={args.k}: {cert.verdict} "
            f"(residual {fmt(cert.residual)}, iterations {cert.iterations})"
        )
        return 0
    eb_exact = choi.d_a == 2 and choi.d_b == 2
    if is_entanglement_breaking(choi):
        note = "" if eb_exact else " [PPT relaxation; necessary condition only]"
        print(f"entanglement-breaking Choi state{note}: extendible for every k")
        print("classification: entanglement-breaking (broadcasts to any number of parties)")
        return 0
    k_lo, k_hi = 1, args.kmax
    for k in range(2, args.kmax + 1):
        try:
            problem = ExtensionProblem(choi, k)
        except ValueError as exc:
            print(f"k={k}: skipped ({exc})")
            break
        cert = test_k_extendible(problem)
        print(f"k={k}: {cert.verdict} (residual {fmt(cert.residual)}, iterations {cert.iterations})")
        if cert.verdict == "extendible":
            k_lo = k
        elif cert.verdict == "not_extendible":
            k_hi = k - 1
            break
    level = HierarchyLevel(k_lo=k_lo, k_hi=max(k_lo, k_hi))
    print(f"broadcast level (up to k_max={args.kmax}): {level}")
    if level.exact and level.k == 1:
        print("classification: private (no broadcasting extension for k >= 2)")
    elif level.exact:
        print(f"classification: broadcasts to {level.k} parties (within the swept range)")
    else:
        print(f"classification: broadcast level within {level} (solver inconclusive in between)")
    return 0


def cmd_floor(args) -> int:
    ideal, name_e = load_channel_file(args.channel)
    noise, name_n = load_channel_file(args.noise)
    method = "quadrature" if args.method == "quad" else "monte_carlo"
    report = assessment_report(
        ideal,
        noise,
        noise,
        channel_id=name_e,
        method=method,
        n_samples=args.samples,
        seed=args.seed,
        k_max=args.kmax,
    )
    if args.json:
        doc = {
            "avg_fidelity": report.avg_fidelity.value,
            "min_fidelity": report.min_fidelity.value,
            "floor": report.floor.floor,
            "k_level": _level_json(report.floor.k_level),
            "verdict": report.verdict,
        }
        print(json.dumps(doc, indent=2))
        return 0
    print(f"ideal: {name_e}; modeled worst-case noise: {name_n}")
    print(f"average gate fidelity vs noise: {fmt(report.avg_fidelity.value)}")
    print(f"minimum gate fidelity vs noise: {fmt(report.min_fidelity.value)}")
    print(
        f"floor: {fmt(report.floor.floor)} "
        f"(choi-distance term {fmt(report.floor.delta_eb)}, noise term {fmt(report.floor.noise_gap)})"
    )
    print(f"broadcast level: {report.floor.k_level}")
    print(f"verdict: {report.verdict}")
    return 0


def cmd_curves(args) -> int:
    p_values = [_parse_number(tok) for tok in args.p_list.split(",") if tok.strip()]
    if not p_values:
        raise ValueError("p-list must contain at least one value")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
    if args.r_steps < 2:
        raise ValueError(f"r-steps must be at least 2, got {args.r_steps}")
    method = "quadrature" if args.method == "quad" else "monte_carlo"
    r_grid = np.linspace(0.0, 1.0, args.r_steps)
    rows = []
    for p in p_values:
        ideal = builtin("xz_flip", p=p)
        for r in r_grid:
            noisy = builtin("noisy_xz_flip", p=p, r=float(r))
            f_rep, d_rep = gate_reports(ideal, noisy, method=method, n_samples=args.samples, seed=args.seed)
            err = f_rep.std_error if f_rep.std_error is not None else 0.0
            rows.append((float(r), float(p), f_rep.value, err, d_rep.value))
    write_text_atomic(args.out, curve_csv_text(rows))
    print(f"wrote {len(rows)} rows to {args.out}")
    by_key = {(row[1], row[0]): row for row in rows}
    for p, r, expected, tol in ANCHOR_CHECKS:
        hit = next((v for key, v in by_key.items() if abs(key[0] - p) < 1e-12 and abs(key[1] - r) < 1e-12), None)
        if hit is None:
            print(f"check (p={fmt(p)}, r={fmt(r)}): not on grid")
            continue
        status = "PASS" if abs(hit[2] - expected) <= tol else "FAIL"
        print(
            f"check (p={fmt(p)}, r={fmt(r)}): avg_fidelity {fmt(hit[2])}, "
            f"expected {expected} +/- {tol}: {status}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="broadq",
        description="Analyze quantum channels: gate fidelities, broadcastability, fidelity floors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_choi = sub.add_parser("choi", help="print the Choi state, PPT and EB verdicts")
    p_choi.add_argument("channel", help="channel JSON file")
    p_choi.add_argument("--json", action="store_true", help="emit a re-ingestible JSON document")
    p_choi.add_argument("--out", help="write the JSON document to this path")
    p_choi.set_defaults(func=cmd_choi)

    p_fid = sub.add_parser("fidelity", help="gate fidelities and distance between two channels")
    p_fid.add_argument("channel_a")
    p_fid.add_argument("channel_b")
    p_fid.add_argument("--method", choices=("quad", "mc"), default="quad")
    p_fid.add_argument("--samples", type=int, default=10_000)
    p_fid.add_argument("--seed", type=int, default=0)
    p_fid.add_argument("--json", action="store_true")
    p_fid.add_argument("--out", help="write a one-row CSV of the reported values")
    p_fid.set_defaults(func=cmd_fidelity)

    p_ext = sub.add_parser("extend", help="k-extendibility of the channel's Choi state")
    p_ext.add_argument("channel")
    group = p_ext.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int, help="test a single extension level")
    group.add_argument("--kmax", type=int, help="sweep levels and classify the channel")
    p_ext.set_defaults(func=cmd_extend)

    p_floor = sub.add_parser("floor", help="fidelity floor and assessment against a noise model")
    p_floor.add_argument("channel")
    p_floor.add_argument("noise")
    p_floor.add_argument("--method", choices=("quad", "mc"), default="quad")
    p_floor.add_argument("--samples", type=int, default=10_000)
    p_floor.add_argument("--seed", type=int, default=0)
    p_floor.add_argument("--kmax", type=int, default=2)
    p_floor.add_argument("--json", action="store_true")
    p_floor.set_defaults(func=cmd_floor)

    p_curves = sub.add_parser(
        "curves", help="sweep the xz_flip family against its depolarized realizations"
    )
    p_curves.add_argument("--p-list", default="0,1/3,2/3", help="comma-separated p values (fractions allowed)")
    p_curves.add_argument("--r-steps", type=int, default=101)
    p_curves.add_argument("--method", choices=("quad", "mc"), default="quad")
    p_curves.add_argument("--samples", type=int, default=10_000)
    p_curves.add_argument("--seed", type=int, default=0)
    p_curves.add_argument("--out", default="curves.csv")
    p_curves.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChannelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
