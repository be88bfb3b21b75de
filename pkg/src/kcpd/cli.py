"""Command-line interface: CSV in, JSON out, plus a benchmark harness.

Exit codes: 0 on success, 2 for unreadable or malformed input, 3 for an
infeasible configuration. Reported change points are 1-based segment
starts. Timing fields live under a separate "timing" key so that two runs
with the same configuration and input produce byte-identical JSON once
that key is dropped.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .exact_dp import kernseg_exact
from .kernels import (
    EnergyKernel,
    ExponentialKernel,
    GaussianKernel,
    KernelSpec,
    LaplaceKernel,
    LinearKernel,
    Signal,
    SumKernel,
    mad_scale,
)
from .lowrank import binary_segmentation, nystrom_embed
from .model_selection import PenaltySpec, SelectionResult, select, slope_heuristic
from .simulate import FoldedPiece, NormalPiece, equally_spaced_changes, generate

__all__ = ["main", "run_segment", "run_bench", "load_csv", "save_csv"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


class InputError(Exception):
    pass


class InfeasibleError(Exception):
    pass


# ---------------------------------------------------------------------------
# CSV handling


def load_csv(path: str) -> Signal:
    """Read a signal: one row per time point, comma-separated, optional header."""
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    start = 0
    if lines:
        try:
            [float(v) for v in lines[0].split(",")]
        except ValueError:
            start = 1  # header
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError as exc:
            raise InputError(f"{path}: line {lineno}: {exc}") from exc
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=start + 1):
        if len(row) != width:
            raise InputError(f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise InputError(f"{path}: non-finite values in input")
    return Signal(arr)


def save_csv(signal: Signal, path: str, header: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(f"x{c}" for c in range(signal.q)) + "\n")
        for row in signal.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# kernel construction


def build_kernel(family: str, delta: float, alpha: float, x0, q: int, sum_child: str) -> KernelSpec:
    family = family.lower()
    if family == "linear":
        return LinearKernel()
    if family == "gaussian":
        return GaussianKernel(delta)
    if family == "laplace":
        return LaplaceKernel(delta)
    if family == "exponential":
        return ExponentialKernel(delta)
    if family == "energy":
        return EnergyKernel(alpha, None if x0 is None else tuple(x0))
    if family == "sum":
        child = build_kernel(sum_child, delta, alpha, None, 1, sum_child)
        return SumKernel.per_coordinate([child] * q)
    raise InfeasibleError(f"unknown kernel family {family!r}")


def _kernel_doc(spec: KernelSpec) -> dict:
    if isinstance(spec, LinearKernel):
        return {"family": "linear"}
    if isinstance(spec, GaussianKernel):
        return {"family": "gaussian", "delta": spec.delta}
    if isinstance(spec, LaplaceKernel):
        return {"family": "laplace", "delta": spec.delta}
    if isinstance(spec, ExponentialKernel):
        return {"family": "exponential", "delta": spec.delta}
    if isinstance(spec, EnergyKernel):
        return {"family": "energy", "alpha": spec.alpha,
                "x0": None if spec.x0 is None else list(spec.x0)}
    if isinstance(spec, SumKernel):
        return {"family": "sum",
                "children": [{"coordinates": list(idxs), **_kernel_doc(s)} for idxs, s in spec.children]}
    return {"family": spec.__class__.__name__}


# ---------------------------------------------------------------------------
# segment subcommand


def run_segment(
    signal: Signal,
    spec: KernelSpec,
    algorithm: str = "exact",
    dmax: int = 100,
    ell: int = 1,
    scale: bool = True,
    landmarks: int = 100,
    landmark_rule: str | None = None,
    c1: float | None = None,
    c2: float | None = None,
) -> dict:
    """Segment a signal end to end and return the JSON-ready document."""
    t0 = time.perf_counter()
    if dmax < 1 or ell < 1 or dmax * ell > signal.n:
        raise InfeasibleError(
            f"infeasible configuration: Dmax={dmax} segments of length >= {ell} "
            f"in {signal.n} points"
        )

    if scale:
        scaled, sigma = mad_scale(signal)
    else:
        scaled, sigma = signal, np.ones(signal.q)

    if algorithm == "exact":
        result = kernseg_exact(scaled, spec, dmax, ell)
        losses = result.losses()
        segmentations = [result.backtrack(d) for d in range(1, dmax + 1)]
        table_bytes = int(result.table_numbers * 8)
        approx = False
        lowrank_doc = None
    elif algorithm == "lowrank-binseg":
        rule = landmark_rule
        if rule is None:
            rule = "grid" if (signal.q == 1 or isinstance(spec, SumKernel)) else "stride"
        emb = nystrom_embed(scaled, spec, p=min(landmarks, signal.n), rule=rule)
        bres = binary_segmentation(emb, dmax, ell)
        losses = bres.losses
        segmentations = list(bres.segmentations)
        table_bytes = int(emb.Z.nbytes + emb.prefix_sum.nbytes + emb.prefix_sqnorm.nbytes)
        approx = True
        lowrank_doc = {"rank": emb.rank, "dropped": emb.dropped, "rule": rule,
                       "exhausted": bres.exhausted}
    else:
        raise InfeasibleError(f"unknown algorithm {algorithm!r}")

    fit = None
    if c1 is None or c2 is None:
        try:
            fit = slope_heuristic(losses, signal.n, ell)
        except ValueError as exc:
            raise InfeasibleError(str(exc)) from exc
        pen = PenaltySpec(fit.c1, fit.c2, signal.n, dmax, ell)
    else:
        pen = PenaltySpec(c1, c2, signal.n, dmax, ell)
    sel: SelectionResult = select(losses, pen, segmentations, slope_fit=fit, approximate_losses=approx)
    wall = time.perf_counter() - t0

    doc = {
        "version": __version__,
        "n": signal.n,
        "q": signal.q,
        "kernel": _kernel_doc(spec),
        "algorithm": algorithm,
        "dmax": dmax,
        "min_seg_len": ell,
        "scaling": {
            "applied": bool(scale),
            "factors": [float(v) for v in sigma],
            "flagged_coordinates": [c for c, v in enumerate(sigma) if v == 0.0],
        },
        "per_d": [
            {
                "d": d,
                "loss": float(losses[d - 1]),
                "change_points": list(segmentations[d - 1].starts),
            }
            for d in range(1, dmax + 1)
        ],
        "selection": {
            "d_hat": sel.d_hat,
            "change_points": list(sel.segmentation.starts),
            "c1": sel.c1,
            "c2": sel.c2,
            "method": "slope-heuristic" if fit is not None else "fixed",
            "approximate_losses_warning": sel.approximate_losses,
        },
        "diagnostics": {
            "peak_table_bytes": table_bytes,
            "lowrank": lowrank_doc,
        },
        "timing": {"wall_seconds": wall},
    }
    return doc


# ---------------------------------------------------------------------------
# bench subcommand


def _bench_signal(n: int, seed: int) -> Signal:
    changes = equally_spaced_changes(n, 9)
    specs = [[NormalPiece(float(k % 4), 1.0)] for k in range(10)]
    return generate(n, changes, specs, seed=seed).signal


def run_bench(
    grid: list[int],
    algorithms: list[str],
    p: int = 100,
    p_rule: str = "fixed",
    dmax: int = 100,
    ell: int = 1,
    seed: int = 0,
    memory_budget_bytes: int = 2_000_000_000,
    log=lambda msg: print(msg, file=sys.stderr),
) -> list[dict]:
    """Time one segmentation per (algorithm, n) cell on seeded data.

    Timing covers the algorithm only, never input parsing or generation.
    Cells whose main tables would exceed the memory budget are skipped.
    """
    if sorted(grid) != list(grid):
        raise InfeasibleError("benchmark grid must be sorted ascending")
    # untimed warmup so one-time JIT compilation and cache effects stay out
    # of the measured cells
    warm = _bench_signal(256, seed)
    for algo in algorithms:
        if algo == "exact":
            kernseg_exact(warm, GaussianKernel(1.0), min(dmax, 16), ell)
        elif algo == "lowrank-binseg":
            emb = nystrom_embed(warm, GaussianKernel(1.0), p=16, rule="grid")
            binary_segmentation(emb, min(dmax, 16), ell)
    rows = []
    for n in grid:
        sig = _bench_signal(n, seed)
        for algo in algorithms:
            d_eff = min(dmax, n)
            if algo == "exact":
                est = d_eff * (n + 1) * 12 + 4 * (n + 1) * 8
                p_used = 0
            elif algo == "lowrank-binseg":
                p_used = int(round(math.sqrt(n))) if p_rule == "sqrt" else p
                p_used = min(p_used, n)
                est = p_used * n * 8 * 2 + (n + 1) * 8
            else:
                raise InfeasibleError(f"unknown algorithm {algo!r}")
            if est > memory_budget_bytes:
                log(f"skipping {algo} at n={n}: estimated {est} table bytes over budget")
                continue
            if algo == "exact":
                t0 = time.perf_counter()
                res = kernseg_exact(sig, GaussianKernel(1.0), d_eff, ell)
                seconds = time.perf_counter() - t0
                bytes_used = int(res.table_numbers * 8)
            else:
                t0 = time.perf_counter()
                emb = nystrom_embed(sig, GaussianKernel(1.0), p=p_used, rule="grid")
                binary_segmentation(emb, d_eff, ell)
                seconds = time.perf_counter() - t0
                bytes_used = int(emb.Z.nbytes + emb.prefix_sum.nbytes + emb.prefix_sqnorm.nbytes)
            rows.append(
                {"algorithm": algo, "n": n, "p": p_used, "seconds": seconds,
                 "peak_table_bytes": bytes_used}
            )
    return rows


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kcpd", description="Kernel multiple change-point detection")
    sub = ap.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment a CSV signal")
    seg.add_argument("--input", required=True)
    seg.add_argument("--output", default=None, help="output JSON path (default: stdout)")
    seg.add_argument("--kernel", default="gaussian",
                     choices=["linear", "gaussian", "laplace", "exponential", "energy", "sum"])
    seg.add_argument("--delta", type=float, default=1.0, help="bandwidth")
    seg.add_argument("--alpha", type=float, default=1.0, help="energy exponent in (0, 2)")
    seg.add_argument("--x0", default=None, help="energy anchor, comma-separated floats")
    seg.add_argument("--sum-child", default="gaussian",
                     choices=["linear", "gaussian", "laplace", "exponential", "energy"],
                     help="per-coordinate family for --kernel sum")
    seg.add_argument("--algorithm", default="exact", choices=["exact", "lowrank-binseg"])
    seg.add_argument("--dmax", type=int, default=100)
    seg.add_argument("--min-seg-len", type=int, default=1,
                     help="minimum points per segment (30 mirrors a common default)")
    seg.add_argument("--landmarks", type=int, default=100, help="landmark count for the fast path")
    seg.add_argument("--landmark-rule", default=None, choices=["grid", "stride"])
    seg.add_argument("--no-scale", action="store_true", help="skip robust per-coordinate scaling")
    seg.add_argument("--c1", type=float, default=None)
    seg.add_argument("--c2", type=float, default=None)

    sim = sub.add_parser("simulate", help="generate a synthetic signal CSV")
    sim.add_argument("--output", required=True)
    sim.add_argument("--truth", default=None, help="optional JSON sidecar with the ground truth")
    sim.add_argument("--n", type=int, default=5000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--num-changes", type=int, default=10)
    sim.add_argument("--jump", type=float, default=5.0, help="mean step between segments")
    sim.add_argument("--noise-sd", type=float, default=1.0)
    sim.add_argument("--kind", default="mean", choices=["mean", "variance", "folded"])
    sim.add_argument("--tracks", type=int, default=1, choices=[1, 2],
                     help="2 adds a folded second coordinate")

    ben = sub.add_parser("bench", help="runtime scaling harness")
    ben.add_argument("--grid", required=True, help="comma-separated signal lengths, ascending")
    ben.add_argument("--algorithms", default="exact,lowrank-binseg")
    ben.add_argument("--landmarks", type=int, default=100)
    ben.add_argument("--p-rule", default="fixed", choices=["fixed", "sqrt"])
    ben.add_argument("--dmax", type=int, default=100)
    ben.add_argument("--min-seg-len", type=int, default=1)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--memory-budget", type=int, default=2_000_000_000)
    ben.add_argument("--output", default=None, help="output CSV path (default: stdout)")
    return ap


def _cmd_segment(args) -> int:
    signal = load_csv(args.input)
    x0 = None if args.x0 is None else [float(v) for v in args.x0.split(",")]
    spec = build_kernel(args.kernel, args.delta, args.alpha, x0, signal.q, args.sum_child)
    if args.algorithm == "exact" and (args.landmarks != 100 or args.landmark_rule is not None):
        print("note: landmark options are ignored on the exact path", file=sys.stderr)
    doc = run_segment(
        signal,
        spec,
        algorithm=args.algorithm,
        dmax=args.dmax,
        ell=args.min_seg_len,
        scale=not args.no_scale,
        landmarks=args.landmarks,
        landmark_rule=args.landmark_rule,
        c1=args.c1,
        c2=args.c2,
    )
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.n < args.num_changes + 1:
        raise InfeasibleError(f"cannot place {args.num_changes} changes in {args.n} points")
    changes = equally_spaced_changes(args.n, args.num_changes)
    d = args.num_changes + 1
    rows = []
    for k in range(d):
        if args.kind == "mean":
            first = NormalPiece(args.jump * (k % 2), args.noise_sd)
        elif args.kind == "variance":
            first = NormalPiece(0.0, args.noise_sd * (3.0 if k % 2 else 1.0))
        else:
            first = FoldedPiece(0.5 + 0.2 * (k % 2), 0.1 * args.noise_sd)
        row = [first]
        if args.tracks == 2:
            row.append(FoldedPiece(0.5 + 0.15 * (k % 2), 0.1 * args.noise_sd))
        rows.append(row)
    out = generate(args.n, changes, rows, seed=args.seed)
    save_csv(out.signal, args.output)
    if args.truth:
        truth_doc = {
            "n": args.n,
            "seed": args.seed,
            "change_points": list(out.truth.starts),
            "means": [[float(v) for v in r] for r in out.means[[s - 1 for s in out.truth.starts]]],
        }
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(truth_doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    grid = [int(v) for v in args.grid.split(",")]
    algos = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    rows = run_bench(
        grid,
        algos,
        p=args.landmarks,
        p_rule=args.p_rule,
        dmax=args.dmax,
        ell=args.min_seg_len,
        seed=args.seed,
        memory_budget_bytes=args.memory_budget,
    )
    lines = ["algorithm,n,p,seconds,peak_table_bytes"]
    for r in rows:
        lines.append(f"{r['algorithm']},{r['n']},{r['p']},{r['seconds']:.6f},{r['peak_table_bytes']}")
    text = "\n".join(lines)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "segment":
            return _cmd_segment(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_bench(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
