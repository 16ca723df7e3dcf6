"""Command line front end: code inspection, training, and evaluation sweeps.

Subcommands:
  code-info   construct a code and report its dimensions and invariant checks
  train       run the on-the-fly training loop, write checkpoint + loss CSV
  eval        Monte Carlo BER/FER sweep for one or more decoders, CSV (+ SVG)

A simple key=value config file can predefine any long flag; flags given on
the command line override it. Exit codes: 0 success, 1 runtime error,
2 usage or input-parse error.
"""
from __future__ import annotations

import argparse
import os
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .baselines import Decoder, hard_decoder, map_decoder, osd_decoder
from .codes import (
    LinearCode,
    PcFileError,
    PolarSpec,
    code_from_pc,
    load_pc_matrix,
    polar_build,
    polar_select_rows,
    standardize_pc,
)
from .estimator import parameter_count
from .evaluation import EvalReport, EvalRow, StopRule, monte_carlo, sbnd_decoder, sweep
from .gf2 import BitMatrix, gf2_matmul, gf2_rank
from .channel import SnrPoint
from .training import (
    CheckpointError,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
    write_loss_csv,
)

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class UsageError(ValueError):
    """Bad flags, bad config values, unparsable inputs."""


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _add_code_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--polar", nargs=2, type=int, metavar=("N", "K"),
                   help="build a polar code of block length N with K message bits")
    p.add_argument("--design-erasure", type=float, default=0.5,
                   help="erasure design parameter for polar row selection")
    p.add_argument("--info-rows", type=str, default=None,
                   help="explicit 1-based polar row indices, comma separated")
    p.add_argument("--pc-file", type=str, default=None,
                   help="load a parity-check matrix (dense text or .alist)")
    p.add_argument("--standardize-h", action="store_true",
                   help="row-reduce H before use (same code, different syndrome map)")


def _add_stop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frame-errors", type=int, default=300,
                   help="frame errors to accumulate per SNR point")
    p.add_argument("--min-frames", type=int, default=10_000)
    p.add_argument("--max-frames", type=int, default=10_000_000)
    p.add_argument("--batch-frames", type=int, default=256)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbnd", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", type=str, default=None,
                        help="key=value file supplying default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p_info = sub.add_parser("code-info", help="construct a code and check its invariants")
    _add_code_flags(p_info)

    p_train = sub.add_parser("train", help="train the bit-flip estimator")
    _add_code_flags(p_train)
    p_train.add_argument("--steps", type=int, default=20_000)
    p_train.add_argument("--batch-size", type=int, default=4096)
    p_train.add_argument("--lr", type=float, default=1e-3)
    p_train.add_argument("--train-ebn0", type=float, default=3.0)
    p_train.add_argument("-M", "--scale", type=int, default=6)
    p_train.add_argument("-T", "--time-steps", type=int, default=5)
    p_train.add_argument("-D", "--depth", type=int, default=5)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--checkpoint-out", type=str, default="estimator.sbnd")
    p_train.add_argument("--loss-csv", type=str, default=None,
                         help="loss log path (default: derived from checkpoint name)")
    p_train.add_argument("--log-every", type=int, default=100)

    p_eval = sub.add_parser("eval", help="Monte Carlo BER/FER sweep")
    _add_code_flags(p_eval)
    _add_stop_flags(p_eval)
    p_eval.add_argument("--decoder", type=str, default="hard",
                        help="comma list of: hard, map, map-bitwise, osd<N>, sbnd")
    p_eval.add_argument("--checkpoint", type=str, default=None,
                        help="estimator checkpoint (required for sbnd)")
    p_eval.add_argument("--ebn0", type=str, default="0:1:6",
                        help="SNR list in dB: 'start:step:end' or comma separated")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", type=str, default="results.csv")
    p_eval.add_argument("--svg", type=str, default=None,
                        help="also render BER/FER curves to this SVG file")
    p_eval.add_argument("--workers", type=int, default=None,
                        help="parallel workers across SNR points "
                             "(default: SBND_WORKERS or the CPU count)")
    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Turn a --config file into flag tokens placed before the real flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config requires a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    tokens: list[str] = []
    for ln_no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln_no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        tokens.append("--" + key.replace("_", "-"))
        tokens.extend(shlex.split(value))
    # config tokens go right after the subcommand so later flags win
    if rest and not rest[0].startswith("-"):
        return [rest[0]] + tokens + rest[1:]
    return tokens + rest


def parse_ebn0_list(text: str) -> list[float]:
    """Parse 'start:step:end' (inclusive) or a comma list; returned sorted."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, end = parts
            if step <= 0 or end < start:
                raise ValueError
            count = int(round((end - start) / step)) + 1
            values = [start + i * step for i in range(count) if start + i * step <= end + 1e-9]
        else:
            values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad SNR list {text!r}") from exc
    if not values:
        raise UsageError("empty SNR list")
    return sorted(values)


def build_code(args) -> LinearCode:
    if args.polar is not None and args.pc_file is not None:
        raise UsageError("--polar and --pc-file are mutually exclusive")
    if args.polar is not None:
        n, k = args.polar
        info_rows = None
        if args.info_rows:
            try:
                info_rows = tuple(int(t) for t in args.info_rows.split(","))
            except ValueError as exc:
                raise UsageError(f"bad --info-rows {args.info_rows!r}") from exc
        try:
            spec = PolarSpec(n=n, k=k, info_rows=info_rows, design_erasure=args.design_erasure)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        code = polar_build(spec)
    elif args.pc_file is not None:
        h = load_pc_matrix(args.pc_file)
        code = code_from_pc(h)
    else:
        raise UsageError("choose a code with --polar N K or --pc-file PATH")
    if args.standardize_h:
        code = replace(code, H=standardize_pc(code.H))
    return code


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_code_info(args) -> int:
    code = build_code(args)
    print(f"code: {code.name}")
    print(f"n: {code.n}  k: {code.k}  rate: {code.rate:g}")
    checks = {
        "rank(H) = n-k": gf2_rank(code.H) == code.n - code.k,
        "rank(G) = k": gf2_rank(code.G) == code.k,
        "G H^T = 0": gf2_matmul(code.G, code.H.T) == BitMatrix.zeros(code.k, code.n - code.k),
        "A G^T = I": gf2_matmul(code.A, code.G.T) == BitMatrix.identity(code.k),
    }
    if args.polar is not None:
        n, k = args.polar
        rows = polar_select_rows(
            PolarSpec(n=n, k=k,
                      info_rows=tuple(int(t) for t in args.info_rows.split(",")) if args.info_rows else None,
                      design_erasure=args.design_erasure)
        )
        frozen = sorted(set(range(1, code.n + 1)) - set(rows))
        print(f"info rows (1-based): {','.join(map(str, rows))}")
        print(f"frozen rows (1-based): {','.join(map(str, frozen))}")
    if code.info_set is not None:
        print(f"systematic positions (0-based): {','.join(map(str, code.info_set))}")
    standardized = standardize_pc(code.H) == code.H if code.n > code.k else True
    print(f"H in row-reduced standard form: {'yes' if standardized else 'no'}")
    ok = True
    for label, passed in checks.items():
        print(f"check {label}: {'ok' if passed else 'FAILED'}")
        ok = ok and passed
    return 0 if ok else RUNTIME_ERROR


def cmd_train(args) -> int:
    code = build_code(args)
    cfg = TrainConfig(
        batch_size=args.batch_size,
        train_ebn0_db=args.train_ebn0,
        learning_rate=args.lr,
        steps=args.steps,
        seed=args.seed,
        scale=args.scale,
        time_steps=args.time_steps,
        depth=args.depth,
        log_every=args.log_every,
    )
    est_cfg = cfg.estimator_config(code)
    print(f"training on {code.name}: hidden={est_cfg.hidden}, "
          f"T={est_cfg.time_steps}, D={est_cfg.depth}, batch={cfg.batch_size}, "
          f"steps={cfg.steps}, train Eb/N0={cfg.train_ebn0_db} dB")

    def progress(step: int, value: float) -> None:
        print(f"step {step:>7d}  loss {value:.5f}", flush=True)

    params, history = train(code, cfg, progress=progress)
    save_checkpoint(params, est_cfg, args.checkpoint_out)
    loss_csv = args.loss_csv or (os.path.splitext(args.checkpoint_out)[0] + "_loss.csv")
    write_loss_csv(history, loss_csv)
    print(f"saved checkpoint ({parameter_count(params)} parameters) to {args.checkpoint_out}")
    print(f"saved loss log to {loss_csv}")
    return 0


def _make_decoders(names: list[str], code: LinearCode, checkpoint: str | None) -> list[Decoder]:
    decoders = []
    for name in names:
        if name == "hard":
            decoders.append(hard_decoder(code))
        elif name == "map":
            decoders.append(map_decoder(code, "block"))
        elif name == "map-bitwise":
            decoders.append(map_decoder(code, "bitwise"))
        elif name.startswith("osd"):
            try:
                order = int(name[3:])
            except ValueError as exc:
                raise UsageError(f"bad decoder {name!r}") from exc
            decoders.append(osd_decoder(code, order))
        elif name == "sbnd":
            if checkpoint is None:
                raise UsageError("--decoder sbnd requires --checkpoint")
            params, _ = load_checkpoint(checkpoint)
            decoders.append(sbnd_decoder(code, params))
        else:
            raise UsageError(f"unknown decoder {name!r}")
    return decoders


def _eval_task(payload) -> EvalRow:
    """Worker entry: rebuild everything from picklable pieces, run one point."""
    (vars_dict, decoder_name, ebn0_db, idx) = payload
    args = argparse.Namespace(**vars_dict)
    code = build_code(args)
    decoder = _make_decoders([decoder_name], code, args.checkpoint)[0]
    stop = StopRule(
        target_frame_errors=args.frame_errors,
        min_frames=args.min_frames,
        max_frames=args.max_frames,
        batch_frames=args.batch_frames,
    )
    snr = SnrPoint(ebn0_db=ebn0_db, rate=code.k / code.n)
    rng = np.random.default_rng((args.seed, idx))
    return monte_carlo(code, decoder, snr, stop, rng, seed=args.seed)


def cmd_eval(args) -> int:
    code = build_code(args)
    names = [t.strip() for t in args.decoder.split(",") if t.strip()]
    if not names:
        raise UsageError("no decoder given")
    _make_decoders(names, code, args.checkpoint)  # fail fast on bad flags
    points = parse_ebn0_list(args.ebn0)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("SBND_WORKERS", os.cpu_count() or 1))

    code_keys = ("polar", "design_erasure", "info_rows", "pc_file", "standardize_h",
                 "checkpoint", "frame_errors", "min_frames", "max_frames",
                 "batch_frames", "seed")
    vars_dict = {key: getattr(args, key) for key in code_keys}
    tasks = [
        (vars_dict, name, ebn0_db, idx)
        for name in names
        for idx, ebn0_db in enumerate(points)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_eval_task, tasks))
    else:
        rows = [_eval_task(t) for t in tasks]
    report = EvalReport(rows=rows)
    report.to_csv(args.out)
    for row in rows:
        print(f"{row.decoder:>12s}  Eb/N0 {row.ebn0_db:5.2f} dB  frames {row.frames:>8d}  "
              f"ber {row.ber:.3e}  fer {row.fer:.3e}")
    print(f"wrote {args.out}")
    if args.svg:
        render_error_rate_svg(rows, args.svg, title=code.name)
        print(f"wrote {args.svg}")
    return 0


# ---------------------------------------------------------------------------
# SVG rendering (no plotting dependencies)
# ---------------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _panel(rows: list[EvalRow], value, x0: float, title: str) -> list[str]:
    """One log-y panel (polyline per decoder) anchored at pixel offset x0."""
    width, height, pad = 360.0, 300.0, 48.0
    xs = sorted({r.ebn0_db for r in rows})
    decoders = list(dict.fromkeys(r.decoder for r in rows))
    positives = [value(r) for r in rows if value(r) > 0]
    if not positives:
        positives = [1e-1]
    y_lo = np.floor(np.log10(min(positives)))
    y_hi = 0.0
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        return x0 + pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def py(v):
        return pad + (y_hi - np.log10(v)) / (y_hi - y_lo + 1e-12) * (height - 2 * pad)

    parts = [
        f'<rect x="{x0 + pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="{x0 + width / 2}" y="{pad - 14}" text-anchor="middle" '
        f'font-size="13" fill="#111">{title}</text>',
        f'<text x="{x0 + width / 2}" y="{height - 8}" text-anchor="middle" '
        'font-size="11" fill="#111">Eb/N0 (dB)</text>',
    ]
    for tick in np.arange(int(y_lo), 1):
        v = 10.0 ** tick
        parts.append(f'<line x1="{x0 + pad}" y1="{py(v):.1f}" x2="{x0 + width - pad}" '
                     f'y2="{py(v):.1f}" stroke="#ddd" stroke-width="0.5"/>')
        parts.append(f'<text x="{x0 + pad - 4}" y="{py(v) + 3:.1f}" text-anchor="end" '
                     f'font-size="9" fill="#111">1e{int(tick)}</text>')
    for x in xs:
        parts.append(f'<line x1="{px(x):.1f}" y1="{height - pad}" x2="{px(x):.1f}" '
                     f'y2="{height - pad + 4}" stroke="#333" stroke-width="1"/>')
        parts.append(f'<text x="{px(x):.1f}" y="{height - pad + 14}" text-anchor="middle" '
                     f'font-size="9" fill="#111">{x:g}</text>')
    for color_idx, dec in enumerate(decoders):
        color = _PALETTE[color_idx % len(_PALETTE)]
        pts = [(r.ebn0_db, value(r)) for r in rows if r.decoder == dec and value(r) > 0]
        pts.sort()
        if pts:
            coords = " ".join(f"{px(x):.1f},{py(v):.1f}" for x, v in pts)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                         'stroke-width="1.5"/>')
            for x, v in pts:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(v):.1f}" r="2.4" fill="{color}"/>')
        ly = pad + 12 + 13 * color_idx
        parts.append(f'<line x1="{x0 + width - pad - 72}" y1="{ly - 3}" '
                     f'x2="{x0 + width - pad - 54}" y2="{ly - 3}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x0 + width - pad - 50}" y="{ly}" font-size="10" '
                     f'fill="#111">{dec}</text>')
    return parts


def render_error_rate_svg(rows: list[EvalRow], path, title: str = "") -> None:
    """Two side-by-side log-scale panels: BER and FER versus Eb/N0."""
    body = []
    body += _panel(rows, lambda r: r.ber, 0.0, f"{title} BER".strip())
    body += _panel(rows, lambda r: r.fer, 370.0, f"{title} FER".strip())
    svg = (
        '<svg xmlns="http://www.w3.org/2000/svg" width="740" height="300" '
        'font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n"
    )
    with open(path, "w") as fh:
        fh.write(svg)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
        if args.command == "code-info":
            return cmd_code_info(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, PcFileError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
