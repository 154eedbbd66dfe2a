"""Command-line interface: ``fingertip-hb <subcommand> ...``.

Exit status is 0 on success, 2 on a usage error and 1 on a runtime error.
Runtime errors are reported as one JSON line on stderr.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

import numpy as np

from . import __version__
from .color import HsvRange, convert_frame, hsv_to_rgb, mask_frame
from .crossval import cross_validate, write_report
from .features import (Dataset, FeatureVector, assemble_dataset, read_features_csv,
                       video_feature_vector, write_features_csv)
from .histogram import N_BINS, frame_histograms
from .ingest import (DEFAULT_DARK_THRESHOLD, DEFAULT_WINDOW, WindowSpec, frame_quality,
                     load_video, read_manifest, window_indices, write_ppm)
from .pls import PlsConfig, load_model, pls_fit, pls_predict, save_model
from .rng import derive_seed, permutation
from .synth import SynthParams, synth_dataset

log = logging.getLogger("fingertip_hb")


def _window(args):
    return WindowSpec(args.start, args.end)


def _fmt(v):
    return format(float(v), ".17g")


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _extract_one(job):
    video, resolved, hb, window, normalize = job
    fv = video_feature_vector(load_video(resolved), window, normalize)
    return fv.values, hb, video


def cmd_extract(args):
    window = _window(args)
    jobs = [(v, p, hb, window, args.normalize) for v, p, hb in read_manifest(args.manifest)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    ds = assemble_dataset(((FeatureVector(v, i), hb, i) for v, hb, i in results), args.normalize)
    write_features_csv(args.out, ds, [f"window={window.start}-{window.end}", f"manifest={args.manifest}"])
    log.info("wrote %d x %d feature matrix to %s", *ds.x.shape, args.out)


def cmd_hist(args):
    seq = load_video(args.video)
    if args.frame is not None:
        if not 1 <= args.frame <= len(seq):
            raise ValueError(f"frame {args.frame} outside 1..{len(seq)}")
        fh = frame_histograms(convert_frame(seq.frames[args.frame - 1]))
        h, s, v = fh.h.bins, fh.s.bins, fh.v.bins
        if args.normalize:
            n = seq.width * seq.height
            h, s, v = h / n, s / n, v / n
    else:
        values = video_feature_vector(seq, _window(args), args.normalize).values
        h, s, v = values[:N_BINS], values[N_BINS:2 * N_BINS], values[2 * N_BINS:]
    out = _open_out(args.out)
    try:
        out.write("h,s,v\n")
        for row in zip(h, s, v):
            out.write(",".join(_fmt(x) for x in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_mask(args):
    seq = load_video(args.video)
    rng = HsvRange.parse(args.range)
    if args.out_ppm and args.frame is None:
        raise ValueError("--out-ppm needs --frame")
    if args.frame is not None:
        if not 1 <= args.frame <= len(seq):
            raise ValueError(f"frame {args.frame} outside 1..{len(seq)}")
        indices = [args.frame]
    else:
        first, last, fell_back = window_indices(len(seq), _window(args))
        if fell_back:
            log.warning("window does not fit %d frames; using middle third %d-%d", len(seq), first, last)
        indices = list(range(first, last + 1))
    fractions = []
    out = _open_out(args.out)
    try:
        out.write(f"# range={args.range}\n")
        out.write("frame,black_fraction\n")
        for i in indices:
            masked, frac = mask_frame(convert_frame(seq.frames[i - 1]), rng)
            fractions.append(frac)
            out.write(f"{i},{_fmt(frac)}\n")
        out.write(f"# mean_black_fraction={_fmt(np.mean(fractions))}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.out_ppm:
        write_ppm(args.out_ppm, hsv_to_rgb(masked))


def cmd_quality(args):
    seq = load_video(args.video)
    out = _open_out(args.out)
    try:
        out.write(f"# dark_threshold={args.dark_threshold}\n")
        out.write("index,mean_v,dark\n")
        for q in frame_quality(seq, args.dark_threshold):
            out.write(f"{q.index},{_fmt(q.mean_v)},{str(q.dark).lower()}\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _config(args):
    return PlsConfig(args.components, args.tol, args.max_iter)


def cmd_train(args):
    ds = read_features_csv(args.features)
    model = pls_fit(ds.x, ds.y, _config(args), normalize=ds.normalize)
    save_model(model, args.out)
    log.info("trained %d-component model on %d observations", model.n_components_used, len(ds))


def cmd_cv(args):
    ds = read_features_csv(args.features)
    if args.permute_labels is not None:
        perm = permutation(len(ds), derive_seed(args.permute_labels, 0))
        ds = Dataset(ds.x, ds.y[perm], ds.ids, ds.normalize)
    report = cross_validate(ds, _config(args), args.k, args.seed)
    if args.permute_labels is not None:
        report.config["permute_labels"] = args.permute_labels
    write_report(report, args.out_dir)
    print(json.dumps({"r2": report.r2, "rmse": report.rmse, "train_r2": report.train_r2}))


def cmd_predict(args):
    model = load_model(args.model)
    seq = load_video(args.video)
    fv = video_feature_vector(seq, _window(args), model.normalize)
    pred = pls_predict(model, fv)
    print("id,hb_gdl")
    print(f"{pred.source_id},{_fmt(pred.hb_gdl)}")


def cmd_synth(args):
    params = SynthParams(**{f.name: getattr(args, f.name) for f in fields(SynthParams)})
    m = synth_dataset(args.n, args.hb_lo, args.hb_hi, params, args.seed, args.out_dir, args.jobs)
    print(m.path)


def _add_window(p):
    p.add_argument("--start", type=int, default=DEFAULT_WINDOW[0], help="first frame (1-based)")
    p.add_argument("--end", type=int, default=DEFAULT_WINDOW[1], help="last frame (1-based, inclusive)")


def _add_pls(p):
    p.add_argument("--components", type=int, default=10, help="PLS components")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fingertip-hb", description="Hemoglobin estimation from fingertip-video HSV histograms."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--help-json", action="store_true", help="print the CLI schema as JSON and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("extract", help="manifest of videos -> feature CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_window(p)
    p.add_argument("--normalize", action="store_true", help="divide histograms by pixel count")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("hist", help="256-row h,s,v histogram CSV of one video")
    p.add_argument("--video", required=True, help="FTV1 file or frame directory")
    p.add_argument("--frame", type=int, help="single frame (1-based) instead of the window average")
    _add_window(p)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("mask", help="black-pixel fraction under an HSV range")
    p.add_argument("--video", required=True)
    p.add_argument("--range", required=True, help="h_lo,h_hi,s_lo,s_hi,v_lo,v_hi (inclusive)")
    p.add_argument("--frame", type=int)
    _add_window(p)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--out-ppm", help="write the masked frame as PPM (needs --frame)")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("quality", help="per-frame mean V and dark flags")
    p.add_argument("--video", required=True)
    p.add_argument("--dark-threshold", type=float, default=DEFAULT_DARK_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("train", help="fit a PLS model on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="model JSON")
    _add_pls(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="k-fold cross-validation report")
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", default="cv_report")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--permute-labels", type=int, metavar="SEED",
                   help="negative control: shuffle hb labels with this seed first")
    _add_pls(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("predict", help="predict Hb for one video")
    p.add_argument("--model", required=True)
    p.add_argument("--video", required=True)
    _add_window(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic video dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--hb-lo", type=float, default=6.3)
    p.add_argument("--hb-hi", type=float, default=12.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    for f in fields(SynthParams):
        p.add_argument("--" + f.name.replace("_", "-"), type=type(f.default), default=f.default)
    p.set_defaults(func=cmd_synth)
    return parser


def parser_schema(parser):
    """Machine-readable description of the subcommands and their flags."""

    def describe(p):
        out = []
        for a in p._actions:
            if isinstance(a, (argparse._HelpAction, argparse._SubParsersAction)):
                continue
            out.append({
                "flags": a.option_strings,
                "dest": a.dest,
                "required": a.required,
                "default": a.default if isinstance(a.default, (int, float, str, bool, type(None))) else None,
                "help": a.help,
            })
        return out

    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {
        "prog": parser.prog,
        "version": __version__,
        "options": describe(parser),
        "commands": {
            ca.dest: {"help": ca.help, "options": describe(sub.choices[ca.dest])} for ca in sub._choices_actions
        },
    }


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.help_json:
        print(json.dumps(parser_schema(parser), indent=2))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("fingertip-hb: error: a subcommand is required", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "command": args.command, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
