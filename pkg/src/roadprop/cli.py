"""Command-line entry point.

Exit status: 0 on success, 1 on bad arguments or unreadable inputs, 2 when
some inputs were skipped.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import graphcut, losses, morphology, propagate
from .config import Config, ConfigError, parse_config
from .metrics import evaluate_dataset
from .raster import (read_binary_mask, read_image, read_prob_map, read_tristate, rgb_to_hsv,
                     write_binary_mask, write_f32, write_labels)
from .scribble import foreground_raster, rasterize, read_scribbles, write_scribbles
from .superpixel import NoSeedsError, SlicParams, compute_stats, label_count, slic_segment

log = logging.getLogger("roadprop")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


class UsageError(Exception):
    pass


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load_config(args) -> Config:
    return parse_config(args.config) if getattr(args, "config", None) else Config()


# ---------------------------------------------------------------------------
# subcommands

def cmd_propagate(args) -> int:
    cfg = _load_config(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    summary = propagate.propagate_dataset(args.images, args.scribbles, args.out, cfg.propagation(),
                                          jobs=args.jobs, overlay_dir=args.overlay)
    print("stem,road,unknown,nonroad")
    for stem, r, u, n in summary.rows:
        print(f"{stem},{r:.6f},{u:.6f},{n:.6f}")
    return EXIT_PARTIAL if summary.unmatched else EXIT_OK


def cmd_eval(args) -> int:
    result = evaluate_dataset(args.pred, args.gt)
    for stem in result.unmatched:
        log.warning("skipping %s: present in only one of --pred / --gt", stem)
    for stem, c, m in result.rows:
        log.info("%s tp=%d fp=%d fn=%d iou=%.4f", stem, c.tp, c.fp, c.fn, m.iou)
    text = result.to_csv()
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    return EXIT_PARTIAL if result.unmatched else EXIT_OK


def cmd_loss(args) -> int:
    cfg = _load_config(args)
    kernel = losses.KernelParams(args.sigma_rgb if args.sigma_rgb is not None else cfg.sigma_rgb,
                                 args.sigma_xy if args.sigma_xy is not None else cfg.sigma_xy)
    weights = losses.LossWeights(args.alpha if args.alpha is not None else cfg.alpha,
                                 args.beta if args.beta is not None else cfg.beta)
    S = read_prob_map(args.seg)
    Y = read_tristate(args.proposal)
    img = read_image(args.image)
    B = read_prob_map(args.boundary)
    T = read_prob_map(args.edges) if args.edges else losses.sobel_edges(img)
    report = losses.joint_loss(S, Y, img, T, B, weights, kernel, args.backend)
    print(report.format())
    if args.grad:
        write_f32(args.grad, losses.regularized_loss_grad(S, img, kernel, args.backend))
    return EXIT_OK


def cmd_simulate(args) -> int:
    surface = read_binary_mask(args.gt)
    scribbles = morphology.simulate_scribbles(surface, args.kernel_size)
    if Path(args.out).suffix.lower() == ".png":
        h, w = surface.shape
        write_binary_mask(args.out, rasterize(scribbles, w, h))
    else:
        write_scribbles(args.out, scribbles)
    log.info("%s polylines=%d", Path(args.gt).stem, len(scribbles))
    return EXIT_OK


def cmd_superpixels(args) -> int:
    cfg = _load_config(args)
    img = read_image(args.image)
    t0 = time.perf_counter()
    labels = slic_segment(img, SlicParams(args.target or cfg.slic_target, cfg.slic_compactness))
    write_labels(args.out, labels)
    log.info("%s slic=%.1fms superpixels=%d", Path(args.image).stem,
             (time.perf_counter() - t0) * 1e3, label_count(labels))
    if args.graph:
        stats = compute_stats(rgb_to_hsv(img), labels, *cfg.hist_bins, cfg.hist_mode)
        adj = graphcut.superpixel_adjacency(stats)
        hists = np.stack([s.histogram for s in stats])
        w = graphcut.pairwise_weights(hists, adj, cfg.pairwise_gamma, cfg.pairwise_sigma, cfg.kl_eps)
        lines = [f"node {s.id} {s.centroid[0]:.10g} {s.centroid[1]:.10g} {s.pixel_count}" for s in stats]
        lines += [f"edge {i} {j} {x:.10g}" for (i, j), x in zip(adj.tolist(), w)]
        Path(args.graph).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_skeletonize(args) -> int:
    write_binary_mask(args.out, morphology.skeletonize(read_binary_mask(args.mask)))
    return EXIT_OK


def cmd_graphcut_debug(args) -> int:
    cfg = _load_config(args).propagation()
    img = read_image(args.image)
    h, w = img.shape[:2]
    scribbles = read_scribbles(args.scribbles)
    res = propagate.propagate_tile_detailed(img, scribbles, cfg)
    if res.energy is None:
        raise NoSeedsError("no graph was built for this tile (missing foreground or background seeds)")
    Path(args.out).write_text(res.energy.to_text())
    if args.mask:
        write_binary_mask(args.mask, res.graph)
    fg = foreground_raster(scribbles, w, h)
    print(f"nodes={res.energy.node_count} edges={len(res.energy.edges)} "
          f"cut={res.cut.cut_value:.6f} flow={res.cut.flow_value:.6f} "
          f"foreground={int(res.cut.foreground.sum())} scribble_px={int(fg.sum())}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roadprop", description="Scribble-to-mask label propagation for road extraction.")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    s = sub.add_parser("propagate", help="turn scribbles into tri-state proposal masks")
    s.add_argument("--images", required=True)
    s.add_argument("--scribbles", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--overlay")
    s.set_defaults(func=cmd_propagate)

    s = sub.add_parser("eval", help="pixel metrics of predicted masks against ground truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("loss", help="evaluate the joint loss on probability maps")
    s.add_argument("--seg", required=True, help="segmentation probabilities (F32M or PNG)")
    s.add_argument("--proposal", required=True, help="tri-state proposal mask PNG")
    s.add_argument("--image", required=True)
    s.add_argument("--boundary", required=True, help="predicted boundary map")
    s.add_argument("--edges", help="reference edge map (default: Sobel edges of the image)")
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--sigma-rgb", type=float)
    s.add_argument("--sigma-xy", type=float)
    s.add_argument("--grad", help="write the regularizer gradient as F32M")
    s.add_argument("--backend", choices=("brute", "fast"), default="fast")
    s.add_argument("--config")
    s.set_defaults(func=cmd_loss)

    s = sub.add_parser("simulate-scribbles", help="centerline scribbles from a road surface mask")
    s.add_argument("--gt", required=True)
    s.add_argument("--out", required=True, help=".txt polylines or .png raster")
    s.add_argument("--kernel-size", type=int, default=7)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("superpixels", help="SLIC labels as 16-bit PNG")
    s.add_argument("--image", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--target", type=int)
    s.add_argument("--graph", help="also dump the Delaunay adjacency with pairwise weights")
    s.add_argument("--config")
    s.set_defaults(func=cmd_superpixels)

    s = sub.add_parser("skeletonize", help="one-pixel centerlines of a binary mask")
    s.add_argument("--mask", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_skeletonize)

    s = sub.add_parser("graphcut-debug", help="dump the superpixel energy graph of one tile")
    s.add_argument("--image", required=True)
    s.add_argument("--scribbles", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mask", help="write the graph-cut road mask")
    s.add_argument("--config")
    s.set_defaults(func=cmd_graphcut_debug)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    root = logging.getLogger("roadprop")
    if not any(isinstance(h, _StderrHandler) for h in root.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        root.addHandler(handler)
    root.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"roadprop {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, NoSeedsError, ValueError, OSError) as exc:
        print(f"roadprop {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
