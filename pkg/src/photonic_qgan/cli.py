"""Command-line runner for the three GAN experiments, calibration and selftest.

Exit codes: 0 success, 2 usage error, 3 runtime or training failure.
Settings resolve as command-line flag > ``--config`` JSON > built-in default.
Every command writes its outputs into ``--out`` (default
``$PHOTONIC_QGAN_OUT/<command>``, else ``runs/<command>``) and finishes by
writing ``manifest.json`` listing them.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import fields
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import chip, plotting, qcore, selftest, tomography
from .data import mnist, pca, targets
from .errors import FitError, InvalidArgument, ParseError, TrainingAborted
from .gan.distribution import HqcGanConfig, train_distribution
from .gan.images import ImageGanConfig, train_images
from .gan.pqgan import (MIXED_TARGET, PURE_TARGET, PqGanConfig, initial_parameters,
                        pqgan_generator, train_pqgan)

OUT_ENV = "PHOTONIC_QGAN_OUT"
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class Run:
    """Collects output files and writes the manifest last."""

    def __init__(self, experiment, out, args):
        self.experiment = experiment
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.figures = args.figures
        self.outputs = []
        self.start = time.perf_counter()

    def path(self, name):
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return p

    def write_text(self, name, text):
        self.path(name).write_text(text)

    def write_json(self, name, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def figure(self, stem, fn, *a, **kw):
        if self.figures != "none":
            fn(*a, path=self.path(f"{stem}.{self.figures}"), **kw)

    def finish(self, config, seeds, **extra):
        missing = [n for n in self.outputs if not (self.out / n).exists()]
        if missing:
            raise RuntimeError(f"outputs missing before manifest: {missing}")
        manifest = {"experiment": self.experiment, "config": config, "seeds": seeds,
                    "version": _version(), "outputs": sorted(set(self.outputs)),
                    "duration_s": round(time.perf_counter() - self.start, 3), **extra}
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _load_config(path, section, cls, overrides):
    """``cls`` instance from defaults, then the JSON ``section``, then flags."""
    values = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        values.update(data.get(section, {}))
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown {section} config keys: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid {section} config: {exc}") from None


def _shots(text):
    if text is None or text == "exact":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--shots must be 'exact' or a positive integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("--shots must be positive")
    return n


def _out_dir(args, command):
    if args.out:
        return args.out
    return Path(os.environ.get(OUT_ENV, "runs")) / command


def _summary(values):
    values = np.asarray(values, dtype=float)
    return {"mean": float(values.mean()), "std": float(values.std()), "median": float(np.median(values)),
            "values": values.tolist()}


# -- learn-state ----------------------------------------------------------

def _state_target(spec):
    if spec == "pure":
        return PURE_TARGET
    if spec == "mixed":
        return MIXED_TARGET
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"--target must be 'pure', 'mixed' or a JSON file; {spec} not found")
    try:
        d = json.loads(path.read_text())
        rho = np.array(d["real"], dtype=float) + 1j * np.array(d.get("imag", np.zeros((2, 2))), dtype=float)
        return qcore.check_density(rho, atol=1e-9)
    except (OSError, ValueError, KeyError, TypeError, InvalidArgument) as exc:
        raise UsageError(f"bad target density in {spec}: {exc}") from None


def cmd_learn_state(args):
    sigma = _state_target(args.target)
    cfg = _load_config(args.config, "pqgan", PqGanConfig,
                       {"epochs": args.epochs, "rounds": args.rounds, "shots": args.shots,
                        "observable": args.observable})
    run = Run("learn-state", _out_dir(args, "learn-state"), args)
    seeds = [args.seed + r for r in range(cfg.rounds)]
    shared = initial_parameters(args.seed, cfg.init_std) if args.same_init else None
    hists, final_states = [], []
    for r, seed in enumerate(seeds):
        hist = train_pqgan(cfg, sigma, seed=seed, init=shared)
        hist.write_csv(run.path(f"round{r}_history.csv"))
        hists.append(hist)
        rho = pqgan_generator(np.array(hist.final.params["theta_g"]))
        est = tomography.reconstruct(tomography.measure_all(rho, cfg.shots, seed))
        final_states.append({"round": r, "seed": seed, "real": est.real.tolist(),
                             "imag": est.imag.tolist(), "fidelity": qcore.fidelity(est, sigma)})
    run.write_json("tomography.json", {"target": {"real": sigma.real.tolist(), "imag": sigma.imag.tolist()},
                                       "rounds": final_states})
    summary = {"final_fidelity": _summary([h.info["final_fidelity"] for h in hists]),
               "best_fidelity": _summary([h.info["best_fidelity"] for h in hists]),
               "best_epoch": [h.info["best_epoch"] for h in hists]}
    run.write_json("summary.json", summary)
    run.figure("training", plotting.plot_training, hists, metric_label="fidelity")
    run.finish(cfg.to_dict(), seeds, target=args.target, same_init=args.same_init)
    s = summary["final_fidelity"]
    print(f"final fidelity {s['mean']:.4f} +/- {s['std']:.4f} over {cfg.rounds} round(s)")


# -- load-distribution ----------------------------------------------------

def cmd_load_distribution(args):
    cfg = _load_config(args.config, "distribution", HqcGanConfig,
                       {"epochs": args.epochs, "rounds": args.rounds, "shots": args.shots})
    target = targets.build_target(args.dist, args.seed)
    run = Run("load-distribution", _out_dir(args, "load-distribution"), args)
    run.write_text("target.csv", targets.target_csv(target))
    seeds = [args.seed + r for r in range(cfg.rounds)]
    hists = []
    for r, seed in enumerate(seeds):
        hist = train_distribution(cfg, target, seed=seed)
        hist.write_csv(run.path(f"round{r}_history.csv"))
        hists.append(hist)
    with open(run.path("final_distribution.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "bin", "probability"])
        for r, h in enumerate(hists):
            for i, v in enumerate(h.info["final_distribution"]):
                w.writerow([r, i, repr(float(v))])
    summary = {"target": target.tolist(), "final_kld": _summary([h.info["final_kld"] for h in hists])}
    run.write_json("summary.json", summary)
    run.figure("training", plotting.plot_training, hists, metric_label="KLD")
    run.figure("distribution", plotting.plot_distribution, target,
               [h.info["final_distribution"] for h in hists])
    run.finish(cfg.to_dict(), seeds, dist=args.dist)
    print(f"median final KLD {summary['final_kld']['median']:.4g} over {cfg.rounds} round(s)")


# -- gen-images -----------------------------------------------------------

def _image_dataset(args):
    if args.mnist:
        parts = args.mnist.split(",")
        if len(parts) != 2:
            raise UsageError("--mnist expects IMAGES,LABELS")
        missing = [p for p in parts if not Path(p).is_file()]
        if missing:
            raise UsageError(f"dataset file(s) not found: {', '.join(missing)}")
        try:
            images, labels = mnist.load_mnist_idx(*parts)
        except ParseError as exc:
            raise UsageError(str(exc)) from None
    else:
        images, labels = mnist.load_fixture()
    images = images[labels == args.digit]
    if len(images) < 4:
        raise UsageError(f"only {len(images)} image(s) of digit {args.digit} in the dataset")
    return images


def cmd_gen_images(args):
    if not 0 < args.threshold < 1:
        raise UsageError("--threshold must lie in (0, 1)")
    cfg = _load_config(args.config, "images", ImageGanConfig,
                       {"epochs": args.epochs, "rounds": args.rounds, "batch_size": args.batch})
    images = _image_dataset(args)
    model = pca.pca_fit(images, 3)
    data = pca.feature_to_prob(model, pca.pca_transform(model, images))
    run = Run("gen-images", _out_dir(args, "gen-images"), args)
    run.write_text("pca.json", model.to_json())
    seeds = [args.seed + r for r in range(cfg.rounds)]
    hists = []
    bank_rows = []
    for r, seed in enumerate(seeds):
        hist = train_images(cfg, data, seed=seed)
        hist.write_csv(run.path(f"round{r}_history.csv"))
        hists.append(hist)
        for i, p in enumerate(hist.info["samples"]):
            bank_rows.append((r, i, p, pca.prob_to_feature(model, p)))
    with open(run.path("generated_features.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "sample", "p0", "p1", "p2", "p3", "x0", "x1", "x2"])
        for r, i, p, x in bank_rows:
            w.writerow([r, i, *(repr(float(v)) for v in p), *(repr(float(v)) for v in x)])

    n_show = min(args.show, len(images), len(hists[0].info["samples"]))
    real = [pca.binarize(img, args.threshold).reshape(28, 28) for img in images[:n_show]]
    gen = [pca.prob_to_image(model, p, args.threshold) for p in hists[0].info["samples"][:n_show]]
    for i, (a, b) in enumerate(zip(real, gen)):
        pca.write_pgm(run.path(f"images/real_{i:02d}.pgm"), a)
        pca.write_pgm(run.path(f"images/generated_{i:02d}.pgm"), b)
    cols = min(5, n_show)
    grid = np.hstack([pca.image_grid(real, cols), np.zeros((pca.image_grid(real, cols).shape[0], 4),
                                                           np.uint8), pca.image_grid(gen, cols)])
    pca.write_pgm(run.path("grid.pgm"), grid)
    summary = {"digit": args.digit, "final_kld": _summary([h.info["final_kld"] for h in hists]),
               "final_critic_loss": _summary([h.final.loss_d for h in hists]),
               "threshold": args.threshold}
    run.write_json("summary.json", summary)
    run.figure("training", plotting.plot_training, hists, metric_label="KLD")
    run.figure("images", plotting.plot_image_grid, real, gen, columns=cols)
    run.finish(cfg.to_dict(), seeds, digit=args.digit,
               dataset="fixture" if not args.mnist else args.mnist)
    print(f"median final KLD {summary['final_kld']['median']:.4g}, "
          f"median final critic loss {summary['final_critic_loss']['median']:.4g}")


# -- calibrate / selftest -------------------------------------------------

def bundled_fringe():
    return resources.files("photonic_qgan.data") / "fixtures" / "synthetic_fringe.csv"


def cmd_calibrate(args):
    source = Path(args.input) if args.input else bundled_fringe()
    if not source.is_file():
        raise UsageError(f"calibration input not found: {source}")
    try:
        samples = chip.read_calibration_csv(source)
    except (InvalidArgument, ValueError) as exc:
        raise UsageError(str(exc)) from None
    cal = chip.fit_calibration(samples)
    run = Run("calibrate", _out_dir(args, "calibrate"), args)
    run.write_text("calibration.json", cal.to_json() + "\n")
    with open(run.path("fit_curve.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["current_mA", "counts_per_s", "fitted"])
        for i, c in samples:
            w.writerow([repr(i), repr(c), repr(float(cal.predict(i)))])
    run.figure("calibration", plotting.plot_calibration, samples, cal)
    run.finish({"input": str(args.input or "bundled synthetic fringe")}, [])
    print(f"a={cal.a:.6g} alpha={cal.alpha:.6g} beta={cal.beta:.6g} b={cal.b:.6g} rms={cal.rms:.3g}")


def cmd_selftest(args):
    results = selftest.run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        raise RuntimeError(f"{len(failed)} selftest check(s) failed: {', '.join(failed)}")


# -- parser ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command> or runs/<command>)")
    common.add_argument("--config", help="JSON file with per-experiment settings")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--figures", choices=(*plotting.FIGURE_FORMATS, "none"), default="svg",
                        help="figure file format, or none")

    parser = argparse.ArgumentParser(prog="photonic-qgan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn-state", parents=[common], help="PQ-GAN single-qubit state learning")
    p.add_argument("--target", default="pure", help="pure, mixed, or a JSON file with 'real'/'imag' 2x2 lists")
    p.add_argument("--rounds", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--shots", type=_shots, help="'exact' (default) or shots per expectation")
    p.add_argument("--observable", choices=("pauli", "projector"))
    p.add_argument("--same-init", action="store_true",
                   help="start every round from the same parameters (drawn from --seed)")
    p.set_defaults(func=cmd_learn_state)

    p = sub.add_parser("load-distribution", parents=[common], help="HQC-GAN distribution loading")
    p.add_argument("--dist", choices=sorted(targets.PRESET_TARGETS), default="normal")
    p.add_argument("--rounds", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--shots", type=_shots)
    p.set_defaults(func=cmd_load_distribution)

    p = sub.add_parser("gen-images", parents=[common], help="hybrid-generator image learning")
    p.add_argument("--digit", type=int, choices=range(10), default=0, metavar="0..9")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--mnist", metavar="IMAGES,LABELS", help="IDX image and label files (optionally gzipped)")
    src.add_argument("--fixture", action="store_true", help="use the bundled digit fixture (default)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--threshold", type=float, default=pca.DEFAULT_THRESHOLD)
    p.add_argument("--show", type=int, default=10, help="number of real/generated images to render")
    p.set_defaults(func=cmd_gen_images)

    p = sub.add_parser("calibrate", parents=[common], help="fit a heater calibration curve")
    p.add_argument("--input", help="CSV with columns current_mA,counts_per_s (default: bundled fringe)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except TrainingAborted as exc:
        if exc.history is not None and len(exc.history):
            out = Path(_out_dir(args, args.command))
            out.mkdir(parents=True, exist_ok=True)
            exc.history.write_csv(out / "aborted_history.csv")
            print(f"partial history written to {out / 'aborted_history.csv'}", file=sys.stderr)
        print(f"error: training aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FitError, InvalidArgument, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
