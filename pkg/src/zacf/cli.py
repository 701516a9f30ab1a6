"""Command line interface: ``zacf synth | train | eval | sweep | selftest``.

Every failure exits with status 2 and one line on stderr of the form
``error: <ExceptionName>: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data, protocols
from .errors import MissingTemplate, ZacfError
from .io import (
    DatasetManifest,
    ManifestRecord,
    atomic_write,
    read_manifest,
    read_template,
    write_csv,
    write_manifest,
    write_mcs1,
    write_template,
)
from .prox import ProxConfig

__all__ = ["RunConfig", "build_parser", "main", "cmd_synth", "cmd_train", "cmd_eval", "cmd_sweep", "cmd_selftest"]

SYNTH_KINDS = ("ecg-like", "shapes", "vehicles-ir-like")
SEED_MAX = 2**64 - 1


class CliError(ZacfError):
    """Bad command line usage."""


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run besides the manifest."""

    design: str = "ZAMACE"
    q: int | None = None
    pad_fraction: float | None = None
    delta: float = 0.01
    C: float = 0.003
    desired: str = "delta"
    sigma: float = 1.0
    solver: str = "closed"
    eps: float = 1e-10
    max_iterations: int = 20000
    scorer: str = "pce"
    seed: int = 0
    out: Path = Path(".")

    def __post_init__(self):
        if self.q is not None and self.q < 0:
            raise CliError(f"q must be >= 0, got {self.q}")
        if self.q is not None and self.pad_fraction is not None:
            raise CliError("give either q or pad_fraction, not both")
        if self.pad_fraction is not None and not 0 < self.pad_fraction < 1:
            raise CliError(f"pad_fraction must lie in (0, 1), got {self.pad_fraction}")
        if self.delta < 0:
            raise CliError(f"delta must be >= 0, got {self.delta}")
        if self.C <= 0:
            raise CliError(f"C must be > 0, got {self.C}")
        if self.sigma <= 0:
            raise CliError(f"sigma must be > 0, got {self.sigma}")
        if not 0 <= self.seed <= SEED_MAX:
            raise CliError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.design.upper() not in protocols.DESIGN_KINDS:
            raise CliError(f"unknown design {self.design!r}")

    def suite(self) -> protocols.SuiteConfig:
        return protocols.SuiteConfig(
            q=self.q,
            pad_fraction=self.pad_fraction,
            delta=self.delta,
            C=self.C,
            desired_shape=self.desired,
            sigma=self.sigma,
            solver=self.solver,
            scorer=self.scorer,
            prox=ProxConfig(eps=self.eps, max_iterations=self.max_iterations),
        )


# ---------------------------------------------------------------------------
# commands


def cmd_synth(kind: str, cfg: RunConfig, *, count=10, length=301, n_classes=4, n_train=10, n_test=10, noise=None):
    """Write a synthetic dataset (MCS1 files plus ``manifest.cfman``) into ``cfg.out``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []

    def put(signal, class_id, split, location=None):
        name = f"{split}_{len(records):04d}.mcs1"
        write_mcs1(out / name, signal)
        records.append(ManifestRecord(name, class_id, split, location))

    info = {"kind": kind, "seed": cfg.seed}
    if kind == "ecg-like":
        for s in data.ecg_like(count, length, seed=cfg.seed, **_noise(noise)):
            put(s, 0, "train")
        grid = (length, 1)
    elif kind == "shapes":
        ds = data.shapes(n_classes, n_train, n_test, seed=cfg.seed, **_noise(noise))
        for c in sorted(ds.train):
            for chip in ds.train[c]:
                put(chip, c, "train")
        for scene in ds.test:
            put(scene.image, scene.label, "test", scene.location)
        grid = (ds.chip_size, ds.chip_size)
        info["classes"] = list(ds.classes)
    elif kind == "vehicles-ir-like":
        ds = data.vehicles_ir_like(n_train=n_train, n_test=n_test, seed=cfg.seed, **_noise(noise))
        for c in sorted(ds.train_pos):
            for chip in ds.train_pos[c]:
                put(chip, c, "train")
        for chip in ds.train_neg:
            put(chip, -1, "train")
        for frame in ds.frames:
            put(frame, -1, "mine")
        for scene in ds.test:
            put(scene.image, scene.label, "test", scene.location)
        grid = ds.chip_size
    else:
        raise CliError(f"unknown synth kind {kind!r}; choose from {', '.join(SYNTH_KINDS)}")
    manifest = DatasetManifest(records, tuple(grid), 1, info, out)
    write_manifest(out / "manifest.cfman", manifest)
    return manifest


def _noise(noise):
    return {} if noise is None else {"noise": noise}


def _training_sets(manifest: DatasetManifest):
    by_class = {c: [manifest.load(r) for r in manifest.select("train", c)] for c in manifest.classes}
    for c, chips in by_class.items():
        if not chips:
            raise CliError(f"class {c} has no training records")
    negatives = [manifest.load(r) for r in manifest.select("train", -1)]
    return by_class, negatives


def template_name(class_id: int) -> str:
    return f"class_{class_id:03d}.cft1"


def cmd_train(manifest: DatasetManifest, cfg: RunConfig, stream=None):
    """Design one filter per class and write ``class_XXX.cft1`` files.

    Returns the summary rows (class, kind, objective, peak residual, tail
    residual, iterations), which are also printed as CSV to ``stream``.
    """
    stream = sys.stdout if stream is None else stream
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    by_class, negatives = _training_sets(manifest)
    suite = cfg.suite()
    kind = cfg.design.upper()
    rows = []
    for c in sorted(by_class):
        try:
            template = protocols.train_class_filter(by_class, c, kind, suite, negatives)
        except ZacfError as exc:
            raise type(exc)(f"class {c}: {exc}") from exc
        write_template(out / template_name(c), template)
        peak = _peak_residual(template, by_class[c])
        rows.append((c, template.kind, template.objective, peak, template.tail_max(), template.iterations))
    text = write_csv(None, ("class", "kind", "objective", "peak_residual", "tail_residual", "iterations"), rows)
    stream.write(text)
    return rows


def _peak_residual(template, chips) -> float:
    n, m = chips[0].size
    h = template.template.data[:, :n, :m]
    return max(abs(float(np.sum(h * x.data)) + template.bias - 1.0) for x in chips)


def load_templates(manifest: DatasetManifest, directory):
    directory = Path(directory)
    out = []
    for c in manifest.classes:
        path = directory / template_name(c)
        if not path.exists():
            raise MissingTemplate(f"no template for class {c} at {path}")
        out.append(read_template(path))
    return out


def cmd_eval(manifest: DatasetManifest, templates_dir, cfg: RunConfig, tolerance=None, split="test"):
    """Score every ``split`` record against every class template.

    Writes ``metrics.csv`` and ``scores.csv`` into ``cfg.out`` and returns
    ``(metrics_row, score_rows)``.
    """
    filters = load_templates(manifest, templates_dir)
    records = [r for r in manifest.select(split) if r.class_id >= 0]
    if not records:
        raise CliError(f"manifest has no {split!r} records")
    scenes = [data.ShapeScene(manifest.load(r), r.class_id, r.location) for r in records]
    if tolerance is None:
        n, m = filters[0].support.size
        tolerance = (n // 2, m // 2)
    design = filters[0].kind
    metrics, scores = protocols.evaluate_filters(filters, scenes, tuple(tolerance), cfg.scorer, design=design)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "metrics.csv", protocols.METRIC_HEADER, [metrics])
    write_csv(out / "scores.csv", protocols.SCORE_HEADER, scores)
    return metrics, scores


def cmd_sweep(manifest: DatasetManifest, cfg: RunConfig, qs=None, class_id=0, svg=False):
    """Write ``sweep.csv`` (and optionally ``sweep.svg``) for one class's training set."""
    training = [manifest.load(r) for r in manifest.select("train", class_id)]
    if not training:
        raise CliError(f"class {class_id} has no training records")
    rows = protocols.ace_sweep(training, qs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep.csv", protocols.SWEEP_HEADER, rows)
    if svg:
        atomic_write(out / "sweep.svg", sweep_svg(rows))
    return rows


def cmd_selftest(cfg: RunConfig, scale: int = 1, stream=None):
    """Run the oracle self test, write ``selftest.csv`` and return its rows."""
    stream = sys.stdout if stream is None else stream
    rows = protocols.selftest(cfg.seed, scale)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stream.write(write_csv(out / "selftest.csv", protocols.SELFTEST_HEADER, rows))
    return rows


def sweep_svg(rows, width=480, height=320) -> str:
    """Minimal log-scale line chart of the ACE columns of a sweep."""
    qs = [r[0] for r in rows]
    cols = list(zip(*[r[1:5] for r in rows]))
    names = protocols.SWEEP_HEADER[1:5]
    colours = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728")
    values = np.log10(np.maximum(np.array(cols, dtype=float), 1e-300))
    lo, hi = float(values.min()), float(values.max())
    hi = hi if hi > lo else lo + 1.0
    q0, q1 = min(qs), max(qs)
    q1 = q1 if q1 > q0 else q0 + 1

    def xy(q, v):
        x = 40 + (width - 60) * (q - q0) / (q1 - q0)
        y = height - 30 - (height - 50) * (v - lo) / (hi - lo)
        return f"{x:.2f},{y:.2f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for i, (name, colour) in enumerate(zip(names, colours)):
        points = " ".join(xy(q, v) for q, v in zip(qs, values[i]))
        parts.append(f'<polyline fill="none" stroke="{colour}" points="{points}"/>')
        parts.append(f'<text x="{width - 150}" y="{20 + 14 * i}" fill="{colour}" font-size="11">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message.replace("\n", " "))


def _add_run_flags(p, design=True):
    if design:
        p.add_argument("--design", default="ZAMACE", type=str.upper, choices=protocols.DESIGN_KINDS)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--q", type=int, default=None, help="zero padding per axis (default N-1)")
        g.add_argument("--pad-fraction", type=float, default=None, help="RACF padding fraction")
        p.add_argument("--delta", type=float, default=0.01)
        p.add_argument("--C", type=float, default=0.003)
        p.add_argument("--desired", choices=("delta", "gaussian"), default="delta")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--solver", choices=("closed", "prox"), default="closed")
        p.add_argument("--eps", type=float, default=1e-10)
        p.add_argument("--max-iterations", type=int, default=20000)
    p.add_argument("--scorer", choices=("pce", "psr"), default="pce")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zacf", description="Zero-aliasing correlation filter toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("kind", choices=SYNTH_KINDS)
    p.add_argument("--count", type=int, default=10, help="ecg-like: number of signals")
    p.add_argument("--length", type=int, default=301, help="ecg-like: samples per signal")
    p.add_argument("--classes", type=int, default=4, help="shapes: number of classes")
    p.add_argument("--n-train", type=int, default=10)
    p.add_argument("--n-test", type=int, default=10)
    p.add_argument("--noise", type=float, default=None)
    _add_run_flags(p, design=False)

    p = sub.add_parser("train", help="design one filter per class")
    p.add_argument("manifest", type=Path)
    _add_run_flags(p)

    p = sub.add_parser("eval", help="score test records against trained filters")
    p.add_argument("manifest", type=Path)
    p.add_argument("--templates", type=Path, required=True)
    p.add_argument("--tolerance", type=int, nargs=2, default=None, metavar=("ROWS", "COLS"))
    p.add_argument("--split", default="test")
    _add_run_flags(p, design=False)

    p = sub.add_parser("sweep", help="unaliased ACE versus zero padding")
    p.add_argument("manifest", type=Path)
    p.add_argument("--qs", type=int, nargs="+", default=None)
    p.add_argument("--class-id", type=int, default=0)
    p.add_argument("--svg", action="store_true")
    _add_run_flags(p, design=False)

    p = sub.add_parser("selftest", help="run the oracle self test")
    p.add_argument("--scale", type=int, default=1)
    _add_run_flags(p, design=False)
    return parser


def _config(args) -> RunConfig:
    fields = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if hasattr(args, k)}
    return RunConfig(**fields)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    if args.command == "synth":
        manifest = cmd_synth(args.kind, cfg, count=args.count, length=args.length, n_classes=args.classes,
                             n_train=args.n_train, n_test=args.n_test, noise=args.noise)
        print(f"wrote {len(manifest.records)} records to {Path(cfg.out) / 'manifest.cfman'}")
    elif args.command == "train":
        cmd_train(read_manifest(args.manifest), cfg)
    elif args.command == "eval":
        metrics, _ = cmd_eval(read_manifest(args.manifest), args.templates, cfg, args.tolerance, args.split)
        sys.stdout.write(write_csv(None, protocols.METRIC_HEADER, [metrics]))
    elif args.command == "sweep":
        rows = cmd_sweep(read_manifest(args.manifest), cfg, args.qs, args.class_id, args.svg)
        sys.stdout.write(write_csv(None, protocols.SWEEP_HEADER, rows))
    elif args.command == "selftest":
        rows = cmd_selftest(cfg, args.scale)
        return 0 if all(r[-1] for r in rows) else 1
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except (ZacfError, OSError, ValueError, ArithmeticError, MemoryError, LookupError) as exc:
        message = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
