"""Command-line entry point: gen-data, train, eval, retrieve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import data
from .model import Hyperparams, load_model, project, save_model, train
from .retrieval import evaluate_projections, format_report, rank_all
from .stiefel import OptimizationError

_HYPER_FIELDS = {f.name: f for f in fields(Hyperparams)}
_SYNTH_KEYS = ("n_per_class", "c", "d1", "d2", "noise_sigma")
_PATH_KEYS = ("features1_path", "features2_path", "labels_path")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    hyper: Hyperparams = field(default_factory=Hyperparams)
    features1_path: Path | None = None
    features2_path: Path | None = None
    labels_path: Path | None = None
    synthetic: dict | None = None
    train_fraction: float = 0.75
    seed: int = 0
    output_dir: Path = Path("out")

    def validate(self):
        paths = [getattr(self, k) for k in _PATH_KEYS]
        has_paths = any(p is not None for p in paths)
        if has_paths == (self.synthetic is not None):
            raise ConfigError("config needs exactly one of: file paths block, synthetic block")
        if has_paths and not all(p is not None for p in paths):
            raise ConfigError("file paths block needs features1_path, features2_path and labels_path")
        if self.synthetic is not None:
            missing = [k for k in _SYNTH_KEYS if k not in self.synthetic]
            if missing:
                raise ConfigError(f"synthetic block missing keys: {', '.join(missing)}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        return self


def _convert(key, raw):
    if key in _HYPER_FIELDS:
        return int(raw) if _HYPER_FIELDS[key].type in (int, "int") else float(raw)
    if key in ("n_per_class", "c", "d1", "d2", "seed"):
        return int(raw)
    if key in ("noise_sigma", "train_fraction"):
        return float(raw)
    return raw


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    """Parse `key = value` lines; `#` starts a comment. Relative paths resolve against base_dir."""
    hyper, synth, cfg = {}, {}, RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        try:
            value = _convert(key, raw)
        except ValueError:
            raise ConfigError(f"config line {lineno}: bad value for {key}: {raw!r}") from None
        if key in _HYPER_FIELDS:
            hyper[key] = value
        elif key in _SYNTH_KEYS:
            synth[key] = value
        elif key in _PATH_KEYS:
            setattr(cfg, key, base_dir / value)
        elif key == "output_dir":
            cfg.output_dir = base_dir / value
        elif key in ("train_fraction", "seed"):
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
    try:
        cfg.hyper = Hyperparams(**hyper)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cfg.synthetic = synth or None
    return cfg


def load_config(path, seed=None, output=None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"no such config file: {path}")
        cfg = parse_config(path.read_text(), path.parent)
    if seed is not None:
        cfg.seed = seed
    if output is not None:
        cfg.output_dir = Path(output)
    return cfg


def _dataset(cfg: RunConfig) -> data.Dataset:
    cfg.validate()
    if cfg.synthetic is not None:
        return data.generate_synthetic(seed=cfg.seed, **cfg.synthetic)
    for p in (cfg.features1_path, cfg.features2_path, cfg.labels_path):
        if not Path(p).exists():
            raise data.DataError(f"no such file: {p}")
    return data.Dataset(
        data.load_features(cfg.features1_path),
        data.load_features(cfg.features2_path),
        data.load_labels(cfg.labels_path),
    )


def _write_dataset(ds: data.Dataset, out: Path, prefix: str = ""):
    data.save_matrix(out / f"{prefix}features1.csv", ds.modality1.values)
    data.save_matrix(out / f"{prefix}features2.csv", ds.modality2.values)
    data.save_matrix(out / f"{prefix}labels.csv", ds.labels.values, integer=True)


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e.strerror}") from None
    return out


def cmd_gen_data(cfg: RunConfig) -> Path:
    cfg.validate()
    if cfg.synthetic is None:
        raise ConfigError("gen-data needs a synthetic block (n_per_class, c, d1, d2, noise_sigma)")
    ds = data.generate_synthetic(seed=cfg.seed, **cfg.synthetic)
    out = _outdir(cfg.output_dir)
    _write_dataset(ds, out)
    manifest = [f"seed {cfg.seed}", f"n {ds.n}", f"d1 {ds.modality1.d}", f"d2 {ds.modality2.d}",
                f"c {ds.labels.c}", f"noise_sigma {cfg.synthetic['noise_sigma']!r}"]
    (out / "manifest").write_text("\n".join(manifest) + "\n")
    return out


def cmd_train(cfg: RunConfig, log=print):
    ds = _dataset(cfg)
    tr, te = data.split(ds, cfg.train_fraction, cfg.seed)
    out = _outdir(cfg.output_dir)
    model = train(tr, cfg.hyper, seed=cfg.seed)
    save_model(model, out / "model.txt")
    with open(out / "trace.csv", "w") as fh:
        fh.write("iteration,objective\n")
        for i, f in enumerate(model.objective_trace):
            fh.write(f"{i},{f!r}\n")
    _write_dataset(te, out, prefix="test_")
    _write_dataset(tr, out, prefix="train_")
    log(f"trained {len(model.objective_trace) - 1} outer iterations; "
        f"objective {model.objective_trace[0]:.6g} -> {model.objective_trace[-1]:.6g}")
    return model


def cmd_eval(model_path, features1, features2, labels, direction="both", fmt="text", max_l=10) -> str:
    model = load_model(model_path)
    d1, d2, _ = model.dims
    x1 = data.load_features(features1, expected_dim=d1)
    x2 = data.load_features(features2, expected_dim=d2)
    y = data.load_labels(labels)
    ds = data.Dataset(x1, x2, y)
    metrics = evaluate_projections(project(model, ds.modality1, 1), project(model, ds.modality2, 2),
                                   ds.labels, direction, max_l)
    return format_report(metrics, fmt)


def cmd_retrieve(model_path, query_features, gallery_features, direction="i2t", top_k=5) -> str:
    if direction not in ("i2t", "t2i"):
        raise ConfigError("retrieve direction must be i2t or t2i")
    model = load_model(model_path)
    d1, d2, _ = model.dims
    qm, gm = (1, 2) if direction == "i2t" else (2, 1)
    q = data.load_features(query_features, expected_dim=(d1, d2)[qm - 1])
    g = data.load_features(gallery_features, expected_dim=(d1, d2)[gm - 1])
    if top_k < 0 or top_k > g.n:
        raise ConfigError(f"top_k={top_k} outside [0, {g.n}] (gallery size)")
    lines = []
    for r in rank_all(project(model, q, qm), project(model, g, gm)):
        idx = " ".join(str(i) for i in r.ordered_indices[:top_k])
        sc = " ".join(f"{s:.6f}" for s in r.scores[:top_k])
        lines.append(f"{r.query_index}: {idx} | {sc}" if top_k else f"{r.query_index}:")
    return "\n".join(lines) + "\n"


def _hyper_help() -> str:
    h = Hyperparams()
    rows = [f"  {f.name} = {getattr(h, f.name)}" for f in fields(Hyperparams)]
    return ("config keys (key = value, '#' comments), hyperparameter defaults:\n" + "\n".join(rows) +
            "\n  train_fraction = 0.75\n  seed = 0\n  output_dir = out\n"
            "data block, exactly one of:\n  features1_path, features2_path, labels_path\n"
            "  n_per_class, c, d1, d2, noise_sigma   (synthetic)\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ds2l", description="Supervised cross-modal subspace learning on the Stiefel manifold.",
        epilog=_hyper_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", help="output directory (overrides output_dir)")

    for name, helptext in (("gen-data", "write a synthetic dataset"), ("train", "train and save a model")):
        common(sub.add_parser(name, help=helptext, epilog=_hyper_help(),
                              formatter_class=argparse.RawDescriptionHelpFormatter))

    p = sub.add_parser("eval", help="MAP / CMC report for a model on labelled test data")
    p.add_argument("model")
    p.add_argument("features1")
    p.add_argument("features2")
    p.add_argument("labels")
    p.add_argument("--direction", choices=("i2t", "t2i", "both"), default="both")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--max-rank", type=int, default=10, help="longest CMC rank reported")

    p = sub.add_parser("retrieve", help="print ranked gallery indices per query")
    p.add_argument("model")
    p.add_argument("queries")
    p.add_argument("gallery")
    p.add_argument("--direction", choices=("i2t", "t2i"), default="i2t")
    p.add_argument("--top-k", type=int, default=5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-data":
            out = cmd_gen_data(load_config(args.config, args.seed, args.output))
            print(f"wrote {out}")
        elif args.command == "train":
            cmd_train(load_config(args.config, args.seed, args.output))
        elif args.command == "eval":
            sys.stdout.write(cmd_eval(args.model, args.features1, args.features2, args.labels,
                                      args.direction, args.format, args.max_rank))
        elif args.command == "retrieve":
            sys.stdout.write(cmd_retrieve(args.model, args.queries, args.gallery, args.direction, args.top_k))
    except (ValueError, OptimizationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
