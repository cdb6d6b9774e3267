"""Command-line entry points: gen-synth, train, eval, project, mine-debug.

Exit codes: 0 success, 1 usage error, 2 data violation (including bad
checkpoints), 3 numerical failure. Training resolves its configuration
from built-in defaults, then an optional JSON config file, then explicit
command-line flags, and writes the resolved values into the output
directory for provenance.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .config import HFEConfig
from .data import SynthSpec, generate_synthetic_with_mask, load_csv, save_csv
from .errors import DataViolationError, NumericalError, UsageError
from .losses import LossFlags
from .metrics import embedding_diagnostics, metric_report, project_2d, write_projection_csv
from .mining import mine_batch, pairwise_distances, pk_sample
from .model import forward, load_checkpoint, new_train_state, save_checkpoint
from .rng import seeded_rng
from .train import train_loop, write_train_log
from .types import as_arrays


@dataclass
class RunConfig:
    """Everything a training run depends on, flags included."""

    data: str = ""
    outdir: str = ""
    epochs: int = 5
    steps: int | None = None        # overrides epochs * batches-per-epoch
    total_iters: int | None = None  # schedule horizon; defaults to the step count
    log_every: int = 1
    alpha1: float = 0.3
    alpha2: float = 0.1
    alpha3: float = 5.0
    w0: float = 1.0
    embed_dim: int = 8
    hidden_dims: tuple[int, ...] = (32,)
    ids_per_batch: int = 4
    samples_per_id: int = 4
    learning_rate: float = 1e-3
    seed: int = 0
    use_inter: bool = True
    use_intra: bool = True
    use_abr: bool = True
    use_dynamic_weight: bool = True
    use_pairwise_intra: bool = False

    def flags(self) -> LossFlags:
        try:
            return LossFlags(use_inter=self.use_inter, use_intra=self.use_intra,
                             use_abr=self.use_abr,
                             use_dynamic_weight=self.use_dynamic_weight,
                             use_pairwise_intra=self.use_pairwise_intra)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


def _resolve_run_config(args: argparse.Namespace) -> RunConfig:
    values = {f.name: f.default for f in fields(RunConfig)}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
        unknown = set(loaded) - set(values)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for name in values:
        arg = getattr(args, name, None)
        if arg is not None:
            values[name] = arg
    # requesting the pairwise variant implies dropping the triplet intra
    # term unless the user asked for both explicitly
    if values["use_pairwise_intra"] and getattr(args, "use_intra", None) is None:
        values["use_intra"] = False
    if isinstance(values["hidden_dims"], str):
        values["hidden_dims"] = _parse_hidden_dims(values["hidden_dims"])
    values["hidden_dims"] = tuple(int(h) for h in values["hidden_dims"])
    cfg = RunConfig(**values)
    if not cfg.data:
        raise UsageError("--data is required")
    if not cfg.outdir:
        raise UsageError("--outdir is required")
    cfg.flags()  # surfaces mutually exclusive ablation arms
    return cfg


def _parse_hidden_dims(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --hidden-dims {text!r}: expected comma-separated ints") from exc


def _load_dataset(path):
    samples, meta = load_csv(path)
    X, Y, ids = as_arrays(samples)
    return samples, X, Y, ids, meta


def cmd_gen_synth(args) -> int:
    try:
        spec = SynthSpec(num_ids=args.num_ids, samples_per_id=args.samples_per_id,
                         num_attrs=args.num_attrs, feature_dim=args.feature_dim,
                         attr_sep=args.attr_sep, id_sep=args.id_sep,
                         noise=args.noise, hard_frac=args.hard_frac, seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"invalid synthetic spec: {exc}") from exc
    samples, hard = generate_synthetic_with_mask(spec)
    save_csv(samples, args.out)
    if args.hard_mask_out:
        with open(args.hard_mask_out, "w", encoding="utf-8", newline="\n") as f:
            f.write(",".join(f"a{j}" for j in range(spec.num_attrs)) + "\n")
            for row in hard:
                f.write(",".join(str(int(v)) for v in row) + "\n")
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_run_config(args)
    samples, X, Y, ids, meta = _load_dataset(cfg.data)

    batch_size = cfg.ids_per_batch * cfg.samples_per_id
    steps_per_epoch = max(1, len(samples) // batch_size)
    steps = cfg.steps if cfg.steps is not None else cfg.epochs * steps_per_epoch
    horizon = cfg.total_iters if cfg.total_iters is not None else max(steps, 1)

    try:
        hfe_config = HFEConfig(
            num_attrs=meta["num_attrs"], feature_dim=meta["feature_dim"],
            alpha1=cfg.alpha1, alpha2=cfg.alpha2, alpha3=cfg.alpha3, w0=cfg.w0,
            total_iters=horizon, embed_dim=cfg.embed_dim,
            hidden_dims=cfg.hidden_dims, ids_per_batch=cfg.ids_per_batch,
            samples_per_id=cfg.samples_per_id, learning_rate=cfg.learning_rate,
            seed=cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = asdict(cfg)
    resolved["hidden_dims"] = list(cfg.hidden_dims)
    resolved["steps"] = steps
    resolved["total_iters"] = horizon
    (outdir / "config.json").write_text(
        json.dumps(resolved, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    state = new_train_state(hfe_config)
    reports = train_loop(state, X, Y, ids, cfg.flags(), steps=steps)
    write_train_log(outdir / "train_log.csv", reports, log_every=cfg.log_every)
    save_checkpoint(state, outdir / "checkpoint.hfe")
    if reports:
        last = reports[-1]
        print(f"trained {steps} steps: total={last.total:.6f} ce={last.ce:.6f} "
              f"hfe={last.hfe:.6f} (w={last.weight_w:.4f})")
    else:
        print("trained 0 steps: checkpoint equals initialization")
    print(f"outputs in {outdir}")
    return 0


def _load_state_for_dataset(checkpoint_path, meta):
    state = load_checkpoint(checkpoint_path)
    model = state.model
    if model.num_attrs != meta["num_attrs"] or model.feature_dim != meta["feature_dim"]:
        raise DataViolationError(
            f"checkpoint expects F={model.feature_dim}, M={model.num_attrs}; "
            f"dataset has F={meta['feature_dim']}, M={meta['num_attrs']}")
    return state


def cmd_eval(args) -> int:
    samples, X, Y, ids, meta = _load_dataset(args.data)
    state = _load_state_for_dataset(args.checkpoint, meta)
    embeddings, probs = forward(state.model, X)
    preds = (probs >= 0.5).astype(np.int64)
    report = metric_report(preds, Y)
    diagnostics = embedding_diagnostics(embeddings, Y, ids)
    print(report.to_text())
    print()
    for j, diag in enumerate(diagnostics):
        print(f"attr {j}: intra-id {diag.mean_intra_id_dist:.4f}  "
              f"intra-class {diag.mean_intra_class_dist:.4f}  "
              f"inter-class {diag.mean_inter_class_dist:.4f}  "
              f"order-rate {diag.quintuplet_order_rate:.4f}")
    if args.json_out:
        payload = {"metrics": report.to_dict(),
                   "diagnostics": [d.to_dict() for d in diagnostics]}
        Path(args.json_out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def cmd_project(args) -> int:
    samples, X, Y, ids, meta = _load_dataset(args.data)
    state = _load_state_for_dataset(args.checkpoint, meta)
    if not 0 <= args.attr_index < meta["num_attrs"]:
        raise UsageError(f"attr index {args.attr_index} out of range "
                         f"(dataset has {meta['num_attrs']} attributes)")
    embeddings, _ = forward(state.model, X)
    coords = project_2d(embeddings[args.attr_index])
    write_projection_csv(args.out, coords, Y[:, args.attr_index], ids)
    print(f"wrote {coords.shape[0]} projected points to {args.out}")
    return 0


def cmd_mine_debug(args) -> int:
    samples, X, Y, ids, meta = _load_dataset(args.data)
    state = _load_state_for_dataset(args.checkpoint, meta)
    p = args.ids_per_batch or state.config.ids_per_batch
    k = args.samples_per_id or state.config.samples_per_id
    batch = pk_sample(samples, p, k, seeded_rng(args.batch_seed))
    embeddings, _ = forward(state.model, batch.features)
    dists = [pairwise_distances(E) for E in embeddings]
    quints = mine_batch(embeddings, batch)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write("attr,anchor,p1,p2,p3,n,d_p1,d_p2,d_p3,d_n\n")
        for q in quints:
            D = dists[q.attr]
            cells = [str(q.attr), str(q.anchor)]
            for member in (q.p1, q.p2, q.p3, q.n):
                cells.append("" if member is None else str(member))
            for member in (q.p1, q.p2, q.p3, q.n):
                cells.append("" if member is None else repr(float(D[q.anchor, member])))
            f.write(",".join(cells) + "\n")
    print(f"wrote {len(quints)} quintuplets to {args.out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hfe", description="Hierarchical feature embedding experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="generate a synthetic hierarchical dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--num-ids", type=int, default=SynthSpec.num_ids)
    g.add_argument("--samples-per-id", type=int, default=SynthSpec.samples_per_id)
    g.add_argument("--num-attrs", type=int, default=SynthSpec.num_attrs)
    g.add_argument("--feature-dim", type=int, default=SynthSpec.feature_dim)
    g.add_argument("--attr-sep", type=float, default=SynthSpec.attr_sep)
    g.add_argument("--id-sep", type=float, default=SynthSpec.id_sep)
    g.add_argument("--noise", type=float, default=SynthSpec.noise)
    g.add_argument("--hard-frac", type=float, default=SynthSpec.hard_frac)
    g.add_argument("--seed", type=int, default=SynthSpec.seed)
    g.add_argument("--hard-mask-out", default=None,
                   help="optional sidecar CSV marking overwritten (sample, attribute) cells")
    g.set_defaults(func=cmd_gen_synth)

    t = sub.add_parser("train", help="train a model on a dataset CSV")
    t.add_argument("--data")
    t.add_argument("--outdir")
    t.add_argument("--config", default=None, help="JSON file with RunConfig keys")
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--total-iters", type=int, default=None, dest="total_iters")
    t.add_argument("--log-every", type=int, default=None, dest="log_every")
    t.add_argument("--alpha1", type=float, default=None)
    t.add_argument("--alpha2", type=float, default=None)
    t.add_argument("--alpha3", type=float, default=None)
    t.add_argument("--w0", type=float, default=None)
    t.add_argument("--embed-dim", type=int, default=None, dest="embed_dim")
    t.add_argument("--hidden-dims", type=_parse_hidden_dims, default=None, dest="hidden_dims")
    t.add_argument("--ids-per-batch", type=int, default=None, dest="ids_per_batch")
    t.add_argument("--samples-per-id", type=int, default=None, dest="samples_per_id")
    t.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    t.add_argument("--seed", type=int, default=None)
    for flag, dest in (("inter", "use_inter"), ("intra", "use_intra"), ("abr", "use_abr"),
                       ("dynamic-weight", "use_dynamic_weight"),
                       ("pairwise-intra", "use_pairwise_intra")):
        t.add_argument(f"--{flag}", action=argparse.BooleanOptionalAction,
                       default=None, dest=dest)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset CSV")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--json-out", default=None)
    e.set_defaults(func=cmd_eval)

    p = sub.add_parser("project", help="export a 2-D PCA projection of one attribute space")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--attr-index", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    m = sub.add_parser("mine-debug", help="dump mined quintuplets for one sampled batch")
    m.add_argument("--checkpoint", required=True)
    m.add_argument("--data", required=True)
    m.add_argument("--batch-seed", type=int, default=0)
    m.add_argument("--ids-per-batch", type=int, default=None, dest="ids_per_batch")
    m.add_argument("--samples-per-id", type=int, default=None, dest="samples_per_id")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mine_debug)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataViolationError as exc:
        print(f"data violation: {exc}", file=sys.stderr)
        for line in exc.violations:
            print(f"  {line}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
