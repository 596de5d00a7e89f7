"""Batch driver: extract channels, run ablations, verify stability bounds,
fit/evaluate probes, and measure cohort embedding distances.

Exit codes: 0 success, 2 partial extraction failure, 3 verification
violation, 1 hard errors (bad arguments, unreadable corpus).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .config import RunConfig, load_config_file
from .container import IMAGE_SUFFIXES, load_image, read_raw, write_raw
from .estimators import ChannelExtractor
from .image import fit_to_square, is_constant
from .metrics import REPORT_HEADER, format_report_row, wasserstein2_clouds
from .persistence import dump_diagram_tsv
from .synthetic import make_corpus, read_labels
from .vectorize import CHANNEL_NAMES, build_channel_stack
from .verify import run_all
from .wavelet import FAMILIES, VALID_DEPTHS, dump_pyramid, dwt2

MANIFEST_NAME = "manifest.json"

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_VIOLATION = 3


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _extractor(cfg: RunConfig) -> ChannelExtractor:
    return ChannelExtractor(
        family=cfg.family,
        depth=cfg.depth,
        h1_pct=cfg.h1_pct,
        epsilon=cfg.epsilon,
        persistence_side=cfg.persistence_side,
        wavelet_side=cfg.wavelet_side,
        mask=cfg.mask,
        h1_order=cfg.h1_order,
        diagram_source=cfg.diagram_source,
    )


def _list_corpus(input_dir: Path) -> list[Path]:
    files = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ValueError(f"no supported images ({', '.join(IMAGE_SUFFIXES)}) in {input_dir}")
    return files


def _extract_one(cfg: RunConfig, extractor: ChannelExtractor, src: Path, out_dir: Path) -> dict:
    img = load_image(src)
    pre = extractor.preprocess(img)
    stack = build_channel_stack(pre, cfg.gating())
    # Pool the float32 values actually exported so the manifest embedding,
    # `wph pool`, and any out-of-process consumer agree bit for bit.
    embedding = analysis.pool_embedding(stack.channels.astype("<f4").astype(np.float64))

    stem_dir = out_dir / src.stem
    stem_dir.mkdir(parents=True, exist_ok=True)
    channel_files = []
    for k, name in enumerate(CHANNEL_NAMES):
        rel = f"{src.stem}/channel_{k:02d}_{name}.wph"
        write_raw(out_dir / rel, stack.channels[k])
        channel_files.append(rel)
    if cfg.concat:
        # Channel 0 of Z(X): the preprocessed grayscale the channels align with.
        write_raw(out_dir / f"{src.stem}/input.wph", pre)
    if cfg.dump_pyramid:
        pyr = dwt2(fit_to_square(pre, cfg.wavelet_side), cfg.family, cfg.depth)
        dump_pyramid(pyr, stem_dir / "pyramid")

    diagram_rel = f"{src.stem}/diagram.tsv"
    (out_dir / diagram_rel).write_text(dump_diagram_tsv(stack.diagram))
    _json_dump(
        {
            "source": src.name,
            "persistence_side": cfg.persistence_side,
            "h1_pct": cfg.h1_pct,
            "h1_order": cfg.h1_order,
            "mask": cfg.mask,
            "diagram_source": cfg.diagram_source,
        },
        out_dir / f"{src.stem}/diagram.json",
    )

    return {
        "file": src.name,
        "stem": src.stem,
        "sha256": _sha256(src),
        "height": int(img.shape[0]),
        "width": int(img.shape[1]),
        "constant_input": bool(is_constant(img)),
        "embedding": [float(v) for v in embedding],
        "rescale_min": [float(v) for v in stack.rescale_min],
        "rescale_max": [float(v) for v in stack.rescale_max],
        "channels": channel_files,
        "diagram": diagram_rel,
        "n_bars": {
            "h0": int((stack.diagram.dims == 0).sum()),
            "h1": int((stack.diagram.dims == 1).sum()),
        },
    }


def cmd_extract(args) -> int:
    cfg = _config_from_args(args)
    input_dir = Path(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = _list_corpus(input_dir)
    labels = read_labels(input_dir)
    extractor = _extractor(cfg)

    def work(src: Path):
        try:
            return src, _extract_one(cfg, extractor, src, out_dir), None
        except Exception as exc:  # isolate per-image failures
            return src, None, f"{type(exc).__name__}: {exc}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, files))
    else:
        results = [work(src) for src in files]

    entries = []
    failures = []
    for src, entry, err in results:  # files are pre-sorted; order is stable
        if err is None:
            meta = labels.get(src.name, {})
            entry["patient_id"] = meta.get("patient_id", src.stem)
            entry["label"] = meta.get("label")
            entries.append(entry)
            print(f"extracted {src.name}")
        else:
            failures.append({"file": src.name, "error": err})
            print(f"FAILED {src.name}: {err}", file=sys.stderr)

    manifest = {
        "version": __version__,
        "config": cfg.as_dict(),
        "images": entries,
        "failures": failures,
    }
    _json_dump(manifest, out_dir / MANIFEST_NAME)
    print(f"wrote {out_dir / MANIFEST_NAME} ({len(entries)} images, {len(failures)} failures)")
    return EXIT_PARTIAL if failures else EXIT_OK


def _load_manifest(path: Path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    return json.loads(p.read_text())


def _cloud_from_manifest(manifest: dict, embed_agg: str) -> analysis.EmbeddingCloud:
    images = manifest["images"]
    if not images:
        raise ValueError("manifest lists no successfully extracted images")
    pids = [e["patient_id"] for e in images]
    z = np.array([e["embedding"] for e in images])
    ids, agg = analysis.aggregate_patient(pids, z, mode=embed_agg)
    label_by_pid: dict[str, int] = {}
    for e in images:
        if e.get("label") is not None:
            prev = label_by_pid.get(e["patient_id"])
            if prev is not None and prev != int(e["label"]):
                raise ValueError(f"conflicting labels for patient {e['patient_id']}")
            label_by_pid[e["patient_id"]] = int(e["label"])
    labels = np.array([label_by_pid.get(pid, analysis.UNKNOWN_LABEL) for pid in ids])
    return analysis.EmbeddingCloud(tuple(ids), agg, labels)


def _patient_scores(manifest: dict, model: analysis.ProbeModel, score_agg: str):
    images = manifest["images"]
    pids = [e["patient_id"] for e in images]
    scores = model.predict_proba(np.array([e["embedding"] for e in images]))
    ids, agg = analysis.aggregate_patient(pids, scores, mode=score_agg)
    label_by_pid = {e["patient_id"]: e.get("label") for e in images if e.get("label") is not None}
    labels = np.array([int(label_by_pid.get(pid, analysis.UNKNOWN_LABEL)) for pid in ids])
    return ids, agg, labels


def cmd_probe(args) -> int:
    cfg = _config_from_args(args)
    train_manifest = _load_manifest(Path(args.train))
    cloud = _cloud_from_manifest(train_manifest, cfg.embed_agg).labeled()
    if len(cloud) < 2:
        raise ValueError("need at least two labeled patients to fit a probe")
    model = analysis.fit_probe(cloud.z, cloud.labels)
    if args.out_model:
        model.save(args.out_model)
        print(f"wrote probe model to {args.out_model}")

    def auc_stat(s, y):
        return analysis.roc_auc(s, y)

    _, train_scores, train_labels = _patient_scores(train_manifest, model, cfg.score_agg)
    known = train_labels != analysis.UNKNOWN_LABEL
    train_auc = analysis.roc_auc(train_scores[known], train_labels[known])
    ci = analysis.bootstrap_ci(train_scores[known], train_labels[known], auc_stat, args.n_boot, cfg.seed)
    threshold = analysis.youden_threshold(train_scores[known], train_labels[known])
    print(f"train: auc={train_auc:.4f} ci95=[{ci.low:.4f}, {ci.high:.4f}] youden_threshold={threshold:.6f}")

    if args.test:
        test_manifest = _load_manifest(Path(args.test))
        _, test_scores, test_labels = _patient_scores(test_manifest, model, cfg.score_agg)
        known = test_labels != analysis.UNKNOWN_LABEL
        if known.sum() and len(np.unique(test_labels[known])) == 2:
            test_auc = analysis.roc_auc(test_scores[known], test_labels[known])
            ci = analysis.bootstrap_ci(test_scores[known], test_labels[known], auc_stat, args.n_boot, cfg.seed)
            pred = test_scores[known] >= threshold
            y = test_labels[known]
            sens = float(pred[y == 1].mean())
            spec = float((~pred)[y == 0].mean())
            print(
                f"test: auc={test_auc:.4f} ci95=[{ci.low:.4f}, {ci.high:.4f}] "
                f"sensitivity={sens:.4f} specificity={spec:.4f} (threshold frozen from train)"
            )
        else:
            print("test: skipped (needs both classes labeled)")
    return EXIT_OK


def _ablate_cells(args, cfg: RunConfig) -> list[tuple[str, str, int, float]]:
    families = sorted(FAMILIES)
    depths = list(VALID_DEPTHS)
    h1s = [0.1, 0.25, 0.5]
    base_family, base_depth, base_h1 = "haar", 2, 0.5
    cells = []
    if args.grid == "single":
        cells.append(("single", cfg.family, cfg.depth, cfg.h1_pct))
    elif args.grid == "full":
        for f in families:
            for j in depths:
                for h in h1s:
                    cells.append(("full", f, j, h))
    else:
        for f in families:
            cells.append(("family", f, base_depth, base_h1))
        for j in depths:
            cells.append(("depth", base_family, j, base_h1))
        for h in h1s:
            cells.append(("h1_pct", base_family, base_depth, h))
    return cells


def cmd_ablate(args) -> int:
    cfg = _config_from_args(args)
    input_dir = Path(args.input)
    files = _list_corpus(input_dir)
    labels = read_labels(input_dir)
    if not labels:
        raise ValueError(f"ablate needs {input_dir}/labels.tsv with patient_id and label columns")

    images = []
    for src in files:
        meta = labels.get(src.name)
        if meta is None or meta["label"] is None:
            continue
        images.append((src, meta["patient_id"], int(meta["label"])))
    patient_labels = {}
    for _, pid, lab in images:
        patient_labels[pid] = lab
    if len(set(patient_labels.values())) < 2:
        raise ValueError("ablate needs both classes present in the corpus")

    # Patient-level stratified split, seeded.
    rng = np.random.default_rng(cfg.seed)
    train_pids, test_pids = set(), set()
    for cls in (0, 1):
        pids = sorted(p for p, lab in patient_labels.items() if lab == cls)
        perm = rng.permutation(len(pids))
        cut = max(1, int(round(len(pids) * args.train_frac)))
        cut = min(cut, len(pids) - 1) if len(pids) > 1 else 1
        train_pids.update(pids[i] for i in perm[:cut])
        test_pids.update(pids[i] for i in perm[cut:])
    if not test_pids:
        raise ValueError("train/test split left no test patients; lower --train-frac or add patients")

    rows = []
    for factor, family, depth, h1_pct in _ablate_cells(args, cfg):
        cell_cfg = RunConfig(**{**cfg.as_dict(), "family": family, "depth": depth, "h1_pct": h1_pct}).validate()
        extractor = _extractor(cell_cfg)
        pids, embs = [], []
        for src, pid, _lab in images:
            stack = extractor.transform_one(load_image(src))
            pids.append(pid)
            embs.append(analysis.pool_embedding(stack))
        ids, agg = analysis.aggregate_patient(pids, np.array(embs), mode=cfg.embed_agg)
        y = np.array([patient_labels[p] for p in ids])
        in_train = np.array([p in train_pids for p in ids])

        model = analysis.fit_probe(agg[in_train], y[in_train])
        scores = model.predict_proba(agg[~in_train])
        y_test = y[~in_train]
        auc = analysis.roc_auc(scores, y_test)
        ci = analysis.bootstrap_ci(scores, y_test, lambda s, yy: analysis.roc_auc(s, yy), args.n_boot, cfg.seed)
        rows.append((factor, family, depth, h1_pct, auc, ci.low, ci.high, int((~in_train).sum())))

    header = "factor\tfamily\tdepth\th1_pct\tauc\tci_low\tci_high\tn_test_patients"
    lines = [header] + [
        f"{f}\t{fam}\t{j}\t{h}\t{auc:.4f}\t{lo:.4f}\t{hi:.4f}\t{n}" for f, fam, j, h, auc, lo, hi, n in rows
    ]
    table = "\n".join(lines) + "\n"
    print(table, end="")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all(trials=args.trials, epsilon=args.epsilon, seed=args.seed)
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def cmd_dist(args) -> int:
    cfg = _config_from_args(args)
    cloud_a = _cloud_from_manifest(_load_manifest(Path(args.a)), cfg.embed_agg)
    cloud_b = _cloud_from_manifest(_load_manifest(Path(args.b)), cfg.embed_agg)
    result = wasserstein2_clouds(cloud_a.z, cloud_b.z, n_sub=args.n_sub, seed=args.seed)
    row = format_report_row("w2_cloud", 2, "-", result.value, len(cloud_a), len(cloud_b), args.seed)
    print(REPORT_HEADER)
    print(row)
    if result.n_used < result.n_requested:
        print(f"# subsample reduced to {result.n_used} (cloud sizes {result.size_a}, {result.size_b})")
    if args.out:
        Path(args.out).write_text(REPORT_HEADER + "\n" + row + "\n")
    return EXIT_OK


def cmd_pool(args) -> int:
    stack_dir = Path(args.stack)
    files = sorted(stack_dir.glob("channel_*.wph"))
    if len(files) != len(CHANNEL_NAMES):
        raise ValueError(f"{stack_dir}: expected {len(CHANNEL_NAMES)} channel_*.wph files, found {len(files)}")
    channels = np.stack([read_raw(f) for f in files])
    emb = analysis.pool_embedding(channels)
    text = "".join(f"{float(v)!r}\n" for v in emb)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    rows = make_corpus(
        args.out,
        n_patients=args.n_patients,
        views=args.views,
        seed=args.seed,
        height=args.height,
        width=args.width,
        image_format=args.format,
    )
    print(f"wrote {len(rows)} images to {args.out}")
    return EXIT_OK


def _config_from_args(args) -> RunConfig:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(load_config_file(args.config))
    for key in RunConfig().as_dict():
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "no_mask", False):
        overrides["mask"] = False
    return RunConfig(**overrides).validate()


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--family", choices=sorted(FAMILIES), default=None)
    p.add_argument("--depth", type=int, choices=VALID_DEPTHS, default=None)
    p.add_argument("--h1-pct", dest="h1_pct", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-side", dest="persistence_side", type=int, default=None,
                   help="persistence grid cap (longer side)")
    p.add_argument("--wavelet-side", dest="wavelet_side", type=int, default=None,
                   help="padded square side for the transform (power of two)")
    p.add_argument("--no-mask", action="store_true", help="skip the Otsu foreground mask")
    p.add_argument("--h1-order", dest="h1_order", choices=("top", "lowest"), default=None)
    p.add_argument("--diagram-source", dest="diagram_source", choices=("image", "wavelet"), default=None)
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wph", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="turn an image directory into channel stacks + manifest")
    _add_pipeline_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--concat", action="store_true", help="also write the preprocessed input grid")
    p.add_argument("--dump-pyramid", dest="dump_pyramid", action="store_true",
                   help="write every wavelet subband as {level}_{band}.wph per image")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("ablate", help="grid ablation: extract, pool, probe, report AUC per cell")
    _add_pipeline_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None, help="write the table here as TSV")
    p.add_argument("--grid", choices=("single", "marginal", "full"), default="marginal")
    p.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p.add_argument("--train-frac", dest="train_frac", type=float, default=0.5)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("verify", help="run the stability/correctness battery; exit 3 on violation")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", help="fit a logistic probe on a manifest; optionally evaluate")
    _add_pipeline_flags(p)
    p.add_argument("--train", required=True, help="manifest (or extract output dir)")
    p.add_argument("--test", default=None)
    p.add_argument("--out-model", dest="out_model", default=None)
    p.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p.add_argument("--score-agg", dest="score_agg", choices=("mean", "max"), default=None)
    p.add_argument("--embed-agg", dest="embed_agg", choices=("mean", "max"), default=None)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("dist", help="Wasserstein-2 between two corpora's embedding clouds")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--n-sub", dest="n_sub", type=int, default=512)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--embed-agg", dest="embed_agg", choices=("mean", "max"), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("pool", help="pool a stack directory's channels into the 8-vector")
    p.add_argument("--stack", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-patients", dest="n_patients", type=int, default=12)
    p.add_argument("--views", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=96)
    p.add_argument("--format", choices=("png", "pgm", "wph"), default="png")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
