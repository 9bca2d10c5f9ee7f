"""Command-line pipeline driver.

Subcommands: make-corpus, train, generate, eval, gridmap. A flat key-value
config file supplies defaults; command-line flags override config keys.
Errors print one line, `<Code>: <message>`, and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import cgan, corpus, evaluation, gridmap
from .errors import BadConfig, LoadGanError, UnknownLabel
from .kvconfig import kv_float, kv_int, read_kv


def parse_label(text: str) -> np.ndarray:
    """'summer residential' -> 6-dim one-hot pair. Vocabulary is fixed."""
    parts = text.replace(",", " ").split()
    if len(parts) != 2 or parts[0] not in corpus.SEASONS or parts[1] not in corpus.TYPES:
        raise UnknownLabel(
            f"label must be '<season> <type>' with season in {corpus.SEASONS} "
            f"and type in {corpus.TYPES}, got {text!r}")
    return corpus.encode_label(parts[0], parts[1])


def _load_config(path: str | None) -> dict[str, str]:
    return read_kv(path) if path else {}


def _resolve_seed(args, kv: dict) -> int:
    if args.seed is not None:
        return args.seed
    return kv_int(kv, "seed", 0)


def _out_dir(args, kv: dict, default: str = "out") -> Path:
    out = Path(args.out_dir or kv.get("out_dir", default))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _corpus_paths(args, kv: dict) -> tuple[Path, Path]:
    csv_path = Path(args.corpus or kv.get("corpus_csv", ""))
    if not str(csv_path) or not csv_path.exists():
        raise BadConfig(f"corpus CSV not found: {csv_path or '(unset)'}")
    manifest = Path(kv.get("corpus_manifest", csv_path.with_suffix(".manifest")))
    if not manifest.exists():
        raise BadConfig(f"corpus manifest not found: {manifest}")
    return csv_path, manifest


def _train_config(kv: dict, seed: int) -> cgan.TrainConfig:
    return cgan.TrainConfig(
        epochs=kv_int(kv, "epochs", 300),
        batch_size=kv_int(kv, "batch_size", 64),
        d_steps=kv_int(kv, "d_steps", 2),
        lr=kv_float(kv, "lr", 2e-4),
        beta1=kv_float(kv, "beta1", 0.5),
        beta2=kv_float(kv, "beta2", 0.999),
        val_fraction=kv_float(kv, "val_fraction", 0.1),
        checkpoint_every=kv_int(kv, "checkpoint_every", 100),
        probe_size=kv_int(kv, "probe_size", 256),
        seed=seed,
    )


# ------------------------------------------------------------- subcommands

def cmd_make_corpus(args) -> int:
    kv = _load_config(args.config)
    seed = _resolve_seed(args, kv)
    out = _out_dir(args, kv)
    raw_csv = args.raw_csv or kv.get("raw_csv", "")
    if raw_csv:
        series = corpus.read_raw_series_csv(raw_csv)
        corp = corpus.build_corpus(series, seed=seed)
    else:
        corp = corpus.make_surrogate_corpus(corpus.SurrogateConfig.from_kv(kv), seed=seed)
    csv_path, manifest_path = out / "corpus.csv", out / "corpus.manifest"
    corpus.save_corpus(corp, csv_path, manifest_path)
    print(f"wrote {csv_path} ({corp.n} profiles) and {manifest_path}")
    return 0


def cmd_train(args) -> int:
    kv = _load_config(args.config)
    seed = _resolve_seed(args, kv)
    out = _out_dir(args, kv)
    csv_path, manifest_path = _corpus_paths(args, kv)
    corp = corpus.load_corpus(csv_path, manifest_path)
    config = _train_config(kv, seed)
    if args.epochs is not None:
        config.epochs = args.epochs
    trainer = cgan.train_cgan(corp, config, out_dir=out, resume_from=args.resume,
                              log_every=args.log_every)
    telemetry_path = out / "telemetry.csv"
    telemetry_path.write_bytes(cgan.telemetry_csv(trainer.telemetry).encode("utf-8"))
    final = trainer.telemetry[-1]
    print(f"trained {trainer.epochs_done} epochs; final d_train {final.d_train:.3f} "
          f"d_val {final.d_val:.3f} d_fake {final.d_fake:.3f} w1 {final.w1:.5f}")
    print(f"wrote {out / 'final.ckpt'} and {telemetry_path}")
    return 0


def cmd_generate(args) -> int:
    kv = _load_config(args.config)
    seed = _resolve_seed(args, kv)
    label = parse_label(args.label)
    gen, _ = cgan.load_generator(args.checkpoint)
    values = cgan.generate_matrix(gen, label, args.n, seed=seed)
    labels = np.tile(label, (args.n, 1))
    out_path = Path(args.out or "generated.csv")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    corpus.write_profiles_csv(out_path, values, labels,
                              [f"synthetic-{i:04d}" for i in range(args.n)],
                              [None] * args.n, np.ones(args.n))
    print(f"wrote {out_path} ({args.n} profiles, label '{args.label}')")
    return 0


def _synthetic_by_label(args, kv: dict, seed: int, labels_needed) -> dict[tuple, np.ndarray]:
    """Per-label synthetic profiles from --synthetic CSV or a checkpoint."""
    if args.synthetic:
        pf = corpus.read_profiles_csv(args.synthetic)
        out = {}
        for key in {tuple(r.astype(int)) for r in pf.labels}:
            mask = np.array([tuple(r.astype(int)) == key for r in pf.labels])
            out[key] = pf.profiles[mask]
        return out
    if not args.checkpoint:
        raise BadConfig("eval needs --synthetic or --checkpoint")
    gen, _ = cgan.load_generator(args.checkpoint)
    n = args.n or kv_int(kv, "eval_n", 256)
    return {tuple(np.asarray(lab).astype(int)): cgan.generate_matrix(gen, lab, n, seed)
            for lab in labels_needed}


def _label_name(key: tuple) -> str:
    season, load_type = corpus.decode_label(np.array(key, dtype=float))
    return f"{season} {load_type}"


def cmd_eval(args) -> int:
    kv = _load_config(args.config)
    seed = _resolve_seed(args, kv)
    out = _out_dir(args, kv)
    csv_path, manifest_path = _corpus_paths(args, kv)
    corp = corpus.load_corpus(csv_path, manifest_path)
    real_by_label = {}
    for key in {tuple(r.astype(int)) for r in corp.labels}:
        mask = np.array([tuple(r.astype(int)) == key for r in corp.labels])
        real_by_label[key] = corp.profiles[mask]

    if args.which == "wd":
        syn = _synthetic_by_label(args, kv, seed, list(real_by_label))
        rows, summary = [], []
        pooled_syn = np.concatenate([v.ravel() for v in syn.values()])
        pooled_real = np.concatenate([v.ravel() for v in real_by_label.values()])
        w_pooled = evaluation.wasserstein1_empirical(pooled_syn, pooled_real)
        rows.append(("pooled", w_pooled))
        for key in sorted(syn):
            if key in real_by_label:
                w = evaluation.wasserstein1_empirical(syn[key].ravel(),
                                                      real_by_label[key].ravel())
                rows.append((_label_name(key), w))
        lines = ["label,w1"] + [f"{name},{w!r}" for name, w in rows]
        (out / "wd_report.csv").write_bytes(("\n".join(lines) + "\n").encode())
        summary = [f"W1({name}) = {w:.6f}" for name, w in rows]
        (out / "wd_summary.txt").write_bytes(("\n".join(summary) + "\n").encode())
        print(f"pooled W1 = {w_pooled:.6f}; wrote {out / 'wd_report.csv'}")
        return 0

    if args.which == "psd":
        syn = _synthetic_by_label(args, kv, seed, list(real_by_label))
        syn_all = np.concatenate(list(syn.values()))
        real_all = np.concatenate(list(real_by_label.values()))
        cmp = evaluation.compare_psd(real_all, syn_all)
        for name, spec in (("psd_real.csv", cmp.real), ("psd_synthetic.csv", cmp.synthetic)):
            lines = ["freq_cph,power"] + [f"{f!r},{p!r}" for f, p in
                                          zip(spec.frequencies, spec.power)]
            (out / name).write_bytes(("\n".join(lines) + "\n").encode())
        lines = ["freq_cph,log_diff"] + [f"{f!r},{d!r}" for f, d in
                                         zip(cmp.frequencies, cmp.log_diff)]
        (out / "psd_report.csv").write_bytes(("\n".join(lines) + "\n").encode())
        peak_real = int(np.argmax(cmp.real.power[1:]) + 1)
        peak_syn = int(np.argmax(cmp.synthetic.power[1:]) + 1)
        summary = [
            f"real dominant non-DC bin: {peak_real} "
            f"({cmp.real.frequencies[peak_real]:.4f} cycles/hour)",
            f"synthetic dominant non-DC bin: {peak_syn} "
            f"({cmp.synthetic.frequencies[peak_syn]:.4f} cycles/hour)",
            f"max |log power diff| over diurnal bins: {cmp.max_abs_diurnal_diff:.4f}",
        ]
        (out / "psd_summary.txt").write_bytes(("\n".join(summary) + "\n").encode())
        print("; ".join(summary[:2]))
        return 0

    if args.which == "forecast":
        if not args.checkpoint:
            raise BadConfig("forecast evaluation needs --checkpoint")
        gen, _ = cgan.load_generator(args.checkpoint)
        n_train = kv_int(kv, "forecast_train_profiles", 150)
        n_eval = kv_int(kv, "forecast_eval_profiles", 100)
        epochs = kv_int(kv, "forecast_epochs", 2)
        rows = []
        for season in ("summer", "fall"):
            key = tuple(corpus.encode_label(season, "residential").astype(int))
            train_syn = cgan.generate_matrix(gen, np.array(key, float), n_train, seed)
            fresh_syn = cgan.generate_matrix(gen, np.array(key, float), n_eval, seed + 1)
            model = evaluation.train_forecaster(train_syn, seed=seed, epochs=epochs)
            real = real_by_label.get(key)
            if real is None:
                raise BadConfig(f"corpus has no '{season} residential' profiles")
            rep_syn = evaluation.forecast_eval(model, fresh_syn)
            rep_real = evaluation.forecast_eval(model, real[:n_eval])
            rows.append((f"{season} residential", "synthetic", rep_syn))
            rows.append((f"{season} residential", "real", rep_real))
        lines = ["label,testing_data,mean_pct_error,std_pct_error,count"]
        for label, which, rep in rows:
            lines.append(f"{label},{which},{rep.mean_pct_error!r},"
                         f"{rep.std_pct_error!r},{rep.count}")
        (out / "forecast_report.csv").write_bytes(("\n".join(lines) + "\n").encode())
        summary = [f"{label} / {which}: mean {rep.mean_pct_error:.2f}% "
                   f"std {rep.std_pct_error:.2f}%" for label, which, rep in rows]
        (out / "forecast_summary.txt").write_bytes(("\n".join(summary) + "\n").encode())
        print("; ".join(summary))
        return 0

    raise BadConfig(f"unknown eval kind {args.which!r}")


def cmd_gridmap(args) -> int:
    kv = _load_config(args.config)
    seed = _resolve_seed(args, kv)
    out = _out_dir(args, kv)
    case_path = args.case or kv.get("grid_case", "")
    if not case_path:
        raise BadConfig("gridmap needs --case")
    case = gridmap.parse_matpower_case(Path(case_path).read_text(encoding="utf-8"))

    if args.corpus:
        profiles = corpus.read_profiles_csv(args.corpus).profiles
    elif args.checkpoint:
        label = parse_label(args.label or "winter residential")
        gen, _ = cgan.load_generator(args.checkpoint)
        profiles = cgan.generate_matrix(gen, label, args.n or 64, seed)
    else:
        raise BadConfig("gridmap needs --corpus or --checkpoint")
    if profiles.shape[0] == 0:
        raise BadConfig("no profiles to map")

    load_buses = [int(b) for i, b in enumerate(case.bus_id) if case.pd[i] != 0.0]
    assignment = {b: profiles[k % profiles.shape[0]] for k, b in enumerate(load_buses)}
    hourly = gridmap.map_profiles(case, assignment)
    report = gridmap.feasibility_report(case, hourly)
    (out / "feasibility.csv").write_bytes(gridmap.feasibility_csv(report).encode())
    (out / "violations.csv").write_bytes(gridmap.violations_csv(report).encode())
    print(f"{report.n_feasible}/{len(report.hours)} feasible hours; "
          f"wrote {out / 'feasibility.csv'}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadgan",
        description="Conditional-GAN synthesis and validation of weekly load profiles")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None, help="overrides config seed")
        p.add_argument("--out-dir", default=None, help="output directory")

    p = sub.add_parser("make-corpus", help="build the training corpus")
    common(p)
    p.add_argument("--raw-csv", default=None,
                   help="ingest timestamp,load_id,mw rows instead of the surrogate")
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train", help="train the conditional GAN")
    common(p)
    p.add_argument("--corpus", default=None, help="corpus CSV (manifest alongside)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--log-every", type=int, default=25)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample profiles for one label")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--label", required=True, help="e.g. 'summer residential'")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="distribution, spectrum or forecast checks")
    common(p)
    p.add_argument("--which", required=True, choices=["wd", "psd", "forecast"])
    p.add_argument("--corpus", default=None, help="real corpus CSV")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--synthetic", default=None, help="synthetic profiles CSV")
    p.add_argument("--n", type=int, default=None, help="profiles per label to generate")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridmap", help="map profiles onto a grid case and check feasibility")
    common(p)
    p.add_argument("--case", default=None, help="MATPOWER-format case file")
    p.add_argument("--corpus", default=None, help="profiles CSV to map")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_gridmap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LoadGanError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"IOError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
