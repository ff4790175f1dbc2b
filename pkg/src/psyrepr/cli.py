"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 config or input validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy
import yaml

from . import __version__
from ._parallel import default_jobs
from .config import ConfigError, RunConfig, load_config, validate_config
from .ensemble import DiffReport, ensemble_rca, paired_difference_report
from .rca import CategoryTable, aggregate_by_category, content_profiles, profiles_to_csv
from .report import RenderSpec, render_diff_table, render_mds, render_rca, render_rsa, write_figure
from .rsa import RsaMatrix, mds_projection, pairwise_rsa, same_type_neighbor_affinity, within_between_summary
from .store import FormatError, Representation, load_embeddings, load_frequency_table, load_norms, write_embeddings
from .vocab import build_base_vocabulary, coverage, subset_representation

log = logging.getLogger("psyrepr")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _Inputs:
    """Representations and norms as loaded for one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.norms = load_norms(cfg.norm_manifest)
        raw = [load_embeddings(e.path, e.format, name=e.name, data_type=e.data_type) for e in cfg.representations]
        self.base = None
        if cfg.base_vocabulary:
            others = [r.vocab for r in raw if r.data_type != "text"]
            if others:
                self.base = build_base_vocabulary(
                    [n.vocab for n in self.norms],
                    [r.vocab for r in raw if r.data_type == "behavior"],
                    [r.vocab for r in raw if r.data_type == "brain"],
                )
            else:
                log.warning("no behavior or brain representations; base vocabulary not applied")
        self.reps = [subset_representation(r, self.base) if self.base is not None else r for r in raw]
        self.coverage = {}
        if cfg.frequency is not None:
            freq = load_frequency_table(cfg.frequency)
            if self.base is not None:
                self.coverage["base"] = coverage(self.base, freq)
            self.coverage.update({r.name: coverage(r.vocab, freq) for r in self.reps})

    @property
    def by_name(self) -> dict[str, Representation]:
        return {r.name: r for r in self.reps}

    @property
    def category_map(self) -> dict[str, str]:
        return {n.name: n.category for n in self.norms}

    @property
    def type_of(self) -> dict[str, str]:
        return {r.name: r.data_type for r in self.reps}


def _versions() -> dict:
    return {"psyrepr": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _dump(path: Path, data) -> Path:
    return _write(path, json.dumps(data, indent=2) + "\n")


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_").lower() or "x"


def _config(path, seed=None, out=None) -> RunConfig:
    return load_config(path).with_overrides(seed=seed, out=out)


# ------------------------------------------------------------------ commands


def cmd_validate(config: str | Path) -> list[str]:
    """Problems found in ``config``, each prefixed with ``file:line``."""
    _, issues = validate_config(config)
    return issues


def cmd_rsa(config: str | Path, jobs: int | None = None, seed: int | None = None, out: str | Path | None = None) -> dict:
    """Pairwise RSA, MDS, type summaries and figures; returns the written paths and summaries."""
    cfg = _config(config, seed, out)
    data = _Inputs(cfg)
    if len(data.reps) < 2:
        raise ValueError("RSA needs at least two representations")
    out_dir = cfg.output_dir
    rsa = pairwise_rsa(data.reps, jobs=jobs)
    written = write_figure(out_dir / "rsa.svg", render_rsa(rsa, RenderSpec("rsa-heatmap", title="RSA")), rsa.to_csv(), rsa.to_dict())

    coords = None
    if rsa.has_missing:
        log.warning("RSA matrix has missing cells; MDS skipped")
    else:
        coords = mds_projection(rsa, dims=2)
        mds_csv = "name,data_type,x,y\n" + "".join(
            f"{n},{t},{x!r},{y!r}\n" for n, t, (x, y) in zip(rsa.names, rsa.labels, coords.tolist())
        )
        mds_data = {"names": list(rsa.names), "labels": list(rsa.labels), "coords": coords.tolist()}
        svg = render_mds(coords, rsa.names, rsa.labels, RenderSpec("mds-scatter", title="MDS of 1 - rho"))
        written += write_figure(out_dir / "mds.svg", svg, mds_csv, mds_data)

    summary = within_between_summary(rsa)
    written.append(_dump(out_dir / "within_between.json", [{"types": list(k), "mean_rho": v} for k, v in summary.items()]))
    k = min(3, len(rsa.names) - 1)
    try:
        affinity = same_type_neighbor_affinity(rsa, k=k)
    except ValueError as exc:
        log.warning("neighbor affinity skipped: %s", exc)
        affinity = {}
    written.append(_dump(out_dir / "affinity.json", {"k": k, "proportions": affinity}))
    return {"rsa": rsa, "coords": coords, "within_between": summary, "affinity": affinity, "files": written}


def cmd_probe(config: str | Path, jobs: int | None = None, seed: int | None = None, out: str | Path | None = None) -> dict:
    """Content profiles of every representation, category table and run summary."""
    cfg = _config(config, seed, out)
    data = _Inputs(cfg)
    out_dir = cfg.output_dir
    profiles = content_profiles(data.reps, data.norms, cfg.probe, jobs=jobs)
    n_folds = cfg.probe.outer_folds
    written = [_write(out_dir / "profiles" / f"{_slug(p.representation)}.csv", profiles_to_csv([p], n_folds)) for p in profiles]
    written.append(_write(out_dir / "content_profiles.csv", profiles_to_csv(profiles, n_folds)))

    table = aggregate_by_category(profiles, data.category_map)
    reference = cfg.rca_reference if cfg.rca_reference in table.rows else None
    spec = RenderSpec("rca-heatmap", ordering=reference, title="Median probe score by norm category")
    fig_data = {"table": table.to_dict(), "types": data.type_of, "reference": reference}
    written += write_figure(out_dir / "rca_categories.svg", render_rca(table, spec, data.type_of), table.to_csv(), fig_data)

    summary = {
        "seed": cfg.seed,
        "alpha_grid": list(cfg.probe.alphas),
        "outer_folds": cfg.probe.outer_folds,
        "inner_folds": cfg.probe.inner_folds,
        "min_test_samples": cfg.probe.min_test_samples,
        "standardize": cfg.probe.standardize,
        "versions": _versions(),
        "coverage": data.coverage,
        "base_vocabulary_size": None if data.base is None else len(data.base),
        "vocabulary_sizes": {r.name: len(r.vocab) for r in data.reps},
        "probes": [
            {
                "representation": r.representation,
                "norm": r.norm,
                "n_samples": r.n_samples,
                "score": None if r.skipped else r.mean_score,
                "skip_reason": r.skip_reason,
            }
            for p in profiles
            for r in p.scores.values()
        ],
    }
    written.append(_dump(out_dir / "run_summary.json", summary))
    return {"profiles": profiles, "table": table, "files": written}


def cmd_ensemble(config: str | Path, jobs: int | None = None, seed: int | None = None, out: str | Path | None = None) -> dict:
    """Ensemble probing on the collective vocabulary and paired difference reports."""
    cfg = _config(config, seed, out)
    if not cfg.ensembles:
        raise ConfigError([f"{cfg.path}: no ensembles configured"])
    data = _Inputs(cfg)
    out_dir = cfg.output_dir
    result = ensemble_rca(cfg.ensembles, data.by_name, data.norms, cfg.probe, jobs=jobs)
    profiles = list(result.profiles.values())
    written = [_write(out_dir / "ensemble_profiles.csv", profiles_to_csv(profiles, cfg.probe.outer_folds))]

    table = aggregate_by_category(profiles, data.category_map)
    type_of = {**data.type_of, **{s.label: "ensemble" for s in cfg.ensembles}}
    fig_data = {"table": table.to_dict(), "types": type_of, "reference": None}
    spec = RenderSpec("rca-heatmap", title="Ensemble median probe score by norm category")
    written += write_figure(out_dir / "ensemble_categories.svg", render_rca(table, spec, type_of), table.to_csv(), fig_data)

    reports = []
    for a, b in cfg.contrasts:
        report = paired_difference_report(result.profiles[a], result.profiles[b], data.category_map)
        reports.append(report)
        svg = render_diff_table(report, RenderSpec("diff-table", title=f"{a} vs {b}"))
        written += write_figure(out_dir / f"diff_{_slug(a)}__{_slug(b)}.svg", svg, report.to_csv(), report.to_dict())

    summary = {
        "seed": cfg.seed,
        "alpha_grid": list(cfg.probe.alphas),
        "versions": _versions(),
        "common_vocabulary_size": len(result.vocab),
        "ensembles": [{"label": s.label, "members": list(s.members), "block_scaling": s.block_scaling} for s in cfg.ensembles],
        "contrasts": [r.to_dict() for r in reports],
        "skipped": [
            {"unit": r.representation, "norm": r.norm, "skip_reason": r.skip_reason}
            for p in profiles
            for r in p.skipped
        ],
    }
    written.append(_dump(out_dir / "ensemble_summary.json", summary))
    return {"result": result, "table": table, "reports": reports, "files": written}


def cmd_report(out_dir: str | Path) -> list[Path]:
    """Re-render every figure whose JSON sidecar exists in ``out_dir``."""
    out_dir = Path(out_dir)
    written = []
    path = out_dir / "rsa.json"
    if path.is_file():
        rsa = RsaMatrix.from_dict(json.loads(path.read_text(encoding="utf-8")))
        written += write_figure(path, render_rsa(rsa, RenderSpec("rsa-heatmap", title="RSA")), rsa.to_csv(), rsa.to_dict())
    path = out_dir / "mds.json"
    if path.is_file():
        d = json.loads(path.read_text(encoding="utf-8"))
        svg = render_mds(np.asarray(d["coords"]), d["names"], d["labels"], RenderSpec("mds-scatter", title="MDS of 1 - rho"))
        _write(path.with_suffix(".svg"), svg)
        written.append(path.with_suffix(".svg"))
    for name in ("rca_categories", "ensemble_categories"):
        path = out_dir / f"{name}.json"
        if path.is_file():
            d = json.loads(path.read_text(encoding="utf-8"))
            table = CategoryTable.from_dict(d["table"])
            spec = RenderSpec("rca-heatmap", ordering=d.get("reference"), title="Median probe score by norm category")
            written += write_figure(path, render_rca(table, spec, d.get("types", {})), table.to_csv(), d)
    for path in sorted(out_dir.glob("diff_*.json")):
        report = DiffReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
        svg = render_diff_table(report, RenderSpec("diff-table", title=f"{report.label_a} vs {report.label_b}"))
        written += write_figure(path, svg, report.to_csv(), report.to_dict())
    return written


def cmd_train(method: str, args: argparse.Namespace) -> dict:
    """Train one behavior-style representation and write it as header-text."""
    from . import train

    if method == "ppmi-svd":
        counts = train.load_cue_response_counts(args.counts)
        rep = train.ppmi_svd_embed(counts, k=args.k, name=args.name or "ppmi-svd")
        info = {"k": rep.dim, "vocab_size": len(rep.vocab)}
    elif method == "sim-svd":
        datasets = [train.load_similarity_judgments(p) for p in args.judgments]
        words = sorted({w for d in datasets for pair in d.pairs for w in pair})
        S = train.aggregate_similarity(datasets, train.VocabSet(words))
        _, n_imputed = train.impute_similarity(S)
        rep = train.similarity_svd_embed(S, k=args.k, name=args.name or "sim-svd")
        info = {"k": rep.dim, "vocab_size": len(rep.vocab), "imputed_pairs": n_imputed}
    elif method == "sg-softmax":
        pairs = train.load_pairs(args.pairs)
        res = train.sg_softmax_train(
            pairs, dim=args.dim, epochs=args.epochs, learning_rate=args.learning_rate, seed=args.seed,
            name=args.name or "sg-softmax",
        )
        rep = res.input_rep
        if args.responses_output:
            write_embeddings(res.output_rep, args.responses_output)
        info = {"k": rep.dim, "vocab_size": len(rep.vocab), "final_loss": res.epoch_losses[-1]}
    else:
        raise ValueError(f"unknown training method {method!r}")
    write_embeddings(rep, args.output)
    return info


def cmd_synth(out_dir: str | Path, seed: int = 0) -> Path:
    from .synthetic import write_project

    return write_project(out_dir, seed=seed)


# ------------------------------------------------------------------ argparse


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="run configuration (YAML)")
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes (default: logical cores)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psyrepr", description="Compare word representations by RSA and probe them against word norms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a run configuration")
    p.add_argument("--config", required=True)

    for name, text in (("rsa", "pairwise RSA, MDS and type summaries"), ("probe", "content profiles of each representation"),
                       ("ensemble", "ensemble probing and paired differences")):
        _add_run_options(sub.add_parser(name, help=text))

    p = sub.add_parser("report", help="re-render figures from JSON outputs")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--out")

    p = sub.add_parser("synth", help="write a synthetic project with planted structure")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a behavior-style representation")
    tsub = p.add_subparsers(dest="method", required=True)
    t = tsub.add_parser("ppmi-svd", help="SVD of the PPMI cue-response matrix")
    t.add_argument("--counts", required=True, help='csv "cue,response,count"')
    t.add_argument("--k", type=int, default=None, help="dimensions (default 300, capped at rank)")
    t = tsub.add_parser("sim-svd", help="SVD of aggregated similarity judgments")
    t.add_argument("--judgments", required=True, nargs="+", help='csv "word1,word2,value,scale_min,scale_max"')
    t.add_argument("--k", type=int, default=None)
    t = tsub.add_parser("sg-softmax", help="skip-gram with a full softmax over responses")
    t.add_argument("--pairs", required=True, help='csv "cue,response[,count]"')
    t.add_argument("--dim", type=int, default=100)
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--learning-rate", type=float, default=0.025)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--responses-output", default=None, help="also write the response vectors here")
    for t in tsub.choices.values():
        t.add_argument("--output", required=True, help="header-text embedding file to write")
        t.add_argument("--name", default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            issues = cmd_validate(args.config)
            for line in issues:
                print(line, file=sys.stderr)
            if issues:
                return EXIT_CONFIG
            print(f"{args.config}: ok")
        elif args.command == "rsa":
            res = cmd_rsa(args.config, args.jobs, args.seed, args.out)
            for (a, b), v in res["within_between"].items():
                print(f"{a}-{b}\t{v:.3f}")
        elif args.command == "probe":
            res = cmd_probe(args.config, args.jobs, args.seed, args.out)
            n = sum(len(p.scores) for p in res["profiles"])
            skipped = sum(len(p.skipped) for p in res["profiles"])
            print(f"{n} probes, {skipped} skipped")
        elif args.command == "ensemble":
            res = cmd_ensemble(args.config, args.jobs, args.seed, args.out)
            for report in res["reports"]:
                for r in report.rows:
                    p = "" if r.p_value is None else f"\tp={r.p_value:.4g}"
                    print(f"{report.label_a} - {report.label_b}\t{r.category}\t{r.median_diff:+.3f}{p}")
        elif args.command == "report":
            out_dir = args.out if args.out else load_config(args.config).output_dir
            written = cmd_report(out_dir)
            print(f"{len(written)} files rendered")
        elif args.command == "synth":
            print(cmd_synth(args.out, args.seed))
        elif args.command == "train":
            info = cmd_train(args.method, args)
            print("\t".join(f"{k}={v}" for k, v in info.items()))
    except ConfigError as exc:
        for line in exc.issues:
            print(line, file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, RuntimeError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
