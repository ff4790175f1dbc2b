"""Run configuration: a single YAML file describing inputs and analysis settings.

Schema::

    seed: 0                          # int, optional (default 0)
    output_dir: results              # relative to the config file
    representations:                 # at least one
      - name: fastText               # unique
        path: reps/fasttext.txt
        format: header-text          # or csv
        data_type: text              # text | behavior | brain
    norms:
      manifest: norms/manifest.yaml
    frequency: frequency.csv         # optional word,count table
    base_vocabulary: true            # subset representations to the base vocabulary
    probe:                           # all keys optional
      outer_folds: 5
      inner_folds: 5
      alphas: [1.0e-5, ..., 1.0e+5]  # or alpha_range: {min: 1e-5, max: 1e5, count: 11}
      min_test_samples: 20
      standardize: false
    ensembles:
      - label: Text & Behavior
        members: [fastText, ppmi_svd]
        block_scaling: per-block-column-zscore   # or none
      - preset: text-text            # CBOW_GoogleNews + fastText_CommonCrawl
    contrasts:
      - [Text & Behavior, Text & Text]
    report:
      rca_reference: ppmi_svd        # row ordering the RCA heatmap columns
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .ensemble import PRESETS, SCALINGS, EnsembleSpec
from .rca import ProbeConfig
from .store import DATA_TYPES, EMBEDDING_FORMATS, FormatError, load_norm_manifest


class ConfigError(ValueError):
    def __init__(self, issues: list[str]):
        self.issues = issues
        super().__init__("\n".join(issues))


@dataclass(frozen=True)
class RepresentationEntry:
    name: str
    path: Path
    format: str
    data_type: str


@dataclass
class RunConfig:
    path: Path
    representations: list[RepresentationEntry]
    norm_manifest: Path
    output_dir: Path
    seed: int = 0
    frequency: Path | None = None
    base_vocabulary: bool = True
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    ensembles: list[EnsembleSpec] = field(default_factory=list)
    contrasts: list[tuple[str, str]] = field(default_factory=list)
    rca_reference: str | None = None

    def with_overrides(self, seed: int | None = None, out: str | Path | None = None) -> RunConfig:
        cfg = RunConfig(**self.__dict__)
        if seed is not None:
            cfg.seed = int(seed)
            cfg.probe = ProbeConfig(**{**self.probe.__dict__, "seed": int(seed)})
        if out is not None:
            cfg.output_dir = Path(out).resolve()
        return cfg


def _line_map(node, prefix=(), out=None) -> dict[tuple, int]:
    """Map key paths such as ``("representations", 1, "path")`` to 1-based lines."""
    out = {} if out is None else out
    out[prefix] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            _line_map(value, prefix + (key.value,), out)
            out[prefix + (key.value,)] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_map(item, prefix + (i,), out)
    return out


class _Issues:
    def __init__(self, path: Path, lines: dict):
        self.path = path
        self.lines = lines
        self.items: list[str] = []

    def add(self, where: tuple, message: str):
        while where and where not in self.lines:
            where = where[:-1]
        line = self.lines.get(where, 1)
        self.items.append(f"{self.path}:{line}: {message}")


def _probe_config(raw, seed, issues: _Issues) -> ProbeConfig:
    if raw is None:
        return ProbeConfig(seed=seed)
    if not isinstance(raw, dict):
        issues.add(("probe",), "'probe' must be a mapping")
        return ProbeConfig(seed=seed)
    known = {"outer_folds", "inner_folds", "alphas", "alpha_range", "min_test_samples", "standardize"}
    for key in raw:
        if key not in known:
            issues.add(("probe", key), f"unknown probe setting {key!r}")
    kwargs = {"seed": seed}
    for key in ("outer_folds", "inner_folds", "min_test_samples"):
        if key in raw:
            if not isinstance(raw[key], int) or isinstance(raw[key], bool):
                issues.add(("probe", key), f"{key} must be an integer")
            else:
                kwargs[key] = raw[key]
    if "standardize" in raw:
        kwargs["standardize"] = bool(raw["standardize"])
    if "alphas" in raw:
        try:
            kwargs["alphas"] = tuple(float(a) for a in raw["alphas"])
        except (TypeError, ValueError):
            issues.add(("probe", "alphas"), "alphas must be a list of numbers")
    elif "alpha_range" in raw:
        r = raw["alpha_range"]
        try:
            kwargs["alphas"] = tuple(
                float(a) for a in np.logspace(np.log10(float(r["min"])), np.log10(float(r["max"])), int(r["count"]))
            )
        except (TypeError, ValueError, KeyError):
            issues.add(("probe", "alpha_range"), "alpha_range needs numeric min, max and count")
    try:
        return ProbeConfig(**kwargs)
    except ValueError as exc:
        issues.add(("probe",), str(exc))
        return ProbeConfig(seed=seed)


def validate_config(path: str | Path) -> tuple[RunConfig | None, list[str]]:
    """Parse and check a run config.

    Returns the config (``None`` when unusable) and a list of line-anchored
    problems; the config is clean iff the list is empty.
    """
    path = Path(path).resolve()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        return None, [f"{path}: cannot read config: {exc.strerror}"]
    try:
        raw = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        return None, [f"{path}:{line}: invalid YAML: {getattr(exc, 'problem', exc)}"]
    issues = _Issues(path, _line_map(node) if node is not None else {})
    if not isinstance(raw, dict):
        issues.add((), "config must be a mapping")
        return None, issues.items
    base = path.parent

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        issues.add(("seed",), "seed must be an integer")
        seed = 0

    reps: list[RepresentationEntry] = []
    entries = raw.get("representations")
    if not isinstance(entries, list) or not entries:
        issues.add(("representations",), "'representations' must be a non-empty list")
        entries = []
    names: set[str] = set()
    for i, e in enumerate(entries):
        where = ("representations", i)
        if not isinstance(e, dict):
            issues.add(where, "representation entry must be a mapping")
            continue
        missing = [k for k in ("name", "path", "data_type") if not e.get(k)]
        if missing:
            issues.add(where, f"representation entry missing {', '.join(missing)}")
            continue
        name = str(e["name"])
        if name in names:
            issues.add(where + ("name",), f"duplicate representation name {name!r}")
        names.add(name)
        fmt = e.get("format", "header-text")
        if fmt not in EMBEDDING_FORMATS:
            issues.add(where + ("format",), f"unknown format {fmt!r}")
        if e["data_type"] not in DATA_TYPES:
            issues.add(where + ("data_type",), f"unknown data_type {e['data_type']!r}")
        p = (base / str(e["path"])).resolve()
        if not p.is_file():
            issues.add(where + ("path",), f"representation file not found: {p}")
        reps.append(RepresentationEntry(name, p, fmt, str(e["data_type"])))

    norms = raw.get("norms")
    manifest = None
    if not isinstance(norms, dict) or not norms.get("manifest"):
        issues.add(("norms",), "'norms.manifest' is required")
    else:
        manifest = (base / str(norms["manifest"])).resolve()
        if not manifest.is_file():
            issues.add(("norms", "manifest"), f"norm manifest not found: {manifest}")
        else:
            try:
                load_norm_manifest(manifest)
            except FormatError as exc:
                issues.add(("norms", "manifest"), f"norm manifest invalid: {exc}")

    frequency = None
    if raw.get("frequency"):
        frequency = (base / str(raw["frequency"])).resolve()
        if not frequency.is_file():
            issues.add(("frequency",), f"frequency table not found: {frequency}")

    probe = _probe_config(raw.get("probe"), seed, issues)

    specs: list[EnsembleSpec] = []
    labels: set[str] = set()
    for i, e in enumerate(raw.get("ensembles") or []):
        where = ("ensembles", i)
        if isinstance(e, dict) and "preset" in e:
            if e["preset"] not in PRESETS:
                issues.add(where + ("preset",), f"unknown ensemble preset {e['preset']!r}")
                continue
            label, members = PRESETS[e["preset"]]
            e = {"label": label, "members": list(members), **{k: v for k, v in e.items() if k != "preset"}}
        if not isinstance(e, dict) or not isinstance(e.get("members"), list):
            issues.add(where, "ensemble needs a 'members' list")
            continue
        unknown = [m for m in e["members"] if m not in names]
        if unknown:
            issues.add(where + ("members",), f"unknown ensemble member(s): {', '.join(map(str, unknown))}")
        scaling = e.get("block_scaling", "per-block-column-zscore")
        if scaling not in SCALINGS:
            issues.add(where + ("block_scaling",), f"unknown block_scaling {scaling!r}")
            continue
        try:
            spec = EnsembleSpec(tuple(str(m) for m in e["members"]), str(e.get("label", "")), scaling)
        except ValueError as exc:
            issues.add(where, str(exc))
            continue
        if spec.label in labels:
            issues.add(where, f"duplicate ensemble label {spec.label!r}")
        labels.add(spec.label)
        specs.append(spec)

    contrasts = []
    for i, c in enumerate(raw.get("contrasts") or []):
        if not isinstance(c, list) or len(c) != 2:
            issues.add(("contrasts", i), "contrast must be a pair [a, b]")
            continue
        known = labels | names
        bad = [x for x in c if x not in known]
        if bad:
            issues.add(("contrasts", i), f"unknown contrast label(s): {', '.join(map(str, bad))}")
        contrasts.append((str(c[0]), str(c[1])))
    if not contrasts and len(specs) == 2:
        contrasts.append((specs[1].label, specs[0].label))

    report = raw.get("report") or {}
    reference = report.get("rca_reference") if isinstance(report, dict) else None
    if reference is not None and reference not in names:
        issues.add(("report", "rca_reference"), f"unknown rca_reference {reference!r}")
        reference = None

    out_dir = (base / str(raw.get("output_dir", "results"))).resolve()
    if manifest is None:
        return None, issues.items
    cfg = RunConfig(
        path=path,
        representations=reps,
        norm_manifest=manifest,
        output_dir=out_dir,
        seed=seed,
        frequency=frequency,
        base_vocabulary=bool(raw.get("base_vocabulary", True)),
        probe=probe,
        ensembles=specs,
        contrasts=contrasts,
        rca_reference=reference,
    )
    return cfg, issues.items


def load_config(path: str | Path) -> RunConfig:
    cfg, issues = validate_config(path)
    if issues or cfg is None:
        raise ConfigError(issues or [f"{path}: unusable config"])
    return cfg
