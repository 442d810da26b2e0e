"""Command-line front end.

Subcommands mirror the library: synth-population, fit-models, gen-identity,
eval-diversity, attack-privacy, attack-auth, text-metrics. Every command is
a pure function of its resolved configuration (JSON config file plus flag
overrides; flags win), so identical configs produce byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure. ANONVOICE_THREADS caps the worker count of trial loops.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attacks import (
    AuthAttackConfig,
    AuthStrategy,
    PrivacyAttackConfig,
    auth_attack,
    privacy_attack,
)
from .channel import SynthesisChannel, synth_population
from .diversity import (
    count_modes,
    generated_scores,
    histogram_counts,
    population_scores,
    HISTOGRAM_BINS,
    HISTOGRAM_RANGE,
)
from .embeddings import load_dataset, save_dataset
from .errors import AnonvoiceError, ConfigError, DataError, NumericalError
from .identity import (
    GenerationMethod,
    GeneratorConfig,
    fit_generator,
    generate,
    load_generator,
    save_generator,
)
from .randomness import Secret
from .recognition import auc, json_dump_canonical, roc_compute, roc_summary, roc_to_csv
from .textmetrics import corpus_metrics

ALL_METHOD_NAMES = tuple(m.value for m in GenerationMethod)


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return obj


def _resolve(defaults: dict, config: dict, flags: dict) -> dict:
    merged = dict(defaults)
    for key, value in config.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {key!r} must be an object")
            nested = dict(defaults[key])
            for sub_key, sub_value in value.items():
                if sub_key not in nested:
                    raise ConfigError(f"unknown config key {key}.{sub_key}")
                nested[sub_key] = sub_value
            merged[key] = nested
        else:
            merged[key] = value
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged


def _require(settings: dict, key: str):
    if settings.get(key) is None:
        raise ConfigError(f"missing required setting {key!r}")
    return settings[key]


def _positive(settings: dict, *keys):
    for key in keys:
        if settings[key] is not None and settings[key] <= 0:
            raise ConfigError(f"{key} must be positive, got {settings[key]}")


def _parse_methods(raw) -> list[GenerationMethod]:
    if raw in (None, "all", ["all"]):
        return [GenerationMethod.from_name(name) for name in ALL_METHOD_NAMES]
    if isinstance(raw, str):
        raw = [part.strip() for part in raw.split(",") if part.strip()]
    return [GenerationMethod.from_name(name) for name in raw]


def _parse_policy(raw: str):
    from .recognition import AtEER, AtFPR

    if raw == "eer":
        return AtEER()
    if raw.startswith("fpr:"):
        return AtFPR(float(raw.split(":", 1)[1]))
    raise ConfigError(f"unknown threshold policy {raw!r} (use 'eer' or 'fpr:0.01')")


# -- subcommands ---------------------------------------------------------------

def cmd_synth_population(args) -> int:
    defaults = {
        "speakers": 40, "utterances": 30, "dimension": 64,
        "sigma_between": 1.0, "sigma_within": 0.05, "seed": 0,
        "out": None, "truth_out": None,
    }
    flags = {k: getattr(args, k) for k in defaults}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "speakers", "utterances", "dimension")
    out = Path(_require(settings, "out"))
    dataset, truth = synth_population(
        n_speakers=settings["speakers"],
        utterances_per_speaker=settings["utterances"],
        between_spread=settings["sigma_between"],
        within_spread=settings["sigma_within"],
        dimension=settings["dimension"],
        seed=settings["seed"],
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out)
    if settings["truth_out"]:
        json_dump_canonical(truth.to_dict(), settings["truth_out"])
    print(f"wrote {len(dataset)} records to {out}")
    return 0


def cmd_fit_models(args) -> int:
    defaults = {
        "dev": None, "training": None, "out": None,
        "retain": 0.95, "components": 20, "seed": 0,
    }
    flags = {k: getattr(args, k) for k in defaults}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "components")
    dev_path = Path(_require(settings, "dev"))
    out = Path(_require(settings, "out"))
    dev = load_dataset(dev_path)
    training_path = settings["training"]
    training = load_dataset(training_path) if training_path else None
    generator = fit_generator(dev, training, GeneratorConfig(
        retain=settings["retain"],
        gmm_components=settings["components"],
        gmm_seed=settings["seed"],
    ))
    out.parent.mkdir(parents=True, exist_ok=True)
    save_generator(generator, out, dev_path, training_path)
    fitted = ",".join(sorted(generator.pca)) or "none"
    print(f"fitted genders [{fitted}] -> {out}")
    return 0


def cmd_gen_identity(args) -> int:
    defaults = {
        "generator": None, "method": None, "gender": None,
        "secret_file": None, "out": None,
    }
    flags = {k: getattr(args, k) for k in defaults}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    generator = load_generator(_require(settings, "generator"))
    method = GenerationMethod.from_name(_require(settings, "method"))
    secret_path = Path(_require(settings, "secret_file"))
    if not secret_path.exists():
        raise DataError(f"secret file not found: {secret_path}")
    secret = Secret(secret_path.read_bytes())
    identity = generate(generator, method, settings["gender"], secret)
    out = Path(_require(settings, "out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    json_dump_canonical(identity.to_dict(), out)
    print(f"wrote identity ({method.value}) to {out}")
    return 0


def _natural_dataset(settings):
    if settings["dataset"]:
        return load_dataset(settings["dataset"])
    pop = settings["population"]
    dataset, _ = synth_population(
        n_speakers=pop["speakers"],
        utterances_per_speaker=pop["utterances"],
        between_spread=pop["sigma_between"],
        within_spread=pop["sigma_within"],
        dimension=pop["dimension"],
        seed=pop["seed"],
    )
    return dataset


def _write_scoreset(directory: Path, scores, summary_extra: dict) -> dict:
    """Write roc.csv, hist.csv and summary.json for one score set."""
    directory.mkdir(parents=True, exist_ok=True)
    curve = roc_compute(scores.targets, scores.nontargets)
    summary = roc_summary(curve)
    summary.update(summary_extra)
    summary["nontarget_modes"] = count_modes(scores.nontargets)
    roc_to_csv(curve, directory / "roc.csv")
    target_hist = histogram_counts(scores.targets)
    nontarget_hist = histogram_counts(scores.nontargets)
    low, high = HISTOGRAM_RANGE
    width = (high - low) / HISTOGRAM_BINS
    lines = ["bin_left,bin_right,target,nontarget"]
    for i in range(HISTOGRAM_BINS):
        lines.append(f"{low + i * width!r},{low + (i + 1) * width!r},"
                     f"{target_hist[i]},{nontarget_hist[i]}")
    (directory / "hist.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    json_dump_canonical(summary, directory / "summary.json")
    return summary


def cmd_eval_diversity(args) -> int:
    defaults = {
        "dataset": None,
        "population": {"speakers": 40, "utterances": 30, "dimension": 64,
                       "sigma_between": 1.0, "sigma_within": 0.05, "seed": 0},
        "generator": None,
        "methods": None,
        "identities": 500,
        "utterances": 30,
        "enroll": 10,
        "channel": {"spread": 0.03, "seed": 0},
        "seed": 0,
        "out": None,
    }
    flags = {k: getattr(args, k, None) for k in ("dataset", "generator", "methods",
                                                 "identities", "utterances", "enroll",
                                                 "seed", "out")}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "identities", "utterances", "enroll")
    if settings["enroll"] >= settings["utterances"]:
        raise ConfigError("enroll must be smaller than utterances")
    out_dir = Path(_require(settings, "out"))
    methods = _parse_methods(settings["methods"])
    generator = load_generator(_require(settings, "generator"))
    dataset = _natural_dataset(settings)
    channel = SynthesisChannel(settings["channel"]["spread"], settings["channel"]["seed"])

    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = dict(settings)
    resolved["methods"] = [m.value for m in methods]
    json_dump_canonical(resolved, out_dir / "config.resolved")

    natural = population_scores(dataset, settings["enroll"])
    natural_curve = roc_compute(natural.targets, natural.nontargets)
    natural_auc = auc(natural_curve)
    _write_scoreset(out_dir / "natural", natural, {"population": "natural"})
    print(f"natural population auc={natural_auc:.4f}")

    for method in methods:
        scores = generated_scores(
            generator, method, channel,
            n_identities=settings["identities"],
            n_utterances=settings["utterances"],
            enroll_count=settings["enroll"],
            seed=settings["seed"],
        )
        method_curve = roc_compute(scores.targets, scores.nontargets)
        summary = _write_scoreset(out_dir / method.value, scores, {
            "method": method.value,
            "n_identities": settings["identities"],
            "n_utterances": settings["utterances"],
            "auc_natural": natural_auc,
            "auc_gap": natural_auc - auc(method_curve),
        })
        print(f"{method.value}: auc={summary['auc']:.4f} gap={summary['auc_gap']:+.4f} "
              f"modes={summary['nontarget_modes']}")
    return 0


def _attack_common(settings):
    dataset = load_dataset(_require(settings, "dataset"))
    generator = None
    if settings["generator"]:
        generator = load_generator(settings["generator"])
    channel = SynthesisChannel(settings["channel_spread"], settings["channel_seed"])
    return dataset, generator, channel


def cmd_attack_privacy(args) -> int:
    defaults = {
        "dataset": None, "generator": None, "method": "baseline",
        "rounds": 100, "candidates": 20, "enroll": 10,
        "gender_filter": True, "channel_spread": 0.03, "channel_seed": 0,
        "seed": 0, "out": None, "round_csv": None, "workers": 1,
    }
    flags = {k: getattr(args, k) for k in defaults}
    if args.no_gender_filter:
        flags["gender_filter"] = False
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "rounds", "candidates", "enroll")
    dataset, generator, channel = _attack_common(settings)
    method = None
    if settings["method"] != "baseline":
        method = GenerationMethod.from_name(settings["method"])
        if generator is None:
            raise ConfigError("anonymized attack needs --generator")
    config = PrivacyAttackConfig(
        method=method,
        n_candidates=settings["candidates"],
        n_rounds=settings["rounds"],
        gender_filtering=settings["gender_filter"],
        enroll_count=settings["enroll"],
        channel=channel,
        seed=settings["seed"],
    )
    report = privacy_attack(dataset, generator, config, workers=settings["workers"])
    out = Path(_require(settings, "out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    json_dump_canonical(report.to_dict(), out)
    if settings["round_csv"]:
        lines = ["round,victim,identified,success"]
        for row in report.per_trial:
            lines.append(f"{row['round']},{row['victim']},{row['identified']},"
                         f"{int(row['success'])}")
        Path(settings["round_csv"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"privacy[{settings['method']}]: success={report.success_rate:.4f} "
          f"+-{report.ci_halfwidth:.4f} over {report.n_trials} rounds")
    return 0


def cmd_attack_auth(args) -> int:
    defaults = {
        "dataset": None, "generator": None, "method": None,
        "strategy": None, "trials": 10000, "enroll": 10, "policy": "eer",
        "channel_spread": 0.03, "channel_seed": 0,
        "seed": 0, "out": None, "trial_csv": None, "workers": 1,
    }
    flags = {k: getattr(args, k) for k in defaults}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "trials", "enroll")
    dataset, generator, channel = _attack_common(settings)
    strategy = AuthStrategy.from_name(_require(settings, "strategy"))
    method = None
    if settings["method"] and settings["method"] != "baseline":
        method = GenerationMethod.from_name(settings["method"])
    config = AuthAttackConfig(
        strategy=strategy,
        method=method,
        n_trials=settings["trials"],
        enroll_count=settings["enroll"],
        policy=_parse_policy(settings["policy"]),
        channel=channel,
        seed=settings["seed"],
    )
    report = auth_attack(dataset, generator, config, workers=settings["workers"])
    out = Path(_require(settings, "out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    json_dump_canonical(report.to_dict(), out)
    if settings["trial_csv"]:
        lines = ["trial,success"]
        for row in report.per_trial:
            lines.append(f"{row['trial']},{int(row['success'])}")
        Path(settings["trial_csv"]).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"auth[{strategy.value}/{settings['method'] or 'baseline'}]: "
          f"success={report.success_rate:.4f} +-{report.ci_halfwidth:.4f} "
          f"threshold={report.threshold:.4f}")
    return 0


def cmd_text_metrics(args) -> int:
    defaults = {
        "ref_dir": None, "hyp_dir": None, "out": None,
        "bootstrap": 1000, "seed": 0,
    }
    flags = {k: getattr(args, k) for k in defaults}
    settings = _resolve(defaults, _load_config_file(args.config), flags)
    _positive(settings, "bootstrap")
    ref_dir = Path(_require(settings, "ref_dir"))
    hyp_dir = Path(_require(settings, "hyp_dir"))
    if not ref_dir.is_dir():
        raise DataError(f"reference directory not found: {ref_dir}")
    if not hyp_dir.is_dir():
        raise DataError(f"hypothesis directory not found: {hyp_dir}")
    names = sorted(p.name for p in ref_dir.iterdir() if p.is_file())
    if not names:
        raise DataError(f"no reference files in {ref_dir}")
    pairs = []
    for name in names:
        hyp_path = hyp_dir / name
        if not hyp_path.exists():
            raise DataError(f"missing hypothesis file for {name}")
        pairs.append((
            (ref_dir / name).read_text(encoding="utf-8"),
            hyp_path.read_text(encoding="utf-8"),
        ))
    metrics = corpus_metrics(pairs, n_bootstrap=settings["bootstrap"], seed=settings["seed"])
    out = Path(_require(settings, "out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    json_dump_canonical(metrics.to_dict(), out)
    print(f"wer={metrics.wer:.4f} [{metrics.wer_ci[0]:.4f}, {metrics.wer_ci[1]:.4f}] "
          f"wil={metrics.wil:.4f} [{metrics.wil_ci[0]:.4f}, {metrics.wil_ci[1]:.4f}] "
          f"over {metrics.n_pairs} pairs")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonvoice",
        description="Secret-seeded voice identities and their evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-population", help="generate a synthetic speaker population")
    p.add_argument("--config")
    p.add_argument("--speakers", type=int)
    p.add_argument("--utterances", type=int)
    p.add_argument("--dimension", type=int)
    p.add_argument("--sigma-between", dest="sigma_between", type=float)
    p.add_argument("--sigma-within", dest="sigma_within", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="dataset path (.jsonl or .avec)")
    p.add_argument("--truth-out", dest="truth_out", help="ground-truth sidecar JSON")
    p.set_defaults(func=cmd_synth_population)

    p = sub.add_parser("fit-models", help="fit per-gender PCA/GMM models")
    p.add_argument("--config")
    p.add_argument("--dev", help="development dataset (embedding pool)")
    p.add_argument("--training", help="training-voice dataset")
    p.add_argument("--out", help="generator models file (JSON)")
    p.add_argument("--retain", type=float)
    p.add_argument("--components", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_fit_models)

    p = sub.add_parser("gen-identity", help="derive a private identity from a secret")
    p.add_argument("--config")
    p.add_argument("--generator", help="generator models file")
    p.add_argument("--method", choices=ALL_METHOD_NAMES)
    p.add_argument("--gender", choices=("m", "f"))
    p.add_argument("--secret-file", dest="secret_file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_identity)

    p = sub.add_parser("eval-diversity", help="run the diversity evaluation protocol")
    p.add_argument("--config")
    p.add_argument("--dataset", help="natural population dataset (else synthesized)")
    p.add_argument("--generator")
    p.add_argument("--methods", help="comma-separated methods or 'all'")
    p.add_argument("--identities", type=int)
    p.add_argument("--utterances", type=int)
    p.add_argument("--enroll", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_eval_diversity)

    p = sub.add_parser("attack-privacy", help="run the de-anonymization attack")
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--generator")
    p.add_argument("--method", choices=("baseline",) + ALL_METHOD_NAMES)
    p.add_argument("--rounds", type=int)
    p.add_argument("--candidates", type=int)
    p.add_argument("--enroll", type=int)
    p.add_argument("--no-gender-filter", action="store_true")
    p.add_argument("--channel-spread", dest="channel_spread", type=float)
    p.add_argument("--channel-seed", dest="channel_seed", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--round-csv", dest="round_csv")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_attack_privacy, gender_filter=None)

    p = sub.add_parser("attack-auth", help="run the impersonation attack")
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--generator")
    p.add_argument("--method", choices=("baseline",) + ALL_METHOD_NAMES)
    p.add_argument("--strategy", choices=tuple(s.value for s in AuthStrategy))
    p.add_argument("--trials", type=int)
    p.add_argument("--enroll", type=int)
    p.add_argument("--policy", help="'eer' or 'fpr:0.01'")
    p.add_argument("--channel-spread", dest="channel_spread", type=float)
    p.add_argument("--channel-seed", dest="channel_seed", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--trial-csv", dest="trial_csv")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_attack_auth)

    p = sub.add_parser("text-metrics", help="corpus WER/WIL over paired text files")
    p.add_argument("--config")
    p.add_argument("--ref-dir", dest="ref_dir")
    p.add_argument("--hyp-dir", dest="hyp_dir")
    p.add_argument("--out")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_text_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except AnonvoiceError as exc:  # pragma: no cover - base class safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
