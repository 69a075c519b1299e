"""Command-line entry points: transcribe, evaluate, conformance."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import conformance
from .outputs import emit_outputs, write_evaluation_outputs, write_run_manifest
from .pipeline import (
    CHUNKING_MODES,
    UNCERTAINTY_MODES,
    PipelineBackends,
    PipelineConfig,
    evaluate_corpus,
    run_pipeline,
)

_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}

_ENDPOINT_ROLES = ("vad", "ast", "asr", "asr_extra", "asr_tta", "lm")


def parse_config_file(path) -> dict:
    """Plain ``key = value`` lines; '#' starts a comment; keys mirror PipelineConfig."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _coerce(key: str, value: str):
    if key in ("ast_filter", "flag_deletes", "tta_refine"):
        try:
            return _BOOL_WORDS[value.lower()]
        except KeyError:
            raise ValueError(f"{key}: cannot parse boolean {value!r}") from None
    if key in ("stretch_up", "stretch_down", "workers", "lm_lookahead", "lm_group_max"):
        return int(value)
    if key in (
        "score_threshold",
        "max_chunk_s",
        "merge_gap_s",
        "onset",
        "offset",
        "min_on_s",
        "min_off_s",
        "ast_threshold",
    ):
        return float(value)
    if key == "speech_labels":
        return tuple(part.strip() for part in value.split("|") if part.strip())
    return value


def build_config(args) -> PipelineConfig:
    values: dict = {}
    endpoints: dict = {}
    if getattr(args, "config", None):
        for key, raw in parse_config_file(args.config).items():
            if key in _ENDPOINT_ROLES:
                endpoints[key] = raw
            else:
                values[key] = _coerce(key, raw)
    if getattr(args, "chunking", None):
        values["chunking"] = args.chunking
    if getattr(args, "no_ast", False):
        values["ast_filter"] = False
    if getattr(args, "uncertainty", None):
        values["uncertainty"] = args.uncertainty
    if getattr(args, "score_threshold", None) is not None:
        values["score_threshold"] = args.score_threshold
    if getattr(args, "workers", None) is not None:
        values["workers"] = args.workers
    for role in _ENDPOINT_ROLES:
        flag = getattr(args, role, None)
        if flag:
            endpoints[role] = flag
    values["endpoints"] = endpoints
    return PipelineConfig(**values)


def _add_shared_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file mirroring PipelineConfig")
    p.add_argument("--chunking", choices=CHUNKING_MODES)
    p.add_argument("--no-ast", action="store_true", help="disable chunk filtering")
    p.add_argument("--uncertainty", choices=UNCERTAINTY_MODES)
    p.add_argument("--score-threshold", type=float, dest="score_threshold")
    p.add_argument("--workers", type=int)
    for role in _ENDPOINT_ROLES:
        p.add_argument(
            f"--{role.replace('_', '-')}",
            dest=role,
            metavar="ENDPOINT",
            help=f"{role} backend endpoint (mock:energy, script:FILE, cmd:COMMAND, ...)",
        )


def cmd_transcribe(args) -> int:
    config = build_config(args)
    backends = PipelineBackends.from_config(config)
    try:
        result = run_pipeline(args.audio, config, backends)
    finally:
        backends.close()
    suffix = {"text": ".txt", "json": ".json", "html": ".html"}[args.format]
    out_path = Path(args.output) if args.output else Path(args.audio).with_suffix(suffix)
    # transcript files stay invariant across reruns and worker counts; the
    # manifest carries config, versions and timing
    emit_outputs(result.transcription, result.mask, args.format, out_path)
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    write_run_manifest(
        manifest_path,
        config,
        result.timing,
        inputs={"audio": str(args.audio)},
        outputs={"transcript": str(out_path), "format": args.format},
    )
    print(f"wrote {out_path} ({len(result.transcription.words)} words) and {manifest_path}")
    return 0


def _load_manifest(path):
    doc = json.loads(Path(path).read_text("utf-8"))
    items = []
    base = Path(path).parent
    for entry in doc["items"]:
        audio = base / entry["audio"] if not Path(entry["audio"]).is_absolute() else Path(entry["audio"])
        if "ref_text" in entry:
            ref_words = entry["ref_text"].split()
        elif "ref" in entry:
            ref_path = base / entry["ref"] if not Path(entry["ref"]).is_absolute() else Path(entry["ref"])
            if not ref_path.exists():
                raise FileNotFoundError(f"reference transcript missing: {ref_path}")
            ref_words = ref_path.read_text("utf-8").split()
        else:
            raise ValueError(f"manifest entry for {entry['audio']} lacks 'ref' or 'ref_text'")
        items.append((audio, ref_words))
    return items


def cmd_evaluate(args) -> int:
    config = build_config(args)
    backends = PipelineBackends.from_config(config)
    items = _load_manifest(args.manifest)
    try:
        result = evaluate_corpus(items, config, backends)
    finally:
        backends.close()
    out_dir = Path(args.output_dir) if args.output_dir else Path(args.manifest).parent / "eval_out"
    report_path, csv_path = write_evaluation_outputs(result, out_dir)
    print(f"mean WER {result.mean_wer:.4f} over {len(result.files)} file(s)")
    print(
        f"timing seconds: max {result.timing_max:.3f} "
        f"average {result.timing_average:.3f} median {result.timing_median:.3f}"
    )
    print(f"wrote {report_path} and {csv_path}")
    return 0


def cmd_conformance(args) -> int:
    return conformance.main(args.command)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="longscribe",
        description="Long-form speech transcription with word-level uncertainty.",
    )
    sub = parser.add_subparsers(dest="command_name", required=True)

    p_tr = sub.add_parser("transcribe", help="transcribe one audio file")
    p_tr.add_argument("audio", help="input WAV (PCM16)")
    p_tr.add_argument("--format", choices=("text", "json", "html"), default="text")
    p_tr.add_argument("--output", help="output path (default: alongside the input)")
    _add_shared_flags(p_tr)
    p_tr.set_defaults(func=cmd_transcribe)

    p_ev = sub.add_parser("evaluate", help="run a manifest of audio/reference pairs")
    p_ev.add_argument("manifest", help="JSON manifest: {\"items\": [{\"audio\", \"ref\"|\"ref_text\"}]}")
    p_ev.add_argument("--output-dir", dest="output_dir")
    _add_shared_flags(p_ev)
    p_ev.set_defaults(func=cmd_evaluate)

    p_cf = sub.add_parser("conformance", help="validate an adapter against the wire protocol")
    p_cf.add_argument("command", nargs=argparse.REMAINDER, help="adapter command (prefix with --)")
    p_cf.set_defaults(func=cmd_conformance)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
