"""Transcript serialization (text / JSON / HTML) and run manifests.

The transcript JSON is fully deterministic for a given transcription and
config: keys are emitted in a fixed order and no wall-clock data is
included.  Timing lives in the run manifest written next to the output.
"""

from __future__ import annotations

import csv
import html
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from . import _kernels

FORMATS = ("text", "json", "html")


def transcript_text(transcription) -> str:
    return " ".join(w.text for w in transcription.words)


def transcript_dict(transcription, mask=None, config=None, timing=None) -> dict:
    words = []
    flags = mask.flags if mask is not None else None
    if flags is not None and len(flags) != len(transcription.words):
        raise ValueError(
            f"mask covers {len(flags)} words, transcript has {len(transcription.words)}"
        )
    for i, w in enumerate(transcription.words):
        entry = {"text": w.text}
        if w.start_s is not None:
            entry["start_s"] = round(w.start_s, 6)
        if w.end_s is not None:
            entry["end_s"] = round(w.end_s, 6)
        entry["score"] = w.score
        if flags is not None:
            entry["uncertain"] = bool(flags[i])
        words.append(entry)
    doc = {"words": words}
    if mask is not None:
        doc["uncertainty"] = {
            "method": mask.method,
            "uncertain_words": int(np.count_nonzero(mask.flags)),
        }
    if config is not None:
        doc["config"] = config.to_dict()
    if timing is not None:
        doc["timing"] = {
            "stage_seconds": {k: round(v, 6) for k, v in timing.stage_seconds.items()},
            "total_seconds": round(timing.total_seconds, 6),
        }
    return doc


def transcript_json(transcription, mask=None, config=None, timing=None) -> str:
    return json.dumps(
        transcript_dict(transcription, mask, config, timing), ensure_ascii=False, indent=2
    )


def transcript_html(transcription, mask=None) -> str:
    flags = mask.flags if mask is not None else [False] * len(transcription.words)
    if len(flags) != len(transcription.words):
        raise ValueError("mask length does not match the transcript")
    rendered = []
    for w, uncertain in zip(transcription.words, flags):
        text = html.escape(w.text)
        rendered.append(f"<mark>{text}</mark>" if uncertain else text)
    body = " ".join(rendered)
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        "<style>mark { background: #ffd54d; }</style>\n</head>\n"
        f"<body>\n<p>{body}</p>\n</body>\n</html>\n"
    )


def emit_outputs(transcription, mask, fmt: str, path, config=None) -> Path:
    """Write the transcript in the requested format; returns the path."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    path = Path(path)
    if fmt == "text":
        content = transcript_text(transcription) + "\n"
    elif fmt == "json":
        content = transcript_json(transcription, mask, config) + "\n"
    else:
        content = transcript_html(transcription, mask)
    path.write_text(content, encoding="utf-8")
    return path


def parse_transcript_json(text: str):
    """Round-trip helper: word texts, scores and uncertain flags from JSON."""
    doc = json.loads(text)
    words = [w["text"] for w in doc["words"]]
    scores = [w["score"] for w in doc["words"]]
    flags = [w.get("uncertain") for w in doc["words"]]
    return words, scores, flags


def version_stamp() -> dict:
    return {
        "longscribe": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba_kernels": bool(_kernels.HAVE_NUMBA),
    }


def write_run_manifest(path, config, timing, inputs: dict, outputs: dict) -> Path:
    """Machine-readable record of one run: config, versions, timing, files."""
    doc = {
        "inputs": inputs,
        "outputs": outputs,
        "config": config.to_dict(),
        "versions": version_stamp(),
        "timing": {
            "stage_seconds": {k: round(v, 6) for k, v in timing.stage_seconds.items()},
            "total_seconds": round(timing.total_seconds, 6),
        },
    }
    path = Path(path)
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def write_evaluation_outputs(result, out_dir) -> tuple:
    """Evaluation report as JSON plus uncertainty points as CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "files": [
            {
                "audio": f.audio,
                "wer": f.report.wer,
                "n_ref_words": f.report.n_ref_words,
                "n_hyp_words": f.report.n_hyp_words,
                "missed_ref_words": f.report.missed_ref_words,
                "uncertainty_ratio": f.point.uncertainty_ratio if f.point else None,
                "error_recall": f.point.error_recall if f.point else None,
                "semantic_score": f.semantic_score,
                "total_seconds": round(f.total_seconds, 6),
            }
            for f in result.files
        ],
        "aggregate": {
            "mean_wer": result.mean_wer,
            "mean_semantic_score": result.mean_semantic_score,
            "timing": {
                "max": round(result.timing_max, 6),
                "average": round(result.timing_average, 6),
                "median": round(result.timing_median, 6),
            },
        },
    }
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, ensure_ascii=False, indent=2) + "\n", "utf-8")

    csv_path = out_dir / "uncertainty_points.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["audio", "uncertainty_ratio", "error_recall"])
        for fe in result.files:
            if fe.point is not None:
                writer.writerow([fe.audio, fe.point.uncertainty_ratio, fe.point.error_recall])
    return report_path, csv_path
