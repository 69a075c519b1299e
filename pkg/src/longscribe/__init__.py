"""Long-form speech transcription engine with word-level uncertainty."""

__version__ = "0.1.0"

from .audio import AudioBuffer, mix_noise, read_wav, resample_to, stretch, write_wav
from .segmentation import (
    Chunk,
    FrameProbSeries,
    SpeechSegment,
    binarize,
    cut_and_merge,
    frame_probs,
    smooth,
    uniform_chunks,
)
from .filtering import classify_chunk, filter_chunks
from .recognition import (
    TokenPiece,
    Transcription,
    Word,
    group_tokens_into_words,
    recognize,
    word_score,
)
from .alignment import (
    DiffOp,
    EditScript,
    align,
    drop_script_mismatch_diffs,
    lm_validate,
    refine,
)
from .uncertainty import (
    UncertaintyMask,
    ensemble_masks,
    mask_from_disagreement,
    mask_from_scores,
    mask_from_tta,
)
from .metrics import (
    EvalReport,
    UncertaintyPoint,
    evaluate_transcript,
    score_sweep,
    uncertainty_report,
    wer,
    word_error_targets,
)
from .pipeline import (
    PipelineBackends,
    PipelineConfig,
    PipelineResult,
    TimingReport,
    evaluate_corpus,
    run_pipeline,
)
