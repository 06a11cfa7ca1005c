"""LLM-assisted translation: prompts, providers, simulated builds, refinement."""
from .build import BuildProvider, RemoteBuild, SimulatedBuild, simulate_build
from .extract import ExtractionError, extract_config
from .prompts import (
    BASIC,
    GUIDELINE,
    ONE_SHOT,
    OUTPUT_CONTROL,
    REFINEMENT,
    GuidelineSet,
    MissingSlotError,
    PromptInstance,
    build_prompt,
    select_one_shot_example,
)
from .providers import (
    FunctionProvider,
    HttpProvider,
    MockProvider,
    ProviderRequest,
    ProviderResponse,
    ProviderTransportError,
)
from .refine import (
    EXHAUSTED,
    FIXED,
    PENDING,
    STRATEGIES,
    BatchResult,
    RefinementState,
    TranslationCase,
    refine_batch,
    run_strategy,
    translate_once,
    truncate_lines,
)

__all__ = [
    "BASIC", "ONE_SHOT", "GUIDELINE", "REFINEMENT", "OUTPUT_CONTROL",
    "GuidelineSet", "MissingSlotError", "PromptInstance", "build_prompt", "select_one_shot_example",
    "ProviderRequest", "ProviderResponse", "ProviderTransportError",
    "MockProvider", "FunctionProvider", "HttpProvider",
    "ExtractionError", "extract_config",
    "BuildProvider", "SimulatedBuild", "RemoteBuild", "simulate_build",
    "PENDING", "FIXED", "EXHAUSTED", "STRATEGIES", "BatchResult", "RefinementState",
    "TranslationCase", "refine_batch", "run_strategy", "translate_once", "truncate_lines",
]
