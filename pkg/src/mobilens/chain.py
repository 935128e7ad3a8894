"""Three-stage reasoning chains over weekly narratives, with ablations.

A chain runs stage1 -> stage2 -> stage3 strictly in order, feeding each
stage's raw response forward. Ablation variants replace a removed
stage's slot with a fixed sentinel line instead of restructuring the
downstream prompts, so a variant differs from the full chain only in
content. Transcripts capture every prompt, response, and template id for
audit and replay.
"""

from __future__ import annotations

import datetime as dt
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .backend import Backend, BackendConfig, BackendError, CompletionRequest
from .categories import ATTRIBUTES, CategoryConfig, DEFAULT_CATEGORIES
from .templates import TemplateRegistry

VARIANTS = ("full", "no_s1", "no_s2")

SENTINELS = {
    "stage1": "Stage 1 analysis unavailable.",
    "stage2": "Stage 2 analysis unavailable.",
}

_STAGES_BY_VARIANT = {
    "full": ("stage1", "stage2", "stage3"),
    "no_s1": ("stage2", "stage3"),
    "no_s2": ("stage1", "stage3"),
}


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class StageRecord:
    """One executed stage: exact prompt, raw response, and call metadata."""

    prompt: str
    response: str
    model: str
    temperature: float
    max_tokens: int
    latency_ms: float
    started_ns: int
    request_id: str


@dataclass
class StageTranscript:
    """Append-only record of one (agent, attribute, variant) chain."""

    agent_id: str
    attribute: str
    variant: str
    stages: dict[str, StageRecord] = field(default_factory=dict)
    template_ids: dict[str, str] = field(default_factory=dict)
    template_hashes: dict[str, str] = field(default_factory=dict)
    status: str = "ok"  # ok | failed
    failed_stage: str | None = None
    error: str | None = None
    created_at: str = ""
    run_config: dict | None = None

    def stage3_response(self) -> str | None:
        record = self.stages.get("stage3")
        return record.response if record else None

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "attribute": self.attribute,
            "variant": self.variant,
            "stages": {
                name: {
                    "prompt": r.prompt,
                    "response": r.response,
                    "model": r.model,
                    "temperature": r.temperature,
                    "max_tokens": r.max_tokens,
                    "latency_ms": r.latency_ms,
                    "started_ns": r.started_ns,
                    "request_id": r.request_id,
                }
                for name, r in self.stages.items()
            },
            "template_ids": self.template_ids,
            "template_hashes": self.template_hashes,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "created_at": self.created_at,
            "run_config": self.run_config,
        }

    @staticmethod
    def from_dict(raw: dict) -> "StageTranscript":
        transcript = StageTranscript(
            agent_id=raw["agent_id"],
            attribute=raw["attribute"],
            variant=raw["variant"],
            template_ids=dict(raw.get("template_ids", {})),
            template_hashes=dict(raw.get("template_hashes", {})),
            status=raw.get("status", "ok"),
            failed_stage=raw.get("failed_stage"),
            error=raw.get("error"),
            created_at=raw.get("created_at", ""),
            run_config=raw.get("run_config"),
        )
        for name, r in raw.get("stages", {}).items():
            transcript.stages[name] = StageRecord(**r)
        return transcript

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    @staticmethod
    def load(path: str | Path) -> "StageTranscript":
        return StageTranscript.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def render_categories(attribute: str, categories: CategoryConfig | None = None) -> str:
    """The bullet list of category names substituted into stage-3 prompts."""
    cats = categories or DEFAULT_CATEGORIES
    return "\n".join(f"- {name}" for name in cats.display(attribute))


def build_stage1_prompt(narrative: str, registry: TemplateRegistry, attribute: str = "any") -> str:
    if not narrative:
        raise ChainError("narrative must be non-empty")
    return registry.get("stage1", attribute).render(NARRATIVE=narrative)


def build_stage2_prompt(
    narrative: str,
    s1_response: str | None,
    registry: TemplateRegistry,
    attribute: str = "any",
) -> str:
    if not narrative:
        raise ChainError("narrative must be non-empty")
    return registry.get("stage2", attribute).render(
        NARRATIVE=narrative,
        S1_RESPONSE=s1_response if s1_response else SENTINELS["stage1"],
    )


def build_stage3_prompt(
    attribute: str,
    s1_response: str | None,
    s2_response: str | None,
    registry: TemplateRegistry,
    categories: CategoryConfig | None = None,
    narrative: str | None = None,
) -> str:
    """Final-stage prompt from the two upstream responses (sentinels when ablated).

    `narrative` is only appended when the experimental re-append switch is
    on; by default the final stage sees the staged responses alone.
    """
    if attribute not in ATTRIBUTES:
        raise ChainError(f"unknown attribute {attribute!r}")
    prompt = registry.get("stage3", attribute).render(
        S1_RESPONSE=s1_response if s1_response else SENTINELS["stage1"],
        S2_RESPONSE=s2_response if s2_response else SENTINELS["stage2"],
        CATEGORIES=render_categories(attribute, categories),
    )
    if narrative:
        prompt += f"\n\nOriginal narrative for reference:\n{narrative}"
    return prompt


def run_chain(
    narrative: str,
    agent_id: str,
    attribute: str,
    variant: str,
    backend: Backend,
    registry: TemplateRegistry | None = None,
    backend_config: BackendConfig | None = None,
    categories: CategoryConfig | None = None,
    include_narrative_in_stage3: bool = False,
    run_config: dict | None = None,
) -> StageTranscript:
    """Execute one chain; on backend failure the transcript is marked and
    later stages are skipped (the caller decides how to score the agent)."""
    if variant not in VARIANTS:
        raise ChainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    registry = registry or TemplateRegistry.load_default()
    config = backend_config or BackendConfig()

    transcript = StageTranscript(
        agent_id=agent_id,
        attribute=attribute,
        variant=variant,
        created_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        run_config=run_config,
    )
    for stage in _STAGES_BY_VARIANT[variant]:
        template = registry.get(stage, attribute)
        transcript.template_ids[stage] = template.template_id
        transcript.template_hashes[stage] = template.body_sha256

    responses: dict[str, str] = {}
    last_started = 0
    for stage in _STAGES_BY_VARIANT[variant]:
        if stage == "stage1":
            prompt = build_stage1_prompt(narrative, registry, attribute)
        elif stage == "stage2":
            prompt = build_stage2_prompt(narrative, responses.get("stage1"), registry, attribute)
        else:
            prompt = build_stage3_prompt(
                attribute,
                responses.get("stage1"),
                responses.get("stage2"),
                registry,
                categories,
                narrative=narrative if include_narrative_in_stage3 else None,
            )
        request = CompletionRequest(
            model=config.model,
            messages=(("user", prompt),),
            temperature=config.temperature,
            max_tokens=config.max_tokens,
        )
        started_ns = max(time.monotonic_ns(), last_started + 1)
        last_started = started_ns
        t0 = time.perf_counter()
        try:
            response = backend.complete(request)
        except BackendError as exc:
            transcript.status = "failed"
            transcript.failed_stage = stage
            transcript.error = str(exc)
            return transcript
        transcript.stages[stage] = StageRecord(
            prompt=prompt,
            response=response,
            model=config.model,
            temperature=config.temperature,
            max_tokens=config.max_tokens,
            latency_ms=(time.perf_counter() - t0) * 1000.0,
            started_ns=started_ns,
            request_id=request.request_id,
        )
        responses[stage] = response
    return transcript
