"""Versioned prompt templates with `{PLACEHOLDER}` substitution.

Template files carry a small front-matter header (stage, attribute,
version) separated from the body by a `---` line. Each stage admits a
fixed placeholder set, checked at load time so every placeholder is
resolvable at render time. Default templates ship as package data.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

STAGES = ("stage1", "stage2", "stage3")

# Placeholders each stage must use; anything else in a body is an error.
STAGE_PLACEHOLDERS = {
    "stage1": frozenset({"NARRATIVE"}),
    "stage2": frozenset({"NARRATIVE", "S1_RESPONSE"}),
    "stage3": frozenset({"S1_RESPONSE", "S2_RESPONSE", "CATEGORIES"}),
}

_PLACEHOLDER_RE = re.compile(r"\{([A-Z][A-Z0-9_]*)\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    stage: str
    attribute: str  # age | income | education | any
    version: str
    body: str

    @property
    def template_id(self) -> str:
        return f"{self.stage}.{self.attribute}.v{self.version}"

    @property
    def body_sha256(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()

    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER_RE.findall(self.body))

    def validate(self) -> None:
        if self.stage not in STAGES:
            raise TemplateError(f"unknown stage {self.stage!r}")
        expected = STAGE_PLACEHOLDERS[self.stage]
        found = self.placeholders()
        if found != expected:
            raise TemplateError(
                f"{self.template_id}: stage {self.stage} must use placeholders "
                f"{sorted(expected)}, found {sorted(found)}"
            )

    def render(self, **values: str) -> str:
        """Substitute placeholders in a single pass over the body.

        Substituted content is never rescanned, so placeholder-like text
        inside a value cannot trigger a second substitution.
        """

        def replace(match: re.Match) -> str:
            name = match.group(1)
            if name not in values:
                raise TemplateError(f"{self.template_id}: unresolved placeholder {{{name}}}")
            return values[name]

        return _PLACEHOLDER_RE.sub(replace, self.body)


def parse_template_file(text: str, source: str = "<string>") -> PromptTemplate:
    if "\n---\n" not in text:
        raise TemplateError(f"{source}: missing '---' front-matter separator")
    header, body = text.split("\n---\n", 1)
    fields: dict[str, str] = {}
    for line in header.splitlines():
        line = line.strip()
        if not line:
            continue
        if ":" not in line:
            raise TemplateError(f"{source}: bad front-matter line {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    missing = {"stage", "attribute", "version"} - fields.keys()
    if missing:
        raise TemplateError(f"{source}: front matter missing {sorted(missing)}")
    template = PromptTemplate(
        stage=fields["stage"],
        attribute=fields["attribute"],
        version=fields["version"],
        body=body,
    )
    template.validate()
    return template


class TemplateRegistry:
    """Lookup of (stage, attribute) -> template, with 'any' as fallback."""

    def __init__(self, templates: list[PromptTemplate] | None = None):
        self._templates: dict[tuple[str, str], PromptTemplate] = {}
        for t in templates or []:
            self.add(t)

    def add(self, template: PromptTemplate) -> None:
        template.validate()
        key = (template.stage, template.attribute)
        if key in self._templates:
            raise TemplateError(f"duplicate template for stage={key[0]} attribute={key[1]}")
        self._templates[key] = template

    def get(self, stage: str, attribute: str) -> PromptTemplate:
        for key in ((stage, attribute), (stage, "any")):
            if key in self._templates:
                return self._templates[key]
        raise TemplateError(f"no template for stage={stage} attribute={attribute}")

    def template_ids(self, attribute: str) -> dict[str, str]:
        return {stage: self.get(stage, attribute).template_id for stage in STAGES}

    def hashes(self) -> dict[str, str]:
        return {t.template_id: t.body_sha256 for t in self._templates.values()}

    @staticmethod
    def load_dir(path: str | Path) -> "TemplateRegistry":
        registry = TemplateRegistry()
        files = sorted(Path(path).glob("*.txt"))
        if not files:
            raise TemplateError(f"no *.txt templates under {path}")
        for file in files:
            registry.add(parse_template_file(file.read_text(encoding="utf-8"), str(file)))
        return registry

    @staticmethod
    def load_default() -> "TemplateRegistry":
        registry = TemplateRegistry()
        root = resources.files("mobilens").joinpath("data/templates")
        for entry in sorted(root.iterdir(), key=lambda e: e.name):
            if entry.name.endswith(".txt"):
                registry.add(parse_template_file(entry.read_text(encoding="utf-8"), entry.name))
        return registry
