"""Output protocol: prompt rendering, tag parsing, and the format reward.

Model responses must consist of exactly one ``<think>`` block followed by
exactly one ``<code>`` block.  Only the code block is ever executed; the
think block is free text.  The format reward gives partial credit per tag
that occurs exactly once, plus a bonus when the whole response matches the
strict structural pattern.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

TAGS = ("<think>", "</think>", "<code>", "</code>")

# Strict structural pattern: optional whitespace, one think block, optional
# whitespace, one code block, optional whitespace, and nothing else.  Block
# bodies may not contain any of the four tag literals, so a match implies
# every tag occurs exactly once.
_TAG_LITERAL = r"(?:</?think>|</?code>)"
HARD_PATTERN = re.compile(
    r"\A\s*<think>(?P<think>(?:(?!%(tag)s).)*)</think>\s*"
    r"<code>(?P<code>(?:(?!%(tag)s).)*)</code>\s*\Z" % {"tag": _TAG_LITERAL},
    re.DOTALL,
)

_TEMPLATE_RESOURCE = "prompt_template.txt"


@dataclass(frozen=True)
class ParsedOutput:
    """A schema-conforming response split into its two blocks."""

    think_text: str
    code_text: str
    raw_text: str


@dataclass(frozen=True)
class SchemaViolation:
    """Why a raw response failed the output schema (a value, not an error)."""

    kind: str  # missing_tag | duplicate_tag | wrong_order | extra_content
    tag: str | None
    message: str


@dataclass(frozen=True)
class TagWeights:
    """Weights for the format reward: per-tag credit plus the pattern bonus."""

    per_tag_weight: float = 0.125
    regex_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.per_tag_weight < 0 or self.regex_weight < 0:
            raise ValueError("format reward weights must be nonnegative")

    @property
    def max_reward(self) -> float:
        return len(TAGS) * self.per_tag_weight + self.regex_weight


def prompt_template() -> str:
    """Return the shipped prompt template with its placeholders intact."""
    return (
        resources.files("solvergym.data").joinpath(_TEMPLATE_RESOURCE).read_text("utf-8")
    )


def render_prompt(question: str, solver_id: str) -> str:
    """Instantiate the prompt template for one question and target solver.

    Plain placeholder substitution: ``{solver}`` and ``{Question}`` are
    replaced literally (the template's own braces, e.g. ``{solution value}``,
    survive untouched).
    """
    if not question:
        raise ValueError("question must be non-empty")
    if not solver_id:
        raise ValueError("solver_id must be non-empty")
    template = prompt_template()
    return template.replace("{solver}", solver_id).replace("{Question}", question)


def tag_counts(raw: str) -> dict[str, int]:
    """Non-overlapping literal occurrence count for each of the four tags."""
    return {tag: raw.count(tag) for tag in TAGS}


def parse_output(raw: str) -> ParsedOutput | SchemaViolation:
    """Parse a raw response against the hard schema.

    Total and deterministic: every input yields either a ParsedOutput or a
    SchemaViolation naming the first failed condition.
    """
    match = HARD_PATTERN.fullmatch(raw)
    if match is not None:
        return ParsedOutput(
            think_text=match.group("think"),
            code_text=match.group("code"),
            raw_text=raw,
        )
    return _classify_violation(raw)


def _classify_violation(raw: str) -> SchemaViolation:
    counts = tag_counts(raw)
    for tag in TAGS:
        if counts[tag] == 0:
            return SchemaViolation("missing_tag", tag, f"missing tag {tag}")
    for tag in TAGS:
        if counts[tag] > 1:
            return SchemaViolation(
                "duplicate_tag", tag, f"tag {tag} occurs {counts[tag]} times"
            )
    positions = [raw.index(tag) for tag in TAGS]
    if positions != sorted(positions):
        return SchemaViolation(
            "wrong_order", None, "blocks are not in think-then-code order"
        )
    return SchemaViolation(
        "extra_content", None, "structural content outside the think/code blocks"
    )


def matches_hard_pattern(raw: str) -> bool:
    return HARD_PATTERN.fullmatch(raw) is not None


def format_reward(raw: str, weights: TagWeights = TagWeights()) -> float:
    """Soft tag-count credit plus the hard structural-pattern bonus.

    Each tag occurring exactly once earns ``per_tag_weight``; a full-pattern
    match earns ``regex_weight`` on top.
    """
    counts = tag_counts(raw)
    reward = sum(weights.per_tag_weight for tag in TAGS if counts[tag] == 1)
    if matches_hard_pattern(raw):
        reward += weights.regex_weight
    return reward


def wrap_output(think_text: str, code_text: str) -> str:
    """Compose a schema-conforming raw response from its two blocks."""
    return f"<think>{think_text}</think>\n<code>{code_text}</code>"
