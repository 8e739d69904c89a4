"""Agent prompt texts, rendered from versioned template files."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..errors import DomainError

TEMPLATE_VERSION = "1"
ROLES = ("initializer", "critic", "scorer")


@dataclass(frozen=True)
class PromptText:
    role: str
    text: str
    m: int | None = None
    k: int | None = None


@lru_cache(maxsize=None)
def template(role: str) -> str:
    return resources.files(__package__).joinpath("templates", f"{role}.txt").read_text(encoding="utf-8")


def template_hashes() -> dict[str, str]:
    """sha256 of each template file, recorded in run manifests."""
    return {role: hashlib.sha256(template(role).encode("utf-8")).hexdigest() for role in ROLES}


def _format_lines(m: int) -> str:
    return "".join(f"Salesman{i}: Depot-Node1-Node2-...-Depot\n" for i in range(1, m + 1))


def _route_prompt(role: str, m: int) -> PromptText:
    if m < 1:
        raise DomainError(f"salesman count must be >= 1, got {m}")
    text = template(role).format(num_salesmen=m, format_lines=_format_lines(m))
    return PromptText(role, text, m=m)


def initializer_prompt(m: int) -> PromptText:
    return _route_prompt("initializer", m)


def critic_prompt(m: int) -> PromptText:
    return _route_prompt("critic", m)


def _score_list(k: int) -> str:
    if k <= 3:
        return ", ".join(f"image{i}: score" for i in range(1, k + 1))
    return f"image1: score, image2: score, ..., image{k}: score"


def scorer_prompt(k: int = 7) -> PromptText:
    if k < 2:
        raise DomainError(f"scorer needs at least 2 images, got {k}")
    text = template("scorer").format(num_images=k, score_list=_score_list(k))
    return PromptText("scorer", text, k=k)
