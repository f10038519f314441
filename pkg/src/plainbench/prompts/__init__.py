"""Prompt asset registry: canonical texts, integrity checks, rendering.

The five canonical assets (system, baseline, guidelines, student_persona,
integration) are the adaptation prompt set used verbatim by the strategies.
Their checksums are pinned in assets/CHECKSUMS and verified on first load,
so silent prompt drift fails loudly.  repair_reminder is workbench-authored
glue text (the corrective message sent after an unparseable reply) and is
not part of the pinned set.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

CANONICAL_ASSETS = ("system", "baseline", "guidelines",
                    "student_persona", "integration")
AUXILIARY_ASSETS = ("repair_reminder",)

# The baseline prompt refers to guidelines "provided below" under this
# heading; rendering appends the guidelines text beneath it.
GUIDELINES_MARKER = "##Adaptation guidelines##"

_REQUIRED_PLACEHOLDERS: dict[str, tuple[str, ...]] = {
    "baseline": ("guidelines",),
}


class PromptIntegrityError(RuntimeError):
    """A canonical prompt asset does not match its pinned checksum."""


@dataclass(frozen=True)
class PromptAsset:
    id: str
    text: str
    required_placeholders: tuple[str, ...]


_cache: dict[str, PromptAsset] = {}
_verified = False


def _read_asset_file(name: str) -> str:
    ref = resources.files(__package__) / "assets" / name
    return ref.read_text(encoding="utf-8")


def _canonical_text(raw: str) -> str:
    # trailing-newline differences between editors must not change identity
    return raw.rstrip("\n")


def checksum(asset_id: str) -> str:
    return hashlib.sha256(asset_text(asset_id).encode("utf-8")).hexdigest()


def pinned_checksums() -> dict[str, str]:
    pins = {}
    for line in _read_asset_file("CHECKSUMS").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        digest, name = line.split()
        pins[name] = digest
    return pins


def verify_checksums() -> dict[str, str]:
    """Compare every canonical asset against its pin; raise on any mismatch."""
    pins = pinned_checksums()
    actual = {}
    for asset_id in CANONICAL_ASSETS:
        digest = checksum(asset_id)
        actual[asset_id] = digest
        if asset_id not in pins:
            raise PromptIntegrityError(f"no pinned checksum for {asset_id!r}")
        if pins[asset_id] != digest:
            raise PromptIntegrityError(
                f"prompt asset {asset_id!r} has drifted: "
                f"pinned {pins[asset_id][:12]}…, actual {digest[:12]}…")
    return actual


def asset(asset_id: str) -> PromptAsset:
    global _verified
    if asset_id not in CANONICAL_ASSETS + AUXILIARY_ASSETS:
        raise KeyError(f"unknown prompt asset: {asset_id!r}")
    if asset_id not in _cache:
        _cache[asset_id] = PromptAsset(
            id=asset_id,
            text=_canonical_text(_read_asset_file(f"{asset_id}.txt")),
            required_placeholders=_REQUIRED_PLACEHOLDERS.get(asset_id, ()),
        )
    if not _verified:
        _verified = True  # set first: verify_checksums() loads assets itself
        verify_checksums()
    return _cache[asset_id]


def asset_text(asset_id: str) -> str:
    if asset_id not in CANONICAL_ASSETS + AUXILIARY_ASSETS:
        raise KeyError(f"unknown prompt asset: {asset_id!r}")
    if asset_id in _cache:
        return _cache[asset_id].text
    return _canonical_text(_read_asset_file(f"{asset_id}.txt"))


def render_prompt(asset_id: str, bindings: dict[str, str] | None = None) -> str:
    """Substitute placeholder bindings into an asset.

    Assets without placeholders render byte-identical to their canonical
    text (and reject stray bindings).  The baseline asset requires a
    "guidelines" binding, appended under the ##Adaptation guidelines##
    heading the prompt refers to.
    """
    a = asset(asset_id)
    bindings = dict(bindings or {})
    for name in a.required_placeholders:
        if name not in bindings:
            raise ValueError(f"missing placeholder {name!r} for asset {asset_id!r}")
    unexpected = set(bindings) - set(a.required_placeholders)
    if unexpected:
        raise ValueError(f"unexpected bindings for {asset_id!r}: {sorted(unexpected)}")
    if asset_id == "baseline":
        return (a.text + "\n\n" + GUIDELINES_MARKER + "\n\n"
                + bindings["guidelines"])
    return a.text


def render_baseline_prompt() -> str:
    """The baseline prompt with the canonical guidelines injected."""
    return render_prompt("baseline", {"guidelines": asset_text("guidelines")})
