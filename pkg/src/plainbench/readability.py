"""Readability scoring: tokenization, syllable counting, FK grade and SMOG.

All coefficients used by the grade formulas are pinned in the constants
table below.  The syllable counter is a rule-based heuristic (no dictionary
lookup): vowel-group counting with silent-ending handling plus a small set
of add/subtract patterns for vowel clusters the group count gets wrong.
Its agreement against a frozen 200-word reference list is exercised in the
test suite; known disagreements are documented there rather than patched
with per-word hacks.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

# --- constants table -------------------------------------------------------
# Flesch-Kincaid grade = 0.39*(words/sentences) + 11.8*(syllables/words) - 15.59
FK_SENTENCE_LENGTH_WEIGHT = 0.39
FK_SYLLABLE_DENSITY_WEIGHT = 11.8
FK_INTERCEPT = -15.59

# SMOG = 1.0430*sqrt(30*polysyllables/sentences) + 3.1291
SMOG_COEFFICIENT = 1.0430
SMOG_INTERCEPT = 3.1291
SMOG_NORM_SENTENCES = 30  # also the minimum sentence count for full confidence

# A word is polysyllabic at >= 3 syllables.
POLYSYLLABLE_THRESHOLD = 3

VOWELS = "aeiouy"

# --- syllable counting -----------------------------------------------------

# Whole-word overrides where no reasonable orthographic rule applies.
_SYLLABLE_EXCEPTIONS = {
    "people": 2,
    "gastrointestinal": 6,
    "diabetes": 4,
    "rhythm": 2,
    "every": 2,
    "everything": 3,
    "everyone": 3,
    "everybody": 4,
    "evening": 2,
    "language": 2,
    "someone": 2,
    "business": 2,
    "friend": 1,
    "friends": 1,
    "friendly": 2,
}

# Patterns that add one syllable: vowel clusters that the single-group rule
# undercounts (hiatus like "ia" in "bacteria", "io" in "cardiovascular").
_ADD_ONE = [re.compile(p) for p in (
    r"ia",
    r"iu",
    r"ii",
    r"io(?!u)",              # biopsy, cardiovascular; -ious handled below
    r"(?<!g)eo",             # osteo-, video; "geo" in surgeon stays one
    r"(?<![cgxt])iou",       # serious, previous; -cious/-gious/-tious stay one
    r"(?<![gq])ua",          # evaluation, January; guard/quad stay one
    r"(?<![gq])ue(?!s?$)",   # influenza, fuel; silent -ue(s) and gue/que stay
    r"uou",                  # continuous
    r"uie",                  # quiet
    r"riet",                 # variety
    r"rien",                 # nutrient, experience; "friend" is an exception
    r"(?<=[cx])iet",         # society, anxiety
    r"[aeiouy]ing$",         # being, doing, dying
    r"[aeiouy][^aeiouy]+ea$",  # area, idea, trachea; sea/flea unaffected
    r"(?<=[aeiouy])sms?$",   # spasm, metabolism, organisms
    r"^diet",
    r"^poe",
    r"^scien",
    r"^creat[ei]",
    r"^mc",
)]

# Patterns that subtract one syllable: clusters the group rule overcounts
# (mostly -i- that is really a glide, as in "-tion", "-cian", "-sia").
_SUBTRACT_ONE = [re.compile(p) for p in (
    r"cia",                  # physician, special
    r"[stg]ion",             # nation, fusion, region
    r"(?<=[a-z])[ln]ion",    # million, onion; word-initial "lion" unaffected
    r"sian?$",               # anesthesia, asian
    r"tian?$",               # inertia, dalmatian
    r"[vn]ior",              # behavior, senior
    r"(?<=[^aeiouy])ely$",   # lovely, completely; freely unaffected
    r"(?<=[^aeiouy])eful$",  # careful
    r"(?<=[^aeiouy])eness$",  # awareness
    r"(?<=[^aeiouy])ement$",  # movement
)]

_SIBILANT_BEFORE_ES = "sczxgh"  # roses, braces, boxes, wishes, crutches


def _strip_silent_ending(word: str) -> str:
    """Drop word-final spellings that add no syllable (silent e/es/ed)."""
    n = len(word)
    if word.endswith("que") and n > 3:
        return word[:-2]
    if word.endswith("gue") and n > 3 and word[-4] in VOWELS + "n":
        return word[:-2]  # fatigue, league, tongue; argue keeps its -ue
    # -les / -led behave like -le when a consonant precedes the l: the "le"
    # carries a syllable (needles, handled) unlike miles or called.
    if word.endswith("les") and n > 3 and word[-4] not in VOWELS:
        word, n = word[:-1], n - 1
    elif word.endswith("led") and n > 3 and word[-4] not in VOWELS + "l":
        word, n = word[:-1], n - 1
    if word.endswith("ed") and n > 2:
        return word if word[-3] in "td" else word[:-2]  # wanted vs walked
    if word.endswith("es") and n > 2:
        return word if word[-3] in _SIBILANT_BEFORE_ES else word[:-2]
    if word.endswith("e") and n > 1:
        if word.endswith("le") and n > 2 and word[-3] not in VOWELS:
            return word  # table, muscle: consonant + "le" is a syllable
        return word[:-1]
    return word


def _count_alpha_word(word: str) -> int:
    """Syllables in a lowercase all-letter string, minimum 1."""
    override = _SYLLABLE_EXCEPTIONS.get(word)
    if override is not None:
        return override
    stripped = _strip_silent_ending(word)
    count = len(re.findall(f"[{VOWELS}]+", stripped))
    for pat in _ADD_ONE:
        count += len(pat.findall(word))
    for pat in _SUBTRACT_ONE:
        count -= len(pat.findall(word))
    return max(1, count)


def count_syllables(token: str) -> int:
    """Count syllables in one token.

    Tokens with no letters (numbers, bare punctuation survivors) count as a
    single syllable.  Hyphenated words are counted per part; apostrophes are
    ignored ("don't" counts as "dont").
    """
    if not token or not token.strip():
        raise ValueError("cannot count syllables of an empty token")
    parts = re.findall(r"[a-z]+", token.lower().replace("'", "").replace("’", ""))
    if not parts:
        return 1
    return sum(_count_alpha_word(p) for p in parts)


def is_numeric_token(token: str) -> bool:
    """True when the token has no letters; such tokens are never polysyllabic."""
    return not any(c.isalpha() for c in token)


# --- tokenization and sentence segmentation --------------------------------

_EDGE_PUNCT = re.compile(r"^[^0-9A-Za-z]+|[^0-9A-Za-z]+$")


def tokenize(text: str) -> list[str]:
    """Split on whitespace, strip edge punctuation, keep internal hyphens
    and apostrophes.  Pieces left with no alphanumeric character are dropped.
    """
    words = []
    for raw in text.split():
        word = _EDGE_PUNCT.sub("", raw)
        if word:
            words.append(word)
    return words


# Tokens (sans trailing period) that do not end a sentence.  Single-letter
# initials are guarded separately.
_ABBREVIATIONS = {
    "e.g", "i.e", "vs", "etc", "cf", "ca", "al", "approx",
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr",
    "fig", "figs", "no", "nos", "vol", "eq", "ref", "resp",
}

_TERMINATOR = re.compile(r"[.!?]+")
_BOUNDARY_FOLLOW = re.compile(r"\s+[\"'“‘(\[]*[A-Z0-9]")


def _is_abbreviation(before: str) -> bool:
    m = re.search(r"[A-Za-z][A-Za-z.]*$", before)
    if not m:
        return False
    token = m.group(0).rstrip(".").lower()
    return len(token) == 1 or token in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Segment into sentences on ., !, ? followed by whitespace plus a
    capital or digit (or end of text), with an abbreviation guard.

    Decimal points never split: the character after them is a digit with no
    intervening whitespace.
    """
    boundaries = []
    for m in _TERMINATOR.finditer(text):
        rest = text[m.end():]
        if rest.strip():
            if not _BOUNDARY_FOLLOW.match(rest):
                continue
            if "." in m.group(0) and _is_abbreviation(text[:m.start()]):
                continue
        boundaries.append(m.end())
    sentences = []
    start = 0
    for end in boundaries:
        piece = text[start:end].strip()
        if re.search(r"\w", piece):
            sentences.append(piece)
        start = end
    tail = text[start:].strip()
    if re.search(r"\w", tail):
        sentences.append(tail)
    return sentences


# --- statistics and grade formulas -----------------------------------------

@dataclass(frozen=True)
class TextStats:
    """Raw counts backing the readability formulas."""
    sentence_count: int
    word_count: int
    syllable_count: int
    polysyllable_count: int

    def __post_init__(self):
        if min(self.sentence_count, self.word_count,
               self.syllable_count, self.polysyllable_count) < 0:
            raise ValueError("counts must be non-negative")
        if self.syllable_count < self.word_count:
            raise ValueError("every word has at least one syllable")
        if self.polysyllable_count > self.word_count:
            raise ValueError("polysyllable count cannot exceed word count")


@dataclass(frozen=True)
class ReadabilityScore:
    fk_grade: float
    smog_index: float
    smog_low_confidence: bool
    stats: TextStats


def text_statistics(text: str) -> TextStats:
    """Tokenize, segment and count.  Raises ValueError on text without words."""
    words = tokenize(text)
    if not words:
        raise ValueError("text contains no words")
    syllables = 0
    polysyllables = 0
    for word in words:
        n = count_syllables(word)
        syllables += n
        if n >= POLYSYLLABLE_THRESHOLD and not is_numeric_token(word):
            polysyllables += 1
    sentences = split_sentences(text)
    return TextStats(
        sentence_count=max(1, len(sentences)),
        word_count=len(words),
        syllable_count=syllables,
        polysyllable_count=polysyllables,
    )


def fk_grade(stats: TextStats) -> float:
    """Flesch-Kincaid grade level.  Unclamped: short simple text goes negative."""
    if stats.word_count == 0 or stats.sentence_count == 0:
        raise ValueError("FK grade needs at least one word and one sentence")
    return (FK_SENTENCE_LENGTH_WEIGHT * (stats.word_count / stats.sentence_count)
            + FK_SYLLABLE_DENSITY_WEIGHT * (stats.syllable_count / stats.word_count)
            + FK_INTERCEPT)


def smog_index(stats: TextStats) -> tuple[float, bool]:
    """SMOG grade and a low-confidence flag for texts under 30 sentences."""
    if stats.sentence_count == 0:
        raise ValueError("SMOG needs at least one sentence")
    value = (SMOG_COEFFICIENT
             * math.sqrt(SMOG_NORM_SENTENCES
                         * stats.polysyllable_count / stats.sentence_count)
             + SMOG_INTERCEPT)
    return value, stats.sentence_count < SMOG_NORM_SENTENCES


def score_text(text: str) -> ReadabilityScore:
    """One-stop scoring used by the evaluation layer."""
    stats = text_statistics(text)
    smog, low_confidence = smog_index(stats)
    return ReadabilityScore(
        fk_grade=fk_grade(stats),
        smog_index=smog,
        smog_low_confidence=low_confidence,
        stats=stats,
    )
