"""Tweet cleaning and stemming.

Order of operations: URLs become ``<url>``, emoji glyphs are removed, text is
lowercased, punctuation and symbols are stripped (keeping a word-initial
``#``/``@`` when hashtags/mentions are kept), whitespace collapses, and
finally, in :func:`preprocess_text` only, ASCII words are Porter-stemmed.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import asdict, dataclass, replace

from .porter import porter_stem

logger = logging.getLogger(__name__)

URL_TOKEN = "<url>"
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleanConfig:
    lowercase: bool
    strip_punctuation: bool
    keep_hashtags: bool
    keep_mentions: bool
    enable_stemming: bool
    collapse_whitespace: bool

    @classmethod
    def default(cls) -> "CleanConfig":
        return cls(
            lowercase=True,
            strip_punctuation=True,
            keep_hashtags=True,
            keep_mentions=True,
            enable_stemming=True,
            collapse_whitespace=True,
        )

    @classmethod
    def identity(cls) -> "CleanConfig":
        return cls(False, False, True, True, False, False)

    def with_(self, **changes) -> "CleanConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CleanConfig":
        return cls(**d)


def is_emoji_char(ch: str) -> bool:
    cp = ord(ch)
    if cp in (0x200D, 0x20E3) or 0xFE00 <= cp <= 0xFE0F:
        return True
    if 0x1F000 <= cp <= 0x1FAFF or 0x2600 <= cp <= 0x27BF or 0xE0020 <= cp <= 0xE007F:
        return True
    return unicodedata.category(ch) == "So"


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def _strip_token(tok: str, cfg: CleanConfig) -> list[str]:
    marker = ""
    if tok[0] == "#" and cfg.keep_hashtags or tok[0] == "@" and cfg.keep_mentions:
        marker = tok[0]
    body = tok.lstrip(marker) if marker else tok
    body = body.replace("'", "").replace("’", "")
    body = "".join(" " if _is_punct(c) else c for c in body)
    parts = body.split()
    if marker:
        if not parts:
            return []
        parts[0] = marker + parts[0]
    return parts


def clean_text(text: str, config: CleanConfig) -> str:
    """Normalize one tweet body. Idempotent for every configuration."""
    if not text:
        return ""
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = "".join(c for c in text if not is_emoji_char(c))
    if config.lowercase:
        text = text.lower()
    tokens = text.split()
    if not config.keep_hashtags:
        tokens = [t for t in tokens if not t.startswith("#")]
    if not config.keep_mentions:
        tokens = [t for t in tokens if not t.startswith("@")]
    if config.strip_punctuation:
        out = []
        for tok in tokens:
            if tok.lower() == URL_TOKEN:
                out.append(tok)
            else:
                out.extend(_strip_token(tok, config))
        tokens = out
        return " ".join(tokens)
    if config.collapse_whitespace:
        return " ".join(tokens)
    # Removed tokens are not re-joined, so rebuild from the surviving text.
    if not config.keep_hashtags or not config.keep_mentions:
        return " ".join(tokens)
    return text.strip()


def stem_token(tok: str) -> str:
    marker = tok[0] if tok[:1] in ("#", "@") else ""
    body = tok[len(marker):]
    if body and body.isascii() and body.isalpha() and body.islower():
        return marker + porter_stem(body)
    return tok


def preprocess_text(text: str, config: CleanConfig) -> str:
    cleaned = clean_text(text, config)
    if config.enable_stemming and cleaned:
        cleaned = " ".join(stem_token(t) for t in cleaned.split(" ") if t)
    return cleaned


def preprocess_corpus(records, config: CleanConfig):
    """Clean (and optionally stem) every record; records that end up empty are dropped."""
    from .data import RawTweetRecord

    out = []
    dropped = 0
    for r in records:
        text = preprocess_text(r.text, config)
        if not text:
            dropped += 1
            continue
        out.append(RawTweetRecord(text=text, label=r.label, id=r.id))
    if dropped:
        logger.info("preprocess: dropped %d records with empty cleaned text", dropped)
    return out
