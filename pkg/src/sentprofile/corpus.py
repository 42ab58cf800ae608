"""Ingestion and cleaning of the two labeled corpora.

Target domain: micro-blog users, one JSONL record per user with gender and
pre-segmented posts. Source domain: short reviews with a positive/negative
polarity label. Cleaning removes stopwords, hyperlinks and tokens without
any letter or ideograph; a user's cleaned posts concatenate into a single
virtual document.
"""

import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    DataError,
    DuplicateKeyError,
    EmptyDocumentError,
    ParseError,
    SchemaError,
)

logger = logging.getLogger(__name__)

GENDERS = ("male", "female")
POLARITIES = ("positive", "negative")


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    gender: str
    posts: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class SourceReview:
    review_id: str
    tokens: tuple[str, ...]
    polarity: str


@dataclass(frozen=True)
class VirtualDocument:
    """All of one user's cleaned posts flattened into a single token stream."""

    user_id: str
    gender: str
    tokens: tuple[str, ...]
    token_count: int


class TokenDocument(NamedTuple):
    """Ad-hoc document wrapper for APIs that take anything with tokens."""

    doc_id: str
    tokens: tuple[str, ...]


def document_id(doc) -> str:
    for attr in ("user_id", "review_id", "doc_id"):
        value = getattr(doc, attr, None)
        if value is not None:
            return value
    raise AttributeError(f"{type(doc).__name__} carries no document id")


def _parse_line(line: str, number: int):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", number)
    if not isinstance(record, dict):
        raise ParseError("record is not a JSON object", number)
    return record


def _require(record: dict, field: str, number: int):
    if field not in record:
        raise SchemaError(f"missing field {field!r}", number)
    return record[field]


def _check_token_list(value, field: str, number: int) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
        raise SchemaError(f"field {field!r} must be a list of strings", number)
    return tuple(value)


def load_user_records(path) -> list[UserRecord]:
    """Load target-domain users from JSONL.

    Empty posts are dropped at ingestion; a record left without any
    non-empty post is rejected. Duplicate user_id is an error.
    """
    records: list[UserRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, number)
            user_id = _require(record, "user_id", number)
            if not isinstance(user_id, str) or not user_id:
                raise SchemaError("user_id must be a non-empty string", number)
            gender = _require(record, "gender", number)
            if gender not in GENDERS:
                raise SchemaError(f"unknown gender {gender!r} for user "
                                  f"{user_id!r} (expected one of {GENDERS})", number)
            raw_posts = _require(record, "posts", number)
            if not isinstance(raw_posts, list):
                raise SchemaError("posts must be a list of token lists", number)
            posts = tuple(_check_token_list(p, "posts", number)
                          for p in raw_posts)
            posts = tuple(p for p in posts if p)
            if not posts:
                raise SchemaError(f"user {user_id!r} has no non-empty post", number)
            if user_id in seen:
                raise DuplicateKeyError(f"duplicate user_id {user_id!r} "
                                        f"(line {number})")
            seen.add(user_id)
            records.append(UserRecord(user_id=user_id, gender=gender, posts=posts))
    return records


def load_source_reviews(path) -> list[SourceReview]:
    """Load source-domain reviews from JSONL. An empty file yields an empty
    list with a warning."""
    reviews: list[SourceReview] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, number)
            review_id = _require(record, "review_id", number)
            if not isinstance(review_id, str) or not review_id:
                raise SchemaError("review_id must be a non-empty string", number)
            polarity = _require(record, "polarity", number)
            if polarity not in POLARITIES:
                raise SchemaError(f"unknown polarity {polarity!r} for review "
                                  f"{review_id!r} (expected one of {POLARITIES})",
                                  number)
            tokens = _check_token_list(_require(record, "tokens", number),
                                       "tokens", number)
            if not tokens:
                raise SchemaError(f"review {review_id!r} has no tokens", number)
            if review_id in seen:
                raise DuplicateKeyError(f"duplicate review_id {review_id!r} "
                                        f"(line {number})")
            seen.add(review_id)
            reviews.append(SourceReview(review_id=review_id, tokens=tokens,
                                        polarity=polarity))
    if not reviews:
        logger.warning("no reviews loaded from %s", path)
    return reviews


def load_manual_records(path) -> list[tuple[UserRecord, str]]:
    """Load manually polarity-labeled target users (user schema plus a
    'polarity' field)."""
    out: list[tuple[UserRecord, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, number)
            polarity = _require(record, "polarity", number)
            if polarity not in POLARITIES:
                raise SchemaError(f"unknown polarity {polarity!r}", number)
            user_id = _require(record, "user_id", number)
            gender = record.get("gender", "male")
            if gender not in GENDERS:
                raise SchemaError(f"unknown gender {gender!r}", number)
            raw_posts = _require(record, "posts", number)
            posts = tuple(_check_token_list(p, "posts", number) for p in raw_posts)
            posts = tuple(p for p in posts if p)
            if not posts:
                raise SchemaError(f"user {user_id!r} has no non-empty post", number)
            if user_id in seen:
                raise DuplicateKeyError(f"duplicate user_id {user_id!r} "
                                        f"(line {number})")
            seen.add(user_id)
            out.append((UserRecord(user_id=user_id, gender=gender, posts=posts),
                        polarity))
    return out


def load_stopwords(path) -> frozenset[str]:
    """One token per line, UTF-8; lines starting with '#' are comments."""
    words: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if token and not token.startswith("#"):
                words.add(token)
    return frozenset(words)


def _has_word_char(token: str) -> bool:
    return any(ch.isalpha() for ch in token)


def clean_tokens(tokens: Sequence[str], stopwords: frozenset[str] | set[str] = frozenset(),
                 patterns: Sequence[str | re.Pattern] = ()) -> list[str]:
    """Drop stopwords, hyperlinks and tokens without letters/ideographs.

    `patterns` adds extra removal rules (regexes matched with re.search).
    The output is always a subsequence of the input, which makes cleaning
    idempotent.
    """
    compiled = [re.compile(p) if isinstance(p, str) else p for p in patterns]
    kept = []
    for token in tokens:
        if token in stopwords:
            continue
        if token.startswith("http"):
            continue
        if not _has_word_char(token):
            continue
        if any(p.search(token) for p in compiled):
            continue
        kept.append(token)
    return kept


def build_virtual_document(record: UserRecord,
                           stopwords: frozenset[str] | set[str] = frozenset(),
                           patterns: Sequence[str | re.Pattern] = ()) -> VirtualDocument:
    """Concatenate the user's cleaned posts, in post order."""
    tokens: list[str] = []
    for post in record.posts:
        tokens.extend(clean_tokens(post, stopwords, patterns))
    if not tokens:
        raise EmptyDocumentError(record.user_id)
    return VirtualDocument(user_id=record.user_id, gender=record.gender,
                           tokens=tuple(tokens), token_count=len(tokens))


def build_virtual_documents(records: Iterable[UserRecord],
                            stopwords: frozenset[str] | set[str] = frozenset(),
                            patterns: Sequence[str | re.Pattern] = (),
                            on_empty: str = "drop") -> list[VirtualDocument]:
    """Build virtual documents for many users.

    on_empty: "drop" logs and skips users emptied by cleaning (the CLI
    default); "raise" propagates the error.
    """
    if on_empty not in ("drop", "raise"):
        raise DataError(f"on_empty must be 'drop' or 'raise', got {on_empty!r}")
    docs = []
    for record in records:
        try:
            docs.append(build_virtual_document(record, stopwords, patterns))
        except EmptyDocumentError as exc:
            if on_empty == "raise":
                raise
            logger.warning("dropping user %s: %s", record.user_id, exc)
    return docs


def save_virtual_documents(docs: Iterable[VirtualDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"user_id": doc.user_id, "gender": doc.gender,
                                 "tokens": list(doc.tokens)},
                                ensure_ascii=False) + "\n")


def load_virtual_documents(path) -> list[VirtualDocument]:
    docs = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, number)
            user_id = _require(record, "user_id", number)
            gender = _require(record, "gender", number)
            if gender not in GENDERS:
                raise SchemaError(f"unknown gender {gender!r}", number)
            tokens = _check_token_list(_require(record, "tokens", number),
                                       "tokens", number)
            if not tokens:
                raise SchemaError(f"user {user_id!r} has no tokens", number)
            if user_id in seen:
                raise DuplicateKeyError(f"duplicate user_id {user_id!r} "
                                        f"(line {number})")
            seen.add(user_id)
            docs.append(VirtualDocument(user_id=user_id, gender=gender,
                                        tokens=tokens, token_count=len(tokens)))
    return docs
