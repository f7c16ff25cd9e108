"""Exception types shared across the toolkit."""

from __future__ import annotations


class AnswerabilityError(Exception):
    """Base class for all toolkit errors."""


# --- corpus ----------------------------------------------------------------

class MalformedLine(AnswerabilityError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(AnswerabilityError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate id: {record_id!r}")
        self.record_id = record_id


class UnknownCategory(AnswerabilityError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} is not a member of any category")
        self.label = label


class DuplicateMember(AnswerabilityError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} appears in more than one category")
        self.label = label


class EmptyCategory(AnswerabilityError):
    def __init__(self, name: str):
        super().__init__(f"category {name!r} has no members")
        self.name = name


class WrongCategorySet(AnswerabilityError):
    def __init__(self, got: set[str], expected: set[str]):
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        super().__init__(
            f"attribute table categories differ from the fixed set "
            f"(missing: {missing}, unexpected: {extra})"
        )
        self.got = got
        self.expected = expected


# --- perturb ---------------------------------------------------------------

class NoEligibleSite(AnswerabilityError):
    pass


class SingletonCategory(AnswerabilityError):
    def __init__(self, category: str):
        super().__init__(f"category {category!r} has fewer than 2 members")
        self.category = category


# --- gateway ---------------------------------------------------------------

class GatewayError(AnswerabilityError):
    """External-service failure (transport, endpoint, cache)."""


class EndpointUnreachable(GatewayError):
    pass


class HttpStatus(GatewayError):
    def __init__(self, code: int, body: str):
        super().__init__(f"HTTP {code}: {body[:200]}")
        self.code = code
        self.body = body


class RetriesExhausted(GatewayError):
    pass


class CacheCorrupt(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"unreadable cache entry {key}")
        self.key = key


class MockMiss(GatewayError):
    def __init__(self, prompt_excerpt: str):
        super().__init__(f"no playbook rule matched prompt: {prompt_excerpt[:160]!r}")
        self.prompt_excerpt = prompt_excerpt


# --- qagen / pope ----------------------------------------------------------

class ParseFailure(AnswerabilityError):
    def __init__(self, raw: str, reason: str = "missing required fields"):
        super().__init__(f"{reason}; raw: {raw[:160]!r}")
        self.raw = raw
        self.reason = reason


class InsufficientPool(AnswerabilityError):
    def __init__(self, kind: str, have: int, need: int):
        super().__init__(f"pool for {kind!r} has {have} items, need {need}")
        self.kind = kind
        self.have = have
        self.need = need


# --- judge -----------------------------------------------------------------

class JudgeParseFailure(AnswerabilityError):
    def __init__(self, raw: str):
        super().__init__(f"judge verdict unparseable: {raw[:160]!r}")
        self.raw = raw


# --- harness ---------------------------------------------------------------

class ViewMismatch(AnswerabilityError):
    pass


class EmptyIntersection(AnswerabilityError):
    pass


class PartialRun(AnswerabilityError):
    """Raised when a run completes only a subset of items; the partial file is on disk."""

    def __init__(self, path: str, missing: list[str]):
        super().__init__(f"partial run written to {path}; missing {len(missing)} item(s)")
        self.path = path
        self.missing = missing


# --- pope ------------------------------------------------------------------

class MissingOriginalOutcome(AnswerabilityError):
    pass


class UnparsedProbe(AnswerabilityError):
    pass


# --- export ----------------------------------------------------------------

class NoRejectedCandidate(AnswerabilityError):
    def __init__(self, item_id: str):
        super().__init__(f"no score-0 rejected candidate for item {item_id!r}")
        self.item_id = item_id


# --- review ----------------------------------------------------------------

class UnknownItem(AnswerabilityError):
    def __init__(self, item_id: str):
        super().__init__(f"unknown item {item_id!r}")
        self.item_id = item_id


class RubricMismatch(AnswerabilityError):
    pass


class ScoreOutOfRange(AnswerabilityError):
    pass


class NothingPassed(AnswerabilityError):
    pass
