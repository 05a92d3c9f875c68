"""
JSON-lines result cache.

One object per line:

    {"key": {"op": ..., "index": ..., "z": ..., "q": ..., "model": ..,
             "precision_bits": .., "truncation": ...},
     "value": "...", "error": "...", "terms_used": .., "converged": .., "timestamp": "..."}

The file is opened in append mode for every write and never rewritten. A key
already present is not written again, so concurrent writers of the same
result leave one usable line. Lines that fail to parse are skipped with a
warning.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from mpl_duality.context import EvalResult, PrecisionContext, parse_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheKey:
    op: str
    index: str
    z: str
    q: str = ""
    model: int = 0
    precision_bits: int = 0
    truncation: str = ""

    @classmethod
    def for_eval(cls, op: str, index: str, z: str, ctx: PrecisionContext, q: str = "", model: int = 0) -> "CacheKey":
        """Key with z and q in lowest terms, so "0.5" and "1/2" share an entry."""
        truncation = f"max_terms={ctx.max_terms},tol={ctx.target_tol!r},extrapolate={ctx.extrapolate}"
        q = str(parse_rational(q)) if q else ""
        return cls(op, index, str(parse_rational(z)), q, model, ctx.precision_bits, truncation)


@dataclass(frozen=True)
class CacheEntry:
    key: CacheKey
    value: str
    error: str
    terms_used: int
    converged: bool
    timestamp: str

    def to_record(self) -> dict:
        return {
            "value": self.value,
            "error_estimate": self.error,
            "truncation": self.terms_used,
            "converged": self.converged,
        }


class ResultCache:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[CacheKey, CacheEntry] = {}
        self._lock = threading.Lock()
        self._load()

    def __len__(self) -> int:
        return len(self._entries)

    def _load(self) -> None:
        if not self.path.exists():
            return
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    entry = CacheEntry(
                        key=CacheKey(**raw["key"]),
                        value=raw["value"],
                        error=raw["error"],
                        terms_used=int(raw.get("terms_used", 0)),
                        converged=bool(raw.get("converged", True)),
                        timestamp=raw.get("timestamp", ""),
                    )
                except (ValueError, KeyError, TypeError) as exc:
                    logger.warning("%s:%d: skipping unreadable cache line (%s)", self.path, lineno, exc)
                    continue
                self._entries.setdefault(entry.key, entry)
        logger.debug("loaded %d cache entries from %s", len(self._entries), self.path)

    def get(self, key: CacheKey) -> CacheEntry | None:
        return self._entries.get(key)

    def put(self, key: CacheKey, value: str, error: str, terms_used: int, converged: bool) -> CacheEntry:
        with self._lock:
            hit = self._entries.get(key)
            if hit is not None:
                return hit
            entry = CacheEntry(key, value, error, terms_used, converged,
                               datetime.now(timezone.utc).isoformat(timespec="seconds"))
            line = json.dumps({**asdict(entry), "key": asdict(key)}, sort_keys=True)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._entries[key] = entry
            return entry

    def evaluate(self, key: CacheKey, compute: Callable[[], EvalResult], digits: int) -> dict:
        """Record for key: the stored strings on a hit, else compute, store and return them."""
        hit = self.get(key)
        if hit is not None:
            logger.debug("cache hit %s", key)
            return hit.to_record()
        res = compute()
        record = res.to_record(digits)
        if res.converged:
            self.put(key, record["value"], record["error_estimate"], res.terms_used, res.converged)
        return record


def cached_record(cache: ResultCache | None, key: CacheKey, compute: Callable[[], EvalResult], digits: int) -> dict:
    if cache is None:
        return compute().to_record(digits)
    return cache.evaluate(key, compute, digits)
