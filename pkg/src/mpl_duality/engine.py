"""
DualityEngine - the evaluation front shared by the CLI and the tool server.

Holds the default precision (MPL_PREC_BITS / MPL_TARGET_TOL / MPL_MAX_TERMS) and the optional
result cache (MPL_CACHE), and turns text arguments into JSON-ready records.

Usage:
    from mpl_duality.engine import get_engine
    engine = get_engine()
    engine.evaluate(index="2:1", z="-1")
    # -> {"inputs": {...}, "value": "2.4674011002723396547...", "error_estimate": ..., ...}
"""

from __future__ import annotations

import os
import threading

from mpl_duality.algebra_words import AugmentedIndex, NCWord
from mpl_duality.cache import CacheKey, ResultCache, cached_record
from mpl_duality.connected_sums import ChainReport, connected_tilde_li, transport_chain, verify_chain_numeric
from mpl_duality.context import PrecisionContext, QContext
from mpl_duality.errors import InvalidIndex
from mpl_duality.mpl_evaluator import L_map, tilde_li
from mpl_duality.q_analogues import connected_tilde_li_q, q_chain_evaluator, tilde_li_q


class DualityEngine:
    def __init__(self, cache: ResultCache | None = None):
        self.cache = cache

    def context(self, precision_bits: int | None = None, target_tol: float | None = None,
                max_terms: int | None = None) -> PrecisionContext:
        return PrecisionContext.from_env(precision_bits=precision_bits, target_tol=target_tol, max_terms=max_terms)

    @staticmethod
    def qcontext(q: str | None, model: int | None) -> QContext | None:
        if q is None:
            if model is not None:
                raise InvalidIndex("a q-model needs a value of q")
            return None
        return QContext(q=q, model=model or 1)

    def evaluate(self, *, z: str, index: str | None = None, word: str | None = None,
                 q: str | None = None, model: int | None = None,
                 ctx: PrecisionContext | None = None) -> dict:
        """𝐿̃i(k̃; z), 𝐿̃i_q^(ε)(k̃; z) or L(w), exactly one of index / word."""
        ctx = ctx or self.context()
        qctx = self.qcontext(q, model)
        if (index is None) == (word is None):
            raise InvalidIndex("pass exactly one of index or word")
        if word is not None:
            if qctx is not None:
                raise InvalidIndex("L(w) has no q-analogue")
            w = NCWord.parse(word)
            key = CacheKey.for_eval("L", str(w), z, ctx)
            record = cached_record(self.cache, key, lambda: L_map(w, z, ctx), ctx.digits)
            inputs = {"word": str(w), "z": z}
        else:
            k = AugmentedIndex.parse(index)
            inputs = {"index": str(k), "z": z}
            if qctx is None:
                key = CacheKey.for_eval("tilde_li", str(k), z, ctx)
                record = cached_record(self.cache, key, lambda: tilde_li(k, z, ctx), ctx.digits)
            else:
                key = CacheKey.for_eval("tilde_li_q", str(k), z, ctx, str(qctx.q), qctx.model)
                record = cached_record(self.cache, key, lambda: tilde_li_q(k, z, qctx, ctx), ctx.digits)
                inputs.update(q=str(qctx.q), model=qctx.model)
        return {"inputs": inputs, **record, "precision_bits": ctx.precision_bits}

    def connected(self, *, left: str, right: str, z: str, q: str | None = None, model: int | None = None,
                  ctx: PrecisionContext | None = None) -> dict:
        ctx = ctx or self.context()
        qctx = self.qcontext(q, model)
        k, l = AugmentedIndex.parse(left), AugmentedIndex.parse(right)
        pair = f"{k};{l}"
        inputs = {"left": str(k), "right": str(l), "z": z}
        if qctx is None:
            key = CacheKey.for_eval("connected", pair, z, ctx)
            record = cached_record(self.cache, key, lambda: connected_tilde_li(k, l, z, ctx), ctx.digits)
        else:
            key = CacheKey.for_eval("connected_q", pair, z, ctx, str(qctx.q), qctx.model)
            record = cached_record(self.cache, key, lambda: connected_tilde_li_q(k, l, z, qctx, ctx), ctx.digits)
            inputs.update(q=str(qctx.q), model=qctx.model)
        return {"inputs": inputs, **record, "precision_bits": ctx.precision_bits}

    def chain(self, *, index: str, z: str | None = None, q: str | None = None, model: int | None = None,
              ctx: PrecisionContext | None = None) -> tuple[dict, ChainReport | None]:
        """The transport chain of index; with z, also its numeric report."""
        chain = transport_chain(AugmentedIndex.parse(index))
        if z is None:
            return chain.to_record(), None
        ctx = ctx or self.context()
        qctx = self.qcontext(q, model)
        evaluate = q_chain_evaluator(z, qctx, ctx) if qctx is not None else None
        report = verify_chain_numeric(chain, z, ctx, evaluate=evaluate)
        record = report.to_record(ctx.digits)
        if qctx is not None:
            record["case"] = f"q{qctx.model}-chain"
            record["inputs"].update(q=str(qctx.q), model=qctx.model)
        return record, report


_ENGINES: dict[str, DualityEngine] = {}
_ENGINES_LOCK = threading.Lock()


def get_engine(cache_path: str | None = None) -> DualityEngine:
    """Engine for the cache at cache_path, else MPL_CACHE, else no cache.

    Engines are shared per cache path so every caller sees one in-memory index."""
    key = cache_path or os.environ.get("MPL_CACHE", "").strip()
    with _ENGINES_LOCK:
        engine = _ENGINES.get(key)
        if engine is None:
            engine = _ENGINES[key] = DualityEngine(ResultCache(key) if key else None)
        return engine
