"""Exact one-step enumeration of the CAT transition law.

Expands every substep choice depth-first (m activations, then m
transports over the incrementally updated boundary), multiplying the
normalized weights along each branch, and aggregates by end state and
by translation class.

Arithmetic: exact rationals whenever every weight is rational — beta an
even integer (weights are inverse powers of squared distances), or an
odd integer in d = 1 (squared distances are perfect squares).  All
other cases use mpmath at 50 significant digits, which is far below the
1e-10 tolerance asserted on the total mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import mpmath as mp

from ..lattice import Configuration, TranslationClass

ORACLE_DPS = 50
DEFAULT_TRACE_CAP = 1e7


class EnumerationInfeasible(RuntimeError):
    """Raised when the predicted trace count exceeds the cap."""


def _neighbors(p: tuple) -> list:
    out = []
    for j in range(len(p)):
        for s in (-1, 1):
            out.append(p[:j] + (p[j] + s,) + p[j + 1:])
    return out


def _dsq(a: tuple, b: tuple) -> int:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def exact_weights_available(beta: float, d: int) -> bool:
    """True when max{dist,1}^-beta is rational for all lattice distances."""
    if float(beta) != int(beta) or beta < 0:
        return False
    return int(beta) % 2 == 0 or d == 1


def _make_weight(beta: float, d: int) -> tuple:
    if exact_weights_available(beta, d):
        b = int(beta)
        if b % 2 == 0:
            k = b // 2

            def weight(dsq: int):
                return Fraction(1) if dsq <= 1 else Fraction(1, dsq ** k)
        else:

            def weight(dsq: int):
                if dsq <= 1:
                    return Fraction(1)
                s = math.isqrt(dsq)
                assert s * s == dsq  # d = 1: squared distances are squares
                return Fraction(1, s ** b)

        return weight, True

    def weight(dsq: int):
        if dsq <= 1:
            return mp.mpf(1)
        return mp.power(mp.mpf(dsq), -beta / 2)

    return weight, False


@dataclass
class EnumeratedLaw:
    """Exact one-step law from a fixed configuration."""

    by_state: dict          # Configuration -> Fraction | mpf
    by_class: dict          # TranslationClass -> Fraction | mpf
    traces: Optional[list]  # [(activated tuple, transported tuple, p)] if stored
    exact: bool

    def total(self):
        return sum(self.by_state.values())

    def prob_state(self, D: Configuration):
        return self.by_state.get(D, Fraction(0) if self.exact else mp.mpf(0))

    def prob_class(self, K: TranslationClass):
        return self.by_class.get(K, Fraction(0) if self.exact else mp.mpf(0))


def predicted_trace_count(n: int, d: int, m: int) -> int:
    """Crude upper bound used by the feasibility guard."""
    return (n * (2 * d * n)) ** (2 * m)


def enumerate_step_distribution(C: Configuration, params, cap: float = DEFAULT_TRACE_CAP,
                                store_traces: bool = False) -> EnumeratedLaw:
    """The full one-step law from C, exactly."""
    n, d, m = C.n, params.d, params.m
    if n <= m:
        raise ValueError("state below minimum size")
    predicted = predicted_trace_count(n, d, m)
    if predicted >= cap:
        raise EnumerationInfeasible(
            f"enumeration infeasible: predicted trace count {predicted} exceeds cap {cap:g}")
    weight, exact = _make_weight(params.beta, d)
    one = Fraction(1) if exact else mp.mpf(1)
    pts = sorted(C)
    by_state: dict = {}
    traces: Optional[list] = [] if store_traces else None

    def transport_rec(curset: set, bset: set, anchor: tuple, acts: tuple,
                      trans: tuple, depth: int, p):
        if depth == m:
            final = Configuration(sorted(curset), dim=d)
            by_state[final] = by_state.get(final, 0) + p
            if traces is not None:
                traces.append((acts, trans, p))
            return
        support = sorted(bset)
        ws = [weight(_dsq(anchor, q)) for q in support]
        tot = sum(ws)
        for q, w in zip(support, ws):
            nxt = set(curset)
            nxt.add(q)
            nb = set(bset)
            nb.discard(q)
            for r in _neighbors(q):
                if r not in nxt and r not in nb:
                    nb.add(r)
            transport_rec(nxt, nb, q, acts, trans + (q,), depth + 1, p * w / tot)

    def activation_rec(support: list, prev: Optional[tuple], acts: tuple, depth: int, p):
        if depth == m:
            curset = set(support)
            bset = {q for pt in curset for q in _neighbors(pt) if q not in curset}
            transport_rec(curset, bset, acts[-1], acts, (), 0, p)
            return
        if prev is None:
            tot = len(support) * one
            ws = [one] * len(support)
        else:
            ws = [weight(_dsq(prev, q)) for q in support]
            tot = sum(ws)
        for i, w in enumerate(ws):
            x = support[i]
            rest = support[:i] + support[i + 1:]
            activation_rec(rest, x, acts + (x,), depth + 1, p * w / tot)

    def build():
        activation_rec(pts, None, (), 0, one)

    if exact:
        build()
    else:
        with mp.workdps(ORACLE_DPS):
            build()

    by_class: dict = {}
    for state, p in by_state.items():
        key = TranslationClass.of(state)
        by_class[key] = by_class.get(key, 0) + p

    total = sum(by_state.values())
    if exact:
        assert total == 1, f"enumerated law sums to {total}, not 1"
    else:
        assert abs(float(total) - 1.0) <= 1e-10, f"enumerated law sums to {float(total)}"
    return EnumeratedLaw(by_state=by_state, by_class=by_class, traces=traces, exact=exact)


def transition_probability(C: Configuration, D: Configuration, params,
                           cap: float = DEFAULT_TRACE_CAP):
    """P(next state = D | current = C); exact value, 0 when unreachable."""
    law = enumerate_step_distribution(C, params, cap=cap)
    return law.prob_state(D)
