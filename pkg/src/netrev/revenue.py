"""Expected-revenue formulas for pricing strategies on social networks.

Buyers are approached one by one.  A buyer ``i`` whose in-neighbors ``S``
already own the product values it uniformly on ``[0, M]`` with
``M = w[i, i] + sum(w[j, i] for j in S)``, so offering the price
``(1 - p) * M`` is accepted with probability ``p`` and earns
``p * (1 - p) * M`` in expectation.  A marketing strategy chooses the
approach order and a pricing probability ``p_i in [1/2, 1]`` per buyer;
influence-and-exploit (IE) strategies instead give the product away to an
influence set ``A`` and charge everyone else with a common probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .netmodel import SocialNetwork, UnsupportedOperationError, ValidationError

PRICE_PROB_MIN = 0.5
PRICE_PROB_MAX = 1.0
_PROB_TOL = 1e-12


def _check_price_prob(p, name: str = "p"):
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} must be finite")
    if np.any(p < PRICE_PROB_MIN - _PROB_TOL) or np.any(p > PRICE_PROB_MAX + _PROB_TOL):
        raise ValidationError(
            f"{name} must lie in [{PRICE_PROB_MIN}, {PRICE_PROB_MAX}], got {p}")
    return np.clip(p, PRICE_PROB_MIN, PRICE_PROB_MAX)


def _check_exploit_prob(p, name: str = "p") -> float:
    """Exploit pricing probabilities live in the half-open [1/2, 1): a free
    offer (p=1) belongs in the influence set, not the exploit phase."""
    p = float(p)
    if not (np.isfinite(p) and PRICE_PROB_MIN - _PROB_TOL <= p < PRICE_PROB_MAX):
        raise ValidationError(f"{name} must lie in [1/2, 1), got {p}")
    return max(p, PRICE_PROB_MIN)


def _require_normalized(g: SocialNetwork, what: str) -> None:
    if g.directed and g.N > 0:
        raise ValidationError(
            f"{what} expects directed networks without self-weights; "
            "apply eliminate_selfloops first")


# ---------------------------------------------------------------------------
# Strategy types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarketingStrategy:
    """Approach order plus per-buyer pricing probabilities.

    ``order[k]`` is the buyer approached at step ``k``; ``prices[i]`` is the
    pricing probability for buyer ``i`` (the offered price is
    ``(1 - prices[i]) * M`` for that buyer's realized valuation cap ``M``,
    so larger values mean cheaper offers sold with higher probability).
    """

    order: tuple[int, ...]
    prices: tuple[float, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValidationError(f"order {order} is not a permutation")
        prices = tuple(float(x) for x in
                       _check_price_prob(list(self.prices), "prices"))
        if len(prices) != len(order):
            raise ValidationError("order and prices must have equal length")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "prices", prices)

    @property
    def n(self) -> int:
        return len(self.order)

    def positions(self) -> np.ndarray:
        """positions()[i] = step at which buyer ``i`` is approached."""
        pos = np.empty(self.n, dtype=np.int64)
        pos[np.asarray(self.order, dtype=np.int64)] = np.arange(self.n)
        return pos

    def to_json(self) -> dict:
        return {"order": list(self.order), "prices": list(self.prices)}

    @classmethod
    def from_json(cls, doc: dict) -> "MarketingStrategy":
        return cls(tuple(doc["order"]), tuple(doc["prices"]))


@dataclass(frozen=True)
class IEStrategy:
    """Influence-and-exploit strategy: free products for ``influence_set``,
    then a common pricing probability ``p`` for everyone else (approached in
    any order after the set; expected revenue does not depend on it)."""

    influence_set: frozenset[int]
    p: float

    def __post_init__(self):
        object.__setattr__(self, "influence_set",
                           frozenset(int(i) for i in self.influence_set))
        object.__setattr__(self, "p", _check_exploit_prob(self.p))

    def to_json(self) -> dict:
        return {"influence_set": sorted(self.influence_set), "p": self.p}

    @classmethod
    def from_json(cls, doc: dict) -> "IEStrategy":
        return cls(frozenset(doc["influence_set"]), doc["p"])


@dataclass(frozen=True)
class RandomIEStrategy:
    """IE with the influence set sampled i.i.d.: each buyer joins with
    probability ``q``; the rest are priced with probability ``p``."""

    q: float
    p: float

    def __post_init__(self):
        q = float(self.q)
        if not (np.isfinite(q) and 0.0 <= q <= 1.0):
            raise ValidationError(f"q must lie in [0, 1], got {q}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", _check_exploit_prob(self.p))

    def sample(self, g: SocialNetwork, seed) -> IEStrategy:
        rng = np.random.default_rng(seed)
        members = np.nonzero(rng.random(g.n) < self.q)[0]
        return IEStrategy(frozenset(int(i) for i in members), self.p)

    def to_json(self) -> dict:
        return {"q": self.q, "p": self.p}


def pricing_classes(K: int) -> np.ndarray:
    """Pricing probabilities ``p_k = 1 - (k - 1) / (2 (K - 1))`` for the
    ``K`` buyer classes, running from 1 (free riders, class 1) down to 1/2.
    """
    K = int(K)
    if K < 2:
        raise ValidationError("class count K must be at least 2")
    k = np.arange(1, K + 1, dtype=np.float64)
    return 1.0 - (k - 1.0) / (2.0 * (K - 1.0))


@dataclass(frozen=True)
class GeneralizedIEStrategy:
    """Multi-class IE: buyer classes drawn i.i.d. from ``q``; classes are
    approached in order of decreasing pricing probability
    (``pricing_classes(K)``), buyers within a class in random order."""

    K: int
    q: tuple[float, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        K = int(self.K)
        q = np.asarray(self.q, dtype=np.float64)
        if K < 2:
            raise ValidationError("class count K must be at least 2")
        if q.shape != (K,):
            raise ValidationError(f"q must have length K={K}")
        if not np.all(np.isfinite(q)) or np.any(q < -1e-9):
            raise ValidationError("q must be non-negative")
        if abs(float(np.sum(q)) - 1.0) > 1e-9:
            raise ValidationError(f"q must sum to 1, got {float(np.sum(q))!r}")
        q = np.clip(q, 0.0, None)
        q = q / np.sum(q)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "q", tuple(float(x) for x in q))

    @property
    def class_prices(self) -> np.ndarray:
        return pricing_classes(self.K)

    def sample_classes(self, n: int, seed=None) -> np.ndarray:
        use = self.seed if seed is None else seed
        rng = np.random.default_rng(use)
        return rng.choice(self.K, size=n, p=np.asarray(self.q))

    def to_json(self) -> dict:
        return {"K": self.K, "q": list(self.q), "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "GeneralizedIEStrategy":
        return cls(doc["K"], tuple(doc["q"]), doc.get("seed"))


def strategy_family(strategy) -> str:
    """Short family name: marketing, ie, random_ie, or generalized_ie."""
    names = {MarketingStrategy: "marketing", IEStrategy: "ie",
             RandomIEStrategy: "random_ie",
             GeneralizedIEStrategy: "generalized_ie"}
    try:
        return names[type(strategy)]
    except KeyError:
        raise ValidationError(
            f"unknown strategy type {type(strategy).__name__}") from None


def strategy_from_json(doc: dict):
    """Rebuild any strategy family from its JSON form, detected by keys."""
    if not isinstance(doc, dict):
        raise ValidationError("strategy document must be a JSON object")
    if "order" in doc:
        return MarketingStrategy.from_json(doc)
    if "influence_set" in doc:
        return IEStrategy.from_json(doc)
    if "K" in doc:
        return GeneralizedIEStrategy.from_json(doc)
    if "q" in doc and "p" in doc:
        return RandomIEStrategy(doc["q"], doc["p"])
    raise ValidationError(
        "unrecognized strategy document; expected keys for one of the "
        "marketing, ie, random_ie, or generalized_ie families")


# ---------------------------------------------------------------------------
# Expected revenue
# ---------------------------------------------------------------------------

def strategy_revenue(g: SocialNetwork, strategy: MarketingStrategy) -> float:
    """Exact expected revenue of a marketing strategy.

    Buyer ``i`` contributes ``p_i (1 - p_i)`` times its expected valuation
    cap, which counts ``w[i, i]`` plus ``p_j * w[j, i]`` over in-neighbors
    ``j`` approached earlier (those own the product with probability
    ``p_j``, independently).
    """
    _require_normalized(g, "strategy_revenue")
    if strategy.n != g.n:
        raise ValidationError(f"strategy covers {strategy.n} buyers, network has {g.n}")
    p = np.asarray(strategy.prices)
    pos = strategy.positions()
    src, dst, w = g.influence_pairs()
    margin = p * (1.0 - p)
    total = float(np.sum(margin * g.self_weights))
    if w.size:
        before = pos[src] < pos[dst]
        total += float(np.sum((margin[dst] * p[src] * w)[before]))
    return total


def ie_revenue_coefficients(g: SocialNetwork, A: Iterable[int]) -> tuple[float, float]:
    """Pair ``(C, D)`` with ``ie_revenue(g, A, p) == p (1 - p) (C + p D / 2)``.

    ``C`` aggregates self-weights of priced buyers plus influence from the
    free set; ``D`` aggregates influence among priced buyers.
    """
    A = frozenset(int(i) for i in A)
    for i in A:
        if not 0 <= i < g.n:
            raise ValidationError(f"influence set member {i} out of range")
    in_A = np.zeros(g.n, dtype=bool)
    if A:
        in_A[list(A)] = True
    src, dst, w = g.influence_pairs()
    priced_dst = ~in_A[dst]
    C = float(np.sum(g.self_weights[~in_A]))
    C += float(np.sum(w[priced_dst & in_A[src]]))
    D = float(np.sum(w[priced_dst & ~in_A[src]]))
    return C, D


def ie_revenue(g: SocialNetwork, A, p: Optional[float] = None) -> float:
    """Expected revenue of the IE strategy with influence set ``A``.

    Every priced buyer sees the full influence of ``A`` and, in expectation,
    half of the ``p``-weighted influence of the other priced buyers (each
    unordered priced pair is adjacent in one direction at a time under a
    uniformly random exploit order, and each owns the product with
    probability ``p`` when the other is approached later).  ``A`` may be an
    :class:`IEStrategy` with ``p`` omitted.
    """
    _require_normalized(g, "ie_revenue")
    if isinstance(A, IEStrategy):
        if p is not None:
            raise ValidationError("pass either an IEStrategy or (A, p), not both")
        A, p = A.influence_set, A.p
    elif p is None:
        raise ValidationError("ie_revenue needs a pricing probability p")
    p = _check_exploit_prob(p)
    C, D = ie_revenue_coefficients(g, A)
    return p * (1.0 - p) * (C + 0.5 * p * D)


def ie_coefficients_batch(g: SocialNetwork, members: np.ndarray):
    """Vectorized :func:`ie_revenue_coefficients` over many influence sets.

    ``members`` is a (T, n) boolean/0-1 matrix, one candidate set per row;
    returns float vectors ``(C, D)`` of length T.
    """
    M = np.asarray(members, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] != g.n:
        raise ValidationError(f"membership matrix must have {g.n} columns")
    src, dst, w = g.influence_pairs()
    out_w = np.zeros(g.n)
    in_w = np.zeros(g.n)
    np.add.at(out_w, src, w)
    np.add.at(in_w, dst, w)
    adj = np.zeros((g.n, g.n))
    np.add.at(adj, (src, dst), w)
    quad = np.sum((M @ adj) * M, axis=1)  # sum_e w_e m_src m_dst
    C = (np.sum(g.self_weights) - M @ g.self_weights) + (M @ out_w - quad)
    D = np.sum(w) - M @ out_w - M @ in_w + quad
    return C, D


def ie_revenue_batch(g: SocialNetwork, members: np.ndarray, p: float) -> np.ndarray:
    """Expected IE revenue for each row of a membership matrix at a common
    exploit pricing probability."""
    p = _check_exploit_prob(p)
    C, D = ie_coefficients_batch(g, members)
    return p * (1.0 - p) * (C + 0.5 * p * D)


def random_ie_revenue(g: SocialNetwork, q: float, p: float) -> float:
    """Expected revenue of IE with an i.i.d. influence set (each buyer free
    with probability ``q``), averaged over the set and the exploit order."""
    _require_normalized(g, "random_ie_revenue")
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"q must lie in [0, 1], got {q}")
    p = _check_exploit_prob(p)
    margin = p * (1.0 - p)
    if g.directed:
        return (1.0 - q) * margin * (q + 0.5 * p * (1.0 - q)) * g.W
    return (1.0 - q) * margin * (g.N + (2.0 * q + p * (1.0 - q)) * g.W)


def generalized_ie_revenue(g: SocialNetwork, K: int, q: Sequence[float]) -> float:
    """Expected revenue of the K-class generalized IE strategy, averaged over
    the i.i.d. class assignment and within-class orders."""
    _require_normalized(g, "generalized_ie_revenue")
    strategy = GeneralizedIEStrategy(K, tuple(q))
    S1, S2 = generalized_ie_moments(strategy)
    if g.directed:
        return 0.5 * S2 * g.W
    return S1 * g.N + S2 * g.W


def class_moments(q: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    """Per-unit-weight revenue moments of a class-based IE assignment.

    ``S1`` is the expected margin ``p (1 - p)`` of a single buyer (the
    self-weight multiplier).  ``S2`` is the expected contribution of one
    undirected unit edge: conditioning on the classes ``k <= l`` of its
    endpoints, the later buyer earns ``p_k p_l (1 - p_l)``; a directed unit
    edge earns ``S2 / 2`` by symmetry.
    """
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    a = p * (1.0 - p)
    qp = q * p
    prefix = np.cumsum(qp) - qp  # sum_{l<k} q_l p_l
    S1 = float(np.sum(q * a))
    S2 = float(np.sum(a * q * (qp + 2.0 * prefix)))
    return S1, S2


def generalized_ie_moments(strategy: GeneralizedIEStrategy) -> tuple[float, float]:
    """:func:`class_moments` of a generalized IE strategy."""
    return class_moments(np.asarray(strategy.q), strategy.class_prices)


# ---------------------------------------------------------------------------
# Bounds, ordering, prices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RevenueBounds:
    """Universal bounds: no strategy beats ``upper`` and myopic pricing
    (price half the valuation cap, in any order when undirected / a uniformly
    random order when directed) already earns ``myopic_lower``."""

    upper: float
    myopic_lower: float

    def to_json(self) -> dict:
        return {"upper": self.upper, "myopic_lower": self.myopic_lower}


def revenue_bounds(g: SocialNetwork) -> RevenueBounds:
    """Bounds ``(W + N) / 4`` above and ``(W + 2N) / 8`` (undirected) or
    ``(W + 4N) / 16`` (directed) below on the optimal expected revenue."""
    W, N = g.W, g.N
    upper = 0.25 * (W + N)
    if g.directed:
        lower = (W + 4.0 * N) / 16.0
    else:
        lower = (W + 2.0 * N) / 8.0
    return RevenueBounds(upper=upper, myopic_lower=lower)


def best_ordering_for_prices(g: SocialNetwork, prices: Sequence[float]) -> MarketingStrategy:
    """Optimal approach order for fixed pricing probabilities on an
    undirected network: non-increasing ``p`` (ties broken by buyer index).

    Swapping two adjacent buyers ``i`` just before ``j`` changes revenue by
    ``p_i p_j w_ij (p_j - p_i)``, so any order with a cheaper-offer buyer
    (larger ``p``) ahead of a pricier one can only improve by sorting.
    Directed networks admit no such rule and are rejected.
    """
    if g.directed:
        raise UnsupportedOperationError(
            "ordering optimization by sorted prices applies to undirected "
            "networks only")
    p = _check_price_prob(list(prices), "prices")
    if p.shape != (g.n,):
        raise ValidationError(f"prices must have length n={g.n}")
    order = np.argsort(-p, kind="stable")
    return MarketingStrategy(tuple(int(i) for i in order),
                             tuple(float(x) for x in p))


@dataclass(frozen=True)
class MyopicQuote:
    price: float
    acceptance_probability: float
    expected_revenue: float

    def to_json(self) -> dict:
        return {"price": self.price,
                "acceptance_probability": self.acceptance_probability,
                "expected_revenue": self.expected_revenue}


def myopic_price(M: float) -> MyopicQuote:
    """Revenue-maximizing single offer against a valuation uniform on
    ``[0, M]``: price ``M / 2`` sells with probability 1/2 for expected
    revenue ``M / 4``."""
    M = float(M)
    if not (np.isfinite(M) and M >= 0):
        raise ValidationError(f"valuation cap must be finite and non-negative, got {M}")
    return MyopicQuote(price=0.5 * M, acceptance_probability=0.5,
                       expected_revenue=0.25 * M)


def price_for_probability(M: float, p: float) -> float:
    """Offer accepted with probability ``p`` by a valuation uniform on
    ``[0, M]``: the price ``(1 - p) * M``."""
    M = float(M)
    if not (np.isfinite(M) and M >= 0):
        raise ValidationError(f"valuation cap must be finite and non-negative, got {M}")
    p = float(_check_price_prob(p, "p"))
    return (1.0 - p) * M
