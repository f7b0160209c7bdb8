"""Noise mechanisms, noisy counting and privacy-budget arithmetic.

Every mechanism takes an explicit random source ``rng``. Any object with
numpy-Generator style ``laplace`` and ``normal`` methods works, which lets
tests swap in :class:`ZeroNoise` to force every draw to zero.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import BudgetKindError, InputError, ParameterError

ZCDP = "zcdp"
APPROX = "approx"


def _check_positive(name, x):
    if not (np.isfinite(x) and x > 0):
        raise ParameterError(f"{name} must be positive and finite, got {x!r}")


def _round_down(total, num, den):
    """float(total * num / den), nudged down so that den * part <= num * total exactly."""
    part = total * num / den
    bound = Fraction(total) * num
    while Fraction(part) * den > bound:
        part = math.nextafter(part, 0.0)
    return part


@dataclass(frozen=True)
class PrivacyBudget:
    """A zCDP(rho) or approximate (eps, delta)-DP budget.

    Use the :meth:`zcdp` and :meth:`approx` constructors rather than
    filling the fields by hand.
    """

    kind: str
    rho: float = 0.0
    eps: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in (ZCDP, APPROX):
            raise ParameterError(f"unknown budget kind {self.kind!r}")
        for name in ("rho", "eps", "delta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and nonnegative, got {v!r}")
        if not self.delta < 1:
            raise ParameterError(f"delta must be < 1, got {self.delta!r}")
        if self.kind == ZCDP and (self.eps or self.delta):
            raise ParameterError("zCDP budget carries only rho")
        if self.kind == APPROX and self.rho:
            raise ParameterError("approximate-DP budget carries only eps and delta")

    @classmethod
    def zcdp(cls, rho):
        return cls(ZCDP, rho=float(rho))

    @classmethod
    def approx(cls, eps, delta):
        return cls(APPROX, eps=float(eps), delta=float(delta))

    @property
    def value(self):
        """The headline privacy parameter (rho or eps)."""
        return self.rho if self.kind == ZCDP else self.eps

    def scaled(self, num, den=1):
        """Budget times num/den under basic composition, rounded toward zero."""
        if num < 0 or den <= 0:
            raise ParameterError("scale factor must be nonnegative")
        if self.kind == ZCDP:
            return PrivacyBudget.zcdp(_round_down(self.rho, num, den))
        return PrivacyBudget.approx(_round_down(self.eps, num, den),
                                    _round_down(self.delta, num, den))

    def pure_eps(self):
        """The epsilon used by pure-DP primitives such as PCount.

        A zCDP budget converts through eps = sqrt(2 rho); the Laplace
        mechanism at that eps is then rho-zCDP.
        """
        if self.kind == ZCDP:
            return math.sqrt(2.0 * self.rho)
        return self.eps

    def to_dict(self):
        if self.kind == ZCDP:
            return {"kind": ZCDP, "rho": self.rho}
        return {"kind": APPROX, "eps": self.eps, "delta": self.delta}

    @classmethod
    def from_dict(cls, obj):
        kind = obj.get("kind")
        if kind == ZCDP:
            extra = set(obj) - {"kind", "rho"}
            if extra:
                raise ParameterError(f"unknown budget keys {sorted(extra)}")
            return cls.zcdp(obj["rho"])
        if kind == APPROX:
            extra = set(obj) - {"kind", "eps", "delta"}
            if extra:
                raise ParameterError(f"unknown budget keys {sorted(extra)}")
            return cls.approx(obj["eps"], obj["delta"])
        raise ParameterError(f"unknown budget kind {kind!r}")


def _same_kind(budgets):
    kinds = {b.kind for b in budgets}
    if len(kinds) > 1:
        raise BudgetKindError("cannot compose zCDP and approximate-DP budgets")
    return kinds.pop() if kinds else None


def compose(budgets):
    """Basic composition: rho adds for zCDP, (eps, delta) add for approximate DP."""
    budgets = list(budgets)
    if not budgets:
        raise ParameterError("compose needs at least one budget")
    kind = _same_kind(budgets)
    if kind == ZCDP:
        return PrivacyBudget.zcdp(math.fsum(b.rho for b in budgets))
    return PrivacyBudget.approx(math.fsum(b.eps for b in budgets),
                                math.fsum(b.delta for b in budgets))


def advanced_epsilon(eps0, steps, delta0):
    """eps0 * sqrt(6 T ln(1/delta0)), the advanced-composition epsilon."""
    return eps0 * math.sqrt(6.0 * steps * math.log(1.0 / delta0))


def advanced_compose(eps0, steps, delta0, deltas=()):
    """Advanced composition of ``steps`` mechanisms that are each (eps0, .)-DP.

    Returns (eps0 sqrt(6 T ln(1/delta0)), delta0 + sum(deltas)).
    """
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if not 0 < eps0 <= 1:
        raise ParameterError(f"advanced composition needs 0 < eps0 <= 1, got {eps0}")
    if not 0 < delta0 < 1:
        raise ParameterError("delta0 must lie in (0, 1)")
    return PrivacyBudget.approx(advanced_epsilon(eps0, steps, delta0),
                                delta0 + math.fsum(deltas))


def split_budget(total, parts):
    """Split a budget into ``parts`` equal pieces that recompose to at most ``total``.

    zCDP pieces are rho/parts. Approximate-DP pieces are
    (eps / sqrt(6 parts ln(2/delta)), delta / (2 parts)); half of delta is
    kept back as the advanced-composition slack.
    """
    if not isinstance(parts, (int, np.integer)) or parts < 1:
        raise ParameterError(f"parts must be a positive integer, got {parts!r}")
    parts = int(parts)
    if total.kind == ZCDP:
        return [PrivacyBudget.zcdp(_round_down(total.rho, 1, parts))] * parts
    if total.delta <= 0:
        raise ParameterError("approximate-DP split needs delta > 0")
    slack = total.delta / 2
    eps_part = total.eps / math.sqrt(6.0 * parts * math.log(2.0 / total.delta))
    while eps_part > 0 and advanced_epsilon(eps_part, parts, slack) > total.eps:
        eps_part = math.nextafter(eps_part, 0.0)
    delta_part = _round_down(total.delta, 1, 2 * parts)
    return [PrivacyBudget.approx(eps_part, delta_part)] * parts


def recompose(budgets, slack=None):
    """Total cost of a list of budgets, using advanced composition when it helps.

    For approximate DP with equal-or-smaller epsilons and ``slack`` given,
    the cheaper of basic and advanced composition is returned.
    """
    basic = compose(budgets)
    if basic.kind == ZCDP or slack is None:
        return basic
    eps0 = max(b.eps for b in budgets)
    if not 0 < eps0 <= 1:
        return basic
    adv = advanced_compose(eps0, len(budgets), slack, [b.delta for b in budgets])
    return adv if adv.eps < basic.eps else basic


# ---------------------------------------------------------------------------
# Noise


@dataclass(frozen=True)
class NoiseSpec:
    """Noise scale (Laplace b or Gaussian sigma) and the shape it is drawn in."""

    scale: float
    shape: str  # "scalar", "vector" or "symmetric"

    def __post_init__(self):
        _check_positive("noise scale", self.scale)
        if self.shape not in ("scalar", "vector", "symmetric"):
            raise ParameterError(f"unknown noise shape {self.shape!r}")


def laplace_scale(l1_sensitivity, eps):
    """Laplace scale b = Delta_1 / eps."""
    _check_positive("l1_sensitivity", l1_sensitivity)
    _check_positive("eps", eps)
    return l1_sensitivity / eps


def gaussian_sigma(l2_sensitivity, budget):
    """Gaussian noise scale for the given L2 sensitivity and budget.

    zCDP: Delta_2 / sqrt(2 rho). Approximate DP: Delta_2 sqrt(2 ln(2/delta)) / eps.
    """
    _check_positive("l2_sensitivity", l2_sensitivity)
    if budget.kind == ZCDP:
        _check_positive("rho", budget.rho)
        return l2_sensitivity / math.sqrt(2.0 * budget.rho)
    _check_positive("eps", budget.eps)
    if not 0 < budget.delta < 1:
        raise ParameterError("Gaussian mechanism needs 0 < delta < 1")
    return l2_sensitivity * math.sqrt(2.0 * math.log(2.0 / budget.delta)) / budget.eps


class ZeroNoise:
    """Test-only random source whose noise draws are all exactly zero.

    Each draw is logged in ``draws`` as (distribution, scale, shape) so tests
    can check which mechanisms fired and at which scale.
    """

    def __init__(self):
        self.draws = []

    def _zeros(self, kind, scale, size):
        self.draws.append((kind, float(scale), size))
        if size is None:
            return 0.0
        return np.zeros(size)

    def laplace(self, loc=0.0, scale=1.0, size=None):
        return self._zeros("laplace", scale, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._zeros("normal", scale, size)


def _as_finite(value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError("mechanism input contains non-finite values")
    return arr


def laplace_mechanism(value, l1_sensitivity, eps, rng, accountant=None, label="laplace"):
    """value + iid Laplace(Delta_1/eps) noise per coordinate (eps-DP)."""
    arr = _as_finite(value)
    b = laplace_scale(l1_sensitivity, eps)
    if accountant is not None:
        accountant.spend(PrivacyBudget.approx(eps, 0.0), label)
    return arr + rng.laplace(0.0, b, size=arr.shape)


def symmetric_gaussian(d, sigma, rng):
    """Symmetric d x d noise: iid N(0, sigma^2) on and above the diagonal, mirrored below."""
    g = np.triu(rng.normal(0.0, sigma, size=(d, d)))
    return g + np.triu(g, 1).T


def gaussian_mechanism(value, l2_sensitivity, budget, rng, accountant=None, label="gaussian"):
    """Add Gaussian noise calibrated to the L2 sensitivity and budget.

    A square 2-D input is treated as a symmetric matrix: it must be symmetric
    to 1e-9, and the noise is drawn on the upper triangle and mirrored, so the
    output is exactly symmetric.
    """
    arr = _as_finite(value)
    sigma = gaussian_sigma(l2_sensitivity, budget)
    if accountant is not None:
        accountant.spend(budget, label)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1]:
            raise InputError("matrix input must be square")
        tol = 1e-9 * max(1.0, float(np.max(np.abs(arr)))) if arr.size else 0.0
        if np.max(np.abs(arr - arr.T), initial=0.0) > tol:
            raise InputError("matrix input is not symmetric")
        arr = (arr + arr.T) / 2
        return arr + symmetric_gaussian(arr.shape[0], sigma, rng)
    if arr.ndim > 2:
        raise InputError("value must be a scalar, vector or symmetric matrix")
    return arr + rng.normal(0.0, sigma, size=arr.shape)


def pcount(n_items, budget, rng, accountant=None, label="pcount"):
    """Noisy count n + Laplace(1/eps); a zCDP budget uses eps = sqrt(2 rho)."""
    if n_items < 0:
        raise ParameterError("n_items must be nonnegative")
    eps = budget.pure_eps()
    _check_positive("count epsilon", eps)
    if accountant is not None:
        accountant.spend(budget, label)
    return float(n_items) + float(rng.laplace(0.0, 1.0 / eps))


def pcount_radius(beta, eps):
    """Accuracy radius ln(1/beta)/eps of pcount at failure probability beta."""
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    _check_positive("eps", eps)
    return math.log(1.0 / beta) / eps


# ---------------------------------------------------------------------------
# Accounting


class _Node:
    def __init__(self, mode, label="", slack=0.0, budget=None):
        self.mode = mode
        self.label = label
        self.slack = slack
        self.budget = budget
        self.children = []


class Accountant:
    """Tallies privacy spending through a pipeline run.

    Spends are grouped in a tree. Sequential groups add up, parallel groups
    (mechanisms on disjoint private rows) cost the maximum over branches, and
    advanced groups recompose their children with advanced composition when
    the budget is approximate DP. Tallies are kept as exact fractions.
    """

    def __init__(self, declared):
        self.declared = declared
        self._root = _Node("seq", "root")
        self._stack = [self._root]
        self.log = []

    def spend(self, budget, label=""):
        if budget.kind != self.declared.kind:
            if not (budget.kind == APPROX and budget.delta == 0 and self.declared.kind == ZCDP):
                raise BudgetKindError(
                    f"spend of kind {budget.kind} against a {self.declared.kind} budget")
        self._stack[-1].children.append(_Node("leaf", label, budget=budget))
        self.log.append((label, budget))

    @contextmanager
    def _group(self, mode, label, slack=0.0):
        node = _Node(mode, label, slack)
        self._stack[-1].children.append(node)
        self._stack.append(node)
        try:
            yield self
        finally:
            self._stack.pop()

    def sequential(self, label=""):
        return self._group("seq", label)

    def parallel(self, label=""):
        """Group whose direct children run on disjoint private rows."""
        return self._group("par", label)

    def advanced(self, slack, label=""):
        """Group recomposed by advanced composition with delta slack ``slack``."""
        return self._group("adv", label, slack)

    # Costs are (rho,) for zCDP and (eps, delta) for approx, as Fractions.
    def _leaf_cost(self, b):
        if self.declared.kind == ZCDP:
            if b.kind == ZCDP:
                return (Fraction(b.rho),)
            return (Fraction(b.eps) ** 2 / 2,)
        return (Fraction(b.eps), Fraction(b.delta))

    def _zero(self):
        return (Fraction(0),) if self.declared.kind == ZCDP else (Fraction(0), Fraction(0))

    def _cost(self, node):
        if node.mode == "leaf":
            return self._leaf_cost(node.budget)
        costs = [self._cost(c) for c in node.children]
        if not costs:
            return self._zero()
        if node.mode == "par":
            return tuple(max(c[i] for c in costs) for i in range(len(costs[0])))
        basic = tuple(sum(c[i] for c in costs) for i in range(len(costs[0])))
        if node.mode == "seq" or self.declared.kind == ZCDP:
            return basic
        eps0 = max(c[0] for c in costs)
        if not (0 < eps0 <= 1 and node.slack > 0):
            return basic
        eps_adv = Fraction(advanced_epsilon(float(eps0), len(costs), node.slack))
        if eps_adv >= basic[0]:
            return basic
        return (eps_adv, Fraction(node.slack) + basic[1])

    def spent_exact(self):
        """Exact spent cost as a tuple of Fractions."""
        return self._cost(self._root)

    def spent(self):
        c = self.spent_exact()
        if self.declared.kind == ZCDP:
            return PrivacyBudget.zcdp(float(c[0]))
        return PrivacyBudget.approx(float(c[0]), float(c[1]))

    def within_budget(self):
        c = self.spent_exact()
        if self.declared.kind == ZCDP:
            return c[0] <= Fraction(self.declared.rho)
        return c[0] <= Fraction(self.declared.eps) and c[1] <= Fraction(self.declared.delta)


def spend_group(accountant, mode, label="", slack=0.0):
    """Open an accountant group, or a no-op context when there is no accountant."""
    if accountant is None:
        return _null()
    if mode == "seq":
        return accountant.sequential(label)
    if mode == "par":
        return accountant.parallel(label)
    return accountant.advanced(slack, label)


@contextmanager
def _null():
    yield None


def stream(seed, *index):
    """Generator for the RNG stream identified by a 64-bit seed and a stream index."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index)))
