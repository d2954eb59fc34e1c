"""Mean-oscillation seminorms over atom-tree filtrations.

The seminorm of f is the sup over levels n and level-n atoms B of

    (1/phi(P(B))) * ((1/P(B)) * int_B |f - E_n f|^p dP)^(1/p),

and the norm adds |Ef|.  For functions measurable at the deepest level
the sup over deeper levels vanishes, so finite trees give exact values.
Two code paths: exact rational arithmetic (p = 1, constant weight,
rational tree and values) and a vectorized float path for everything
else.  Ties in the sup are broken by (level, atom index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import phi as phimod
from .functions import expectation

COMPARE_SLACK = 1e-12  # float-mode comparison slack on norm identities


@dataclass(frozen=True)
class NormResult:
    """A computed sup with its witness and the per-level sup table."""

    value: object
    witness: tuple = None
    per_level: tuple = ()
    mean_abs: object = None
    note: str = ""

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        d = {
            "value": _num(self.value),
            "witness": list(self.witness) if self.witness is not None else None,
            "per_level": [_num(v) for v in self.per_level],
        }
        if self.mean_abs is not None:
            d["mean_abs"] = _num(self.mean_abs)
        if self.note:
            d["note"] = self.note
        return d


def _num(x):
    return str(x) if isinstance(x, Fraction) else float(x)


# -- weight caches per tree ----------------------------------------------------


def phi_level_values(tree, spec):
    """phi evaluated at every atom measure, one float array per level."""
    key = ("phi", spec)
    cached = tree._phi_cache.get(key)
    if cached is None:
        cached = []
        memo = {}
        for n in range(tree.depth + 1):
            measures = tree.level_arrays(n)[2]
            vals = np.empty_like(measures)
            for i, m in enumerate(measures):
                v = memo.get(m)
                if v is None:
                    v = float(phimod.eval_phi(spec, m))
                    memo[m] = v
                vals[i] = v
            cached.append(vals)
        tree._phi_cache[key] = cached
    return cached


def phi_star_level_values(tree, spec):
    """phi_star at every atom measure, one float array per level."""
    key = ("phi_star", spec)
    cached = tree._phi_cache.get(key)
    if cached is None:
        cached = []
        memo = {}
        for n in range(tree.depth + 1):
            measures = tree.level_arrays(n)[2]
            vals = np.empty_like(measures)
            for i, m in enumerate(measures):
                v = memo.get(m)
                if v is None:
                    v = phimod.phi_star(spec, m)
                    memo[m] = v
                vals[i] = v
            cached.append(vals)
        tree._phi_cache[key] = cached
    return cached


def _eval_phi_array(spec, r):
    """Vectorized weight evaluation for the closed-form families."""
    r = np.minimum(np.asarray(r, dtype=np.float64), 1.0)
    if spec.family == "one":
        return np.ones_like(r)
    if spec.family == "psi":
        return 1.0 / (1.0 - np.log(r))
    if spec.family == "powerlog":
        out = np.ones_like(r)
        if spec.alpha:
            out = out * r ** spec.alpha
        if spec.beta:
            out = out * (1.0 - np.log(r)) ** (-spec.beta)
        if spec.gamma:
            out = out * np.log(math.e - np.log(r)) ** (-spec.gamma)
        return out
    if spec.family == "quotient":
        base = spec.base
        star = _phi_star_array(base, r)
        if star is not None:
            return _eval_phi_array(base, r) / star
    return np.array([float(phimod.eval_phi(spec, x)) for x in np.atleast_1d(r)])


def _phi_star_array(spec, r):
    if spec.family == "one":
        return 1.0 - np.log(r)
    if spec.family == "psi":
        return 1.0 + np.log(1.0 - np.log(r))
    if spec.family == "powerlog" and spec.beta == 0.0 and spec.gamma == 0.0:
        if spec.alpha == 0.0:
            return 1.0 - np.log(r)
        return 1.0 + (1.0 - r ** spec.alpha) / spec.alpha
    return None


# -- core scans -----------------------------------------------------------------


def _use_exact(f, p, spec):
    return (f.tree.mode == "exact" and p == 1 and spec.family == "one"
            and f.has_exact_values)


def _scan_float(f, p, spec, want_fb=False):
    """Vectorized sup scan: returns (sup, witness, per_level, fb_sup).

    fb_sup is the sup over all atoms of |f_B| / phi_star(P(B)), reusing
    the per-level averages already in hand; None unless requested.
    """
    tree = f.tree
    values = f.values_array
    leafm = tree.leaf_measures_f()
    w = values * leafm
    invp = 1.0 / p
    phis = phi_level_values(tree, spec)
    stars = phi_star_level_values(tree, spec) if want_fb else None
    best = -math.inf
    witness = None
    per_level = []
    fb_sup = 0.0
    for n in range(tree.depth + 1):
        starts, lengths, measures = tree.level_arrays(n)
        if n == tree.depth:
            # deepest level: f is measurable, zero oscillation by definition
            per_level.append(0.0)
            if want_fb:
                fb_sup = max(fb_sup, float(np.max(np.abs(values) / stars[n])))
            continue
        sums = np.add.reduceat(w, starts)
        avg = sums / measures
        if want_fb:
            fb_sup = max(fb_sup, float(np.max(np.abs(avg) / stars[n])))
        dev = np.abs(values - np.repeat(avg, lengths))
        if p != 1:
            dev = dev ** p
        cint = np.add.reduceat(dev * leafm, starts)
        ratios = cint / measures
        if p != 1:
            ratios = ratios ** invp
        ratios = ratios / phis[n]
        i = int(np.argmax(ratios))
        level_sup = float(ratios[i])
        per_level.append(level_sup)
        if level_sup > best:
            best = level_sup
            witness = (n, i)
    if witness is None:  # depth-0 tree: only the zero deepest level
        best, witness = 0.0, (0, 0)
    return best, witness, tuple(per_level), (fb_sup if want_fb else None)


def _scan_exact(f, want_fb=False):
    """Exact rational sup scan for p = 1 with the constant weight."""
    tree = f.tree
    values = f.values
    leaves = tree.leaves
    best = None
    witness = None
    per_level = []
    fb_sup = 0.0
    stars = phi_star_level_values(tree, phimod.one()) if want_fb else None
    for n in range(tree.depth + 1):
        if n == tree.depth:
            per_level.append(Fraction(0))
            if want_fb:
                for i, v in enumerate(values):
                    fb_sup = max(fb_sup, abs(float(v)) / stars[n][i])
            continue
        level_sup = None
        level_arg = 0
        for j, atom in enumerate(tree.atoms(n)):
            total = Fraction(0)
            for i in range(atom.leaf_start, atom.leaf_end):
                total += values[i] * leaves[i].measure
            avg = total / atom.measure
            if want_fb:
                fb_sup = max(fb_sup, abs(float(avg)) / stars[n][j])
            cint = Fraction(0)
            for i in range(atom.leaf_start, atom.leaf_end):
                cint += abs(values[i] - avg) * leaves[i].measure
            val = cint / atom.measure
            if level_sup is None or val > level_sup:
                level_sup = val
                level_arg = j
        per_level.append(level_sup)
        if best is None or level_sup > best:
            best = level_sup
            witness = (n, level_arg)
    if best is None:  # depth-0 tree: only the zero-oscillation deepest level
        best, witness = Fraction(0), (0, 0)
    return best, witness, tuple(per_level), (fb_sup if want_fb else None)


def oscillation_scan(f, p, spec, want_fb=False, exact=None):
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if exact is None:
        exact = _use_exact(f, p, spec)
    if exact:
        if not _use_exact(f, p, spec):
            raise ValueError("exact scan needs a rational tree and values, "
                             "p = 1 and the constant weight")
        return _scan_exact(f, want_fb)
    return _scan_float(f, p, spec, want_fb)


# -- public norms ----------------------------------------------------------------


def campanato_seminorm(f, p, spec, exact=None):
    """Weighted mean-oscillation seminorm with witness; 0 iff f is constant."""
    value, witness, per_level, _ = oscillation_scan(f, p, spec, exact=exact)
    return NormResult(value=value, witness=witness, per_level=per_level)


def campanato_norm(f, p, spec, exact=None):
    """Seminorm plus |Ef| (a genuine norm; zero only for f = 0)."""
    sem = campanato_seminorm(f, p, spec, exact=exact)
    if isinstance(sem.value, Fraction):
        mean = abs(expectation(f))
    else:
        mean = abs(float(expectation(f)))
    return NormResult(value=sem.value + mean, witness=sem.witness,
                      per_level=sem.per_level, mean_abs=mean)


def chi_norm_closed_form(B, p, phi_spec):
    """Seminorm of an indicator from its ancestor chain alone.

    Only strict ancestors of the atom carry oscillation, and on the
    ancestor with measure M the level average is P(B)/M, which gives the
    two-term closed form summed below.  Agrees with the full sup scan
    exactly.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    m = B.measure
    terms = []
    anc = B.parent
    while anc is not None:
        M = anc.measure
        ratio = m / M
        if p == 1:
            inner = m * (1 - ratio) + (M - m) * ratio
            core = inner / M
        else:
            rf = float(ratio)
            inner = float(m) * (1.0 - rf) ** p + float(M - m) * rf ** p
            core = (inner / float(M)) ** (1.0 / p)
        val = core / phimod.eval_phi(phi_spec, float(M))
        terms.append((anc.level, val))
        anc = anc.parent
    if not terms:
        return NormResult(value=0, witness=None, per_level=())
    terms.reverse()
    best = None
    witness = None
    for level, val in terms:
        if best is None or val > best:
            best = val
            witness = (level,)  # ancestor level achieving the sup
    return NormResult(value=best, witness=witness,
                      per_level=tuple(val for _, val in terms))


# -- measurable-set (union-of-atoms) norm variants --------------------------------

F_NORM_LEVEL_BOUND = 20  # enumeration refuses levels with more atoms than this


def _level_cints(f, p, n):
    """Per-atom central integrals and measures at one level (floats)."""
    tree = f.tree
    values = f.values_array
    leafm = tree.leaf_measures_f()
    starts, lengths, measures = tree.level_arrays(n)
    if n == tree.depth:
        return np.zeros_like(measures), measures
    sums = np.add.reduceat(values * leafm, starts)
    avg = sums / measures
    dev = np.abs(values - np.repeat(avg, lengths))
    if p != 1:
        dev = dev ** p
    cint = np.add.reduceat(dev * leafm, starts)
    return cint, measures


def f_norm_exact(f, p, spec):
    """Sup over levels and nonempty unions of level atoms.

    Replaces single atoms by arbitrary measurable sets of the level;
    brute-force enumeration, refused beyond 2^20 subsets per level.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    tree = f.tree
    for n in range(tree.depth + 1):
        count = len(tree.atoms(n))
        if count > F_NORM_LEVEL_BOUND:
            raise ValueError(
                f"level {n} has {count} atoms, above the enumeration bound "
                f"{F_NORM_LEVEL_BOUND}; use f_norm_lower instead")
    best = -math.inf
    witness = None
    per_level = []
    invp = 1.0 / p
    for n in range(tree.depth + 1):
        cints, measures = _level_cints(f, p, n)
        k = len(measures)
        masks = np.arange(1, 2 ** k, dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(k)) & 1).astype(np.float64)
        csum = bits @ cints
        msum = np.minimum(bits @ measures, 1.0)
        vals = csum / msum
        if p != 1:
            vals = vals ** invp
        vals = vals / _eval_phi_array(spec, msum)
        i = int(np.argmax(vals))
        level_sup = float(vals[i])
        per_level.append(level_sup)
        if level_sup > best:
            best = level_sup
            members = tuple(int(j) for j in range(k) if (int(masks[i]) >> j) & 1)
            witness = (n, members)
    return NormResult(value=max(best, 0.0), witness=witness,
                      per_level=tuple(per_level))


def f_norm_lower(f, p, spec, budget):
    """Greedy lower bound for the union-of-atoms norm.

    Candidates are every singleton plus prefixes of the atoms sorted by
    oscillation density, grown up to `budget` atoms per level.  Always
    at least the plain seminorm and never above f_norm_exact.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    tree = f.tree
    best = -math.inf
    witness = None
    per_level = []
    invp = 1.0 / p
    for n in range(tree.depth + 1):
        cints, measures = _level_cints(f, p, n)
        k = len(measures)
        phis = _eval_phi_array(spec, measures)
        singles = cints / measures
        if p != 1:
            singles = singles ** invp
        singles = singles / phis
        level_sup = float(np.max(singles))
        level_arg = (int(np.argmax(singles)),)
        density = cints / measures
        order = np.lexsort((np.arange(k), -density))
        take = min(budget, k)
        csum = np.cumsum(cints[order[:take]])
        msum = np.minimum(np.cumsum(measures[order[:take]]), 1.0)
        vals = csum / msum
        if p != 1:
            vals = vals ** invp
        vals = vals / _eval_phi_array(spec, msum)
        j = int(np.argmax(vals))
        if float(vals[j]) > level_sup:
            level_sup = float(vals[j])
            level_arg = tuple(sorted(int(x) for x in order[:j + 1]))
        per_level.append(level_sup)
        if level_sup > best:
            best = level_sup
            witness = (n, level_arg)
    return NormResult(value=max(best, 0.0), witness=witness,
                      per_level=tuple(per_level), note="lower bound")
