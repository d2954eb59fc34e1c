"""Named verification suites: each one measures the constants of an
inequality or construction on a concrete tree and reports pass/fail.

The registry drives the `verify` CLI subcommand; suites are pure
functions of a VerifyContext so they can also be called from tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import phi as phimod
from .constructions import (extremal_chain_function,
                            lipschitz_compose_check,
                            martingale_identity_defect,
                            measure_chain_constants, sin_h_multiplier)
from .filtration import chain_to_root, check_chain_gaps, regularity_constant
from .functions import (conditional_expectation, indicator,
                        random_functions)
from .multiplier import (check_product_estimate, conditional_multiplier_check,
                         linf_bound_check, theorem1_certificate)
from .norms import (campanato_seminorm, chi_norm_closed_form,
                    oscillation_scan)
from .report import Check, VerificationReport

INEQ_SLACK = 1e-10
REL_TOL = 1e-10


@dataclass
class VerifyContext:
    tree: object
    spec: object
    p: float = 1.0
    seed: int = 0
    random_count: int = 50
    chain_count: int = 16
    atom_sample: int = 256


def is_dyadic(tree):
    return all(len(level) == 2 ** n and
               all(a.measure == Fraction(1, 2 ** n) for a in level)
               for n, level in enumerate(tree.levels))


def _known_regime(ctx):
    """True when the derived numeric thresholds below were calibrated:
    dyadic tree, constant weight, p = 1."""
    return is_dyadic(ctx.tree) and ctx.spec.family == "one" and ctx.p == 1


def _rel_err(a, b):
    a, b = float(a), float(b)
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


# -- suites ---------------------------------------------------------------------


def suite_chain_gaps(ctx):
    R = regularity_constant(ctx.tree)
    rep = check_chain_gaps(ctx.tree, R)
    rep.checks.insert(0, Check(
        name="regularity_constant",
        anchor="largest parent/child measure ratio",
        measured={"R": float(R)},
        threshold="reported",
        passed=True,
    ))
    return rep


def suite_indicator_norms(ctx):
    tree, spec, p = ctx.tree, ctx.spec, ctx.p
    atoms = [a for level in tree.levels for a in level]
    if len(atoms) > ctx.atom_sample:
        rng = np.random.default_rng(ctx.seed)
        picks = rng.choice(len(atoms), size=ctx.atom_sample, replace=False)
        atoms = [atoms[i] for i in sorted(int(x) for x in picks)]
    worst_rel = 0.0
    worst_atom = None
    bound = 0.0
    for B in atoms:
        closed = chi_norm_closed_form(B, p, spec)
        full = campanato_seminorm(indicator(tree, B), p, spec, exact=False)
        rel = _rel_err(closed.value, full.value)
        if rel > worst_rel:
            worst_rel = rel
            worst_atom = B.id
        norm_B = float(closed.value) + float(B.measure)
        bound = max(bound, norm_B * float(phimod.eval_phi(spec, float(B.measure))))
    checks = [Check(
        name="indicator_closed_form_equivalence",
        anchor="ancestor-chain closed form equals the full sup scan",
        measured={"atoms": len(atoms), "worst_rel_err": worst_rel},
        threshold=f"rel err <= {REL_TOL}",
        passed=worst_rel <= REL_TOL,
        witness=list(worst_atom) if worst_atom else None,
    )]
    if _known_regime(ctx):
        checks.append(Check(
            name="indicator_norm_bound",
            anchor="weighted indicator norms are uniformly bounded",
            measured={"max_norm_times_phi": bound},
            threshold="<= 1 (dyadic, constant weight, p=1)",
            passed=bound <= 1.0 + 1e-12,
        ))
    else:
        checks.append(Check(
            name="indicator_norm_bound",
            anchor="weighted indicator norms are uniformly bounded",
            measured={"max_norm_times_phi": bound},
            threshold="reported",
            passed=True,
        ))
    return VerificationReport(suite="indicator_norms", checks=checks)


def suite_atom_average_growth(ctx):
    tree, spec, p = ctx.tree, ctx.spec, ctx.p
    family = random_functions(tree, min(ctx.random_count, 32), ctx.seed)
    family.append(extremal_chain_function(
        tree, chain_to_root(tree, tree.leaves[0]), spec).f)
    worst = 0.0
    for f in family:
        sem, _, _, fb = oscillation_scan(f, p, spec, want_fb=True, exact=False)
        norm_f = float(sem) + abs(float(_mean(f)))
        if norm_f > 0:
            worst = max(worst, fb / norm_f)
    known = _known_regime(ctx)
    return VerificationReport(suite="atom_average_growth", checks=[Check(
        name="atom_average_phistar_growth",
        anchor="atom averages grow at most like phi_star times the norm",
        measured={"max_ratio": worst, "family": len(family)},
        threshold="<= 3 (dyadic, constant weight, p=1)" if known else "reported",
        passed=(worst <= 3.0) if known else True,
    )])


def _mean(f):
    from .functions import expectation
    return expectation(f)


def suite_extremal_chain(ctx):
    tree, spec, p = ctx.tree, ctx.spec, ctx.p
    rng = np.random.default_rng(ctx.seed)
    count = min(ctx.chain_count, tree.leaf_count)
    picks = sorted(int(x) for x in
                   rng.choice(tree.leaf_count, size=count, replace=False))
    defect = 0.0
    c1 = 0.0
    c1_min = math.inf
    c2 = math.inf
    tail = 0.0
    for j in picks:
        con = extremal_chain_function(tree, chain_to_root(tree, tree.leaves[j]),
                                      spec)
        defect = max(defect, float(martingale_identity_defect(con)))
        upper, lower = measure_chain_constants(con, p, spec)
        c1 = max(c1, upper)
        c1_min = min(c1_min, upper)
        c2 = min(c2, lower)
        tail = max(tail, con.truncation_tail_scale(p))
    spread = (c1 - c1_min) / c1 if c1 > 0 else 0.0
    known = _known_regime(ctx)
    checks = [
        Check(
            name="partial_sums_are_conditional_expectations",
            anchor="conditioning the chain function reproduces its partial sums",
            measured={"chains": count, "max_defect": defect},
            threshold=f"defect <= {INEQ_SLACK}",
            passed=defect <= INEQ_SLACK,
        ),
        Check(
            name="chain_norm_bounded",
            anchor="chain functions have uniformly bounded norm",
            measured={"C1": c1, "spread": spread,
                      "truncation_tail_scale": tail},
            threshold="<= 3 and spread <= 5% (dyadic, constant weight, p=1)"
                      if known else "reported",
            passed=(c1 <= 3.0 + INEQ_SLACK and spread <= 0.05)
                   if known else True,
        ),
        Check(
            name="chain_average_growth",
            anchor="chain atom averages dominate phi_star",
            measured={"C2": c2},
            threshold=">= 1 (dyadic, constant weight, p=1)" if known
                      else "> 0",
            passed=(c2 >= 1.0 - INEQ_SLACK) if known else c2 > 0.0,
        ),
    ]
    return VerificationReport(suite="extremal_chain", checks=checks)


def suite_product_estimate(ctx):
    tree, spec, p = ctx.tree, ctx.spec, ctx.p
    pairs = ctx.random_count
    fs = random_functions(tree, pairs, ctx.seed)
    gs = random_functions(tree, pairs, ctx.seed + 1)
    failures = 0
    worst = -math.inf
    for f, g in zip(fs, gs):
        rep = check_product_estimate(f, g, p, spec)
        m = rep.checks[0].measured
        worst = max(worst, m["gap"] - m["bound"])
        if not rep.passed:
            failures += 1
    return VerificationReport(suite="product_estimate", checks=[Check(
        name="product_estimate_random_pairs",
        anchor="product functional vs product seminorm gap bound",
        measured={"pairs": pairs, "failures": failures, "worst_margin": worst},
        threshold="0 failures",
        passed=failures == 0,
    )])


def suite_lipschitz(ctx):
    tree = ctx.tree
    failures = 0
    worst = -math.inf
    for f in random_functions(tree, ctx.random_count, ctx.seed):
        composed = f.apply(lambda v: math.sin(float(v)))
        rep = lipschitz_compose_check(f, 1.0, composed)
        worst = max(worst, rep.checks[0].measured["worst_margin"])
        if not rep.passed:
            failures += 1
    return VerificationReport(suite="lipschitz_sine", checks=[Check(
        name="sine_composition_factor2",
        anchor="composition with a Lipschitz map doubles mean oscillation "
               "at most",
        measured={"functions": ctx.random_count, "failures": failures,
                  "worst_margin": worst},
        threshold="0 failures",
        passed=failures == 0,
    )])


def suite_truncation_monotone(ctx):
    tree, spec, p = ctx.tree, ctx.spec, ctx.p
    worst = -math.inf
    eq_defect = 0.0
    for f in random_functions(tree, ctx.random_count, ctx.seed):
        sem = float(campanato_seminorm(f, p, spec, exact=False).value)
        for n in range(tree.depth + 1):
            sem_n = float(campanato_seminorm(conditional_expectation(f, n), p,
                                             spec, exact=False).value)
            worst = max(worst, sem_n - sem)
            if n == tree.depth:
                eq_defect = max(eq_defect, abs(sem_n - sem))
    return VerificationReport(suite="truncation_monotone", checks=[
        Check(
            name="truncation_never_increases_seminorm",
            anchor="conditioned truncations have no larger seminorm",
            measured={"worst_margin": worst},
            threshold=f"margin <= {INEQ_SLACK}",
            passed=worst <= INEQ_SLACK,
        ),
        Check(
            name="deepest_truncation_equality",
            anchor="the deepest truncation is the function itself",
            measured={"max_defect": eq_defect},
            threshold="0 (identical computation)",
            passed=eq_defect == 0.0,
        ),
    ])


def suite_conditional_multipliers(ctx):
    g = sin_h_multiplier(ctx.tree, chain_to_root(ctx.tree, ctx.tree.leaves[0]),
                         ctx.spec)
    return conditional_multiplier_check(g, ctx.p, ctx.spec, chains=4,
                                        randoms=8, seed=ctx.seed)


SUITE_REGISTRY = {
    "chain_gaps": suite_chain_gaps,
    "indicator_norms": suite_indicator_norms,
    "atom_average_growth": suite_atom_average_growth,
    "extremal_chain": suite_extremal_chain,
    "product_estimate": suite_product_estimate,
    "lipschitz_sine": suite_lipschitz,
    "truncation_monotone": suite_truncation_monotone,
    "conditional_multipliers": suite_conditional_multipliers,
}


def run_verify_suites(ctx, names=None):
    names = list(SUITE_REGISTRY) if names is None else list(names)
    reports = []
    for name in names:
        if name not in SUITE_REGISTRY:
            raise ValueError(f"unknown verification suite {name!r}")
        reports.append(SUITE_REGISTRY[name](ctx))
    return reports


def run_multiplier_suite(ctx, g, g_label="g", sample_chains=None):
    """The multiplier certificate plus its supporting sup-norm checks."""
    if sample_chains is None:
        sample_chains = min(64, ctx.tree.leaf_count)
    cert = theorem1_certificate(g, ctx.p, ctx.spec, sample_chains=sample_chains,
                                seed=ctx.seed, g_label=g_label)
    reports = [linf_bound_check(g, ctx.p, ctx.spec),
               conditional_multiplier_check(g, ctx.p, ctx.spec, seed=ctx.seed)]
    return cert, reports
