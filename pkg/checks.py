"""Registry of campaign checks.

Each check id maps to a builder `(rng, n, cfg) -> TraceCheckInstance` and an
evaluator `(instance, cfg) -> Verdict`. The campaign, the `check` subcommand
and witness replay all go through the same evaluator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from commuting_means import CommutingPositivePair, make_pair, mean_chain, quadrature_oracle_check
from errors import ConfigError
from linalg_core import HermitianMatrix, decomposition_check, functional_calculus_check, loewner_leq, order_from_scalar_check
from models import CampaignConfig, ChainReport, Verdict, VerdictStatus
from operator_hh import (
    agm_inequality_check,
    check_operator_geo_convex,
    closure_check,
    exp_operator_geo_convex_check,
    exp_special_chain,
    hh_operator_log_chain,
    hh_operator_unlogged_chain,
    log_monotone_compatibility,
    operator_convex_hh_chain,
)
from random_instances import (
    gen_commuting_pair,
    gen_complex,
    gen_hermitian,
    gen_normal,
    gen_pd,
    gen_psd,
    log_uniform,
)
from scalar_functions import exp_function, polynomial, resolve_function
from scalar_hh import (
    check_geo_convex,
    check_midpoint_convex,
    hh_chain_basic,
    hh_classical_chain,
    hh_quarter_chain,
    hh_refinement,
    log_exp_transform,
)
from trace_ineq import (
    TraceCheckInstance,
    bhatia_davis_check,
    dannan_block_check,
    dragomir_alpha_check,
    dragomir_unit_interval_check,
    normal_dragomir_check,
    pair_instance,
    psd_trace_bounds_check,
    psd_trace_product_chain,
    trace_axioms_check,
    trace_cauchy_schwarz,
    trace_geo_convex_check,
    trace_log_hh_chain,
    trace_x_refinement_check,
)

Builder = Callable[[np.random.Generator, int, CampaignConfig], TraceCheckInstance]
Evaluator = Callable[[TraceCheckInstance, CampaignConfig], Verdict]
# Chain checks hand back the whole chain; a Verdict alone means no chain was built.
ChainEvaluator = Callable[[TraceCheckInstance, CampaignConfig], "ChainReport | Verdict"]

AGM_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)
BHATIA_EXPONENTS = (0.5, 1.0, 2.0)
DRAGOMIR_ALPHAS = (-1.0, 0.3, 2.0)
OPERATOR_CONVEX_FUNCTIONS = ("square", "inverse")
MAX_SUM_PAIRS = 4
SCALAR_DIM = 1


@dataclass(frozen=True)
class CheckDefinition:
    name: str
    build: Builder
    evaluate: Evaluator
    # Run when a campaign names no checks.
    default: bool = True
    # Left out of listings; only reachable by naming it.
    hidden: bool = False
    # Scalar checks ignore n; the campaign runs them once per trial at SCALAR_DIM.
    dimensional: bool = True
    chain: ChainEvaluator | None = None

    def outcome(self, instance: TraceCheckInstance, cfg: CampaignConfig) -> tuple[Verdict, ChainReport | None]:
        if self.chain is None:
            return self.evaluate(instance, cfg), None
        report = self.chain(instance, cfg)
        if isinstance(report, ChainReport):
            return report.verdict, report
        return report, None


def _chain_check(name: str, build: Builder, chain: ChainEvaluator, **flags) -> CheckDefinition:
    def evaluate(instance, cfg):
        report = chain(instance, cfg)
        return report.verdict if isinstance(report, ChainReport) else report
    return CheckDefinition(name, build, evaluate, chain=chain, **flags)


def _pick(rng: np.random.Generator, options):
    return options[int(rng.integers(len(options)))]


def _function(cfg: CampaignConfig, rng: np.random.Generator) -> str:
    return _pick(rng, list(cfg.function_set))


def _scalar_interval(rng: np.random.Generator, cfg: CampaignConfig) -> tuple[float, float]:
    x, y = log_uniform(rng, 2, cfg.spectra_range)
    return float(min(x, y)), float(max(x, y))


def _pair(instance: TraceCheckInstance) -> CommutingPositivePair:
    return make_pair(instance.operands["u"], instance.params["a"], instance.params["b"])


def _f(instance: TraceCheckInstance):
    return resolve_function(instance.params["function"])


# ── builders ─────────────────────────────────────────────────────────────────


def _scalar_builder(check: str, with_lambda: bool = False) -> Builder:
    def build(rng, n, cfg):
        name = _function(cfg, rng)
        a, b = _scalar_interval(rng, cfg)
        params = {"function": name, "a": a, "b": b}
        if with_lambda:
            params["lam"] = float(rng.uniform())
        return TraceCheckInstance(check, {}, params)
    return build


def _pair_builder(check: str, with_function: bool = True, **choices) -> Builder:
    def build(rng, n, cfg):
        p = gen_commuting_pair(rng, n, cfg.spectra_range)
        params = {key: _pick(rng, options) for key, options in choices.items()}
        if with_function:
            params["function"] = _function(cfg, rng)
        return pair_instance(check, p, **params)
    return build


def _complex_builder(check: str, names: tuple[str, ...], **choices) -> Builder:
    def build(rng, n, cfg):
        operands = {name: gen_complex(rng, n) for name in names}
        params = {key: (_pick(rng, options) if isinstance(options, tuple) else options(rng))
                  for key, options in choices.items()}
        return TraceCheckInstance(check, operands, params)
    return build


def _build_eig(rng, n, cfg):
    return TraceCheckInstance("eig_soundness", {"h": gen_hermitian(rng, n).array})


def _build_functional_calculus(rng, n, cfg):
    return TraceCheckInstance("functional_calculus", {"h": gen_hermitian(rng, n).array})


def _build_order(rng, n, cfg):
    return TraceCheckInstance("order_from_scalar", {"h": gen_psd(rng, n, cfg.spectra_range).array})


def _build_mean_chain(rng, n, cfg):
    a, b = log_uniform(rng, 2, cfg.spectra_range)
    return TraceCheckInstance("mean_chain", {}, {"a": float(a), "b": float(b)})


def _build_operator_convex(rng, n, cfg):
    name = _pick(rng, OPERATOR_CONVEX_FUNCTIONS)
    if name == "inverse":
        a, b = gen_pd(rng, n, cfg.spectra_range), gen_pd(rng, n, cfg.spectra_range)
    else:
        a, b = gen_hermitian(rng, n), gen_hermitian(rng, n)
    return TraceCheckInstance("operator_convex_chain", {"a": a.array, "b": b.array}, {"function": name})


def _build_agm(check: str) -> Builder:
    def build(rng, n, cfg):
        a, b = gen_pd(rng, n, cfg.spectra_range), gen_pd(rng, n, cfg.spectra_range)
        return TraceCheckInstance(check, {"a": a.array, "b": b.array}, {"nu": _pick(rng, AGM_WEIGHTS)})
    return build


def _build_commuting_psd(check: str) -> Builder:
    def build(rng, n, cfg):
        p = gen_commuting_pair(rng, n, cfg.spectra_range)
        return TraceCheckInstance(check, {"a": p.matrix_a().array, "b": p.matrix_b().array})
    return build


def _build_psd_bounds(rng, n, cfg):
    return TraceCheckInstance(
        "psd_trace_bounds",
        {"a": gen_psd(rng, n, cfg.spectra_range).array, "b": gen_psd(rng, n, cfg.spectra_range).array},
    )


def _build_optional_x(check: str, **choices) -> Builder:
    """Complex A, B and X; one trial in four takes X = I through the identity path."""
    def build(rng, n, cfg):
        operands = {"a": gen_complex(rng, n), "b": gen_complex(rng, n)}
        x = gen_complex(rng, n)
        if rng.uniform() >= 0.25:
            operands["x"] = x
        params = {key: _pick(rng, options) for key, options in choices.items()}
        return TraceCheckInstance(check, operands, params)
    return build


def _build_normal(rng, n, cfg):
    return TraceCheckInstance(
        "normal_dragomir",
        {"a": gen_normal(rng, n), "b": gen_normal(rng, n), "x": gen_complex(rng, n)},
        {"alpha": _pick(rng, DRAGOMIR_ALPHAS)},
    )


def _build_dannan(rng, n, cfg):
    k = int(rng.integers(1, MAX_SUM_PAIRS + 1))
    if rng.uniform() < 0.5:
        pairs = [gen_commuting_pair(rng, n, cfg.spectra_range) for _ in range(k)]
        s = [p.matrix_a().array for p in pairs]
        t = [p.matrix_b().array for p in pairs]
    else:
        s = [gen_complex(rng, n) for _ in range(k)]
        t = [gen_complex(rng, n) for _ in range(k)]
    return TraceCheckInstance("dannan_block", {"s": s, "t": t})


# ── evaluators ───────────────────────────────────────────────────────────────


def _scalar_outcome(instance, cfg):
    f, (a, b) = _f(instance), (instance.params["a"], instance.params["b"])
    q, tol = cfg.quadrature, cfg.tolerance
    check = instance.check
    if check == "geo_convex_scalar":
        return check_geo_convex(f, a, b)
    if check == "hh_chain_basic":
        return hh_chain_basic(f, a, b, q, tol)
    if check == "hh_refinement":
        return hh_refinement(f, a, b, instance.params["lam"], q, tol)
    if check == "hh_quarter_chain":
        return hh_quarter_chain(f, a, b, q, tol)
    if check == "hh_classical_chain":
        if not f.convex:
            return Verdict(VerdictStatus.SKIPPED, 0.0, details={"reason": f"{f.name} is not convex"})
        return hh_classical_chain(f, a, b, q, tol)
    return check_midpoint_convex(log_exp_transform(f), math.log(a), math.log(b))


def _eval_operator(instance, cfg):
    p = _pair(instance)
    q, tol = cfg.quadrature, cfg.tolerance
    check = instance.check
    if check == "exp_special_chain":
        return exp_special_chain(p, q, tol).overall
    if check == "exp_operator_geo_convex":
        return exp_operator_geo_convex_check(p, instance.params["nu"], tol).overall
    f = _f(instance)
    if check == "operator_geo_convex":
        return check_operator_geo_convex(f, p, tol=tol)
    if check == "hh_operator_log_chain":
        return hh_operator_log_chain(f, p, q, tol).overall
    if check == "hh_operator_unlogged_chain":
        return hh_operator_unlogged_chain(f, p, q, tol).overall
    if check == "log_monotone_compatibility":
        return log_monotone_compatibility(
            hh_operator_unlogged_chain(f, p, q, tol), hh_operator_log_chain(f, p, q, tol), p, tol
        )
    kind = check.removeprefix("closure_")
    return closure_check(kind, f, p, tol=tol)


def _eval_operator_convex(instance, cfg):
    return operator_convex_hh_chain(
        _f(instance), instance.operands["a"], instance.operands["b"], cfg.quadrature, cfg.tolerance
    ).overall


def _eval_inverted(instance, cfg):
    """(A+B)/2 ≤ √(AB) on a commuting pair: the reversed AM–GM, false off the diagonal A = B."""
    p = _pair(instance)
    arithmetic = HermitianMatrix.from_array(0.5 * (p.matrix_a().array + p.matrix_b().array))
    geometric = p.materialize(np.sqrt(p.a * p.b))
    verdict = loewner_leq(arithmetic, geometric, cfg.tolerance)
    if verdict.witness is not None:
        verdict.witness = instance.to_json()
    return verdict


def _trace_outcome(instance, cfg):
    ops, params, tol = instance.operands, instance.params, cfg.tolerance
    check = instance.check
    if check == "trace_axioms":
        return trace_axioms_check(ops["a"], ops["t"], tol)
    if check == "psd_trace_product_chain":
        return psd_trace_product_chain(ops["a"], ops["b"], tol)
    if check == "psd_trace_bounds":
        return psd_trace_bounds_check(ops["a"], ops["b"], tol)
    if check == "trace_geo_convex":
        return trace_geo_convex_check(_pair(instance), tol=tol)
    if check == "trace_log_hh_chain":
        return trace_log_hh_chain(_pair(instance), cfg.quadrature, tol)
    if check == "bhatia_davis":
        return bhatia_davis_check(ops["a"], ops.get("x"), ops["b"], params.get("r", 1.0), tol)
    if check == "trace_cauchy_schwarz":
        return trace_cauchy_schwarz(ops["a"], ops["b"], ops.get("x"), tol)
    if check == "dragomir_alpha":
        return dragomir_alpha_check(ops["a"], ops["b"], ops["x"], params.get("alpha", 0.5), tol)
    if check == "trace_x_refinement":
        return trace_x_refinement_check(ops["x"], params.get("alpha", 0.5), tol)
    if check == "normal_dragomir":
        return normal_dragomir_check(ops["a"], ops["b"], ops["x"], params.get("alpha", 0.5), tol)
    if check == "dragomir_unit_interval":
        return dragomir_unit_interval_check(ops["a"], ops["b"], ops["x"], params.get("alpha", 0.5), tol)
    return dannan_block_check(ops["s"], ops["t"], tol)


def _eval_linalg(instance, cfg):
    h = instance.operands["h"]
    if instance.check == "eig_soundness":
        return decomposition_check(h)
    if instance.check == "functional_calculus":
        return functional_calculus_check(h, cfg.tolerance)
    return order_from_scalar_check(exp_function(), polynomial([1.0, 1.0]), h, tol=cfg.tolerance)


def _mean_chain(instance, cfg):
    return mean_chain(instance.params["a"], instance.params["b"], cfg.tolerance)


def _eval_quadrature(instance, cfg):
    return quadrature_oracle_check(_pair(instance), cfg.quadrature)


def _definitions() -> list[CheckDefinition]:
    defs = [
        CheckDefinition("eig_soundness", _build_eig, _eval_linalg),
        CheckDefinition("functional_calculus", _build_functional_calculus, _eval_linalg),
        CheckDefinition("order_from_scalar", _build_order, _eval_linalg),
        _chain_check("mean_chain", _build_mean_chain, _mean_chain, dimensional=False),
        CheckDefinition("quadrature_oracle", _pair_builder("quadrature_oracle", with_function=False), _eval_quadrature),
    ]
    for name in ("geo_convex_scalar", "hh_chain_basic", "hh_quarter_chain", "hh_classical_chain",
                 "log_exp_transform"):
        defs.append(_chain_check(name, _scalar_builder(name), _scalar_outcome, dimensional=False))
    defs.append(_chain_check("hh_refinement", _scalar_builder("hh_refinement", with_lambda=True), _scalar_outcome,
                             dimensional=False))
    for name in ("operator_geo_convex", "hh_operator_log_chain", "hh_operator_unlogged_chain",
                 "log_monotone_compatibility", "closure_product", "closure_t_times_f",
                 "closure_scalar_multiple", "closure_norm_mcintosh"):
        defs.append(CheckDefinition(name, _pair_builder(name), _eval_operator))
    defs += [
        # Sum closure rests on an ambiguous Hölder step; it runs only when named.
        CheckDefinition("closure_sum", _pair_builder("closure_sum"), _eval_operator, default=False),
        CheckDefinition("exp_special_chain", _pair_builder("exp_special_chain", with_function=False), _eval_operator),
        CheckDefinition("exp_operator_geo_convex",
                        _pair_builder("exp_operator_geo_convex", with_function=False, nu=AGM_WEIGHTS),
                        _eval_operator),
        CheckDefinition("operator_convex_chain", _build_operator_convex, _eval_operator_convex),
        CheckDefinition("agm_inequality", _build_agm("agm_inequality"),
                        lambda inst, cfg: agm_inequality_check(inst.operands["a"], inst.operands["b"],
                                                               inst.params["nu"], cfg.tolerance)),
        _chain_check("trace_axioms", _complex_builder("trace_axioms", ("a", "t")), _trace_outcome),
        _chain_check("psd_trace_product_chain", _build_commuting_psd("psd_trace_product_chain"), _trace_outcome),
        _chain_check("psd_trace_bounds", _build_psd_bounds, _trace_outcome),
        _chain_check("trace_geo_convex", _pair_builder("trace_geo_convex", with_function=False), _trace_outcome),
        _chain_check("trace_log_hh_chain", _pair_builder("trace_log_hh_chain", with_function=False), _trace_outcome),
        _chain_check("bhatia_davis", _build_optional_x("bhatia_davis", r=BHATIA_EXPONENTS), _trace_outcome),
        _chain_check("trace_cauchy_schwarz", _build_optional_x("trace_cauchy_schwarz"), _trace_outcome),
        _chain_check("dragomir_alpha", _complex_builder("dragomir_alpha", ("a", "b", "x"), alpha=DRAGOMIR_ALPHAS),
                     _trace_outcome),
        _chain_check("trace_x_refinement", _complex_builder("trace_x_refinement", ("x",), alpha=DRAGOMIR_ALPHAS),
                     _trace_outcome),
        _chain_check("normal_dragomir", _build_normal, _trace_outcome),
        _chain_check("dragomir_unit_interval",
                     _complex_builder("dragomir_unit_interval", ("a", "b", "x"),
                                      alpha=lambda rng: float(rng.uniform())),
                     _trace_outcome),
        _chain_check("dannan_block", _build_dannan, _trace_outcome),
        CheckDefinition("inverted_am_gm", _pair_builder("inverted_am_gm", with_function=False), _eval_inverted,
                        default=False, hidden=True),
    ]
    return defs


REGISTRY: dict[str, CheckDefinition] = {d.name: d for d in _definitions()}


def get_check(name: str) -> CheckDefinition:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown check '{name}'") from None


def default_checks() -> list[str]:
    return [name for name, d in REGISTRY.items() if d.default]


def listed_checks() -> list[str]:
    return [name for name, d in REGISTRY.items() if not d.hidden]


def evaluate(instance: TraceCheckInstance, cfg: CampaignConfig) -> Verdict:
    return get_check(instance.check).evaluate(instance, cfg)
