"""Level-raising of finite p-variation group paths, one degree at a time.

Each step sews the level-raising one-form of the current path against
itself; lower levels are reproduced exactly (the truncation is an algebra
homomorphism) and the new top level is the unique extension above the Young
threshold.  With ``lift=True`` every one-step increment is first completed to
a group element (word system: exp of log one level up; forest system: the
multiplicative character extension with vanishing new-tree coefficients), so
extended values stay in the group and signatures are reproduced exactly on
their own sample grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import trees
from .algebra import ForestSystem, GradedTensor, WordSystem, tensor_system
from .one_forms import CertificateError, LevelRaisingForm
from .paths import Control, SampledGroupPath, control_from_pvar, p_variation
from .sewing import sew_generic


def lift_into_group(a: GradedTensor, tol: float = 1e-8) -> GradedTensor:
    """Complete a grouplike element one level up, fixing all lower levels.

    Word system: exponentiate the logarithm at the higher truncation.  Forest
    system: extend the character multiplicatively (new-degree forests get the
    product of their tree values; genuinely new trees get zero).
    """
    system = a.system
    if not system.grouplike_check(a, tol):
        raise ValueError("lift needs a grouplike input")
    upper = tensor_system(system.kind, system.d, system.n + 1)
    if isinstance(system, WordSystem):
        logs = system.log(a)
        return upper.exp(system.embed(logs, system.n + 1))
    if isinstance(system, ForestSystem):
        out = upper.zero()
        for k in range(system.n + 1):
            out.levels[k][:] = a.levels[k]
        n1 = system.n + 1
        for pos, forest in enumerate(upper._forests[n1]):
            if len(forest) < 2:
                continue  # a new tree: coefficient stays zero
            val = 1.0
            for t in forest:
                sz = trees.tree_size(t)
                val *= a.levels[sz][system.forest_position(sz, (t,))]
            out.levels[n1][pos] = val
        return out
    raise TypeError(f"unsupported system {system!r}")


def lift_norm_ratio(a: GradedTensor) -> float:
    """Homogeneous-norm growth of the one-level completion (empirical C_n)."""
    system = a.system
    lifted = lift_into_group(a)
    base = system.homogeneous_norm(a)
    if base == 0.0:
        return 1.0
    return lifted.system.homogeneous_norm(lifted) / base


@dataclass
class ExtensionReport:
    """Per-level bookkeeping of an extension run."""

    p: float
    levels: list = field(default_factory=list)
    pvar_ratios: list = field(default_factory=list)  # |g^{m+1}| / |g^m| per level


def extend_one_level(
    path: SampledGroupPath,
    p: float,
    omega: Control | None = None,
    schedule: str = "ltr",
    lift: bool = True,
    theta: float | None = None,
) -> SampledGroupPath:
    """Raise the truncation level of a path by one, by sewing.

    ``lift=False`` sews the raw level-raising form (zero-padded increments,
    values in the unit-scalar algebra); ``lift=True`` additionally completes
    each one-step increment into the group.
    """
    m = path.level
    if m + 1 <= p:
        raise CertificateError(
            f"target level {m + 1} does not exceed p = {p}: below the Young threshold"
        )
    if theta is None:
        theta = (m + 1) / p
    if omega is None:
        omega = control_from_pvar(path, p)
    upper = tensor_system(path.system.kind, path.d, m + 1)

    if lift:
        def eval_pair(i, j):
            return lift_into_group(path.increment(i, j))
    else:
        form = LevelRaisingForm(path)

        def eval_pair(i, j):
            return form.eval_pair(path, i, j)

    target_ops = _AlgebraOps(upper)
    prefixes, _total, _removals, _bound = sew_generic(
        eval_pair, len(path), target_ops, omega, theta, schedule
    )
    return SampledGroupPath(upper, path.times, prefixes)


class _AlgebraOps:
    def __init__(self, system):
        self.system = system

    def unit(self):
        return self.system.unit()

    def mul(self, x, y):
        return self.system.mul(x, y)


def extend_to_level(
    path: SampledGroupPath,
    n: int,
    p: float,
    schedule: str = "ltr",
    lift: bool = True,
) -> tuple[SampledGroupPath, ExtensionReport]:
    """Iterate the one-level extension up to level n; reports p-var growth."""
    if n < path.level:
        raise ValueError("target level below the current level")
    report = ExtensionReport(p=p)
    cur = path
    base_pvar = p_variation(cur, p)
    while cur.level < n:
        nxt = extend_one_level(cur, p, schedule=schedule, lift=lift)
        ratio = p_variation(nxt, p) / base_pvar if base_pvar > 0 else float("nan")
        report.levels.append(nxt.level)
        report.pvar_ratios.append(ratio)
        cur = nxt
    return cur, report


def projection_residual(extended: SampledGroupPath, base: SampledGroupPath) -> float:
    """Largest coefficient deviation of the truncated extension from the base."""
    worst = 0.0
    for ve, vb in zip(extended.values, base.values):
        trunc = extended.system.truncate(ve, base.level)
        worst = max(worst, max(float(np.abs(a - b).max()) for a, b in zip(trunc.levels, vb.levels)))
    return worst
