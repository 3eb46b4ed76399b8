"""Finite-difference gradient checking.

Central differences (f(p+eps) - f(p-eps)) / 2eps per coordinate, compared
against the analytic gradient with relative error
|a - n| / max(|a|, |n|, 1e-8). Large tensors are checked on a sampled
coordinate subset.
"""

from dataclasses import dataclass, field

import numpy as np

REL_ERR_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    epsilon: float
    tolerance: float
    max_rel_error: dict = field(default_factory=dict)   # param name -> worst rel err
    n_checked: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)        # (name, coord, analytic, numeric, rel)

    @property
    def passed(self) -> bool:
        return not self.failures

    def worst(self):
        if not self.max_rel_error:
            return None, 0.0
        name = max(self.max_rel_error, key=self.max_rel_error.get)
        return name, self.max_rel_error[name]

    def format(self) -> str:
        lines = [f"gradient check: epsilon={self.epsilon:g} tolerance={self.tolerance:g}"]
        for name in sorted(self.max_rel_error):
            status = "ok" if all(f[0] != name for f in self.failures) else "FAIL"
            lines.append(
                f"  {name:<16} max_rel_err={self.max_rel_error[name]:.3e} "
                f"({self.n_checked[name]} coords) {status}"
            )
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _analytic_entry(grad, shape, flat_idx):
    if isinstance(grad, dict):  # sparse {row: vec}; absent rows have zero gradient
        row_len = int(np.prod(shape[1:])) if len(shape) > 1 else 1
        row, offset = divmod(flat_idx, row_len)
        vec = grad.get(row)
        if vec is None:
            return 0.0
        return float(np.asarray(vec).flat[offset])
    return float(np.asarray(grad).flat[flat_idx])


def grad_check(
    fn,
    params: dict,
    epsilon: float = 1e-4,
    tolerance: float = 1e-4,
    max_coords_per_param=None,
    rng=None,
    loss_only=None,
) -> GradCheckReport:
    """Check fn's analytic gradients against central finite differences.

    fn(params) -> (loss, grads): loss a finite scalar, grads a dict keyed
    like params whose values are dense arrays or sparse {row index: vector}
    maps. params entries are modified in place during probing and restored.
    loss_only(params) -> loss, when given, spares the probe evaluations the
    cost of the backward pass.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    loss, grads = fn(params)
    if not np.isfinite(loss):
        raise ValueError(f"loss is not finite: {loss}")
    if loss_only is None:
        def loss_only(p):
            return fn(p)[0]
    report = GradCheckReport(epsilon=epsilon, tolerance=tolerance)
    if rng is None:
        rng = np.random.default_rng(0)
    for name in sorted(params):
        arr = params[name]
        size = arr.size
        if max_coords_per_param is not None and size > max_coords_per_param:
            coords = np.sort(rng.choice(size, size=max_coords_per_param, replace=False))
        else:
            coords = np.arange(size)
        worst = 0.0
        for flat_idx in coords:
            original = arr.flat[flat_idx]
            arr.flat[flat_idx] = original + epsilon
            loss_plus = loss_only(params)
            arr.flat[flat_idx] = original - epsilon
            loss_minus = loss_only(params)
            arr.flat[flat_idx] = original
            if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
                raise ValueError(f"non-finite loss while probing {name}[{flat_idx}]")
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            analytic = _analytic_entry(grads.get(name), arr.shape, int(flat_idx))
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_ERR_FLOOR)
            if rel > worst:
                worst = rel
            if rel > tolerance:
                report.failures.append((name, int(flat_idx), analytic, numeric, rel))
        report.max_rel_error[name] = worst
        report.n_checked[name] = len(coords)
    return report
