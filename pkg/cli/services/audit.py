"""Property audit: invariance, equivariance and non-degeneracy checks on random inputs.

Every check returns the worst deviation it saw together with its tolerance.
With ``inject_fault`` the invariant form is swapped for a random symmetric
Gram, which must make the invariance-based checks fail.
"""

import logging
from collections.abc import Callable

import numpy as np

from lie.algebra import (
    LieAlgebraBasis,
    compose,
    conjugate_features,
    hat,
    make_algebra,
    sample_algebra,
    sample_group,
    vee,
)
from lie.forms import (
    BilinearForm,
    check_ad_invariance,
    form_for_model,
    gram_from_matrix_form,
    killing_oracle,
    modified_form_gl,
    nondegeneracy_rank,
    random_symmetric_form,
    trace_form,
)
from lie.geomaps import (
    block_embed,
    lorentz_group_sample,
    lorentz_lift,
    minkowski_metric,
    skew_extract,
    spd_exp,
    spd_log,
)
from lie.linalg import matrix_exp
from lie.rng import make_rng
from models import PropertyResult
from network import layers as L
from network.model import init_params, parse_layers
from training.metrics import invariance_error

logger = logging.getLogger(__name__)

AUDIT_STREAM = "audit"

EQUIVARIANCE_TOLERANCE = 1e-9
FORM_TOLERANCE = 1e-8
DOT_PRODUCT_TOLERANCE = 1e-10
MODEL_INVARIANCE_TOLERANCE = 1e-10
POOL_MARGIN = 1e-6

# Batch and channel sizes of the random features fed to each layer
BATCH = 4
CHANNELS = 3
SET_SIZE = 3


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


def _killing_closed_form(basis: LieAlgebraBasis) -> Callable[[np.ndarray, np.ndarray], np.ndarray] | None:
    """Known Killing forms as matrix expressions."""
    n = basis.n
    if basis.name == "gln":
        return lambda X, Y: 2 * n * trace_form(X, Y) - 2 * np.trace(X, axis1=-2, axis2=-1) * np.trace(Y, axis1=-2, axis2=-1)
    if basis.name in ("sl2", "sl3"):
        return lambda X, Y: 2 * n * trace_form(X, Y)
    if basis.name in ("so3", "so13"):
        return lambda X, Y: (n - 2) * trace_form(X, Y)
    if basis.name == "sp4":
        return lambda X, Y: (n + 2) * trace_form(X, Y)
    return None


class Auditor:
    """Runs the property suite for one algebra."""

    def __init__(self, basis: LieAlgebraBasis, trials: int, sigma: float, seed: int, inject_fault: bool = False):
        if trials < 1:
            raise ValueError("trials must be at least 1")
        self.basis = basis
        self.trials = trials
        self.sigma = sigma
        self.seed = seed
        self.rng = make_rng(seed, AUDIT_STREAM)
        self.inject_fault = inject_fault
        self.form: BilinearForm = (
            random_symmetric_form(basis, self.rng) if inject_fault else form_for_model(basis, "modified_gl")
        )

    def _result(self, name: str, deviation: float, tolerance: float, detail: str = "") -> PropertyResult:
        passed = bool(np.isfinite(deviation) and deviation <= tolerance)
        result = PropertyResult(name=name, deviation=deviation, tolerance=tolerance, passed=passed, detail=detail)
        log = logger.info if passed else logger.warning
        log(f"{'PASS' if passed else 'FAIL'} {name}: {deviation:.3e} (tolerance {tolerance:.1e})")
        return result

    def _features(self, *lead: int) -> np.ndarray:
        return self.rng.normal(0.0, 1.0, size=(*lead, self.basis.K, CHANNELS))

    def _weights(self) -> np.ndarray:
        return self.rng.normal(0.0, 1.0 / np.sqrt(CHANNELS), size=(CHANNELS, CHANNELS))

    # Algebra

    def hat_vee(self) -> PropertyResult:
        x = sample_algebra(self.basis, 1.0, self.rng, size=self.trials)
        return self._result("hat_vee_roundtrip", float(np.max(np.abs(vee(hat(x, self.basis), self.basis) - x))), 1e-12)

    def adjoint_composition(self) -> PropertyResult:
        worst = 0.0
        for _ in range(self.trials):
            a = sample_group(self.basis, self.sigma, self.rng)
            b = sample_group(self.basis, self.sigma, self.rng)
            ab = compose(self.basis, a, b)
            worst = max(worst, _relative(ab.adj_vec, a.adj_vec @ b.adj_vec))
        return self._result("adjoint_composition", worst, EQUIVARIANCE_TOLERANCE)

    def exp_determinant(self) -> PropertyResult:
        worst = 0.0
        for _ in range(self.trials):
            X = hat(sample_algebra(self.basis, self.sigma, self.rng), self.basis)
            expected = np.exp(np.trace(X))
            worst = max(worst, abs(np.linalg.det(matrix_exp(X)) - expected) / expected)
        return self._result("exp_determinant", float(worst), EQUIVARIANCE_TOLERANCE)

    # Forms

    def form_invariance(self) -> PropertyResult:
        deviation = check_ad_invariance(self.form, self.basis, self.trials, self.sigma, self.rng)
        return self._result("form_ad_invariance", deviation, FORM_TOLERANCE, f"form={self.form.kind}")

    def form_rank(self) -> PropertyResult:
        rank = nondegeneracy_rank(self.form)
        return self._result("form_nondegenerate", float(self.basis.K - rank), 0.0, f"rank {rank}/{self.basis.K}")

    def killing_rank(self) -> PropertyResult:
        rank = nondegeneracy_rank(killing_oracle(self.basis))
        expected = self.basis.K - 1 if self.basis.name == "gln" else self.basis.K
        return self._result("killing_rank", float(abs(rank - expected)), 0.0, f"rank {rank}, expected {expected}")

    def killing_closed_form(self) -> PropertyResult | None:
        fn = _killing_closed_form(self.basis)
        if fn is None:
            return None
        oracle = killing_oracle(self.basis).gram
        closed = gram_from_matrix_form(self.basis, fn, "custom").gram
        deviation = float(np.max(np.abs(oracle - closed)) / (1.0 + np.max(np.abs(oracle))))
        return self._result("killing_closed_form", deviation, EQUIVARIANCE_TOLERANCE)

    def dot_product(self) -> PropertyResult | None:
        if self.basis.name != "so3":
            return None
        v = self.rng.normal(size=(self.trials, 3))
        w = self.rng.normal(size=(self.trials, 3))
        dots = np.einsum("ti,ti->t", v, w)
        value = modified_form_gl(hat(v, self.basis), hat(w, self.basis))
        worst = float(np.max(np.abs(value + 12.0 * dots) / (1.0 + np.abs(dots))))
        return self._result("so3_dot_product", worst, DOT_PRODUCT_TOLERANCE, "B(v^, w^) = -12 v.w")

    # Layers

    def _layer_outputs(self, x: np.ndarray, W: np.ndarray, U: np.ndarray, Wa: np.ndarray, Wb: np.ndarray) -> dict[str, np.ndarray]:
        return {
            "linear": L.linear_forward(x, W),
            "relu": L.relu_forward(x, U, self.form),
            "leaky_relu": L.relu_forward(x, U, self.form, 0.2),
            "bracket": L.bracket_forward(x, Wa, Wb, self.basis),
        }

    def layer_equivariance(self) -> list[PropertyResult]:
        worst = {"linear": 0.0, "relu": 0.0, "leaky_relu": 0.0, "bracket": 0.0, "relu_gate": 0.0, "readout": 0.0}
        for _ in range(self.trials):
            element = sample_group(self.basis, self.sigma, self.rng)
            x = self._features(BATCH)
            moved = conjugate_features(x, element)
            W, U, Wa, Wb = (self._weights() for _ in range(4))

            before = self._layer_outputs(x, W, U, Wa, Wb)
            after = self._layer_outputs(moved, W, U, Wa, Wb)
            for name, out in before.items():
                worst[name] = max(worst[name], _relative(after[name], conjugate_features(out, element)))

            gate = L.relu_gates(x, U, self.form)[1]
            worst["relu_gate"] = max(worst["relu_gate"], _relative(L.relu_gates(moved, U, self.form)[1], gate))
            readout = L.invariant_forward(x, self.form)
            worst["readout"] = max(worst["readout"], _relative(L.invariant_forward(moved, self.form), readout))

        names = {"relu_gate": "relu_gate_invariance", "readout": "readout_invariance"}
        return [
            self._result(names.get(name, f"{name}_equivariance"), value, EQUIVARIANCE_TOLERANCE)
            for name, value in worst.items()
        ]

    def pool_equivariance(self) -> list[PropertyResult]:
        flips = 0
        worst = 0.0
        for _ in range(self.trials):
            element = sample_group(self.basis, self.sigma, self.rng)
            x = self._features(BATCH, SET_SIZE)
            Wd = self._weights()
            moved = conjugate_features(x, element)

            scores = np.sort(L.pool_scores(x, Wd, self.form), axis=-2)
            margin = scores[..., -1, :] - scores[..., -2, :]
            confident = margin > POOL_MARGIN * (1.0 + np.abs(scores[..., -1, :]))
            selected = L.pool_select(x, Wd, self.form)
            selected_moved = L.pool_select(moved, Wd, self.form)
            flips += int(np.count_nonzero(confident & (selected != selected_moved)))

            if np.all(confident):
                expected = conjugate_features(L.pool_forward(x, Wd, self.form), element)
                worst = max(worst, _relative(L.pool_forward(moved, Wd, self.form), expected))
        return [
            self._result("pool_argmax_stability", float(flips), 0.0, f"margin > {POOL_MARGIN:g}"),
            self._result("pool_equivariance", worst, EQUIVARIANCE_TOLERANCE),
        ]

    def model_invariance(self) -> PropertyResult:
        specs = parse_layers("linear,relu,bracket,leaky_relu", 2, 4)
        model = init_params(specs, self.seed, self.basis, head_hidden=8, form="modified_gl")
        if self.inject_fault:
            model.form = self.form
        x = self.rng.normal(size=(8, self.basis.K, 2))
        M = min(self.trials, 100)
        error = invariance_error(model, x, M, self.sigma, self.seed)
        return self._result("model_invariance", error, MODEL_INVARIANCE_TOLERANCE, f"M={M}")

    # Geometric maps

    def lorentz(self) -> list[PropertyResult]:
        signatures = ("+---", "-+++")
        lift_worst = dict.fromkeys(signatures, 0.0)
        metric_worst = 0.0
        for _ in range(self.trials):
            Lambda = lorentz_group_sample(self.sigma, self.rng).g
            p = self.rng.normal(size=4)
            G = block_embed(Lambda)
            G_inv = np.linalg.inv(G)
            for signature in signatures:
                eta = minkowski_metric(signature)
                metric_worst = max(metric_worst, float(np.max(np.abs(Lambda.T @ eta @ Lambda - eta))))
                lifted = G @ lorentz_lift(p, signature) @ G_inv
                lift_worst[signature] = max(lift_worst[signature], _relative(lifted, lorentz_lift(Lambda @ p, signature)))
        worst_signature = max(signatures, key=lift_worst.__getitem__)
        return [
            self._result("lorentz_metric_preserved", metric_worst, EQUIVARIANCE_TOLERANCE),
            self._result(
                "lorentz_lift_conjugation",
                lift_worst[worst_signature],
                FORM_TOLERANCE,
                ", ".join(f"{s}: {lift_worst[s]:.1e}" for s in signatures),
            ),
        ]

    def spd(self) -> list[PropertyResult]:
        so3 = make_algebra("so3")
        log_worst = 0.0
        roundtrip_worst = 0.0
        skew_worst = 0.0
        for _ in range(self.trials):
            A = self.rng.normal(size=(3, 3))
            C = A @ A.T + 0.1 * np.eye(3)
            R = sample_group(so3, 1.0, self.rng).g
            log_worst = max(log_worst, float(np.linalg.norm(spd_log(R @ C @ R.T) - R @ spd_log(C) @ R.T)))
            roundtrip_worst = max(roundtrip_worst, _relative(spd_exp(spd_log(C)).C, C))
            B = self.rng.normal(size=(3, 3))
            skew_worst = max(skew_worst, _relative(skew_extract(R @ B @ R.T), R @ skew_extract(B)))
        return [
            self._result("spd_log_equivariance", log_worst, FORM_TOLERANCE),
            self._result("spd_exp_log_roundtrip", roundtrip_worst, EQUIVARIANCE_TOLERANCE),
            self._result("skew_extraction_equivariance", skew_worst, 1e-10),
        ]

    def run(self) -> list[PropertyResult]:
        results: list[PropertyResult | None] = [
            self.hat_vee(),
            self.adjoint_composition(),
            self.exp_determinant(),
            self.form_invariance(),
            self.form_rank(),
            self.killing_rank(),
            self.killing_closed_form(),
            self.dot_product(),
        ]
        results.extend(self.layer_equivariance())
        results.extend(self.pool_equivariance())
        results.append(self.model_invariance())
        if self.basis.name == "so13":
            results.extend(self.lorentz())
        if self.basis.name == "so3" or (self.basis.name == "gln" and self.basis.n == 3):
            results.extend(self.spd())
        return [r for r in results if r is not None]


def run_audit(
    basis: LieAlgebraBasis,
    trials: int,
    sigma: float = 0.5,
    seed: int = 0,
    inject_fault: bool = False,
) -> list[PropertyResult]:
    return Auditor(basis, trials, sigma, seed, inject_fault).run()
