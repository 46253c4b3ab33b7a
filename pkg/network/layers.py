"""ReLN layer toolbox: forward passes and their hand-derived reverse-mode gradients.

Features are coordinate tensors of shape ``[..., K, C]``: the group acts on the
K axis from the left, channel-mixing weights act on the C axis from the right,
so the two commute. Every ``*_backward`` recomputes the cheap intermediates
from the layer input instead of keeping them in a cache.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from errors import ShapeError
from lie.algebra import LieAlgebraBasis
from lie.forms import BilinearForm


class AlgFeature(BaseModel):
    """Multi-channel algebra-valued feature ``[B, K, C]`` (or ``[B, N, K, C]``)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    algebra: LieAlgebraBasis

    @model_validator(mode="after")
    def _check(self) -> "AlgFeature":
        if self.data.ndim < 2 or self.data.shape[-2] != self.algebra.K:
            raise ValueError(f"feature axis -2 must equal K={self.algebra.K}, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature entries must be finite")
        return self


def _gram(form: BilinearForm | np.ndarray) -> np.ndarray:
    return form.gram if isinstance(form, BilinearForm) else np.asarray(form)


def _check_channels(x: np.ndarray, W: np.ndarray, name: str) -> None:
    if W.ndim != 2 or x.shape[-1] != W.shape[0]:
        raise ShapeError(f"{name}: input has {x.shape[-1]} channels but weight has shape {W.shape}")


def _mix(x: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("...kc,cd->...kd", x, W)


def _mix_grads(x: np.ndarray, W: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K, C = x.shape[-2:]
    grad_W = np.einsum("nkc,nkd->cd", x.reshape(-1, K, C), grad_out.reshape(-1, K, grad_out.shape[-1]))
    grad_x = np.einsum("...kd,cd->...kc", grad_out, W)
    return grad_x, grad_W


# ReLN-Linear


def linear_forward(x: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``x W`` on the channel axis; no bias."""
    _check_channels(x, W, "linear")
    return _mix(x, W)


def linear_backward(x: np.ndarray, W: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(grad_x, grad_W)``."""
    return _mix_grads(x, W, grad_out)


# ReLN-ReLU and its leaky variant


def relu_gates(x: np.ndarray, U: np.ndarray, form: BilinearForm | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Directions ``d = x U`` and invariant gates ``s_c = B(x_c, d_c)``."""
    _check_channels(x, U, "relu")
    if U.shape[0] != U.shape[1]:
        raise ShapeError(f"relu direction map must be square, got {U.shape}")
    d = _mix(x, U)
    s = np.einsum("...ic,ij,...jc->...c", x, _gram(form), d)
    return d, s


def relu_forward(x: np.ndarray, U: np.ndarray, form: BilinearForm | np.ndarray, alpha: float = 0.0) -> np.ndarray:
    """``x_c + max(0, B(x_c, d_c)) d_c``, mixed as ``alpha x + (1 - alpha) relu(x)``."""
    d, s = relu_gates(x, U, form)
    rectified = x + np.maximum(s, 0.0)[..., None, :] * d
    if alpha == 0.0:
        return rectified
    return alpha * x + (1.0 - alpha) * rectified


def relu_backward(
    x: np.ndarray,
    U: np.ndarray,
    form: BilinearForm | np.ndarray,
    alpha: float,
    grad_out: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(grad_x, grad_U)``; an inactive gate (s <= 0) passes no gradient to the gate."""
    gram = _gram(form)
    d, s = relu_gates(x, U, form)
    active = s > 0.0

    grad_rect = (1.0 - alpha) * grad_out
    grad_x = alpha * grad_out + grad_rect
    grad_d = np.maximum(s, 0.0)[..., None, :] * grad_rect
    grad_s = np.where(active, np.einsum("...kc,...kc->...c", grad_rect, d), 0.0)

    grad_x = grad_x + grad_s[..., None, :] * np.einsum("ij,...jc->...ic", gram, d)
    grad_d = grad_d + grad_s[..., None, :] * np.einsum("ij,...ic->...jc", gram, x)

    grad_x_from_d, grad_U = _mix_grads(x, U, grad_d)
    return grad_x + grad_x_from_d, grad_U


# ReLN-Bracket


def bracket_forward(x: np.ndarray, Wa: np.ndarray, Wb: np.ndarray, basis: LieAlgebraBasis) -> np.ndarray:
    """Residual commutator ``x + vee([hat(x Wa), hat(x Wb)])``, evaluated with structure constants."""
    _check_channels(x, Wa, "bracket")
    _check_channels(x, Wb, "bracket")
    if Wa.shape[0] != Wa.shape[1] or Wb.shape != Wa.shape:
        raise ShapeError("bracket requires square channel maps of equal shape")
    u = _mix(x, Wa)
    v = _mix(x, Wb)
    return x + np.einsum("ijk,...ic,...jc->...kc", basis.structure, u, v)


def bracket_backward(
    x: np.ndarray,
    Wa: np.ndarray,
    Wb: np.ndarray,
    basis: LieAlgebraBasis,
    grad_out: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(grad_x, grad_Wa, grad_Wb)``."""
    c = basis.structure
    u = _mix(x, Wa)
    v = _mix(x, Wb)
    grad_u = np.einsum("ijk,...jc,...kc->...ic", c, v, grad_out)
    grad_v = np.einsum("ijk,...ic,...kc->...jc", c, u, grad_out)
    grad_x_a, grad_Wa = _mix_grads(x, Wa, grad_u)
    grad_x_b, grad_Wb = _mix_grads(x, Wb, grad_v)
    return grad_out + grad_x_a + grad_x_b, grad_Wa, grad_Wb


# Max-Killing pooling over the set axis (-3)


def pool_scores(x: np.ndarray, Wd: np.ndarray, form: BilinearForm | np.ndarray) -> np.ndarray:
    """``B(X_{n,c}, D_{n,c})`` with ``D = x Wd``, shape ``[..., N, C]``."""
    _check_channels(x, Wd, "pool")
    if x.ndim < 3:
        raise ShapeError(f"pool needs a set axis: expected [..., N, K, C], got shape {x.shape}")
    if x.shape[-3] == 0:
        raise ShapeError("pool needs at least one set element")
    return np.einsum("...ic,ij,...jc->...c", x, _gram(form), _mix(x, Wd))


def pool_select(x: np.ndarray, Wd: np.ndarray, form: BilinearForm | np.ndarray) -> np.ndarray:
    """Per-channel argmax over the set axis; ties go to the lowest index."""
    return np.argmax(pool_scores(x, Wd, form), axis=-2)


def pool_forward(x: np.ndarray, Wd: np.ndarray, form: BilinearForm | np.ndarray) -> np.ndarray:
    index = pool_select(x, Wd, form)
    picked = np.take_along_axis(x, index[..., None, None, :], axis=-3)
    return picked[..., 0, :, :]


def pool_backward(
    x: np.ndarray,
    Wd: np.ndarray,
    form: BilinearForm | np.ndarray,
    grad_out: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Routes the gradient to the selected set element; ``Wd`` only moves the argmax, so its gradient is zero."""
    index = pool_select(x, Wd, form)
    grad_x = np.zeros_like(x)
    target = np.broadcast_to(index[..., None, None, :], (*x.shape[:-3], 1, *x.shape[-2:]))
    np.put_along_axis(grad_x, target, grad_out[..., None, :, :], axis=-3)
    return grad_x, np.zeros_like(Wd)


# Invariant readout


def invariant_forward(x: np.ndarray, form: BilinearForm | np.ndarray) -> np.ndarray:
    """``y_c = B(x_c, x_c)``; shape ``[..., C]``."""
    return np.einsum("...ic,ij,...jc->...c", x, _gram(form), x)


def invariant_backward(x: np.ndarray, form: BilinearForm | np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    gram = _gram(form)
    return np.einsum("ij,...jc->...ic", gram + gram.T, x) * grad_y[..., None, :]


# Ordinary dense layers for the scalar head and the baseline


def dense_forward(h: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    if h.shape[-1] != W.shape[0]:
        raise ShapeError(f"dense: input width {h.shape[-1]} does not match weight {W.shape}")
    return h @ W + b


def dense_backward(h: np.ndarray, W: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(grad_h, grad_W, grad_b)``."""
    return grad_out @ W.T, h.T @ grad_out, grad_out.sum(axis=0)
