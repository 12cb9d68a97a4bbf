"""
Single-step recurrent cells and their backward passes. All arrays carry a
leading batch axis: x (B, D), h and c (B, H). Gate weights act on the
concatenation [h_prev, x], so every W is shaped (H, H + D).
"""
from typing import Dict, NamedTuple, Tuple

import numpy as np

from src.core.errors import DimensionError
from src.deep.activations import Activation, get_activation, sigmoid

Params = Dict[str, np.ndarray]

TANH = get_activation("tanh")


def _concat(h: np.ndarray, x: np.ndarray, W: np.ndarray) -> np.ndarray:
    h, x = np.atleast_2d(h), np.atleast_2d(x)
    if h.shape[0] != x.shape[0] or h.shape[1] + x.shape[1] != W.shape[1]:
        raise DimensionError(f"state {h.shape} and input {x.shape} do not fit weights {W.shape}")
    return np.concatenate((h, x), axis=1)


def _affine(hx: np.ndarray, params: Params, gate: str) -> np.ndarray:
    return hx @ params[f"W_{gate}"].T + params[f"b_{gate}"]


# --- LSTM ---
class LstmCache(NamedTuple):
    hx: np.ndarray
    c_prev: np.ndarray
    c: np.ndarray
    f: np.ndarray
    i: np.ndarray
    o: np.ndarray
    z_c: np.ndarray
    c_tilde: np.ndarray


def lstm_forward(x, h_prev, c_prev, params: Params, act: Activation = TANH) -> Tuple[np.ndarray, np.ndarray, LstmCache]:
    hx = _concat(h_prev, x, params["W_f"])
    f = sigmoid.fn(_affine(hx, params, "f"))
    i = sigmoid.fn(_affine(hx, params, "i"))
    z_c = _affine(hx, params, "c")
    c_tilde = act.fn(z_c)
    c = f * c_prev + i * c_tilde
    o = sigmoid.fn(_affine(hx, params, "o"))
    h = o * act.fn(c)
    return h, c, LstmCache(hx, np.atleast_2d(c_prev), c, f, i, o, z_c, c_tilde)


def lstm_step(x, h_prev, c_prev, params: Params, act: Activation = TANH) -> Tuple[np.ndarray, np.ndarray]:
    """
    f = s(W_f [h, x] + b_f), i = s(W_i [h, x] + b_i), C~ = act(W_c [h, x] + b_c),
    C = f*C_prev + i*C~, o = s(W_o [h, x] + b_o), h = o*act(C).
    """
    h, c, _ = lstm_forward(x, h_prev, c_prev, params, act)
    return h, c


def lstm_backward(dh, dc, cache: LstmCache, params: Params, grads: Params, act: Activation = TANH):
    """Accumulates into `grads`; returns (dh_prev, dc_prev)."""
    H = dh.shape[1]
    act_c = act.fn(cache.c)
    dc = dc + dh * cache.o * act.derivative(cache.c)
    dz = {
        "o": dh * act_c * cache.o * (1.0 - cache.o),
        "f": dc * cache.c_prev * cache.f * (1.0 - cache.f),
        "i": dc * cache.c_tilde * cache.i * (1.0 - cache.i),
        "c": dc * cache.i * act.derivative(cache.z_c),
    }
    dhx = np.zeros_like(cache.hx)
    for gate, delta in dz.items():
        grads[f"W_{gate}"] += delta.T @ cache.hx
        grads[f"b_{gate}"] += delta.sum(axis=0)
        dhx += delta @ params[f"W_{gate}"]
    return dhx[:, :H], dc * cache.f


# --- GRU ---
class GruCache(NamedTuple):
    h_prev: np.ndarray
    hx: np.ndarray
    rhx: np.ndarray
    z: np.ndarray
    r: np.ndarray
    z_h: np.ndarray
    h_tilde: np.ndarray


def gru_forward(x, h_prev, params: Params, act: Activation = TANH) -> Tuple[np.ndarray, GruCache]:
    h_prev = np.atleast_2d(h_prev)
    hx = _concat(h_prev, x, params["W_z"])
    z = sigmoid.fn(_affine(hx, params, "z"))
    r = sigmoid.fn(_affine(hx, params, "r"))
    rhx = _concat(r * h_prev, x, params["W_h"])
    z_h = _affine(rhx, params, "h")
    h_tilde = act.fn(z_h)
    h = (1.0 - z) * h_prev + z * h_tilde
    return h, GruCache(h_prev, hx, rhx, z, r, z_h, h_tilde)


def gru_step(x, h_prev, params: Params, act: Activation = TANH) -> np.ndarray:
    """h = (1 - z)*h_prev + z*act(W_h [r*h_prev, x] + b_h)."""
    return gru_forward(x, h_prev, params, act)[0]


def gru_backward(dh, cache: GruCache, params: Params, grads: Params, act: Activation = TANH) -> np.ndarray:
    H = dh.shape[1]
    dz_h = dh * cache.z * act.derivative(cache.z_h)
    grads["W_h"] += dz_h.T @ cache.rhx
    grads["b_h"] += dz_h.sum(axis=0)
    d_rh = (dz_h @ params["W_h"])[:, :H]

    dz = dh * (cache.h_tilde - cache.h_prev) * cache.z * (1.0 - cache.z)
    dr = d_rh * cache.h_prev * cache.r * (1.0 - cache.r)
    dhx = np.zeros_like(cache.hx)
    for gate, delta in (("z", dz), ("r", dr)):
        grads[f"W_{gate}"] += delta.T @ cache.hx
        grads[f"b_{gate}"] += delta.sum(axis=0)
        dhx += delta @ params[f"W_{gate}"]
    return dh * (1.0 - cache.z) + d_rh * cache.r + dhx[:, :H]


# --- Simple (Elman) ---
class SimpleCache(NamedTuple):
    hx: np.ndarray
    z_h: np.ndarray


def simple_forward(x, h_prev, params: Params, act: Activation = TANH) -> Tuple[np.ndarray, SimpleCache]:
    hx = _concat(h_prev, x, params["W_h"])
    z_h = _affine(hx, params, "h")
    return act.fn(z_h), SimpleCache(hx, z_h)


def simple_step(x, h_prev, params: Params, act: Activation = TANH) -> np.ndarray:
    """h = act(W [h_prev, x] + b)."""
    return simple_forward(x, h_prev, params, act)[0]


def simple_backward(dh, cache: SimpleCache, params: Params, grads: Params, act: Activation = TANH) -> np.ndarray:
    H = dh.shape[1]
    delta = dh * act.derivative(cache.z_h)
    grads["W_h"] += delta.T @ cache.hx
    grads["b_h"] += delta.sum(axis=0)
    return (delta @ params["W_h"])[:, :H]
