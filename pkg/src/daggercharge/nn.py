"""Recurrent network built on numpy: LSTM stack, ReLU dense stack, tanh head.

Forward/backward are hand-written; gradients are verified against central
finite differences (see gradient_check). Everything is float64 and fully
deterministic given a seeded Generator.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z):
    # tanh form, numerically stable
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def _xavier(rng, n_out, n_in, fan_out=None):
    limit = np.sqrt(6.0 / (n_in + (fan_out if fan_out is not None else n_out)))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


class LSTMLayer:
    """Single LSTM layer, gate order (input, forget, candidate, output).

    Weights are Xavier-uniform with per-gate fans; the forget-gate bias
    starts at 1.0.
    """

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator,
                 dtype=np.float64):
        h = n_hidden
        self.n_in = n_in
        self.n_hidden = h
        self.dtype = np.dtype(dtype)
        self.wx = np.vstack([_xavier(rng, h, n_in, fan_out=h) for _ in range(4)]).astype(dtype)
        self.wh = np.vstack([_xavier(rng, h, h, fan_out=h) for _ in range(4)]).astype(dtype)
        self.b = np.zeros(4 * h, dtype=dtype)
        self.b[h : 2 * h] = 1.0
        self.dwx = np.zeros_like(self.wx)
        self.dwh = np.zeros_like(self.wh)
        self.db = np.zeros_like(self.b)

    def parameters(self):
        return [("wx", self.wx), ("wh", self.wh), ("b", self.b)]

    def gradients(self):
        return [self.dwx, self.dwh, self.db]

    def forward(self, x: np.ndarray):
        """x (B, T, n_in) -> h_seq (B, T, n_hidden), cache."""
        B, T, _ = x.shape
        h = self.n_hidden
        dt = self.dtype
        zx = (x.reshape(B * T, self.n_in) @ self.wx.T).reshape(B, T, 4 * h)
        hs = np.zeros((B, T, h), dtype=dt)
        gates = np.empty((B, T, 4 * h), dtype=dt)
        cs = np.empty((B, T, h), dtype=dt)
        tanh_c = np.empty((B, T, h), dtype=dt)
        h_prev = np.zeros((B, h), dtype=dt)
        c_prev = np.zeros((B, h), dtype=dt)
        for t in range(T):
            z = zx[:, t] + h_prev @ self.wh.T + self.b
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = np.tanh(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c = f * c_prev + i * g
            tc = np.tanh(c)
            gates[:, t, :h] = i
            gates[:, t, h : 2 * h] = f
            gates[:, t, 2 * h : 3 * h] = g
            gates[:, t, 3 * h :] = o
            cs[:, t] = c
            tanh_c[:, t] = tc
            hs[:, t] = o * tc
            h_prev = hs[:, t]
            c_prev = c
        cache = (x, hs, gates, cs, tanh_c)
        return hs, cache

    def backward(self, dh_seq: np.ndarray, cache):
        """dh_seq (B, T, n_hidden) -> dx (B, T, n_in); accumulates weight grads."""
        x, hs, gates, cs, tanh_c = cache
        B, T, _ = x.shape
        h = self.n_hidden
        dt = self.dtype
        dz_all = np.empty((B, T, 4 * h), dtype=dt)
        self.dwh[:] = 0.0
        dc_next = np.zeros((B, h), dtype=dt)
        dh_carry = np.zeros((B, h), dtype=dt)
        zero_state = np.zeros((B, h), dtype=dt)
        for t in range(T - 1, -1, -1):
            i = gates[:, t, :h]
            f = gates[:, t, h : 2 * h]
            g = gates[:, t, 2 * h : 3 * h]
            o = gates[:, t, 3 * h :]
            tc = tanh_c[:, t]
            c_prev = cs[:, t - 1] if t > 0 else zero_state
            h_prev = hs[:, t - 1] if t > 0 else zero_state
            dh = dh_seq[:, t] + dh_carry
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = dz_all[:, t]
            dz[:, :h] = di * i * (1.0 - i)
            dz[:, h : 2 * h] = df * f * (1.0 - f)
            dz[:, 2 * h : 3 * h] = dg * (1.0 - g * g)
            dz[:, 3 * h :] = do * o * (1.0 - o)
            self.dwh += dz.T @ h_prev
            dh_carry = dz @ self.wh
            dc_next = dc * f
        flat = dz_all.reshape(B * T, 4 * h)
        self.dwx[:] = flat.T @ x.reshape(B * T, self.n_in)
        self.db[:] = flat.sum(axis=(0,))
        dx = (flat @ self.wx).reshape(B, T, self.n_in)
        return dx


class DenseLayer:
    """Fully connected layer; activation handled by the caller."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 dtype=np.float64):
        self.w = _xavier(rng, n_out, n_in).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def parameters(self):
        return [("w", self.w), ("b", self.b)]

    def gradients(self):
        return [self.dw, self.db]

    def forward(self, x):
        return x @ self.w.T + self.b

    def backward(self, dout, x):
        self.dw[:] = dout.T @ x
        self.db[:] = dout.sum(axis=0)
        return dout @ self.w


class Network:
    """LSTM stack over the measurement window, dense stack over the final
    hidden state concatenated with the reference, tanh output scaled to
    the current bounds.

    Inputs are expected already standardized; the output is in amperes.
    """

    def __init__(
        self,
        n_channels: int,
        recurrent_sizes: tuple[int, ...],
        dense_sizes: tuple[int, ...],
        i_min: float,
        i_max: float,
        rng: np.random.Generator,
        dtype=np.float64,
    ):
        self.n_channels = n_channels
        self.i_min = i_min
        self.i_max = i_max
        self.dtype = np.dtype(dtype)
        self.lstm: list[LSTMLayer] = []
        n_in = n_channels
        for h in recurrent_sizes:
            self.lstm.append(LSTMLayer(n_in, h, rng, dtype=dtype))
            n_in = h
        self.dense: list[DenseLayer] = []
        n_in = n_in + 1  # + reference feature
        for n_out in dense_sizes:
            self.dense.append(DenseLayer(n_in, n_out, rng, dtype=dtype))
            n_in = n_out
        self.head = DenseLayer(n_in, 1, rng, dtype=dtype)

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in (*self.lstm, *self.dense, self.head):
            out += [arr for _, arr in layer.parameters()]
        return out

    def parameter_names(self) -> list[str]:
        names = []
        for li, layer in enumerate(self.lstm):
            names += [f"lstm{li}.{n}" for n, _ in layer.parameters()]
        for di, layer in enumerate(self.dense):
            names += [f"dense{di}.{n}" for n, _ in layer.parameters()]
        names += [f"head.{n}" for n, _ in self.head.parameters()]
        return names

    def gradients(self) -> list[np.ndarray]:
        out = []
        for layer in (*self.lstm, *self.dense, self.head):
            out += layer.gradients()
        return out

    def forward(self, x: np.ndarray, refs: np.ndarray, want_cache: bool = False):
        """x (B, T, n_channels) standardized, refs (B,) standardized -> (B,) amperes."""
        x = np.asarray(x, dtype=self.dtype)
        refs = np.asarray(refs, dtype=self.dtype)
        caches = []
        h = x
        for layer in self.lstm:
            h, cache = layer.forward(h)
            caches.append(cache)
        feat = np.concatenate([h[:, -1, :], refs[:, None]], axis=1)
        acts = [feat]
        pre = feat
        for layer in self.dense:
            z = layer.forward(pre)
            pre = np.maximum(z, 0.0)
            acts.append(pre)
        z_head = self.head.forward(pre)[:, 0]
        th = np.tanh(z_head)
        out = self.i_min + (self.i_max - self.i_min) * 0.5 * (th + 1.0)
        if want_cache:
            return out, (caches, acts, th, x.shape)
        return out

    def backward(self, dout: np.ndarray, cache) -> None:
        """dout (B,) w.r.t. the ampere-scaled output; fills layer gradients."""
        caches, acts, th, xshape = cache
        B, T, _ = xshape
        dz_head = dout * (self.i_max - self.i_min) * 0.5 * (1.0 - th * th)
        d = self.head.backward(dz_head[:, None], acts[-1])
        for k in range(len(self.dense) - 1, -1, -1):
            d = d * (acts[k + 1] > 0.0)
            d = self.dense[k].backward(d, acts[k])
        dlast = d[:, :-1]  # reference feature carries no trainable upstream
        h_top = self.lstm[-1].n_hidden
        dh_seq = np.zeros((B, T, h_top), dtype=self.dtype)
        dh_seq[:, -1, :] = dlast
        for k in range(len(self.lstm) - 1, -1, -1):
            dh_seq = self.lstm[k].backward(dh_seq, caches[k])

    def loss_and_grads(self, x: np.ndarray, refs: np.ndarray, y: np.ndarray) -> float:
        """Mean squared error in amperes; fills gradients for an optimizer step."""
        out, cache = self.forward(x, refs, want_cache=True)
        err = out - np.asarray(y, dtype=self.dtype)
        loss = float(err @ err) / len(y)
        self.backward(err * self.dtype.type(2.0 / len(y)), cache)
        return loss

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def load_parameters(self, values: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(values) != len(params):
            raise ValueError("parameter count mismatch")
        for p, v in zip(params, values):
            if p.shape != np.shape(v):
                raise ValueError(f"parameter shape mismatch: {p.shape} vs {np.shape(v)}")
            p[:] = v


class Adam:
    """Adam optimizer over a fixed parameter list, updates in place."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def gradient_check(net: Network, x: np.ndarray, refs: np.ndarray, y: np.ndarray,
                   fd_step: float = 1e-5) -> float:
    """Max discrepancy between analytic and central-difference gradients.

    Per-element error is |analytic - numeric| / max(|analytic|, |numeric|,
    1e-3); the 1e-3 denominator floor turns the comparison into an
    absolute one near zero, so a dead unit passes iff its absolute error
    stays below 1e-7 at the usual 1e-4 acceptance threshold.
    """
    analytic = [g.copy() for g in _checked_grads(net, x, refs, y)]
    worst = 0.0
    for p, ga in zip(net.parameters(), analytic):
        flat = p.ravel()
        gfl = ga.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + fd_step
            fp = _loss_only(net, x, refs, y)
            flat[j] = orig - fd_step
            fm = _loss_only(net, x, refs, y)
            flat[j] = orig
            numeric = (fp - fm) / (2.0 * fd_step)
            denom = max(abs(gfl[j]), abs(numeric), 1e-3)
            worst = max(worst, abs(gfl[j] - numeric) / denom)
    return worst


def _loss_only(net: Network, x, refs, y) -> float:
    out = net.forward(x, refs)
    err = out - y
    return float(err @ err) / len(y)


def _checked_grads(net: Network, x, refs, y):
    net.loss_and_grads(x, refs, y)
    return net.gradients()
