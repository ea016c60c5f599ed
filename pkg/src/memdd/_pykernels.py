"""Pure numpy Memory-DD sequence kernels (fallback for the compiled ``_ckernels``).

Layout: inputs ``X`` are ``(T, B, d_x)``; every cached array is ``(T, B, d_h)``.
``mult``/``s1``/``s2`` select the Hadamard vs additive gate and the two
shortcut terms; ``Wa`` gates memory, ``Wb`` gates the decision (they are
the same array unless the model is untied).
"""

import numpy as np


def memdd_forward(X, W1, b, Wa, Wb, mult, s1, s2, use_tanh):
    T, B, _ = X.shape
    dh = W1.shape[0]
    W1h = W1[:, :dh]
    W1x = W1[:, dh:]
    D = np.empty((T, B, dh))
    G1 = np.empty((T, B, dh))
    C = np.empty((T, B, dh))
    G2 = np.empty((T, B, dh))
    H = np.empty((T, B, dh))
    hp = np.zeros((B, dh))
    cp = np.zeros((B, dh))
    for t in range(T):
        d = hp @ W1h.T + X[t] @ W1x.T + b
        g1 = d @ Wa.T
        pre = g1 * cp if mult else g1 + cp
        if s1:
            pre = pre + d
        c = np.tanh(pre) if use_tanh else pre
        g2 = c @ Wb.T
        pre = g2 * d if mult else g2 + d
        if s2:
            pre = pre + d
        h = np.tanh(pre) if use_tanh else pre
        D[t], G1[t], C[t], G2[t], H[t] = d, g1, c, g2, h
        hp, cp = h, c
    return D, G1, C, G2, H


def memdd_backward(X, W1, Wa, Wb, D, G1, C, G2, H, dH, mult, s1, s2, use_tanh):
    """Reverse pass for a loss that depends on ``H[T-1]`` only.

    Returns ``(dW1, db, dWa, dWb)``; callers with a shared matrix add the last two.
    """
    T, B, _ = X.shape
    dh = W1.shape[0]
    W1h = W1[:, :dh]
    dW1h = np.zeros((dh, dh))
    dW1x = np.zeros((dh, W1.shape[1] - dh))
    db = np.zeros(dh)
    dWa = np.zeros_like(Wa)
    dWb = np.zeros_like(Wb)
    zeros = np.zeros((B, dh))
    dh_next = np.array(dH, dtype=np.float64)
    dc_next = zeros
    for t in range(T - 1, -1, -1):
        d, g1, c, g2, h = D[t], G1[t], C[t], G2[t], H[t]
        cp = C[t - 1] if t else zeros
        hp = H[t - 1] if t else zeros
        dpre2 = dh_next * (1.0 - h * h) if use_tanh else dh_next
        if mult:
            dg2 = dpre2 * d
            dd = dpre2 * g2
        else:
            dg2 = dpre2
            dd = dpre2.copy()
        if s2:
            dd += dpre2
        dWb += dg2.T @ c
        dc = dc_next + dg2 @ Wb
        dpre1 = dc * (1.0 - c * c) if use_tanh else dc
        if mult:
            dg1 = dpre1 * cp
            dc_next = dpre1 * g1
        else:
            dg1 = dpre1
            dc_next = dpre1
        if s1:
            dd += dpre1
        dd += dg1 @ Wa
        dWa += dg1.T @ d
        dW1h += dd.T @ hp
        dW1x += dd.T @ X[t]
        db += dd.sum(axis=0)
        dh_next = dd @ W1h
    return np.hstack([dW1h, dW1x]), db, dWa, dWb
