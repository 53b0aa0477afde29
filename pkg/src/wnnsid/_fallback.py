"""Pure numpy implementations of the hot loops.

These mirror the compiled routines in ``_kernels.pyx`` one-for-one and are
used whenever the extension is not built.
"""

import numpy as np


def hankel_adjoint(B, r, n_ch, n_samples):
    """Scatter-add a block Hankel shaped array back onto its samples.

    ``B`` has shape ``(r * n_ch, N)``; entry ``(j * n_ch + c, k)`` is added to
    slot ``(j + k) * n_ch + c`` of the returned vector.
    """
    N = B.shape[1]
    out = np.zeros((n_samples, n_ch))
    for j in range(r):
        out[j:j + N] += B[j * n_ch:(j + 1) * n_ch].T
    return out.reshape(-1)


def gram_assemble(P, Q, r, n_ch, N):
    """Assemble ``M[(k, c), (l, d)] = sum_{j, j'} P[j c, j' d] Q[k - j, l - j']``.

    ``P`` is the ``(r n_ch, r n_ch)`` left Gram factor and ``Q`` the
    ``(N, N)`` right Gram factor.
    """
    n_samples = N + r - 1
    M = np.zeros((n_samples, n_ch, n_samples, n_ch))
    P4 = P.reshape(r, n_ch, r, n_ch)
    Qb = Q[:, None, :, None]
    for j in range(r):
        for jp in range(r):
            M[j:j + N, :, jp:jp + N, :] += Qb * P4[j, :, jp, :][None, :, None, :]
    return M.reshape(n_samples * n_ch, n_samples * n_ch)


def state_recursion(A, drive, x0):
    """Run ``X[k+1] = A X[k] + drive[k]`` and return ``X[0..T-1]``.

    ``drive`` has shape ``(T, n, b)`` and ``x0`` shape ``(n, b)``; ``b``
    independent trajectories are propagated at once.
    """
    T = drive.shape[0]
    X = np.empty_like(drive)
    x = np.array(x0, dtype=float)
    for k in range(T):
        X[k] = x
        x = A @ x + drive[k]
    return X
