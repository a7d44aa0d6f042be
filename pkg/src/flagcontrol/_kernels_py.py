"""Pure numpy versions of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled kernels are tested against.
"""

import numpy as np

_CHUNK_BYTES = 32 * 1024 * 1024


def orthonormalize(frames):
    """Batched QR with positive R diagonal; returns (Q, min |R_ii| / ||col||)."""
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    q, r = np.linalg.qr(frames)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    sign = np.where(d < 0, -1.0, 1.0)
    q = q * sign[..., None, :]
    scale = np.linalg.norm(frames, axis=-2)
    scale = np.where(scale > 0, scale, 1.0)
    return np.ascontiguousarray(q), np.min(np.abs(d) / scale, axis=-1)


def projector_features(frames, dims):
    """Flattened projectors onto the leading ``d`` columns, one block per d."""
    frames = np.asarray(frames, dtype=np.float64)
    n_pts, n = frames.shape[0], frames.shape[1]
    out = np.empty((n_pts, len(dims), n * n))
    for k, d in enumerate(dims):
        f = frames[:, :, :d]
        out[:, k, :] = np.einsum("pik,pjk->pij", f, f).reshape(n_pts, n * n)
    return out


def _sq_dist_chunk(fp, fc, fc_sq):
    # fp: (c, k, q), fc: (m, k, q); max over blocks of squared Frobenius distance
    out = None
    for k in range(fp.shape[1]):
        a = fp[:, k, :]
        d2 = (a * a).sum(1)[:, None] + fc_sq[None, :, k] - 2.0 * a @ fc[:, k, :].T
        out = d2 if out is None else np.maximum(out, d2)
    if out is None:
        out = np.zeros((fp.shape[0], fc.shape[0]))
    return np.maximum(out, 0.0)


def _chunks(n_pts, n_centers):
    step = max(1, _CHUNK_BYTES // (8 * max(n_centers, 1)))
    for start in range(0, n_pts, step):
        yield start, min(n_pts, start + step)


def nearest(feat_pts, feat_centers):
    """Index of and distance to the nearest center (ties -> lowest index)."""
    feat_pts = np.asarray(feat_pts, dtype=np.float64)
    feat_centers = np.asarray(feat_centers, dtype=np.float64)
    fc_sq = (feat_centers ** 2).sum(-1)
    idx = np.empty(len(feat_pts), dtype=np.int64)
    dist = np.empty(len(feat_pts))
    for a, b in _chunks(len(feat_pts), len(feat_centers)):
        d2 = _sq_dist_chunk(feat_pts[a:b], feat_centers, fc_sq)
        j = np.argmin(d2, axis=1)
        idx[a:b] = j
        dist[a:b] = np.sqrt(d2[np.arange(b - a), j])
    return idx, dist


def within(feat_pts, feat_centers, radius):
    """CSR lists of centers at distance <= radius from each point."""
    feat_pts = np.asarray(feat_pts, dtype=np.float64)
    feat_centers = np.asarray(feat_centers, dtype=np.float64)
    fc_sq = (feat_centers ** 2).sum(-1)
    r2 = radius * radius
    rows, cols = [], []
    for a, b in _chunks(len(feat_pts), len(feat_centers)):
        d2 = _sq_dist_chunk(feat_pts[a:b], feat_centers, fc_sq)
        i, j = np.nonzero(d2 <= r2)
        rows.append(i + a)
        cols.append(j)
    rows = np.concatenate(rows) if rows else np.empty(0, np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, np.int64)
    indptr = np.zeros(len(feat_pts) + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64)


def pairwise(feat_a, feat_b):
    """Full distance matrix (small inputs only)."""
    feat_a = np.asarray(feat_a, dtype=np.float64)
    feat_b = np.asarray(feat_b, dtype=np.float64)
    diff = feat_a[:, None, :, :] - feat_b[None, :, :, :]
    if diff.shape[2] == 0:
        return np.zeros((len(feat_a), len(feat_b)))
    return np.sqrt((diff ** 2).sum(-1)).max(-1)
