"""Texture matrix features over a quantized ROI.

Five matrix families with IBSI-consistent definitions:

  GLCM   co-occurrence at distance 1 over the 4 unique 2D directions,
         symmetric and normalized per direction, features averaged
  GLRLM  run lengths per direction, features averaged over 4 directions
  GLSZM  zone sizes via 8-connected components, single matrix
  NGTDM  neighboring gray tone difference at distance 1
  GLDM   dependence counts at distance 1 with threshold alpha = 0

Gray levels run 1..Ng; level 0 marks unmasked pixels. Entropy sums skip
zero-probability entries, and degenerate cases take fixed finite values
(GLCM Correlation and MCC of a flat ROI are 1; NGTDM Coarseness is capped
at 1e6 when the weighted difference sum vanishes).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import EmptyRegionError
from .quantize import QuantizedROI

DIRECTIONS_2D = ((0, 1), (1, 0), (1, 1), (1, -1))
COARSENESS_CAP = 1e6

_EIGHT = np.ones((3, 3), dtype=bool)

GLCM_NAMES = (
    "Autocorrelation",
    "JointAverage",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "JointEnergy",
    "JointEntropy",
    "IMC1",
    "IMC2",
    "IDM",
    "IDMN",
    "ID",
    "IDN",
    "InverseVariance",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
    "MCC",
)

GLRLM_NAMES = (
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
)

GLSZM_NAMES = (
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
)

NGTDM_NAMES = ("Coarseness", "Contrast", "Busyness", "Complexity", "Strength")

GLDM_NAMES = (
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
)


def _require_roi(q: QuantizedROI) -> None:
    if not q.mask.any():
        raise EmptyRegionError("texture features require a nonempty ROI")


def _entropy2(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _offset_pairs(levels: np.ndarray, dr: int, dc: int) -> tuple[np.ndarray, np.ndarray]:
    """Level values of all in-bounds pixel pairs separated by (dr, dc)."""
    h, w = levels.shape
    r0a, r0b = max(0, -dr), max(0, dr)
    c0a, c0b = max(0, -dc), max(0, dc)
    a = levels[r0a : h - r0b, c0a : w - c0b]
    b = levels[r0b : h - r0a, c0b : w - c0a]
    valid = (a > 0) & (b > 0)
    return a[valid], b[valid]


def glcm_matrix(q: QuantizedROI, offset: tuple[int, int]) -> np.ndarray | None:
    """Symmetric normalized co-occurrence matrix for one offset, or None if
    the offset yields no masked pixel pairs."""
    a, b = _offset_pairs(q.levels, *offset)
    if a.size == 0:
        return None
    ng = q.n_levels
    counts = np.bincount((a - 1) * ng + (b - 1), minlength=ng * ng).reshape(ng, ng)
    sym = counts + counts.T
    return sym / sym.sum()


def _glcm_features_single(p: np.ndarray) -> dict[str, float]:
    ng = p.shape[0]
    lev = np.arange(1, ng + 1, dtype=np.float64)
    ii, jj = np.meshgrid(lev, lev, indexing="ij")
    px = p.sum(axis=1)
    mu = float((lev * px).sum())
    sigma2 = float(((lev - mu) ** 2 * px).sum())

    diff = np.abs(ii - jj).astype(np.int64)
    pd = np.bincount(diff.ravel(), weights=p.ravel(), minlength=ng)
    ks = np.arange(ng, dtype=np.float64)
    da = float((ks * pd).sum())

    summ = (ii + jj).astype(np.int64)
    ps = np.bincount(summ.ravel(), weights=p.ravel(), minlength=2 * ng + 1)[2:]
    sums = np.arange(2, 2 * ng + 1, dtype=np.float64)

    hxy = _entropy2(p.ravel())
    hx = _entropy2(px)
    outer = np.outer(px, px)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_outer = np.where(outer > 0, np.log2(np.where(outer > 0, outer, 1.0)), 0.0)
    hxy1 = float(-(p * log_outer).sum())
    hxy2 = float(-(outer * log_outer).sum())
    imc1 = (hxy - hxy1) / hx if hx > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    if sigma2 > 0:
        correlation = (float((ii * jj * p).sum()) - mu * mu) / sigma2
    else:
        correlation = 1.0

    present = px > 0
    if present.sum() <= 1:
        mcc = 1.0
    else:
        sub = p[np.ix_(present, present)]
        pxs = px[present]
        qmat = (sub / pxs[:, None]) @ (sub / pxs[None, :]).T
        eig = np.sort(np.linalg.eigvals(qmat).real)[::-1]
        mcc = float(np.sqrt(max(eig[1], 0.0)))

    inv_var = float((pd[1:] / ks[1:] ** 2).sum()) if ng > 1 else 0.0
    return {
        "Autocorrelation": float((ii * jj * p).sum()),
        "JointAverage": mu,
        "ClusterProminence": float(((ii + jj - 2 * mu) ** 4 * p).sum()),
        "ClusterShade": float(((ii + jj - 2 * mu) ** 3 * p).sum()),
        "ClusterTendency": float(((ii + jj - 2 * mu) ** 2 * p).sum()),
        "Contrast": float(((ii - jj) ** 2 * p).sum()),
        "Correlation": correlation,
        "DifferenceAverage": da,
        "DifferenceEntropy": _entropy2(pd),
        "DifferenceVariance": float(((ks - da) ** 2 * pd).sum()),
        "JointEnergy": float((p * p).sum()),
        "JointEntropy": hxy,
        "IMC1": imc1,
        "IMC2": imc2,
        "IDM": float((p / (1.0 + (ii - jj) ** 2)).sum()),
        "IDMN": float((p / (1.0 + ((ii - jj) / ng) ** 2)).sum()),
        "ID": float((p / (1.0 + np.abs(ii - jj))).sum()),
        "IDN": float((p / (1.0 + np.abs(ii - jj) / ng)).sum()),
        "InverseVariance": inv_var,
        "MaximumProbability": float(p.max()),
        "SumAverage": float((sums * ps).sum()),
        "SumEntropy": _entropy2(ps),
        "SumSquares": float(((ii - mu) ** 2 * p).sum()),
        "MCC": mcc,
    }


def glcm_features(
    q: QuantizedROI, offsets: tuple[tuple[int, int], ...] = DIRECTIONS_2D
) -> dict[str, float]:
    _require_roi(q)
    per_dir = []
    for off in offsets:
        p = glcm_matrix(q, off)
        if p is not None:
            per_dir.append(_glcm_features_single(p))
    if not per_dir:
        # Single isolated pixel: degenerate one-entry matrix at its level.
        lv = int(q.masked_levels[0])
        p = np.zeros((q.n_levels, q.n_levels))
        p[lv - 1, lv - 1] = 1.0
        per_dir.append(_glcm_features_single(p))
    return {name: float(np.mean([d[name] for d in per_dir])) for name in GLCM_NAMES}


def _skew_columns(levels: np.ndarray) -> np.ndarray:
    """Rows shifted right by their row index, padded with 0: the columns of
    the result are the (1, -1) anti-diagonal lines of the input."""
    h, w = levels.shape
    sk = np.zeros((h, w + h - 1), dtype=levels.dtype)
    for r in range(h):
        sk[r, r : r + w] = levels[r]
    return sk


def _direction_line_array(levels: np.ndarray, direction: tuple[int, int]) -> np.ndarray:
    """All lines of one direction stacked as rows (0-padded where needed)."""
    if direction == (0, 1):
        return levels
    if direction == (1, 0):
        return levels.T
    if direction == (1, -1):
        return _skew_columns(levels).T
    if direction == (1, 1):
        return _skew_columns(np.fliplr(levels)).T
    raise ValueError(f"unsupported direction {direction}")


def glrlm_matrix(q: QuantizedROI, direction: tuple[int, int]) -> np.ndarray:
    """Run-length counts, shape (Ng, max_run_length). Runs break at
    unmasked pixels and level changes."""
    lines = _direction_line_array(q.levels, direction)
    # A 0-sentinel column between lines lets one run-length encoding pass
    # cover every line without runs bridging line boundaries.
    flat = np.hstack([lines, np.zeros((lines.shape[0], 1), dtype=lines.dtype)]).ravel()
    boundaries = np.flatnonzero(np.diff(flat) != 0)
    starts = np.concatenate(([0], boundaries + 1))
    ends = np.concatenate((boundaries + 1, [flat.size]))
    vals = flat[starts]
    keep = vals > 0
    lengths = ends[keep] - starts[keep]
    counts = np.zeros((q.n_levels, max(q.levels.shape)), dtype=np.float64)
    np.add.at(counts, (vals[keep] - 1, lengths - 1), 1.0)
    return counts


def _rlm_style_features(
    counts: np.ndarray, n_pixels: int, names: tuple[str, ...]
) -> dict[str, float]:
    """Shared feature shapes for GLRLM (runs) and GLSZM (zones)."""
    nr = counts.sum()
    ng, nl = counts.shape
    lev = np.arange(1, ng + 1, dtype=np.float64)
    ln = np.arange(1, nl + 1, dtype=np.float64)
    ii, ll = np.meshgrid(lev, ln, indexing="ij")
    pg = counts.sum(axis=1)
    pl = counts.sum(axis=0)
    p = counts / nr
    mu_g = float((lev * pg / nr).sum())
    mu_l = float((ln * pl / nr).sum())
    values = (
        float((counts / ll**2).sum() / nr),
        float((counts * ll**2).sum() / nr),
        float((pg**2).sum() / nr),
        float((pg**2).sum() / nr**2),
        float((pl**2).sum() / nr),
        float((pl**2).sum() / nr**2),
        float(nr / n_pixels),
        float((p * (ii - mu_g) ** 2).sum()),
        float((p * (ll - mu_l) ** 2).sum()),
        _entropy2(p.ravel()),
        float((counts / ii**2).sum() / nr),
        float((counts * ii**2).sum() / nr),
        float((counts / (ii**2 * ll**2)).sum() / nr),
        float((counts * ii**2 / ll**2).sum() / nr),
        float((counts * ll**2 / ii**2).sum() / nr),
        float((counts * ii**2 * ll**2).sum() / nr),
    )
    return dict(zip(names, values))


def glrlm_features(
    q: QuantizedROI, directions: tuple[tuple[int, int], ...] = DIRECTIONS_2D
) -> dict[str, float]:
    _require_roi(q)
    n_pixels = int(q.mask.sum())
    per_dir = [
        _rlm_style_features(glrlm_matrix(q, d), n_pixels, GLRLM_NAMES) for d in directions
    ]
    return {name: float(np.mean([d[name] for d in per_dir])) for name in GLRLM_NAMES}


def glszm_matrix(q: QuantizedROI) -> np.ndarray:
    """Zone-size counts, shape (Ng, max_zone_size); zones are 8-connected."""
    sizes_per_level: dict[int, np.ndarray] = {}
    max_size = 1
    for lv in range(1, q.n_levels + 1):
        lab, n = ndimage.label(q.levels == lv, structure=_EIGHT)
        if n == 0:
            continue
        sizes = np.bincount(lab.ravel())[1:]
        sizes_per_level[lv] = sizes
        max_size = max(max_size, int(sizes.max()))
    counts = np.zeros((q.n_levels, max_size), dtype=np.float64)
    for lv, sizes in sizes_per_level.items():
        for s in sizes:
            counts[lv - 1, s - 1] += 1
    return counts


def glszm_features(q: QuantizedROI) -> dict[str, float]:
    _require_roi(q)
    return _rlm_style_features(glszm_matrix(q), int(q.mask.sum()), GLSZM_NAMES)


def _neighbor_level_stats(levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel sum and count of masked 8-neighbor levels."""
    h, w = levels.shape
    total = np.zeros((h, w), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.float64)
    masked = levels > 0
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r0a, r0b = max(0, -dr), max(0, dr)
            c0a, c0b = max(0, -dc), max(0, dc)
            dst = (slice(r0a, h - r0b), slice(c0a, w - c0b))
            src = (slice(r0b, h - r0a), slice(c0b, w - c0a))
            total[dst] += np.where(masked[src], levels[src], 0)
            count[dst] += masked[src]
    return total, count


def ngtdm_table(q: QuantizedROI) -> tuple[np.ndarray, np.ndarray]:
    """(n_i, s_i) per gray level: pixel counts and absolute differences to
    the mean level of each pixel's masked neighbors. Pixels with no masked
    neighbor are excluded."""
    total, count = _neighbor_level_stats(q.levels)
    valid = q.mask & (count > 0)
    n = np.zeros(q.n_levels, dtype=np.float64)
    s = np.zeros(q.n_levels, dtype=np.float64)
    if valid.any():
        lv = q.levels[valid]
        mean_nb = total[valid] / count[valid]
        diffs = np.abs(lv - mean_nb)
        n = np.bincount(lv - 1, minlength=q.n_levels).astype(np.float64)
        s = np.bincount(lv - 1, weights=diffs, minlength=q.n_levels)
    return n, s


def ngtdm_features(q: QuantizedROI) -> dict[str, float]:
    _require_roi(q)
    n, s = ngtdm_table(q)
    nvp = n.sum()
    if nvp == 0:
        return {
            "Coarseness": COARSENESS_CAP,
            "Contrast": 0.0,
            "Busyness": 0.0,
            "Complexity": 0.0,
            "Strength": 0.0,
        }
    p = n / nvp
    lev = np.arange(1, q.n_levels + 1, dtype=np.float64)
    present = p > 0
    ngp = int(present.sum())
    ps_sum = float((p * s).sum())
    coarseness = 1.0 / ps_sum if ps_sum > 0 else COARSENESS_CAP
    coarseness = min(coarseness, COARSENESS_CAP)

    li = lev[present]
    pi = p[present]
    si = s[present]
    d2 = (li[:, None] - li[None, :]) ** 2
    if ngp > 1:
        contrast = float(
            (pi[:, None] * pi[None, :] * d2).sum() / (ngp * (ngp - 1)) * (s.sum() / nvp)
        )
    else:
        contrast = 0.0
    busy_den = float(np.abs(li[:, None] * pi[:, None] - li[None, :] * pi[None, :]).sum())
    busyness = ps_sum / busy_den if busy_den > 0 else 0.0
    num = np.abs(li[:, None] - li[None, :]) * (
        (pi[:, None] * si[:, None] + pi[None, :] * si[None, :])
        / (pi[:, None] + pi[None, :])
    )
    complexity = float(num.sum() / nvp)
    s_sum = float(s.sum())
    strength = (
        float(((pi[:, None] + pi[None, :]) * d2).sum() / s_sum) if s_sum > 0 else 0.0
    )
    return {
        "Coarseness": coarseness,
        "Contrast": contrast,
        "Busyness": busyness,
        "Complexity": complexity,
        "Strength": strength,
    }


def gldm_matrix(q: QuantizedROI, alpha: int = 0) -> np.ndarray:
    """Dependence counts, shape (Ng, max_dependence). The dependence of a
    pixel is 1 (itself) plus the number of masked 8-neighbors whose level
    differs by at most alpha."""
    h, w = q.levels.shape
    dep = np.zeros((h, w), dtype=np.int64)
    masked = q.mask
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r0a, r0b = max(0, -dr), max(0, dr)
            c0a, c0b = max(0, -dc), max(0, dc)
            dst = (slice(r0a, h - r0b), slice(c0a, w - c0b))
            src = (slice(r0b, h - r0a), slice(c0b, w - c0a))
            dependent = (
                masked[src]
                & masked[dst]
                & (np.abs(q.levels[src] - q.levels[dst]) <= alpha)
            )
            dep[dst] += dependent
    dep_sizes = dep[masked] + 1
    levels = q.levels[masked]
    max_dep = int(dep_sizes.max())
    counts = np.zeros((q.n_levels, max_dep), dtype=np.float64)
    np.add.at(counts, (levels - 1, dep_sizes - 1), 1.0)
    return counts


def gldm_features(q: QuantizedROI, alpha: int = 0) -> dict[str, float]:
    _require_roi(q)
    counts = gldm_matrix(q, alpha=alpha)
    nz = counts.sum()
    ng, nd = counts.shape
    lev = np.arange(1, ng + 1, dtype=np.float64)
    dd = np.arange(1, nd + 1, dtype=np.float64)
    ii, jj = np.meshgrid(lev, dd, indexing="ij")
    pg = counts.sum(axis=1)
    pdep = counts.sum(axis=0)
    p = counts / nz
    mu_g = float((lev * pg / nz).sum())
    mu_d = float((dd * pdep / nz).sum())
    return {
        "SmallDependenceEmphasis": float((counts / jj**2).sum() / nz),
        "LargeDependenceEmphasis": float((counts * jj**2).sum() / nz),
        "GrayLevelNonUniformity": float((pg**2).sum() / nz),
        "DependenceNonUniformity": float((pdep**2).sum() / nz),
        "DependenceNonUniformityNormalized": float((pdep**2).sum() / nz**2),
        "GrayLevelVariance": float((p * (ii - mu_g) ** 2).sum()),
        "DependenceVariance": float((p * (jj - mu_d) ** 2).sum()),
        "DependenceEntropy": _entropy2(p.ravel()),
        "LowGrayLevelEmphasis": float((counts / ii**2).sum() / nz),
        "HighGrayLevelEmphasis": float((counts * ii**2).sum() / nz),
        "SmallDependenceLowGrayLevelEmphasis": float(
            (counts / (ii**2 * jj**2)).sum() / nz
        ),
        "SmallDependenceHighGrayLevelEmphasis": float(
            (counts * ii**2 / jj**2).sum() / nz
        ),
        "LargeDependenceLowGrayLevelEmphasis": float(
            (counts * jj**2 / ii**2).sum() / nz
        ),
        "LargeDependenceHighGrayLevelEmphasis": float(
            (counts * ii**2 * jj**2).sum() / nz
        ),
    }
