"""Look-matching augmentation: blur estimation, adaptive motion blur,
additive noise, and compositing of the synthetic render onto the background.

Sharpness is measured as the variance of the discrete Laplacian
(3x3 stencil [[0,1,0],[1,-4,1],[0,1,0]]) over interior pixels: the blurrier
the background, the lower the score, and the stronger the blur kernel picked
for the synthetic layer. The coverage raster is blurred together with the
color raster so gate silhouettes soften into the background instead of being
pasted with hard edges. Noise is added to the synthetic layer last, then the
two layers are alpha-blended with the (possibly fractional) coverage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .render import FrameBuffers

LAPLACIAN_STENCIL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

IDENTITY_KERNEL = np.array([[1.0]])

DEFAULT_BLUR_THRESHOLDS = (100.0, 300.0, 1000.0)
DEFAULT_KERNEL_LENGTHS = (5, 9, 13)
DEFAULT_NOISE_SIGMA = 5.0


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luminance (BT.601) as float64; grayscale input passes through."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    raise ValidationError(f"expected HxW or HxWx3 image, got shape {arr.shape}")


def blur_score(img: np.ndarray) -> float:
    """Variance of the Laplacian over valid interior pixels.

    High score = sharp image; a constant image scores exactly 0.
    """
    gray = to_grayscale(img)
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise ValidationError("image must be at least 3x3 for the Laplacian")
    lap = (
        gray[:-2, 1:-1]
        + gray[2:, 1:-1]
        + gray[1:-1, :-2]
        + gray[1:-1, 2:]
        - 4.0 * gray[1:-1, 1:-1]
    )
    return float(lap.var())


def line_kernel(length: int, angle: float = 0.0) -> np.ndarray:
    """Normalized 1D box (motion-blur) kernel of odd `length` at `angle`.

    angle 0 gives the exact horizontal 1 x length box; other angles splat the
    line bilinearly into a length x length grid.
    """
    if length < 1 or length % 2 == 0:
        raise ValidationError("kernel length must be odd and positive")
    if length == 1:
        return IDENTITY_KERNEL.copy()
    angle = float(angle) % np.pi
    if angle < 1e-12 or np.pi - angle < 1e-12:
        return np.full((1, length), 1.0 / length)
    grid = np.zeros((length, length))
    center = (length - 1) / 2.0
    steps = 8 * length
    for t in np.linspace(-center, center, steps):
        x = center + t * np.cos(angle)
        y = center + t * np.sin(angle)
        ix, iy = int(np.floor(x)), int(np.floor(y))
        fx, fy = x - ix, y - iy
        for dy, wy in ((0, 1.0 - fy), (1, fy)):
            for dx, wx in ((0, 1.0 - fx), (1, fx)):
                if 0 <= iy + dy < length and 0 <= ix + dx < length:
                    grid[iy + dy, ix + dx] += wx * wy
    return grid / grid.sum()


def dominant_gradient_angle(img: np.ndarray) -> float:
    """Principal gradient orientation of the image (structure tensor), radians."""
    gray = to_grayscale(img)
    gy, gx = np.gradient(gray)
    jxx = float((gx * gx).sum())
    jyy = float((gy * gy).sum())
    jxy = float((gx * gy).sum())
    return 0.5 * np.arctan2(2.0 * jxy, jxx - jyy)


@dataclass(frozen=True, eq=False)
class BlurPolicy:
    """Three ascending sharpness thresholds and three kernels of ascending
    strength; scores above the top threshold map to the identity kernel.

    With orient_to_background set, the selected kernel is rebuilt as a line
    kernel of the same length aligned with the background's dominant gradient
    orientation.
    """

    thresholds: tuple[float, float, float]
    kernels: tuple[np.ndarray, np.ndarray, np.ndarray]
    orient_to_background: bool = False

    def __post_init__(self):
        t = tuple(float(v) for v in self.thresholds)
        if len(t) != 3 or not (t[0] < t[1] < t[2]):
            raise ValidationError("thresholds must be three strictly ascending values")
        kernels = []
        for k in self.kernels:
            k = np.asarray(k, dtype=np.float64)
            if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
                raise ValidationError("blur kernels must be 2D with odd dimensions")
            if abs(float(k.sum()) - 1.0) > 1e-6:
                raise ValidationError("blur kernel coefficients must sum to 1")
            kernels.append(k)
        if len(kernels) != 3:
            raise ValidationError("policy needs exactly three kernels")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "kernels", tuple(kernels))


def default_blur_policy(orient_to_background: bool = True) -> BlurPolicy:
    """Trial-and-error defaults: thresholds 100/300/1000 and box kernels of
    length 5/9/13 (weak to strong)."""
    return BlurPolicy(
        thresholds=DEFAULT_BLUR_THRESHOLDS,
        kernels=tuple(line_kernel(n) for n in DEFAULT_KERNEL_LENGTHS),
        orient_to_background=orient_to_background,
    )


def select_kernel(score: float, policy: BlurPolicy) -> np.ndarray:
    """Piecewise-constant mapping from sharpness score to blur kernel.

    Lower score (blurrier background) picks a stronger kernel; a score at a
    threshold falls in the upper (weaker) band.
    """
    t0, t1, t2 = policy.thresholds
    if score >= t2:
        return IDENTITY_KERNEL
    if score >= t1:
        return policy.kernels[0]
    if score >= t0:
        return policy.kernels[1]
    return policy.kernels[2]


def _convolve_float(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2D convolution with replicate-edge padding, no clamping."""
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    pad = [(ph, ph), (pw, pw)] + [(0, 0)] * (img.ndim - 2)
    padded = np.pad(np.asarray(img, dtype=np.float64), pad, mode="edge")
    flipped = kernel[::-1, ::-1]
    height, width = img.shape[0], img.shape[1]
    out = np.zeros(img.shape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            coeff = flipped[i, j]
            if coeff == 0.0:
                continue
            out += coeff * padded[i : i + height, j : j + width]
    return out


def convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 2D convolution of an 8-bit image, clamped to [0, 255]."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValidationError("kernel dimensions must be odd")
    out = _convolve_float(np.asarray(img), kernel)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def add_gaussian_noise(img: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean i.i.d. Gaussian noise per channel, clamped to [0, 255]."""
    if sigma < 0:
        raise ValidationError("noise sigma must be non-negative")
    img = np.asarray(img)
    if sigma == 0:
        return img.copy()
    noisy = img.astype(np.float64) + rng.normal(0.0, sigma, size=img.shape)
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def _coverage_window(coverage: np.ndarray, kernel: np.ndarray) -> tuple[int, int, int, int]:
    """Rows/cols slice covering all coverage plus the kernel spread."""
    rows = np.flatnonzero(coverage.any(axis=1))
    cols = np.flatnonzero(coverage.any(axis=0))
    ph, pw = kernel.shape[0] // 2, kernel.shape[1] // 2
    r0 = max(0, int(rows[0]) - ph)
    r1 = min(coverage.shape[0], int(rows[-1]) + ph + 1)
    c0 = max(0, int(cols[0]) - pw)
    c1 = min(coverage.shape[1], int(cols[-1]) + pw + 1)
    return r0, r1, c0, c1


def composite(background: np.ndarray, fb: FrameBuffers, policy: BlurPolicy,
              sigma: float, rng: np.random.Generator,
              background_score: float | None = None,
              background_angle: float | None = None) -> np.ndarray:
    """Blend the rendered layer onto the background with matched blur/noise.

    Order: estimate the background sharpness, pick a kernel, blur the
    synthetic color and coverage rasters, add Gaussian noise to the synthetic
    layer, alpha-blend. The rendered color raster is coverage*color by
    construction (black outside the gates), so after blurring it is the
    premultiplied term of the blend and the output is

        out = blur(coverage * color) + (1 - blur(coverage)) * background

    with the noise scaled by the blurred coverage so it stays confined to the
    synthetic contribution. `background_score`/`background_angle`
    short-circuit the (cacheable) per-background estimates. Pixels with zero
    post-blur coverage are returned untouched.
    """
    background = np.asarray(background)
    if background.ndim != 3 or background.shape[2] != 3:
        raise ValidationError("composite expects an RGB background")
    if background.shape[:2] != fb.coverage.shape:
        raise ValidationError(
            f"background {background.shape[:2]} does not match render buffers {fb.coverage.shape}"
        )
    out = background.copy()
    if not fb.coverage.any():
        return out

    score = blur_score(background) if background_score is None else float(background_score)
    kernel = select_kernel(score, policy)
    if policy.orient_to_background and kernel is not IDENTITY_KERNEL:
        angle = dominant_gradient_angle(background) if background_angle is None else background_angle
        kernel = line_kernel(max(kernel.shape), angle)

    # outside this window the synthetic layer is identically zero, so the
    # blend would return the background anyway; convolving only the window is
    # exact because its border ring (inside the frame) is all zeros
    r0, r1, c0, c1 = _coverage_window(fb.coverage, kernel)
    color = convolve(fb.color[r0:r1, c0:c1], kernel).astype(np.float64)
    coverage = np.clip(_convolve_float(fb.coverage[r0:r1, c0:c1].astype(np.float64), kernel), 0.0, 1.0)

    alpha = coverage[..., None]
    if sigma < 0:
        raise ValidationError("noise sigma must be non-negative")
    if sigma > 0:
        color = color + alpha * rng.normal(0.0, sigma, size=color.shape)
    blended = color + (1.0 - alpha) * background[r0:r1, c0:c1].astype(np.float64)
    out[r0:r1, c0:c1] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
    return out
