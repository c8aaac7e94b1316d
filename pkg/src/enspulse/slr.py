"""Spinor-polynomial (Shinnar-Le Roux style) pulse design.

An n-step hard-pulse train — each step a free z-precession over ``dt``
followed by an rf rotation with flip ``phi_k`` and phase ``theta_k`` —
has a net spinor equal to ``z^(n/2) (P(z), Q(z))`` with ``z = exp(-i w dt)``
and P, Q polynomials of order n-1 in ``z^-1``.  The forward recursion maps
steps to (P, Q); the backward recursion inverts it one degree at a time;
spectral factorization completes a fitted Q into a unimodular pair.  The
designers at the bottom assemble these into broadband-rotation and
pattern (frequency-selective) pulses.

Completion convention: P is the minimum-phase spectral factor of
``1 - |Q|^2`` on the unit circle (all zeros of P inside the open disk,
constant coefficient real positive), deterministic and energy-front-loaded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .bloch import ControlSequence
from .errors import CompletionError, DegenerateExtractionError, InfeasibleError

__all__ = [
    "HardPulseStep",
    "SpinorPolynomials",
    "TargetProfile",
    "PolyFit",
    "BroadbandDesign",
    "PatternDesign",
    "forward_recursion",
    "forward_recursion_trace",
    "inverse_recursion",
    "inverse_recursion_full",
    "inverse_recursion_trace",
    "complete_polynomial",
    "target_to_polys",
    "design_broadband",
    "design_pattern",
    "band_selective_profile",
    "broadband_profile",
    "steps_to_pulse",
    "pulse_to_steps",
    "predicted_spinor",
    "unimodularity_residual",
    "spinor_band_error",
]

MAX_SUBDIVISIONS = 2**16


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HardPulseStep:
    """One hard-pulse rotation: flip angle in [0, pi], rf phase in radians."""

    phi: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.phi <= np.pi + 1e-12):
            raise ValueError(f"flip angle {self.phi} outside [0, pi]")

    @property
    def chalf(self) -> float:
        return float(np.cos(0.5 * self.phi))

    @property
    def shalf(self) -> complex:
        return complex(-1j * np.exp(1j * self.theta) * np.sin(0.5 * self.phi))


@dataclass(frozen=True)
class SpinorPolynomials:
    """Coefficients of P, Q in ascending powers of z^-1 (equal length n)."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.complex128).ravel()
        q = np.asarray(self.q, dtype=np.complex128).ravel()
        if p.size != q.size or p.size == 0:
            raise ValueError("p and q must be nonempty and of equal length")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.p.size

    def evaluate(self, omega: np.ndarray, dt: float):
        """P(z), Q(z) at z = exp(-i omega dt)."""
        omega = np.asarray(omega, dtype=float)
        v = np.exp(1j * np.outer(omega * dt, np.arange(self.n)))
        return v @ self.p, v @ self.q


def unimodularity_residual(poly: SpinorPolynomials, nsamples: int = 256) -> float:
    """Max over unit-circle samples of | |P|^2 + |Q|^2 - 1 |."""
    phase = np.linspace(0.0, 2.0 * np.pi, nsamples, endpoint=False)
    pv, qv = poly.evaluate(phase, 1.0)
    return float(np.abs(np.abs(pv) ** 2 + np.abs(qv) ** 2 - 1.0).max())


def predicted_spinor(poly: SpinorPolynomials, omega: np.ndarray, dt: float):
    """Final spinor (alpha, beta) the polynomial pair predicts per offset."""
    pv, qv = poly.evaluate(omega, dt)
    lead = np.exp(-0.5j * np.asarray(omega, dtype=float) * poly.n * dt)
    return lead * pv, lead * qv


@dataclass
class TargetProfile:
    """Desired Cayley-Klein pair per offset sample (unimodular per sample).

    Samples cover only the *constrained* offsets; omitted stretches act as
    don't-care transition regions for the fit.  Optional per-sample weights
    bias the least-squares trade-off (e.g. passband over stopband).
    """

    omega: np.ndarray
    f_alpha: np.ndarray
    f_beta: np.ndarray
    tag: str | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).ravel()
        fa = np.asarray(self.f_alpha, dtype=np.complex128).ravel()
        fb = np.asarray(self.f_beta, dtype=np.complex128).ravel()
        if not (w.size == fa.size == fb.size) or w.size == 0:
            raise ValueError("profile arrays must be nonempty and of equal length")
        norm_dev = np.abs(np.abs(fa) ** 2 + np.abs(fb) ** 2 - 1.0).max()
        if norm_dev > 1e-10:
            raise ValueError(f"profile is not unimodular (deviation {norm_dev:.2e})")
        if self.weights is not None:
            wt = np.asarray(self.weights, dtype=float).ravel()
            if wt.size != w.size or np.any(wt < 0):
                raise ValueError("weights must be nonnegative, one per sample")
            self.weights = wt
        self.omega, self.f_alpha, self.f_beta = w, fa, fb


# ---------------------------------------------------------------------------
# recursions
# ---------------------------------------------------------------------------


def forward_recursion(steps: list[HardPulseStep]) -> SpinorPolynomials:
    """Map hard-pulse steps to the spinor-polynomial pair."""
    if not steps:
        raise ValueError("need at least one step")
    c = np.array([s.chalf for s in steps])
    s = np.array([s.shalf for s in steps])
    p, q = kernels.slr_forward(c, s)
    return SpinorPolynomials(p, q)


def forward_recursion_trace(steps: list[HardPulseStep]) -> list[SpinorPolynomials]:
    """Like :func:`forward_recursion` but keeping every intermediate pair."""
    out = []
    for k in range(1, len(steps) + 1):
        out.append(forward_recursion(steps[:k]))
    return out


def inverse_recursion_full(poly: SpinorPolynomials, unimod_tol: float = 1e-6):
    """Backward recursion; returns (steps, diagnostics dict).

    Diagnostics carry the worst dropped leading/low-order coefficients (the
    two degree-reduction conditions) and the deviation of the fully reduced
    pair from (1, 0).
    """
    res = unimodularity_residual(poly, max(256, 4 * poly.n))
    if res > unimod_tol:
        raise ValueError(
            f"polynomials violate the norm constraint by {res:.2e} (tol {unimod_tol:.0e})"
        )
    phi, theta, res_lead, res_low, final_dev = kernels.slr_inverse(poly.p, poly.q)
    if np.any(np.isnan(phi)):
        raise DegenerateExtractionError(
            "vanishing constant term in P with nonzero Q: flip angle of pi is "
            "outside the invertible range"
        )
    steps = [HardPulseStep(float(f), float(t)) for f, t in zip(phi, theta)]
    diag = {
        "res_lead": float(res_lead),
        "res_low": float(res_low),
        "final_dev": float(final_dev),
    }
    return steps, diag


def inverse_recursion(poly: SpinorPolynomials) -> list[HardPulseStep]:
    """Extract the hard-pulse steps generating the polynomial pair."""
    steps, _ = inverse_recursion_full(poly)
    return steps


def inverse_recursion_trace(poly: SpinorPolynomials):
    """Backward recursion keeping every intermediate (shorter) pair."""
    pw = poly.p.copy()
    qw = poly.q.copy()
    trace = []
    for length in range(poly.n, 1, -1):
        phi, theta, *_ = kernels.slr_inverse(pw[:length], qw[:length])
        step = HardPulseStep(float(phi[length - 1]), float(theta[length - 1]))
        c, s = step.chalf, step.shalf
        p_new = c * pw[:length] + np.conj(s) * qw[:length]
        q_new = -s * pw[:length] + c * qw[:length]
        pw[: length - 1] = p_new[: length - 1]
        qw[: length - 1] = q_new[1:length]
        trace.append(SpinorPolynomials(pw[: length - 1].copy(), qw[: length - 1].copy()))
    return trace


def steps_to_pulse(steps: list[HardPulseStep], dt: float, a_max: float | None = None) -> ControlSequence:
    """Realize steps as controls: u = (phi/dt) cos(theta), v = (phi/dt) sin(theta)."""
    amps = np.array([s.phi / dt for s in steps])
    thetas = np.array([s.theta for s in steps])
    samples = np.column_stack([amps * np.cos(thetas), amps * np.sin(thetas)])
    return ControlSequence(dt, samples, a_max)


def pulse_to_steps(pulse: ControlSequence) -> list[HardPulseStep]:
    """Hard-pulse view of a control sequence (flips must stay within pi)."""
    out = []
    for u, v in pulse.samples:
        amp = float(np.hypot(u, v))
        out.append(HardPulseStep(amp * pulse.dt, float(np.arctan2(v, u)) if amp > 0 else 0.0))
    return out


# ---------------------------------------------------------------------------
# completion (spectral factorization)
# ---------------------------------------------------------------------------


def _leja_order(roots: np.ndarray) -> np.ndarray:
    """Order roots so the running factor product stays O(1) in magnitude.

    Naive ordering lets the elementary-symmetric partial sums blow up by
    many orders of magnitude before cancelling, which silently eats the
    factorization accuracy.
    """
    rem = list(roots)
    out = [max(rem, key=abs)]
    rem.remove(out[-1])
    while rem:
        chosen = np.array(out)
        nxt = max(rem, key=lambda z: float(np.sum(np.log(np.abs(z - chosen) + 1e-300))))
        out.append(nxt)
        rem.remove(nxt)
    return np.array(out)


def _min_phase_from_roots(roots_inside: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Assemble sqrt(K) * prod(1 - r_i z^-1) matching |P|^2 = 1 - |Q|^2."""
    p = np.array([1.0 + 0.0j])
    for r in _leja_order(roots_inside):
        p = np.convolve(p, np.array([1.0, -r]))
    # least-squares scale over the circle: |P|^2 = K |prod|^2 target F
    phase = np.linspace(0.0, 2.0 * np.pi, 8 * (len(q) + 1), endpoint=False)
    v = np.exp(1j * np.outer(phase, np.arange(len(q))))
    fvals = 1.0 - np.abs(v @ q) ** 2
    pv = np.exp(1j * np.outer(phase, np.arange(len(p)))) @ p
    w2 = np.abs(pv) ** 2
    k_scale = float(np.sum(fvals * w2) / np.sum(w2 * w2))
    if k_scale <= 0:
        raise CompletionError("norm target is not positive on the unit circle")
    p = np.sqrt(k_scale) * p
    # rotate the constant coefficient to the real positive axis
    p = p * np.exp(-1j * np.angle(p[0]))
    return p


def complete_polynomial(
    q: np.ndarray, margin: float = 1e-6, residual_tol: float = 1e-8
) -> SpinorPolynomials:
    """Build the minimum-phase P with |P|^2 = 1 - |Q|^2 on the unit circle.

    If max |Q| exceeds 1 - margin the coefficients are rescaled down to
    that ceiling first (margin 0 with |Q| > 1 is rejected); the margin
    keeps the factorization roots off the unit circle.
    """
    q = np.asarray(q, dtype=np.complex128).ravel()
    n = q.size
    if n == 0:
        raise ValueError("q must be nonempty")
    nfft = max(4096, 16 * n)
    qmax = float(np.abs(np.fft.fft(q, nfft)).max())
    if qmax > 1.0 - margin:
        if margin <= 0.0 and qmax > 1.0:
            raise ValueError(f"|Q| reaches {qmax:.6f} > 1 with no margin to rescale")
        q = q * (1.0 - margin) / qmax

    if np.abs(q[1:]).max(initial=0.0) == 0.0:
        # constant Q completes to a constant P
        p = np.zeros(n, dtype=np.complex128)
        p[0] = np.sqrt(1.0 - np.abs(q[0]) ** 2)
        return SpinorPolynomials(p, q)

    # Laurent coefficients of 1 - Q(z) Q~(z), ascending in m; equal, by
    # construction, to the z-descending coefficients of the factor polynomial
    f = -np.correlate(q, q, "full")
    f[n - 1] += 1.0
    # near-zero end taps of q make the factor polynomial's extreme
    # coefficients vanish, which wrecks the companion-matrix conditioning;
    # deflate them (their roots are (~0, ~inf) pairs that contribute
    # nothing to the product on the circle)
    strip = 0
    fmax = np.abs(f).max()
    while strip < n - 1 and (
        abs(f[strip]) < 1e-12 * fmax and abs(f[len(f) - 1 - strip]) < 1e-12 * fmax
    ):
        strip += 1
    trimmed = f[strip : len(f) - strip]
    n_inside = (len(trimmed) - 1) // 2
    if n_inside == 0:
        # Q is constant to working precision
        p = np.zeros(n, dtype=np.complex128)
        p[0] = np.sqrt(max(trimmed[0].real, 0.0))
        return SpinorPolynomials(p, q)
    roots = np.roots(trimmed)
    order = np.argsort(np.abs(roots))
    inside = roots[order][:n_inside]
    if np.abs(inside[-1]) >= 1.0:
        raise CompletionError("factorization roots reached the unit circle")
    p = _min_phase_from_roots(inside, q)
    p = np.concatenate([p, np.zeros(n - p.size, dtype=np.complex128)])
    out = SpinorPolynomials(p, q)
    res = unimodularity_residual(out, 16 * n)
    if res > residual_tol:
        raise CompletionError(f"completion residual {res:.2e} exceeds {residual_tol:.0e}")
    return out


# ---------------------------------------------------------------------------
# fitting a target profile
# ---------------------------------------------------------------------------


@dataclass
class PolyFit:
    polys: SpinorPolynomials
    band_error: float
    fit_residual: float


def spinor_band_error(
    poly: SpinorPolynomials, profile: TargetProfile, dt: float
) -> float:
    """Max phase-aligned spinor distance between (P, Q) and the profile.

    A common per-offset phase (the only freedom a state has) is aligned
    away; magnitude errors of both components and their relative phase
    error are all counted.
    """
    pv, qv = poly.evaluate(profile.omega, dt)
    overlap = np.abs(np.conj(profile.f_alpha) * pv + np.conj(profile.f_beta) * qv)
    return float(np.sqrt(np.maximum(2.0 - 2.0 * overlap, 0.0)).max())


def _resample_profile(profile: TargetProfile, min_samples: int) -> TargetProfile:
    if profile.omega.size >= min_samples:
        return profile
    w = np.linspace(profile.omega.min(), profile.omega.max(), min_samples)
    fa = np.interp(w, profile.omega, profile.f_alpha.real) + 1j * np.interp(
        w, profile.omega, profile.f_alpha.imag
    )
    fb = np.interp(w, profile.omega, profile.f_beta.real) + 1j * np.interp(
        w, profile.omega, profile.f_beta.imag
    )
    norm = np.sqrt(np.abs(fa) ** 2 + np.abs(fb) ** 2)
    wt = None
    if profile.weights is not None:
        wt = np.interp(w, profile.omega, profile.weights)
    return TargetProfile(w, fa / norm, fb / norm, profile.tag, wt)


def target_to_polys(
    profile: TargetProfile,
    n: int,
    dt: float,
    margin: float = 1e-6,
    absorb_alpha_phase: bool = True,
) -> PolyFit:
    """Least-squares fit of q to the beta profile, then completion for p.

    ``absorb_alpha_phase`` refits q with the completed P's phase folded into
    the beta target, so that the pair hits the profile up to a per-offset
    global phase (which is all that states can see).  The reported band
    error is the max phase-aligned spinor distance against the original
    profile.
    """
    if n < 1:
        raise ValueError("need at least one step")
    wmax = float(np.abs(profile.omega).max())
    if wmax * dt > np.pi:
        raise ValueError(
            f"band aliasing: max |omega|*dt = {wmax * dt:.3f} exceeds pi"
        )
    prof = _resample_profile(profile, 8 * n)
    a = np.exp(1j * np.outer(prof.omega * dt, np.arange(n)))
    rw = np.ones(prof.omega.size) if prof.weights is None else np.sqrt(prof.weights)
    aw = a * rw[:, None]

    # the truncation guards against near-null directions of arc-sampled
    # fits, whose "help" is microscopic but whose coefficients are not
    q, *_ = np.linalg.lstsq(aw, rw * prof.f_beta, rcond=1e-8)
    polys = complete_polynomial(q, margin=margin)
    if absorb_alpha_phase:
        pv, _ = polys.evaluate(prof.omega, dt)
        ph = np.exp(1j * (np.angle(pv) - np.angle(prof.f_alpha)))
        q, *_ = np.linalg.lstsq(aw, rw * prof.f_beta * ph, rcond=1e-8)
        polys = complete_polynomial(q, margin=margin)

    fit_resid = float(np.abs(polys.evaluate(prof.omega, dt)[1] - prof.f_beta).max())
    return PolyFit(polys, spinor_band_error(polys, profile, dt), fit_resid)


# ---------------------------------------------------------------------------
# designers
# ---------------------------------------------------------------------------


def broadband_profile(
    axis: str, angle: float, band: float, n: int, dt: float, transition: float | None = None
) -> TargetProfile:
    """Flat rotation target over [-band, band] with zero response far away.

    The out-of-band zero keeps the fitted filter genuinely band-limited (and
    the pulse energy spread over the train); a raised-cosine ramp joins the
    two levels so the fitted |Q| stays controlled on the whole circle.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    beta_unit = -1j if axis == "x" else 1.0
    stop_hi = 0.995 * np.pi / dt
    if transition is None:
        # use a quarter of the free spectral room, floored at the resolvable
        # width; over-sharp transitions just buy ripple
        transition = max(4.0 / (n * dt), 0.25 * (stop_hi - band))
    stop_lo = band + transition
    if stop_lo >= stop_hi:
        raise ValueError("band plus transition exceeds the unaliased range")
    w = np.linspace(-stop_hi, stop_hi, 24 * n + 1)
    aw = np.abs(w)
    s = np.sin(0.5 * angle)
    ramp = 0.5 * (1.0 + np.cos(np.pi * (aw - band) / transition))
    mag = np.where(aw <= band, s, np.where(aw >= stop_lo, 0.0, s * ramp))
    # a causal tap train is a one-sided Fourier series, so the realizable
    # flat-magnitude target carries the half-train delay phase
    fb = beta_unit * mag * _half_delay_phase(w, n, dt)
    fa = np.sqrt(1.0 - mag**2)
    return TargetProfile(w, fa, fb, tag=f"broadband-{axis}")


def _half_delay_phase(omega, n, dt):
    return np.exp(1j * np.asarray(omega, dtype=float) * dt * 0.5 * (n - 1))


@dataclass
class BroadbandDesign:
    pulse: ControlSequence
    polys: SpinorPolynomials  # single block
    band_error: float
    blocks: int
    block_angle: float
    profile: TargetProfile
    fit_residual: float


def _design_block(axis, angle, band, n, dt, margin, transition):
    profile = broadband_profile(axis, angle, band, n, dt, transition)
    fit = target_to_polys(profile, n, dt, margin=margin)
    steps, _ = inverse_recursion_full(fit.polys)
    return profile, fit, steps


def design_broadband(
    axis: str,
    angle: float,
    band: float,
    n: int,
    dt: float | None = None,
    a_max: float | None = None,
    margin: float = 1e-6,
    transition: float | None = None,
) -> BroadbandDesign:
    """Design a rotation about x or y that is flat over [-band, band].

    Unbounded: one block for the full angle.  With ``a_max``, the angle is
    split into the smallest number m of equal sub-angles whose extracted
    per-step amplitudes respect the bound, and the m identical blocks are
    concatenated.
    """
    if not (0.0 < angle < 2.0 * np.pi):
        raise ValueError("angle must lie in (0, 2*pi)")
    if dt is None:
        dt = 0.5 / band

    def block_for(m: int):
        return _design_block(axis, angle / m, band, n, dt, margin, transition)

    def feasible(block_steps) -> bool:
        if a_max is None:
            return True
        worst = max(s.phi for s in block_steps) / dt
        return worst <= a_max * (1 + 1e-12)

    profile, fit, steps = block_for(1)
    m = 1
    if not feasible(steps):
        lo = 1
        hi = 2
        while hi <= MAX_SUBDIVISIONS:
            profile, fit, steps = block_for(hi)
            if feasible(steps):
                break
            lo = hi
            hi *= 2
        else:
            raise InfeasibleError(
                f"no feasible subdivision count up to {MAX_SUBDIVISIONS} for a_max={a_max}"
            )
        # smallest feasible m in (lo, hi], assuming per-step flips shrink
        # monotonically with the block angle
        while hi - lo > 1:
            mid = (lo + hi) // 2
            p_mid, f_mid, s_mid = block_for(mid)
            if feasible(s_mid):
                hi, profile, fit, steps = mid, p_mid, f_mid, s_mid
            else:
                lo = mid
        m = hi

    block_pulse = steps_to_pulse(steps, dt, a_max)
    pulse = block_pulse
    for _ in range(m - 1):
        pulse = pulse.concat(block_pulse)

    band_error = _design_band_error(pulse, axis, angle, band, dt)
    return BroadbandDesign(pulse, fit.polys, band_error, m, angle / m, profile, fit.fit_residual)


def _design_band_error(pulse, axis, angle, band, dt, npoints=129):
    """Phase-aligned distance of the achieved pair to the rotation target.

    The whole pulse (possibly several concatenated blocks) is pushed through
    the forward recursion; the beta target carries the half-train delay and
    the alpha target the achieved phase convention, as in
    :func:`spinor_band_error`.
    """
    poly = forward_recursion(pulse_to_steps(pulse))
    omega = np.linspace(-band, band, npoints)
    pv, qv = poly.evaluate(omega, dt)
    beta_unit = -1j if axis == "x" else 1.0
    fb = beta_unit * np.sin(0.5 * angle) * _half_delay_phase(omega, poly.n, dt)
    fa = np.cos(0.5 * angle)
    overlap = np.abs(np.conj(fa) * pv + np.conj(fb) * qv)
    return float(np.sqrt(np.maximum(2.0 - 2.0 * overlap, 0.0)).max())


@dataclass
class PatternDesign:
    pulse: ControlSequence
    polys: SpinorPolynomials
    fit_error: float
    profile: TargetProfile


def band_selective_profile(
    band: float,
    select: tuple[float, float],
    flip: float,
    n: int,
    dt: float,
    transition: float | None = None,
) -> TargetProfile:
    """Flip-angle pattern: ``flip`` inside [select], 0 elsewhere.

    The profile is specified on the whole usable circle (zero flip outside
    the selection) with raised-cosine ramps of width ``transition`` at the
    selection edges, which keeps the fit well conditioned.
    """
    if not (0.0 <= flip <= np.pi):
        raise ValueError("flip must lie in [0, pi]")
    lo, hi = select
    if not (-band <= lo < hi <= band):
        raise ValueError("selection interval must sit inside the band")
    stop_hi = 0.995 * np.pi / dt
    min_trans = 4.0 / (n * dt)
    if transition is None:
        # a hair above the resolvable width buys its cost back in ripple
        room = 0.9 * min(stop_hi - hi, stop_hi + lo)
        transition = max(min_trans, min(0.3 * (hi - lo), room))
    if transition < min_trans:
        raise ValueError(
            f"transition {transition:.1f} rad/s narrower than the resolvable {min_trans:.1f}"
        )
    if hi + transition >= stop_hi or lo - transition <= -stop_hi:
        raise ValueError("selection plus transition exceeds the unaliased range")
    w = np.linspace(-stop_hi, stop_hi, 24 * n + 1)
    flips = np.zeros_like(w)
    inside = (w >= lo) & (w <= hi)
    flips[inside] = flip
    ramp_lo = (w < lo) & (w > lo - transition)
    flips[ramp_lo] = flip * 0.5 * (1.0 + np.cos(np.pi * (lo - w[ramp_lo]) / transition))
    ramp_hi = (w > hi) & (w < hi + transition)
    flips[ramp_hi] = flip * 0.5 * (1.0 + np.cos(np.pi * (w[ramp_hi] - hi) / transition))
    fb = -1j * np.sin(0.5 * flips) * _half_delay_phase(w, n, dt)
    fa = np.cos(0.5 * flips)
    # selection accuracy matters quadratically for inversion depth; the
    # ramps are shape guidance only
    weights = np.ones_like(w)
    weights[inside] = 10.0
    weights[ramp_lo | ramp_hi] = 0.3
    return TargetProfile(w, fa, fb, tag="pattern", weights=weights)


def design_pattern(
    profile: TargetProfile, n: int, dt: float, margin: float = 0.01
) -> PatternDesign:
    """Design a pulse whose flip-angle profile follows the target pattern.

    A full pi flip asks for |Q| = 1 on the circle, which the factorization
    cannot root; the completion's margin rescale caps |Q| at 1 - margin, so
    the achieved inversion depth is bounded by the margin.  Alpha-phase
    absorption is disabled: where the flip reaches pi the alpha component
    vanishes and its phase is numerical noise.
    """
    fit = target_to_polys(profile, n, dt, margin=margin, absorb_alpha_phase=False)
    steps, _ = inverse_recursion_full(fit.polys)
    pulse = steps_to_pulse(steps, dt)
    return PatternDesign(pulse, fit.polys, fit.band_error, profile)
