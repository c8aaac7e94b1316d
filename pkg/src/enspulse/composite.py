"""Bracket-word compilation of dispersion-compensating sequences.

Nested group commutators synthesize effective generators that carry higher
powers of the dispersion parameters; least-squares coefficients on those
powers then flatten (or shape) the parameter dependence of the net
rotation.  Three realization backends share the word machinery:

* rf leaves — one piecewise-constant control sample per segment (rf-scale
  compensation on a single spin);
* strong-rf segment leaves — free drift periods plus instantaneous
  rotations (offset compensation with unbounded rf);
* coupling segment leaves — two-qubit ZZ evolution periods plus
  instantaneous local rotations (coupling-strength compensation).

Every compiled object records the predicted generator as a
:class:`~enspulse.liealg.DispersionPolyElement`, so fit error and
commutator-approximation error can be separated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bloch import ControlSequence
from .errors import InfeasibleError
from .liealg import (
    DispersionPolyElement,
    FitResult,
    approximable,
    bracket_poly,
    evaluate_monomials,
    lie_closure,
    pauli,
    reachable_functions,
    so3_generators,
    two_qubit_coupling_generators,
)

__all__ = [
    "BracketWord",
    "RobustRotationSpec",
    "CompiledSequence",
    "Segment",
    "commutator_block",
    "fit_coefficients",
    "compile_robust_rotation",
    "compile_euler_angles",
    "compile_two_param",
    "compile_omega_robust",
    "compile_j_robust_zz",
    "reduce_coupling_tensor",
    "compensate_epsilon_small_flip",
    "simulate_strong_rf",
    "simulate_two_qubit",
    "rotation_fidelity",
    "gate_fidelity",
    "word_for_power",
]

SO3 = so3_generators()
DEFAULT_DT = 1e-3  # segment duration for compiled rf sequences (s)


# ---------------------------------------------------------------------------
# bracket words
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BracketWord:
    """leaf(label) or ad(left, right), meaning [left, right]."""

    kind: str
    label: str | None = None
    left: "BracketWord | None" = None
    right: "BracketWord | None" = None

    @classmethod
    def leaf(cls, label: str) -> "BracketWord":
        return cls("leaf", label=label)

    @classmethod
    def ad(cls, left: "BracketWord", right: "BracketWord") -> "BracketWord":
        return cls("ad", left=left, right=right)

    @property
    def depth(self) -> int:
        if self.kind == "leaf":
            return 1
        return 1 + max(self.left.depth, self.right.depth)

    def element(self, leaf_elements: Mapping[str, DispersionPolyElement]) -> DispersionPolyElement:
        if self.kind == "leaf":
            return leaf_elements[self.label]
        return bracket_poly(self.left.element(leaf_elements), self.right.element(leaf_elements))


def word_for_power(axis: str, partner: str, exponent: int) -> BracketWord:
    """Nested word whose element is proportional to eps^exponent * O_axis.

    exponent must be odd; each extra pair of partner-brackets raises the
    parameter power by two.
    """
    if exponent < 1 or exponent % 2 == 0:
        raise ValueError("only odd parameter powers are bracket-reachable here")
    word = BracketWord.leaf(axis)
    p = BracketWord.leaf(partner)
    for _ in range((exponent - 1) // 2):
        word = BracketWord.ad(p, BracketWord.ad(p, word))
    return word


def _monomial_scale(elem: DispersionPolyElement, exponents: Mapping[str, int], direction: np.ndarray) -> float:
    """Scalar s with elem == s * monomial(exponents) * direction (exactly one term)."""
    if len(elem.monomials) != 1:
        raise ValueError("bracket word does not reduce to a single monomial")
    mon = elem.monomials[0]
    if mon.exponent_dict() != {k: v for k, v in exponents.items() if v}:
        raise ValueError(f"word carries exponents {mon.exponent_dict()}, wanted {exponents}")
    dvec = np.concatenate([direction.real.ravel(), direction.imag.ravel()])
    mvec = np.concatenate([mon.coeff.real.ravel(), mon.coeff.imag.ravel()])
    scale = float(dvec @ mvec) / float(dvec @ dvec)
    resid = np.linalg.norm(mvec - scale * dvec)
    if resid > 1e-10 * max(np.linalg.norm(mvec), 1.0):
        raise ValueError("word direction is not proportional to the requested axis")
    return scale


# ---------------------------------------------------------------------------
# rf realization (single spin, controls scaled by the dispersion parameter)
# ---------------------------------------------------------------------------

# plant at zero offset: dX/dt = eps * (u * Oy + v * Ox) X, so the "x" leaf
# drives v and the "y" leaf drives u
RF_CHANNELS = {"x": 1, "y": 0}

RF_ELEMENTS = {
    "x": DispersionPolyElement.single({"eps": 1}, SO3["x"]),
    "y": DispersionPolyElement.single({"eps": 1}, SO3["y"]),
}


def _inv_rf(samples: list[np.ndarray]) -> list[np.ndarray]:
    return [-s for s in reversed(samples)]


def _realize_rf(word: BracketWord, amount: float, dt: float) -> list[np.ndarray]:
    """Time-ordered (u, v) samples whose net rotation is exp(amount * G_word).

    The undo halves of each commutator are exact sequence inverses (not
    approximate reversed words), so a nested block's own error cancels and
    subdivision converges.
    """
    if word.kind == "leaf":
        sample = np.zeros(2)
        sample[RF_CHANNELS[word.label]] = amount / dt
        return [sample]
    s = float(np.sqrt(abs(amount)))
    right = _realize_rf(word.right, s, dt)
    left = _realize_rf(word.left, s, dt)
    seq = right + left + _inv_rf(right) + _inv_rf(left)
    return _inv_rf(seq) if amount < 0.0 else seq


def commutator_block(a: str, b: str, t: float, dt: float = DEFAULT_DT) -> ControlSequence:
    """Four-segment sequence approximating exp(t [G_a, G_b]) to O(t^(3/2))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return ControlSequence(dt, np.zeros((0, 2)))
    samples = _realize_rf(BracketWord.ad(BracketWord.leaf(a), BracketWord.leaf(b)), t, dt)
    return ControlSequence(dt, np.array(samples))


# ---------------------------------------------------------------------------
# coefficient fitting
# ---------------------------------------------------------------------------


def fit_coefficients(
    target: np.ndarray,
    basis_exponents: Sequence[int],
    grid: np.ndarray,
    tol: float = 1e-3,
    param: str = "eps",
) -> FitResult:
    """Least-squares coefficients for sum_k c_k p^e_k matching the target."""
    family = evaluate_monomials([{param: e} for e in basis_exponents], {param: np.asarray(grid)})
    return approximable(np.asarray(target, dtype=float), family, tol)


# ---------------------------------------------------------------------------
# compiled-sequence container
# ---------------------------------------------------------------------------


@dataclass
class Segment:
    """One labeled evolution segment of a strong-rf or two-qubit sequence."""

    kind: str  # "drift" | "rot" | "coupling" | "local" | "tensor"
    duration: float = 0.0
    qubit: int = 0
    axis: str = ""
    angle: float = 0.0
    tensor: tuple[float, float, float] | None = None

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("drift", "coupling", "tensor"):
            out["duration"] = self.duration
        if self.kind == "rot":
            out.update(axis=self.axis, angle=self.angle)
        if self.kind == "local":
            out.update(qubit=self.qubit, axis=self.axis, angle=self.angle)
        if self.kind == "tensor":
            out["tensor"] = list(self.tensor)
        return out


@dataclass
class CompiledSequence:
    sequence: ControlSequence | list[Segment]
    predicted: DispersionPolyElement
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RobustRotationSpec:
    """Target rotation angle as a sampled function of the rf-scale parameter."""

    axis: str
    angles: np.ndarray  # target rotation angle per grid point (rad)
    grid: np.ndarray  # parameter samples (rf scale eps)
    basis: tuple[int, ...] = (1, 3)
    tol: float = 5e-2
    subdivisions: int = 1

    def __post_init__(self):
        self.angles = np.broadcast_to(
            np.asarray(self.angles, dtype=float), np.asarray(self.grid).shape
        ).copy()
        self.grid = np.asarray(self.grid, dtype=float)
        if len(self.basis) == 0:
            raise ValueError("basis must be nonempty")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")


# ---------------------------------------------------------------------------
# rf-scale compensation (single spin)
# ---------------------------------------------------------------------------


def _check_rf_realizable(axis: str, basis: Sequence[int]):
    report = lie_closure(list(RF_ELEMENTS.values()), max_depth=max(basis) + 1)
    funcs = reachable_functions(report, SO3[axis])
    for e in basis:
        if {"eps": e} not in funcs:
            raise InfeasibleError(f"power eps^{e} on axis {axis} is not bracket-reachable")


def compile_robust_rotation(spec: RobustRotationSpec, dt: float = DEFAULT_DT) -> CompiledSequence:
    """Realize exp(theta(eps) * O_axis) to fit accuracy over the eps grid.

    Each basis power is synthesized by a nested bracket word, subdivided
    ``spec.subdivisions`` times; the words' exact single-monomial elements
    are measured, never assumed, so sign bookkeeping cannot drift.
    """
    if spec.axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    partner = "y" if spec.axis == "x" else "x"
    _check_rf_realizable(spec.axis, spec.basis)
    fit = fit_coefficients(spec.angles, spec.basis, spec.grid, tol=spec.tol)
    if not fit.achievable:
        raise InfeasibleError(
            f"target not approximable on basis {spec.basis}: max residual {fit.max_residual:.3e}"
        )

    samples: list[np.ndarray] = []
    predicted_terms = []
    budget = 0.0
    for c, e in zip(fit.coefficients, spec.basis):
        word = word_for_power(spec.axis, partner, e)
        scale = _monomial_scale(word.element(RF_ELEMENTS), {"eps": e}, SO3[spec.axis].entries)
        tau = c / scale / spec.subdivisions
        for _ in range(spec.subdivisions):
            samples.extend(_realize_rf(word, tau, dt))
        budget += spec.subdivisions * abs(tau) ** 1.5
        predicted_terms.append(({"eps": e}, c * SO3[spec.axis].entries))

    seq = ControlSequence(dt, np.array(samples) if samples else np.zeros((0, 2)))
    predicted = DispersionPolyElement.make(predicted_terms)
    diag = {
        "fit_l2": fit.l2_residual,
        "fit_max": fit.max_residual,
        "coefficients": np.asarray(fit.coefficients).tolist(),
        "basis": list(spec.basis),
        "commutator_budget": budget,
        "segments": len(samples),
    }
    return CompiledSequence(seq, predicted, diag)


def compile_euler_angles(
    alpha: np.ndarray,
    beta: np.ndarray,
    gamma: np.ndarray,
    grid: np.ndarray,
    basis: tuple[int, ...] = (1, 3),
    tol: float = 5e-2,
    subdivisions: int = 1,
    dt: float = DEFAULT_DT,
) -> list[CompiledSequence]:
    """Three compiled factors for exp(a Ox) exp(b Oy) exp(g Ox).

    Returned in factor order (alpha, beta, gamma); time order of the
    concatenated pulse is gamma first.
    """
    factors = []
    for axis, target in (("x", alpha), ("y", beta), ("x", gamma)):
        factors.append(
            compile_robust_rotation(
                RobustRotationSpec(axis, target, grid, basis, tol, subdivisions), dt
            )
        )
    return factors


def compensate_epsilon_small_flip(
    block: ControlSequence,
    target_angle: float,
    grid: np.ndarray,
    basis: tuple[int, ...] = (1, 3),
    band: float | None = None,
    linearity_tol: float = 0.05,
    subdivisions: int = 1,
) -> ControlSequence:
    """Concatenate phase-shifted copies of a small-flip block so the net
    rotation angle follows an odd-power fit of eps over the grid.

    The compensated rotation is about the block's own rotation axis; phase
    pi realizes negative amounts, a quarter-turn phase realizes the partner
    direction for the bracket words, and scaling the block's controls
    realizes fractional amounts.  The block must respond linearly in eps
    (small-flip regime).
    """
    from .slr import forward_recursion, pulse_to_steps

    # small-flip linearity check on the polynomial pair
    base = forward_recursion(pulse_to_steps(block))
    q_center = base.evaluate(np.array([0.0]), block.dt)[1][0]
    block_flip = float(2 * np.arcsin(min(1.0, abs(q_center))))
    gridarr = np.asarray(grid, dtype=float)
    if block_flip * np.abs(gridarr).max() > np.pi:
        raise InfeasibleError(
            f"block flip {block_flip:.2f} rad leaves the hard-pulse range over the grid"
        )
    if band is None:
        band = 0.25 / block.dt
    omega = np.linspace(-band, band, 33)
    dev = 0.0
    for eps in (grid.min(), grid.max()):
        scaled = forward_recursion(pulse_to_steps(block.scaled(eps)))
        qs = scaled.evaluate(omega, block.dt)[1]
        q1 = base.evaluate(omega, block.dt)[1]
        dev = max(dev, float(np.abs(qs - eps * q1).max()))
    if dev > linearity_tol * max(0.5 * block_flip, 1e-12):
        raise InfeasibleError(
            f"block response deviates from linear in eps by {dev:.3e}; not a small-flip block"
        )

    fit = fit_coefficients(np.full(gridarr.shape, target_angle), basis, gridarr)

    def realize_leaf(phase: float, amount: float) -> list[np.ndarray]:
        if amount < 0:
            return realize_leaf(phase + np.pi, -amount)
        reps = int(np.floor(amount / block_flip))
        frac = amount - reps * block_flip
        out = []
        shifted = block.phase_shifted(phase)
        for _ in range(reps):
            out.extend(shifted.samples)
        if frac > 1e-15 * max(abs(amount), 1.0):
            out.extend(shifted.scaled(frac / block_flip).samples)
        return out

    def realize_word(word: BracketWord, amount: float) -> list[np.ndarray]:
        if word.kind == "leaf":
            return realize_leaf(0.0 if word.label == "x" else np.pi / 2, amount)
        s = float(np.sqrt(abs(amount)))
        right = realize_word(word.right, s)
        left = realize_word(word.left, s)
        seq = right + left + _inv_rf(right) + _inv_rf(left)
        return _inv_rf(seq) if amount < 0 else seq

    samples: list[np.ndarray] = []
    for c, e in zip(fit.coefficients, basis):
        word = word_for_power("x", "y", e)
        scale = _monomial_scale(word.element(RF_ELEMENTS), {"eps": e}, SO3["x"].entries)
        tau = c / scale / subdivisions
        for _ in range(subdivisions):
            samples.extend(realize_word(word, tau))
    return ControlSequence(block.dt, np.array(samples))


# ---------------------------------------------------------------------------
# two-parameter rf compensation
# ---------------------------------------------------------------------------

TWO_PARAM_ELEMENTS = {
    "x1": DispersionPolyElement.single({"eps1": 1}, SO3["x"]),
    "y2": DispersionPolyElement.single({"eps2": 1}, SO3["y"]),
}
TWO_PARAM_CHANNELS = {"x1": 0, "y2": 1}  # u drives eps1*Ox, v drives eps2*Oy


def _realize_two_param(word: BracketWord, amount: float, dt: float) -> list[np.ndarray]:
    if word.kind == "leaf":
        sample = np.zeros(2)
        sample[TWO_PARAM_CHANNELS[word.label]] = amount / dt
        return [sample]
    s = float(np.sqrt(abs(amount)))
    right = _realize_two_param(word.right, s, dt)
    left = _realize_two_param(word.left, s, dt)
    seq = right + left + _inv_rf(right) + _inv_rf(left)
    return _inv_rf(seq) if amount < 0.0 else seq


def two_param_word(k: int, l: int, axis: str = "z") -> BracketWord:
    """Word carrying eps1^(2k+1) eps2^(2l+1) on Oz (axis 'z') or
    eps1^(2k) eps2^(2l+1) on Oy (axis 'y')."""
    x1 = BracketWord.leaf("x1")
    y2 = BracketWord.leaf("y2")
    if axis == "z":
        word = y2
        for _ in range(2 * k + 1):
            word = BracketWord.ad(x1, word)
        for _ in range(l):
            word = BracketWord.ad(y2, BracketWord.ad(y2, word))
        return word
    if axis == "y":
        word = y2
        for _ in range(k):
            word = BracketWord.ad(x1, BracketWord.ad(x1, word))
        for _ in range(l):
            word = BracketWord.ad(y2, BracketWord.ad(y2, word))
        return word
    raise ValueError("axis must be 'z' or 'y'")


def compile_two_param(
    target_angle: float,
    eps1_grid: np.ndarray,
    eps2_grid: np.ndarray,
    orders: Sequence[tuple[int, int]] = ((0, 0), (1, 0), (0, 1), (1, 1)),
    axis: str = "z",
    tol: float = 5e-2,
    subdivisions: int = 1,
    dt: float = DEFAULT_DT,
) -> CompiledSequence:
    """Flatten a rotation against two independent rf-scale parameters.

    Bracket words raise eps1 to odd powers (times odd eps2 powers on the z
    axis, even-times-odd on y); the 2-d coefficient fit runs on the product
    grid.
    """
    e1 = np.asarray(eps1_grid, dtype=float)
    e2 = np.asarray(eps2_grid, dtype=float)
    if np.any(e1 == 0) or np.any(e2 == 0):
        raise ValueError("parameter ranges must exclude zero")
    g1, g2 = np.meshgrid(e1, e2, indexing="ij")
    g1f, g2f = g1.ravel(), g2.ravel()

    words = []
    rows = []
    for k, l in orders:
        word = two_param_word(k, l, axis)
        elem = word.element(TWO_PARAM_ELEMENTS)
        if axis == "z":
            exps = {"eps1": 2 * k + 1, "eps2": 2 * l + 1}
        else:
            exps = {"eps1": 2 * k, "eps2": 2 * l + 1}
        scale = _monomial_scale(elem, exps, SO3[axis].entries)
        words.append((word, exps, scale))
        rows.append(g1f ** exps.get("eps1", 0) * g2f ** exps.get("eps2", 0))

    fit = approximable(np.full(g1f.shape, target_angle), np.array(rows), tol)
    if not fit.achievable:
        raise InfeasibleError(
            f"two-parameter target not approximable: max residual {fit.max_residual:.3e}"
        )

    samples: list[np.ndarray] = []
    predicted_terms = []
    for c, (word, exps, scale) in zip(fit.coefficients, words):
        tau = c / scale / subdivisions
        for _ in range(subdivisions):
            samples.extend(_realize_two_param(word, tau, dt))
        predicted_terms.append((exps, c * SO3[axis].entries))

    seq = ControlSequence(dt, np.array(samples) if samples else np.zeros((0, 2)))
    diag = {
        "fit_l2": fit.l2_residual,
        "fit_max": fit.max_residual,
        "coefficients": np.asarray(fit.coefficients).tolist(),
        "orders": [list(o) for o in orders],
        "segments": len(samples),
    }
    return CompiledSequence(seq, DispersionPolyElement.make(predicted_terms), diag)


# ---------------------------------------------------------------------------
# offset compensation with strong rf (drift periods + instantaneous rotations)
# ---------------------------------------------------------------------------

OMEGA_ELEMENTS = {
    "drift": DispersionPolyElement.single({"omega": 1}, SO3["z"]),
    "rx": DispersionPolyElement.single({}, SO3["x"]),
    "ry": DispersionPolyElement.single({}, SO3["y"]),
}


def _inv_segment(seg: Segment) -> list[Segment]:
    if seg.kind == "rot":
        return [Segment("rot", axis=seg.axis, angle=-seg.angle)]
    if seg.kind == "local":
        return [Segment("local", qubit=seg.qubit, axis=seg.axis, angle=-seg.angle)]
    if seg.kind == "drift":
        # drift reversal: conjugate by instantaneous pi rotations about x
        return [
            Segment("rot", axis="x", angle=-np.pi),
            Segment("drift", duration=seg.duration),
            Segment("rot", axis="x", angle=np.pi),
        ]
    if seg.kind == "coupling":
        # a local pi flip of qubit 1 about x negates sz(x)sz
        return [
            Segment("local", qubit=1, axis="x", angle=np.pi),
            Segment("coupling", duration=seg.duration),
            Segment("local", qubit=1, axis="x", angle=-np.pi),
        ]
    raise ValueError(f"segment kind {seg.kind!r} cannot be inverted")


def _inv_segments(segments: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for seg in reversed(segments):
        out.extend(_inv_segment(seg))
    return out


def _realize_omega(word: BracketWord, amount: float) -> list[Segment]:
    if word.kind == "leaf":
        if word.label == "drift":
            if amount >= 0.0:
                return [Segment("drift", duration=amount)]
            return _inv_segment(Segment("drift", duration=-amount))
        axis = "x" if word.label == "rx" else "y"
        return [Segment("rot", axis=axis, angle=amount)]
    s = float(np.sqrt(abs(amount)))
    right = _realize_omega(word.right, s)
    left = _realize_omega(word.left, s)
    seq = right + left + _inv_segments(right) + _inv_segments(left)
    return _inv_segments(seq) if amount < 0.0 else seq


def omega_word(axis: str, power: int) -> BracketWord:
    """Word carrying omega^power on O_axis using drift brackets."""
    drift = BracketWord.leaf("drift")
    if power % 2 == 0:
        word = BracketWord.leaf("rx" if axis == "x" else "ry")
    else:
        word = BracketWord.leaf("ry" if axis == "x" else "rx")
    for _ in range(power):
        word = BracketWord.ad(drift, word)
    return word


def compile_omega_robust(
    target: np.ndarray,
    omega_grid: np.ndarray,
    powers: Sequence[int] = (0, 1, 2),
    axis: str = "x",
    single_quadrature: bool = False,
    tol: float = 5e-2,
    subdivisions: int = 1,
) -> CompiledSequence:
    """Synthesize exp(f(omega) O_axis) from drift periods and hard rotations.

    ``single_quadrature`` restricts the instantaneous rotations to the x
    channel; the y direction then only carries odd offset powers, and even
    targets on it are reported infeasible.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    powers = tuple(int(p) for p in powers)
    if single_quadrature:
        allowed = (
            tuple(p for p in powers if p % 2 == 0)
            if axis == "x"
            else tuple(p for p in powers if p % 2 == 1)
        )
        if allowed != powers:
            powers = allowed
        if not powers:
            raise InfeasibleError(
                f"axis {axis} carries no requested offset powers with one quadrature"
            )

    grid = np.asarray(omega_grid, dtype=float)
    tvals = np.broadcast_to(np.asarray(target, dtype=float), grid.shape)
    family = np.array([grid**p for p in powers])
    fit = approximable(tvals, family, tol)
    if not fit.achievable:
        raise InfeasibleError(
            f"offset target not approximable on powers {powers}: "
            f"max residual {fit.max_residual:.3e}"
        )

    segments: list[Segment] = []
    predicted_terms = []
    for c, p in zip(fit.coefficients, powers):
        word = omega_word(axis, p)
        scale = _monomial_scale(
            word.element(OMEGA_ELEMENTS), {"omega": p}, SO3[axis].entries
        )
        tau = c / scale / subdivisions
        for _ in range(subdivisions):
            segments.extend(_realize_omega(word, tau))
        predicted_terms.append(({"omega": p}, c * SO3[axis].entries))

    diag = {
        "fit_l2": fit.l2_residual,
        "fit_max": fit.max_residual,
        "coefficients": np.asarray(fit.coefficients).tolist(),
        "powers": list(powers),
        "segments": len(segments),
        "single_quadrature": single_quadrature,
    }
    return CompiledSequence(segments, DispersionPolyElement.make(predicted_terms), diag)


def simulate_strong_rf(segments: list[Segment], omega: float) -> np.ndarray:
    """Exact SO(3) product of drift and instantaneous-rotation segments."""
    out = np.eye(3)
    for seg in segments:
        if seg.kind == "drift":
            ang = omega * seg.duration
            gen = SO3["z"].entries
        elif seg.kind == "rot":
            ang = seg.angle
            gen = SO3[seg.axis].entries
        else:
            raise ValueError(f"segment kind {seg.kind!r} is not a strong-rf segment")
        c, s = np.cos(ang), np.sin(ang)
        rot = np.eye(3) + s * gen + (1 - c) * (gen @ gen)
        out = rot.real @ out
    return out


# ---------------------------------------------------------------------------
# coupling-strength compensation (two qubits)
# ---------------------------------------------------------------------------

_B = two_qubit_coupling_generators()
COUPLING_ELEMENTS = {
    "b1": DispersionPolyElement.single({"J": 1}, _B["b1"]),
    "b2": DispersionPolyElement.single({"J": 1}, _B["b2"]),
}

# local rotation mapping sz(x)sz onto sy(x)sz, verified in tests:
# exp(i pi sx/4) sz exp(-i pi sx/4) = sy  ->  local angle -pi/2 about x
_B1_CONJ_ANGLE = -np.pi / 2


def _realize_coupling(word: BracketWord, amount: float) -> list[Segment]:
    """Segments with net unitary exp(amount * J * B_word); couplings >= 0."""
    if word.kind == "leaf":
        segs = [Segment("coupling", duration=2.0 * abs(amount))]
        if amount < 0.0:
            segs = _inv_segment(segs[0])
        if word.label == "b1":
            # conjugation carrying sz(x)sz onto sy(x)sz, verified in tests
            segs = (
                [Segment("local", qubit=1, axis="x", angle=-_B1_CONJ_ANGLE)]
                + segs
                + [Segment("local", qubit=1, axis="x", angle=_B1_CONJ_ANGLE)]
            )
        return segs
    s = float(np.sqrt(abs(amount)))
    right = _realize_coupling(word.right, s)
    left = _realize_coupling(word.left, s)
    seq = right + left + _inv_segments(right) + _inv_segments(left)
    return _inv_segments(seq) if amount < 0.0 else seq


def compile_j_robust_zz(
    theta: float,
    j0: float,
    delta: float,
    basis: tuple[int, ...] = (1, 3),
    nsamples: int = 21,
    tol: float = 5e-2,
    subdivisions: int = 1,
) -> CompiledSequence:
    """Coupling-strength-robust ZZ evolution exp(-i theta sz sz) over
    J in j0*[1-delta, 1+delta]."""
    if not (0.0 <= delta < 1.0):
        raise ValueError("delta must lie in [0, 1)")
    grid = (
        np.array([j0])
        if delta == 0.0
        else np.linspace(j0 * (1 - delta), j0 * (1 + delta), nsamples)
    )
    fit = fit_coefficients(np.full(grid.shape, theta), basis, grid, tol=tol, param="J")
    if not fit.achievable:
        raise InfeasibleError(
            f"coupling target not approximable on basis {basis}: "
            f"max residual {fit.max_residual:.3e}"
        )

    segments: list[Segment] = []
    predicted_terms = []
    b2 = _B["b2"].entries
    for c, e in zip(fit.coefficients, basis):
        word = word_for_power("b2", "b1", e)
        scale = _monomial_scale(word.element(COUPLING_ELEMENTS), {"J": e}, b2)
        # exp(-i f(J) sz sz) = exp((f(J)/2) B2)
        tau = 0.5 * c / scale / subdivisions
        for _ in range(subdivisions):
            segments.extend(_realize_coupling(word, tau))
        predicted_terms.append(({"J": e}, 0.5 * c * b2))

    diag = {
        "fit_l2": fit.l2_residual,
        "fit_max": fit.max_residual,
        "coefficients": np.asarray(fit.coefficients).tolist(),
        "basis": list(basis),
        "segments": len(segments),
        "coupling_time": sum(s.duration for s in segments if s.kind == "coupling"),
    }
    return CompiledSequence(segments, DispersionPolyElement.make(predicted_terms), diag)


def reduce_coupling_tensor(
    alpha: float, beta: float, gamma: float, t: float = 1.0
) -> CompiledSequence:
    """Echo a generic commuting coupling tensor down to its ZZ part.

    The sequence evolves the tensor, applies an instantaneous pi rotation
    about z on qubit 1, evolves again and undoes the rotation; the xx and
    yy terms cancel and the net unitary is exp(-i 2 gamma t sz sz).
    """
    segments = [
        Segment("tensor", duration=t, tensor=(alpha, beta, gamma)),
        Segment("local", qubit=1, axis="z", angle=-np.pi),
        Segment("tensor", duration=t, tensor=(alpha, beta, gamma)),
        Segment("local", qubit=1, axis="z", angle=np.pi),
    ]
    predicted = DispersionPolyElement.single({}, gamma * t * _B["b2"].entries)
    return CompiledSequence(segments, predicted, {"gamma": gamma, "t": t})


_PAULI = {a: pauli(a) for a in ("x", "y", "z", "i")}


def _local_unitary(qubit: int, axis: str, angle: float) -> np.ndarray:
    u = np.cos(0.5 * angle) * _PAULI["i"] - 1j * np.sin(0.5 * angle) * _PAULI[axis]
    if qubit == 1:
        return np.kron(u, _PAULI["i"])
    return np.kron(_PAULI["i"], u)


def _involution_rot(m: np.ndarray, angle: float) -> np.ndarray:
    # exp(-i angle M) for M with M^2 = I
    return np.cos(angle) * np.eye(4) - 1j * np.sin(angle) * m


def simulate_two_qubit(segments: list[Segment], j: float) -> np.ndarray:
    """Exact 4x4 unitary of a coupling/local/tensor segment list."""
    zz = np.kron(_PAULI["z"], _PAULI["z"])
    xx = np.kron(_PAULI["x"], _PAULI["x"])
    yy = np.kron(_PAULI["y"], _PAULI["y"])
    out = np.eye(4, dtype=complex)
    for seg in segments:
        if seg.kind == "coupling":
            u = _involution_rot(zz, j * seg.duration)
        elif seg.kind == "local":
            u = _local_unitary(seg.qubit, seg.axis, seg.angle)
        elif seg.kind == "tensor":
            a, b, g = seg.tensor
            u = (
                _involution_rot(xx, a * seg.duration)
                @ _involution_rot(yy, b * seg.duration)
                @ _involution_rot(zz, g * seg.duration)
            )
        else:
            raise ValueError(f"segment kind {seg.kind!r} is not a two-qubit segment")
        out = u @ out
    return out


# ---------------------------------------------------------------------------
# fidelity helpers
# ---------------------------------------------------------------------------


def rotation_fidelity(r1: np.ndarray, r2: np.ndarray) -> float:
    """(1 + cos of the relative rotation angle) / 2."""
    cosang = 0.5 * (np.trace(r1.T @ r2) - 1.0)
    return float(0.5 * (1.0 + np.clip(cosang, -1.0, 1.0)))


def gate_fidelity(u: np.ndarray, g: np.ndarray) -> float:
    """|tr(G^H U)| / dim, phase-invariant."""
    return float(np.abs(np.trace(g.conj().T @ u)) / u.shape[0])


def generator_level_rotation_fidelity(
    compiled: CompiledSequence, target_angles: np.ndarray, axis: str, grid: np.ndarray, param: str = "eps"
) -> np.ndarray:
    """Fidelity of exp(predicted generator) against the target per grid point."""
    from scipy.linalg import expm

    target_angles = np.broadcast_to(np.asarray(target_angles, dtype=float), np.asarray(grid).shape)
    out = np.empty(np.asarray(grid).size)
    gen = SO3[axis].entries.real
    for i, (g, th) in enumerate(zip(np.asarray(grid).ravel(), target_angles.ravel())):
        achieved = expm(compiled.predicted.evaluate({param: g}).real)
        out[i] = rotation_fidelity(achieved, expm(th * gen))
    return out
