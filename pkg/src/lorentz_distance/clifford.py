from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from numpy.typing import NDArray

from .spacetime import FrameAtPoint

logger = logging.getLogger(__name__)

ComplexMatrix = NDArray[np.complex128]

_SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# anti-Hermitian, squares to -1
_TIMELIKE_BASE = 1j * _SIGMA_2


class CliffordError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class CliffordModule:
    n: int
    gammas: tuple[ComplexMatrix, ...]
    j: ComplexMatrix
    chi: ComplexMatrix | None = None
    chi_sign: int = 1

    @property
    def fiber_dim(self) -> int:
        return int(self.gammas[0].shape[0])

    @property
    def eta(self) -> NDArray[np.float64]:
        return np.diag([-1.0] + [1.0] * (self.n - 1))

    @property
    def is_even(self) -> bool:
        return self.n % 2 == 0

    @property
    def identity(self) -> ComplexMatrix:
        return np.eye(self.fiber_dim, dtype=np.complex128)


@dataclass(slots=True)
class CliffordReport:
    n: int
    tol: float
    max_deviation: float = 0.0
    deviations: dict[str, float] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, identity: str, deviation: float) -> None:
        self.deviations[identity] = deviation
        self.max_deviation = max(self.max_deviation, deviation)
        if deviation > self.tol:
            self.violations.append(identity)


def build_gamma_matrices(n: int, *, chi_sign: int = 1) -> CliffordModule:
    if n < 2:
        raise CliffordError(f"Spacetime dimension must be >= 2, got {n}")

    if n % 2 == 1:
        return extend_even(build_gamma_matrices(n - 1, chi_sign=chi_sign), sign=1)

    gammas: list[ComplexMatrix] = [_TIMELIKE_BASE.copy(), _SIGMA_1.copy()]
    while len(gammas) < n:
        eye = np.eye(gammas[0].shape[0], dtype=np.complex128)
        gammas = [np.kron(gamma, _SIGMA_3) for gamma in gammas] + [
            np.kron(eye, _SIGMA_1),
            np.kron(eye, _SIGMA_2),
        ]

    module = CliffordModule(
        n=n,
        gammas=tuple(gammas),
        j=1j * gammas[0],
        chi=chirality(gammas, sign=chi_sign),
        chi_sign=chi_sign,
    )
    logger.debug("Built Clifford module n=%d fiber_dim=%d", n, module.fiber_dim)
    return module


def chirality(
    gammas: list[ComplexMatrix] | tuple[ComplexMatrix, ...], *, sign: int = 1
) -> ComplexMatrix:
    n = len(gammas)
    if n % 2 == 1:
        raise CliffordError(f"Chirality is only defined for even dimension, got n={n}")
    if sign not in (1, -1):
        raise CliffordError(f"Chirality sign must be +1 or -1, got {sign}")
    product = reduce(np.matmul, gammas)
    return np.asarray(sign * (1j ** (n // 2 + 1)) * product, dtype=np.complex128)


def extend_even(module: CliffordModule, *, sign: int = 1) -> CliffordModule:
    if not module.is_even or module.chi is None:
        raise CliffordError(f"extend_even needs an even-dimensional module, got n={module.n}")
    if sign not in (1, -1):
        raise CliffordError(f"Extension sign must be +1 or -1, got {sign}")

    return CliffordModule(
        n=module.n + 1,
        gammas=(*module.gammas, sign * module.chi),
        j=module.j,
        chi=None,
        chi_sign=module.chi_sign,
    )


def extend_odd(module: CliffordModule) -> CliffordModule:
    if module.is_even:
        raise CliffordError(f"extend_odd needs an odd-dimensional module, got n={module.n}")

    gammas = [np.kron(gamma, _SIGMA_1) for gamma in module.gammas]
    gammas.append(np.kron(module.identity, _SIGMA_2))
    return CliffordModule(
        n=module.n + 1,
        gammas=tuple(gammas),
        j=np.kron(module.j, _SIGMA_1),
        chi=chirality(gammas, sign=module.chi_sign),
        chi_sign=module.chi_sign,
    )


def euclidean_generators(k: int) -> tuple[ComplexMatrix, ...]:
    if k < 1:
        raise CliffordError(f"Euclidean dimension must be >= 1, got {k}")
    return build_gamma_matrices(k + 1).gammas[1:]


def dirac_commutator(
    module: CliffordModule, frame: FrameAtPoint, df: NDArray[np.float64]
) -> ComplexMatrix:
    components = _frame_components(module, frame, df)
    c_df = np.tensordot(components, np.asarray(module.gammas), axes=1)
    return np.asarray(-1j * c_df, dtype=np.complex128)


def clifford_action(
    module: CliffordModule, frame: FrameAtPoint, df: NDArray[np.float64]
) -> ComplexMatrix:
    """J[D,f] = gamma^0 gamma^a e^mu_a f_,mu at the frame's point."""
    return np.asarray(module.j @ dirac_commutator(module, frame, df), dtype=np.complex128)


def steep_operators(
    module: CliffordModule, frame: FrameAtPoint, df: NDArray[np.float64]
) -> tuple[ComplexMatrix, ...]:
    action = clifford_action(module, frame, df)
    if module.is_even:
        if module.chi is None:
            raise CliffordError(f"Even-dimensional module n={module.n} has no chirality operator")
        return (action + 1j * (module.j @ module.chi),)
    return (action + module.j, action - module.j)


def verify_clifford(module: CliffordModule, tol: float = 1e-12) -> CliffordReport:
    report = CliffordReport(n=module.n, tol=tol)
    identity = module.identity
    eta = module.eta

    for a, gamma_a in enumerate(module.gammas):
        for b, gamma_b in enumerate(module.gammas):
            anticommutator = gamma_a @ gamma_b + gamma_b @ gamma_a
            report.record(
                f"{{g{a},g{b}}}={2 * eta[a, b]:g}",
                _max_abs(anticommutator - 2 * eta[a, b] * identity),
            )
        if a == 0:
            report.record("g0 anti-Hermitian", _max_abs(gamma_a + gamma_a.conj().T))
        else:
            report.record(f"g{a} Hermitian", _max_abs(gamma_a - gamma_a.conj().T))

    j = module.j
    report.record("J=i*g0", _max_abs(j - 1j * module.gammas[0]))
    report.record("J Hermitian", _max_abs(j - j.conj().T))
    report.record("J^2=1", _max_abs(j @ j - identity))

    if module.is_even:
        chi = module.chi
        if chi is None:
            report.record("chi present", float("inf"))
        else:
            report.record("chi Hermitian", _max_abs(chi - chi.conj().T))
            report.record("chi^2=1", _max_abs(chi @ chi - identity))
            for a, gamma_a in enumerate(module.gammas):
                report.record(f"{{chi,g{a}}}=0", _max_abs(chi @ gamma_a + gamma_a @ chi))
            report.record("chi*J=-J*chi", _max_abs(chi @ j + j @ chi))

    if report.passed:
        logger.debug(
            "Clifford module n=%d verified (max_deviation=%.3e)", module.n, report.max_deviation
        )
    else:
        logger.warning(
            "Clifford module n=%d failed verification: %s", module.n, ", ".join(report.violations)
        )
    return report


def _frame_components(
    module: CliffordModule, frame: FrameAtPoint, df: NDArray[np.float64]
) -> NDArray[np.float64]:
    df = np.asarray(df, dtype=np.float64)
    if df.shape != (module.n,) or frame.e.shape != (module.n, module.n):
        raise CliffordError(
            f"Dimension mismatch: module n={module.n}, frame {frame.e.shape}, df {df.shape}"
        )
    # c_a = e^mu_a f_,mu
    return np.asarray(frame.e.T @ df, dtype=np.float64)


def _max_abs(matrix: NDArray[np.complex128]) -> float:
    return float(np.max(np.abs(matrix)))
