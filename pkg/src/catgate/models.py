"""Physical parameters, the derived coupling layer and gate design."""

import logging
import math
from dataclasses import dataclass, field, replace

from catgate.errors import ParameterError
from catgate.hilbert import SpaceSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
VALIDITY_THRESHOLD = 5.0
DEFAULT_K = 6
K_SCAN_MAX = 32


def angular(freq_ghz: float) -> float:
    """Convert a linear frequency f = omega/2pi in GHz to rad/ns."""
    return TWO_PI * freq_ghz


@dataclass(slots=True, frozen=True)
class SystemParams:
    """Qutrit, cavity and coupling parameters as linear frequencies omega/2pi in GHz.

    The unwanted couplings default to the wanted ones (g1_tilde = g1, g2_tilde = g2).
    """

    omega_eg: float
    omega_fe: float
    omega_fg: float
    omega_c1: float
    omega_c2: float
    g1: float
    g2: float
    g1_tilde: float | None = None
    g2_tilde: float | None = None
    cat_amplitude: float = 0.5
    space: SpaceSpec = field(default_factory=SpaceSpec)

    def __post_init__(self) -> None:
        if self.g1_tilde is None:
            object.__setattr__(self, "g1_tilde", self.g1)
        if self.g2_tilde is None:
            object.__setattr__(self, "g2_tilde", self.g2)
        if not math.isclose(
            self.omega_fg, self.omega_eg + self.omega_fe, rel_tol=1e-12, abs_tol=1e-12
        ):
            raise ParameterError(
                f"omega_fg ({self.omega_fg}) must equal omega_eg + omega_fe "
                f"({self.omega_eg + self.omega_fe})"
            )
        if self.delta1 <= 0:
            raise ParameterError(f"detuning must be positive: delta1 = {self.delta1}")
        if self.delta2 <= 0:
            raise ParameterError(f"detuning must be positive: delta2 = {self.delta2}")
        if self.cat_amplitude < 0:
            raise ParameterError(f"cat amplitude must be >= 0, got {self.cat_amplitude}")

    @classmethod
    def from_detunings(
        cls,
        omega_eg: float,
        omega_fe: float,
        delta1: float,
        delta2: float,
        g1: float,
        g2: float,
        **kwargs: object,
    ) -> "SystemParams":
        """Place the cavities at omega_c1 = omega_fg - delta1 and omega_c2 = omega_fe - delta2."""
        omega_fg = omega_eg + omega_fe
        return cls(
            omega_eg=omega_eg,
            omega_fe=omega_fe,
            omega_fg=omega_fg,
            omega_c1=omega_fg - delta1,
            omega_c2=omega_fe - delta2,
            g1=g1,
            g2=g2,
            **kwargs,
        )

    @property
    def delta1(self) -> float:
        return self.omega_fg - self.omega_c1

    @property
    def delta2(self) -> float:
        return self.omega_fe - self.omega_c2

    @property
    def delta1_tilde(self) -> float:
        return self.omega_fe - self.omega_c1

    @property
    def delta2_tilde(self) -> float:
        return self.omega_fg - self.omega_c2

    @property
    def big_delta(self) -> float:
        return self.delta2 - self.delta1

    def with_space(self, space: SpaceSpec) -> "SystemParams":
        return replace(self, space=space)

    def scaled(self, factor: float) -> "SystemParams":
        """Every frequency and coupling multiplied by ``factor``."""
        return replace(
            self,
            omega_eg=self.omega_eg * factor,
            omega_fe=self.omega_fe * factor,
            omega_fg=self.omega_fg * factor,
            omega_c1=self.omega_c1 * factor,
            omega_c2=self.omega_c2 * factor,
            g1=self.g1 * factor,
            g2=self.g2 * factor,
            g1_tilde=self.g1_tilde * factor,
            g2_tilde=self.g2_tilde * factor,
        )


@dataclass(slots=True, frozen=True)
class DerivedQuantities:
    """Detunings and effective couplings in GHz (omega/2pi), gate time in ns."""

    delta1: float
    delta2: float
    delta1_tilde: float
    delta2_tilde: float
    big_delta: float
    lambda1: float
    lambda2: float
    lambda_exchange: float
    chi: float
    eta: float
    k: int
    t_gate: float

    @property
    def eta_over_chi(self) -> float:
        return self.eta / self.chi


@dataclass(slots=True, frozen=True)
class DecoherenceParams:
    """Cavity decay, qutrit relaxation and dephasing rates in 1/us."""

    kappa1: float = 0.0
    kappa2: float = 0.0
    gamma_eg: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    gamma_phi_e: float = 0.0
    gamma_phi_f: float = 0.0

    def __post_init__(self) -> None:
        for name in self.__slots__:
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    def with_kappa_inv(self, kappa_inv: float) -> "DecoherenceParams":
        """Both cavities decaying at kappa = 1 / kappa_inv (kappa_inv in us, inf for none)."""
        if kappa_inv <= 0:
            raise ParameterError(f"kappa_inv must be positive, got {kappa_inv}")
        kappa = 0.0 if math.isinf(kappa_inv) else 1.0 / kappa_inv
        return replace(self, kappa1=kappa, kappa2=kappa)

    @property
    def is_lossless(self) -> bool:
        return all(getattr(self, name) == 0 for name in self.__slots__)


@dataclass(slots=True, frozen=True)
class ValidityReport:
    """Large-detuning ratios with the names of those below the threshold."""

    ratios: dict[str, float]
    threshold: float = VALIDITY_THRESHOLD

    @property
    def warnings(self) -> tuple[str, ...]:
        return tuple(name for name, value in self.ratios.items() if value < self.threshold)

    @property
    def ok(self) -> bool:
        return not self.warnings


def derive(params: SystemParams, k: int = DEFAULT_K) -> DerivedQuantities:
    """Effective couplings, cross-Kerr strength and gate time t = pi / chi."""
    if k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    delta1, delta2 = params.delta1, params.delta2
    big_delta = params.big_delta
    if delta1 <= 0 or delta2 <= 0:
        raise ParameterError("detuning must be positive")
    if big_delta <= 0:
        raise ParameterError(f"Delta = delta2 - delta1 must be positive, got {big_delta}")

    lambda1 = params.g1**2 / delta1
    lambda2 = params.g2**2 / delta2
    lambda_exchange = 0.5 * params.g1 * params.g2 * (1.0 / delta1 + 1.0 / delta2)
    chi = lambda_exchange**2 / big_delta
    eta = lambda1 + chi
    if chi == 0:
        raise ParameterError("chi vanishes: gate time is undefined without both couplings")
    # chi * t = pi with chi in rad/ns
    t_gate = math.pi / angular(chi)
    return DerivedQuantities(
        delta1=delta1,
        delta2=delta2,
        delta1_tilde=params.delta1_tilde,
        delta2_tilde=params.delta2_tilde,
        big_delta=big_delta,
        lambda1=lambda1,
        lambda2=lambda2,
        lambda_exchange=lambda_exchange,
        chi=chi,
        eta=eta,
        k=k,
        t_gate=t_gate,
    )


def solve_g2(delta1: float, delta2: float, big_delta: float, k: int) -> float:
    """Coupling g2 for which chi * t = pi and eta * t = 2 k pi hold together."""
    if k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    if delta1 <= 0 or delta2 <= 0 or big_delta <= 0:
        raise ParameterError("detuning must be positive")
    return (2.0 * delta2 / (delta1 + delta2)) * math.sqrt(delta1 * big_delta / (2 * k - 1))


def scan_k(
    delta1: float,
    delta2: float,
    big_delta: float,
    target_g2: float,
    k_max: int = K_SCAN_MAX,
) -> tuple[int, float]:
    """The k in 1..k_max whose g2 lies nearest ``target_g2``."""
    candidates = [(k, solve_g2(delta1, delta2, big_delta, k)) for k in range(1, k_max + 1)]
    return min(candidates, key=lambda item: abs(item[1] - target_g2))


def design_params(params: SystemParams, k: int = DEFAULT_K) -> SystemParams:
    """Copy of ``params`` with g2 from the design formula.

    An unwanted coupling g2_tilde that tracked g2 keeps tracking it.
    """
    g2 = solve_g2(params.delta1, params.delta2, params.big_delta, k)
    g2_tilde = g2 if params.g2_tilde == params.g2 else params.g2_tilde
    logger.debug("design g2/2pi = %.6f GHz for k = %d", g2, k)
    return replace(params, g2=g2, g2_tilde=g2_tilde)


def published_parameters(k: int = DEFAULT_K, space: SpaceSpec | None = None) -> SystemParams:
    """The published operating point with g2 from the design formula."""
    base = SystemParams.from_detunings(
        omega_eg=5.0,
        omega_fe=7.5,
        delta1=1.5,
        delta2=1.65,
        g1=0.150,
        g2=0.150,
        cat_amplitude=0.5,
        space=space or SpaceSpec(),
    )
    return design_params(base, k)


def validity_report(params: SystemParams, derived: DerivedQuantities) -> ValidityReport:
    """Ratios that must be large for the dispersive hierarchy to hold."""

    def ratio(num: float, den: float) -> float:
        return math.inf if den == 0 else abs(num) / abs(den)

    report = ValidityReport(
        ratios={
            "delta1/g1": ratio(derived.delta1, params.g1),
            "delta2/g2": ratio(derived.delta2, params.g2),
            "Delta/lambda1": ratio(derived.big_delta, derived.lambda1),
            "Delta/lambda2": ratio(derived.big_delta, derived.lambda2),
            "Delta/lambda": ratio(derived.big_delta, derived.lambda_exchange),
            "|delta1~|/g1~": ratio(derived.delta1_tilde, params.g1_tilde),
            "delta2~/g2~": ratio(derived.delta2_tilde, params.g2_tilde),
        }
    )
    for name in report.warnings:
        logger.warning("dispersive condition weak: %s = %.3g", name, report.ratios[name])
    return report


def quality_factors(params: SystemParams, kappa_inv: float) -> tuple[float, float]:
    """Cavity quality factors Q = omega_c * kappa^-1 for a decay time in us."""
    if kappa_inv <= 0:
        raise ParameterError(f"kappa_inv must be positive, got {kappa_inv}")
    # GHz * us = 1e3
    return (
        angular(params.omega_c1) * kappa_inv * 1e3,
        angular(params.omega_c2) * kappa_inv * 1e3,
    )
