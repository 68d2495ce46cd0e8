"""Exception hierarchy shared by the library and the CLI."""


class BreatherError(Exception):
    """Base class for all library errors."""


class InvalidInput(BreatherError, ValueError):
    """Violated precondition on user-supplied parameters."""


class NotAdmissible(BreatherError):
    """Medium parameters fail the odd/odd rationality condition."""


class BadIndex(BreatherError):
    """Harmonic index outside the admissible lattice of the medium."""


class NoSpectralGap(BreatherError):
    """|tr A_k| <= 2: zero lies in the spectrum of L_k."""

    def __init__(self, trace, k=None):
        self.trace = trace
        self.k = k
        where = f" for k={k}" if k is not None else ""
        super().__init__(f"no spectral gap{where}: |tr A| = {abs(trace):.6g} <= 2")


class DecayViolation(BreatherError):
    """Sampled |Phi_k(x)| exceeds the claimed bound M exp(-rho x)."""

    def __init__(self, k, x, ratio):
        self.k = k
        self.x = x
        self.ratio = ratio
        super().__init__(
            f"decay bound violated at k={k}, x={x:.6g}: |Phi_k| e^(rho x) / M = {ratio:.6g}"
        )


class SupportViolation(BreatherError):
    """Sequence has entries outside the truncation or symmetry lattice."""


class SignConditionFailed(BreatherError):
    """No supported harmonic has a slope of the sign required by gamma."""


class WrongSign(BreatherError):
    """Seed harmonic has Phi'_k(0)/gamma >= 0."""


class MissingProfile(BreatherError):
    """A harmonic in the support has no mode profile."""


class TailUnderflow(BreatherError):
    """Field tail too small to fit a decay rate."""


class QuadratureNonConvergence(BreatherError):
    """Panel refinement changed a quadrature value beyond tolerance."""
