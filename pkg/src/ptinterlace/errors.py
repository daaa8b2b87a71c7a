"""Exception and warning types shared across the package."""


class PTInterlaceError(Exception):
    """Base class for computational failures."""

    module = "ptinterlace"


class DegeneratePair(PTInterlaceError):
    module = "potentials"


class IntegrationOverflow(PTInterlaceError):
    """|psi| exceeded the overflow ceiling (integrating into a growth region)."""

    module = "complex_ode"


class StepUnderflow(PTInterlaceError):
    module = "complex_ode"


class BranchAmbiguity(PTInterlaceError):
    module = "complex_ode"


class PTViolation(PTInterlaceError):
    module = "shooting"


class NoConvergence(PTInterlaceError):
    module = "zeros"


class DerivativeVanishes(PTInterlaceError):
    module = "zeros"


class BranchFailure(PTInterlaceError):
    module = "wkb"


class LostPath(PTInterlaceError):
    module = "wkb"


class DegenerateFit(PTInterlaceError):
    module = "wkb"


class MissedLevel(UserWarning):
    pass


class IllConditioned(UserWarning):
    pass


class ComplexSpectrum(UserWarning):
    pass


class CountMismatch(UserWarning):
    """Zero sets handed to the interlacing check do not differ by exactly one."""
