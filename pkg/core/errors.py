"""
Exception hierarchy for KineticLimitLab

Numerical routines raise these; run managers log and re-raise; the CLI
maps them to exit codes (InvariantViolation -> 1, ConfigError -> 2).
"""


class KineticLabError(Exception):
    """Base class for all KineticLimitLab errors"""


class BandMismatchError(KineticLabError, ValueError):
    """Fields live on incompatible bands"""


class ModeOutOfBandError(KineticLabError, ValueError):
    """Explicit initial modes fall outside the configured band"""

    def __init__(self, modes, band):
        self.modes = list(modes)
        self.band = band
        listed = ", ".join(str(mode) for mode in self.modes)
        super().__init__(f"{len(self.modes)} mode(s) outside {band}: {listed}")


class ConfigError(KineticLabError):
    """Run configuration could not be read or validated"""


class InvariantViolation(KineticLabError):
    """
    A hard invariant of the truncated system failed

    Attributes:
        invariant: short name of the violated invariant
        value: measured quantity that triggered the failure (if any)
    """

    def __init__(self, invariant, message, value=None):
        self.invariant = invariant
        self.value = value
        super().__init__(f"[{invariant}] {message}")


class NumericalBlowupError(InvariantViolation):
    """Non-finite coefficients appeared; carries the last finite state"""

    def __init__(self, message, last_good=None, time=None):
        self.last_good = last_good
        self.time = time
        super().__init__("finite_state", message)


class PicardDivergenceError(InvariantViolation):
    """Successive Picard differences stopped contracting"""

    def __init__(self, ratios):
        self.ratios = list(ratios)
        history = ", ".join(f"{r:.3g}" for r in self.ratios)
        super().__init__(
            "picard_contraction",
            f"successive-difference ratio reached {self.ratios[-1]:.3g} (history: {history})",
            value=self.ratios[-1],
        )


class OracleMismatch(InvariantViolation):
    """An exact closure coefficient disagrees with its recomputation"""

    def __init__(self, lemma, symbol, expected, computed):
        self.lemma = lemma
        self.symbol = symbol
        super().__init__(
            f"closure_table:{lemma}",
            f"{symbol}: expected {expected}, computed {computed}",
        )


class CheckpointError(KineticLabError, ValueError):
    """Malformed or truncated checkpoint data"""


class RunCancelled(KineticLabError):
    """A run stopped because its cancel event was set"""
