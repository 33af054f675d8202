"""Domain exceptions for the dynamics module."""

from __future__ import annotations

from shared.exceptions import DomainError


class DynamicsDomainError(DomainError):
    """Base exception for all dynamics domain errors."""

    def __init__(self, message: str, code: str = "DYNAMICS_ERROR") -> None:
        super().__init__(message, code=code)


class VariantContractError(DynamicsDomainError):
    """Raised when modality encodings are given to the wrong model variant."""

    def __init__(self, variant: str, has_modalities: bool) -> None:
        self.variant = variant
        self.has_modalities = has_modalities
        expectation = "does not accept" if has_modalities else "requires"
        super().__init__(
            f"variant {variant} {expectation} modality encodings",
            code="VARIANT_CONTRACT",
        )


class ConditioningLengthError(DynamicsDomainError):
    """Raised when a sequence does not have the expected number of steps."""

    def __init__(self, expected: str, got: int) -> None:
        self.expected = expected
        self.got = got
        super().__init__(
            f"expected {expected} time steps, got {got}", code="CONDITIONING_LENGTH"
        )
