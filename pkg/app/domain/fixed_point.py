from __future__ import annotations

from dataclasses import dataclass

from app.domain.errors import InvalidParams


@dataclass(frozen=True, slots=True)
class QFormat:
    """Signed fixed-point layout Q(m_q, n_q) inside an ell-bit word."""

    m_q: int
    n_q: int
    ell: int

    def __post_init__(self) -> None:
        if self.m_q < 1 or self.n_q < 0:
            raise InvalidParams("q_format", f"m_q={self.m_q}, n_q={self.n_q} must be positive")
        if self.m_q + self.n_q > self.ell:
            raise InvalidParams("q_format", f"Q{self.m_q}.{self.n_q} does not fit {self.ell} bits")

    @property
    def lower(self) -> float:
        return -float(1 << (self.m_q - 1))

    @property
    def upper(self) -> float:
        """Exclusive upper bound of the representable range."""
        return float(1 << (self.m_q - 1))

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.n_q

    def contains(self, beta: float) -> bool:
        return self.lower <= beta < self.upper


@dataclass(frozen=True, slots=True)
class QNumber:
    """A message word together with its current fraction-bit count.

    ``frac_bits`` is n_q for rescaled values and 2 * n_q right after a product.
    """

    word: int
    frac_bits: int
    ell: int
