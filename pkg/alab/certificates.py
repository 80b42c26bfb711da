"""
Machine-checkable evidence objects.

Every certificate is a small frozen dataclass whose `context` holds the JSON
form of the objects it talks about, so a certificate can be written to disk,
read back and re-verified without access to whatever produced it.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional, Tuple

logger = logging.getLogger(__name__)


def _encode_value(value: Any) -> Any:
    """JSON form of a witness element: integer tuples become decimal strings."""
    if value is None:
        return None
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, (tuple, list)):
        return [_encode_value(v) for v in value]
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    return value


def _decode_ints(value: Any) -> Optional[Tuple[int, ...]]:
    if value is None:
        return None
    return tuple(int(v) for v in value)


@dataclass(frozen=True)
class PurityCertificate:
    """
    Evidence that a subgroup or embedding is pure.

    `method` names the argument used; `exact` is False when only the
    multipliers n <= bound were checked.
    """

    method: str
    exact: bool
    checked: Tuple[int, ...]
    context: Dict[str, Any] = field(default_factory=dict)
    bound: Optional[int] = None

    kind: ClassVar[str] = "purity"
    is_pure: ClassVar[bool] = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "method": self.method,
            "exact": self.exact,
            "checked": [str(n) for n in self.checked],
            "bound": self.bound,
            "context": self.context,
        }


@dataclass(frozen=True)
class NonPurityWitness:
    """
    (n, h) with h in the subgroup, h = n * divisor in the ambient, and h not
    divisible by n inside the subgroup.
    """

    n: int
    h: Any
    divisor: Any
    context: Dict[str, Any] = field(default_factory=dict)
    preimage: Any = None

    kind: ClassVar[str] = "non-purity"
    is_pure: ClassVar[bool] = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": str(self.n),
            "h": _encode_value(self.h),
            "divisor": _encode_value(self.divisor),
            "preimage": _encode_value(self.preimage),
            "context": self.context,
        }


@dataclass(frozen=True)
class InjectivityCertificate:
    """Evidence that a map between structured groups is injective."""

    method: str
    context: Dict[str, Any] = field(default_factory=dict)

    kind: ClassVar[str] = "injectivity"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "method": self.method, "context": self.context}


@dataclass(frozen=True)
class NonSolvabilityCertificate:
    """
    Evidence that a linear system (or stream) has no solution.

    `reason` is one of support-growth, height-demand or modulus-obstruction;
    `data` carries the per-reason evidence.
    """

    reason: str
    data: Dict[str, Any]
    context: Dict[str, Any] = field(default_factory=dict)

    kind: ClassVar[str] = "non-solvability"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "reason": self.reason, "data": self.data, "context": self.context}


@dataclass(frozen=True)
class TypeInequalityWitness:
    """
    Evidence that two elements have different Galois types over a base.

    reason "height": the probe a + g and b + g have different p-heights.
    reason "element": `coefficients` describe an element of the closure of a
    whose image under the only candidate map leaves the ambient.
    reason "span": exactly one of a, b lies in the rational span of the base.
    """

    reason: str
    context: Dict[str, Any]
    prime: Optional[int] = None
    probe: Optional[int] = None
    height_a: Any = None
    height_b: Any = None
    coefficients: Optional[Tuple[str, ...]] = None
    direction: Optional[str] = None

    kind: ClassVar[str] = "type-inequality"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "reason": self.reason,
            "prime": None if self.prime is None else str(self.prime),
            "probe": self.probe,
            "height_a": self.height_a,
            "height_b": self.height_b,
            "coefficients": None if self.coefficients is None else list(self.coefficients),
            "direction": self.direction,
            "context": self.context,
        }


@dataclass(frozen=True)
class ClosureIsoCertificate:
    """
    Evidence that a -> b extends to an isomorphism of pure closures fixing the
    base: the local comparison passed at every listed prime.
    """

    primes: Tuple[int, ...]
    context: Dict[str, Any]

    kind: ClassVar[str] = "closure-iso"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "primes": [str(p) for p in self.primes], "context": self.context}


Certificate = Any

_KINDS = {
    PurityCertificate.kind,
    NonPurityWitness.kind,
    InjectivityCertificate.kind,
    NonSolvabilityCertificate.kind,
    TypeInequalityWitness.kind,
    ClosureIsoCertificate.kind,
}


def certificate_from_dict(data: Dict[str, Any]) -> Certificate:
    """
    Rebuild a certificate from its JSON form.

    Raises:
        ValueError: If the kind is unknown or a field is missing
    """
    if not isinstance(data, dict):
        raise ValueError("certificate must be a JSON object")
    kind = data.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown certificate kind: {kind!r}")
    try:
        context = data["context"]
        if not isinstance(context, dict):
            raise ValueError(f"certificate of kind {kind!r} has a non-object context")
        if kind == PurityCertificate.kind:
            return PurityCertificate(
                method=data["method"],
                exact=bool(data["exact"]),
                checked=tuple(int(n) for n in data["checked"]),
                bound=None if data.get("bound") is None else int(data["bound"]),
                context=context,
            )
        if kind == NonPurityWitness.kind:
            return _non_purity_from_dict(data, context)
        if kind == InjectivityCertificate.kind:
            return InjectivityCertificate(method=data["method"], context=context)
        if kind == NonSolvabilityCertificate.kind:
            return NonSolvabilityCertificate(reason=data["reason"], data=data["data"], context=context)
        if kind == TypeInequalityWitness.kind:
            coefficients = data.get("coefficients")
            return TypeInequalityWitness(
                reason=data["reason"],
                context=context,
                prime=None if data.get("prime") is None else int(data["prime"]),
                probe=data.get("probe"),
                height_a=data.get("height_a"),
                height_b=data.get("height_b"),
                coefficients=None if coefficients is None else tuple(str(c) for c in coefficients),
                direction=data.get("direction"),
            )
        return ClosureIsoCertificate(primes=tuple(int(p) for p in data["primes"]), context=context)
    except KeyError as e:
        raise ValueError(f"certificate of kind {kind!r} is missing field {e}") from e
    except (TypeError, AttributeError) as e:
        raise ValueError(f"certificate of kind {kind!r} is malformed: {e}") from e


def _non_purity_from_dict(data: Dict[str, Any], context: Dict[str, Any]) -> NonPurityWitness:
    if "embedding" in context:
        from .structured_groups import Embedding, GroupElement

        embedding = Embedding.from_json(context["embedding"])
        return NonPurityWitness(
            n=int(data["n"]),
            h=GroupElement.from_json(embedding.codomain, data["h"]),
            divisor=GroupElement.from_json(embedding.codomain, data["divisor"]),
            preimage=GroupElement.from_json(embedding.domain, data["preimage"]),
            context=context,
        )
    return NonPurityWitness(
        n=int(data["n"]),
        h=_decode_ints(data["h"]),
        divisor=_decode_ints(data["divisor"]),
        preimage=_decode_ints(data.get("preimage")),
        context=context,
    )


def verify_certificate(certificate: Certificate) -> bool:
    """
    Re-check a certificate using only the data it carries.

    Returns:
        bool: True when the evidence holds, False for tampered or inconsistent
        certificates. Never raises for malformed content.
    """
    if not isinstance(certificate.context, dict):
        logger.info("Certificate rejected: context is not a JSON object")
        return False
    try:
        result = _verify(certificate)
    except (ValueError, KeyError, TypeError, IndexError, AttributeError, ArithmeticError) as e:
        logger.info(f"Certificate rejected while decoding: {e}")
        return False
    logger.debug(f"Verified {certificate.kind} certificate: {result}")
    return bool(result)


def _verify(certificate: Certificate) -> bool:
    kind = certificate.kind
    context = certificate.context
    if kind in (PurityCertificate.kind, NonPurityWitness.kind):
        if "subgroup" in context:
            from .fg_groups import verify_purity_evidence
            return verify_purity_evidence(certificate)
        if "embedding" in context:
            from .structured_groups import verify_embedding_evidence
            return verify_embedding_evidence(certificate)
        if "pushout" in context:
            from .butler import verify_pushout_purity
            return verify_pushout_purity(certificate)
        if "cd_closure" in context:
            from .butler import verify_cd_purity
            return verify_cd_purity(certificate)
        return False
    if kind == InjectivityCertificate.kind:
        from .structured_groups import verify_injectivity
        return verify_injectivity(certificate)
    if kind == NonSolvabilityCertificate.kind:
        from .equation_systems import verify_certificate as verify_non_solvability
        return verify_non_solvability(certificate)
    if kind in (TypeInequalityWitness.kind, ClosureIsoCertificate.kind):
        from .galois_types import verify_type_evidence
        return verify_type_evidence(certificate)
    return False
