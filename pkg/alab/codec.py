"""
JSON decoding for command-line inputs.

Every decoder takes the JSON path of the value it reads, and any failure is
re-raised as a ScenarioError carrying that path.
"""

from contextlib import contextmanager
from fractions import Fraction
from typing import Any, Iterator, List, Mapping, Sequence, Tuple, Union

from .arith import parse_rational
from .butler import CompletelyDecomposable
from .certificates import Certificate, certificate_from_dict
from .equation_systems import Equation, LinearSystem, SystemStream
from .errors import ScenarioError
from .exact_linalg import IntMatrix
from .fg_groups import FgGroup, from_relations
from .structured_groups import GroupElement, StructuredGroup, to_structured

AnyGroup = Union[FgGroup, StructuredGroup, CompletelyDecomposable]


@contextmanager
def at_path(path: str) -> Iterator[None]:
    """Turn decoding failures inside the block into a ScenarioError at `path`."""
    try:
        yield
    except ScenarioError:
        raise
    except (ValueError, KeyError, TypeError, IndexError, ZeroDivisionError) as e:
        raise ScenarioError(path, str(e) or type(e).__name__, e) from e


def decode_matrix(data: Sequence[Sequence[Any]], path: str, cols: int = None) -> IntMatrix:
    with at_path(path):
        return IntMatrix.from_json(data, cols)


def decode_int_vector(data: Sequence[Any], path: str) -> Tuple[int, ...]:
    out = []
    for i, x in enumerate(data):
        with at_path(f"{path}[{i}]"):
            if isinstance(x, bool):
                raise ValueError(f"not an integer: {x!r}")
            out.append(int(x))
    return tuple(out)


def decode_int_rows(data: Sequence[Sequence[Any]], path: str) -> List[Tuple[int, ...]]:
    return [decode_int_vector(row, f"{path}[{i}]") for i, row in enumerate(data)]


def decode_fg_group(data: Mapping[str, Any], path: str) -> FgGroup:
    """{"free_rank", "torsion"} or {"relations", "generators"}."""
    if "relations" in data:
        cols = data.get("generators")
        A = decode_matrix(data["relations"], f"{path}.relations", None if cols is None else int(cols))
        with at_path(path):
            return from_relations(A)
    if "summands" in data or "characteristics" in data:
        raise ScenarioError(path, "expected a finitely generated group")
    with at_path(path):
        return FgGroup.from_json(data)


def decode_group(data: Mapping[str, Any], path: str) -> AnyGroup:
    if "summands" in data:
        with at_path(path):
            return StructuredGroup.from_json(data)
    if "characteristics" in data:
        with at_path(path):
            return CompletelyDecomposable.from_json(data["characteristics"])
    return decode_fg_group(data, path)


def decode_structured_group(data: Mapping[str, Any], path: str) -> StructuredGroup:
    G = decode_group(data, path)
    if isinstance(G, FgGroup):
        return to_structured(G)
    if not isinstance(G, StructuredGroup):
        raise ScenarioError(path, "expected a direct sum of atoms or a finitely generated group")
    return G


def decode_element(G: AnyGroup, data: Sequence[Any], path: str) -> Any:
    """Tuple of ints for FgGroup, GroupElement for StructuredGroup, rational vector otherwise."""
    with at_path(path):
        if isinstance(G, FgGroup):
            return G.normalize(decode_int_vector(data, path))
        if isinstance(G, StructuredGroup):
            return GroupElement.from_json(G, data)
        return G.coerce(tuple(parse_rational(x) for x in data))


def decode_rational_rows(data: Sequence[Sequence[Any]], path: str) -> List[Tuple[Fraction, ...]]:
    rows = []
    for i, row in enumerate(data):
        with at_path(f"{path}[{i}]"):
            rows.append(tuple(parse_rational(x) for x in row))
    return rows


def decode_system(G: StructuredGroup, equations: Sequence[Mapping[str, Any]], path: str) -> LinearSystem:
    parsed = []
    for i, item in enumerate(equations):
        with at_path(f"{path}[{i}]"):
            parsed.append(
                Equation.of(
                    {v: int(c) for v, c in item["coefficients"].items()},
                    GroupElement.from_json(G, item["constant"]),
                )
            )
    with at_path(path):
        return LinearSystem(G, tuple(parsed))


def decode_stream(data: Mapping[str, Any], path: str) -> SystemStream:
    with at_path(path):
        return SystemStream.from_json(data)


def decode_certificate(data: Mapping[str, Any], path: str) -> Certificate:
    with at_path(path):
        return certificate_from_dict(dict(data))
