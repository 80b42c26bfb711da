"""
Linear equations over structured groups.

Finite systems are solved coordinate by coordinate through one Smith
decomposition of the integer coefficient matrix: U*C*V = D turns C*x = b into
D*y = U*b, which each atom handles with its own division rule. Streams are
rules producing equation i from i; the compactness probe solves their finite
prefixes and, for the two built-in families, explains why no single element
of a direct-sum group can solve them all.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .arith import frac_valuation, require_prime, valuation
from .certificates import NonSolvabilityCertificate
from .errors import InvalidElementError, PreconditionError
from .exact_linalg import IntMatrix, smith_normal_form
from .fg_groups import FgGroup
from .structured_groups import Atom, GroupElement, StructuredGroup, Zmod, add, scalar_mul, to_structured

logger = logging.getLogger(__name__)

Assignment = Dict[str, GroupElement]

FAMILIES = ("shift-recurrence", "height-ladder", "explicit")


@dataclass(frozen=True)
class Equation:
    """sum of coefficient * variable = constant."""

    coefficients: Tuple[Tuple[str, int], ...]
    constant: GroupElement

    @classmethod
    def of(cls, coefficients: Mapping[str, int], constant: GroupElement) -> "Equation":
        terms = tuple((str(v), int(c)) for v, c in coefficients.items() if int(c) != 0)
        return cls(terms, constant)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.coefficients)

    def residual(self, assignment: Assignment) -> GroupElement:
        total = self.constant.group.zero()
        for v, c in self.coefficients:
            total = add(total, scalar_mul(c, assignment[v]))
        return add(total, scalar_mul(-1, self.constant))

    def to_json(self) -> Dict[str, Any]:
        return {"coefficients": {v: c for v, c in self.coefficients}, "constant": self.constant.to_json()}


@dataclass(frozen=True)
class LinearSystem:
    group: StructuredGroup
    equations: Tuple[Equation, ...]
    variables: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        for i, eq in enumerate(self.equations):
            if eq.constant.group != self.group:
                raise InvalidElementError(f"equation {i}: constant lives in {eq.constant.group.label()}")
        names = list(self.variables)
        for eq in self.equations:
            for v in eq.variables:
                if v not in names:
                    names.append(v)
        object.__setattr__(self, "variables", tuple(names))

    def coefficient_matrix(self) -> IntMatrix:
        index = {v: j for j, v in enumerate(self.variables)}
        rows = []
        for eq in self.equations:
            row = [0] * len(self.variables)
            for v, c in eq.coefficients:
                row[index[v]] += c
            rows.append(row)
        return IntMatrix.from_rows(rows, len(self.variables))

    def residuals(self, assignment: Assignment) -> List[GroupElement]:
        return [eq.residual(assignment) for eq in self.equations]

    def is_solved_by(self, assignment: Assignment) -> bool:
        return all(self.group.is_zero(r) for r in self.residuals(assignment))

    def to_json(self) -> Dict[str, Any]:
        return {
            "group": self.group.to_json(),
            "variables": list(self.variables),
            "equations": [eq.to_json() for eq in self.equations],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "LinearSystem":
        G = StructuredGroup.from_json(data["group"])
        equations = tuple(
            Equation.of(
                {v: int(c) for v, c in item["coefficients"].items()},
                GroupElement.from_json(G, item["constant"]),
            )
            for item in data["equations"]
        )
        return cls(G, equations, tuple(data.get("variables", ())))


@dataclass(frozen=True)
class FiniteSolution:
    assignment: Assignment

    solvable = True

    def to_json(self) -> Dict[str, Any]:
        return {"solvable": True, "assignment": {v: x.to_json() for v, x in self.assignment.items()}}


@dataclass(frozen=True)
class NoSolution:
    certificate: NonSolvabilityCertificate

    solvable = False

    def to_json(self) -> Dict[str, Any]:
        return {"solvable": False, "certificate": self.certificate.to_dict()}


SolveOutcome = Union[FiniteSolution, NoSolution]


def _scalar_atom(atom: Atom) -> Atom:
    """Atom governing one coordinate; proxy coordinates are residues mod p^K."""
    return Zmod(atom.modulus) if atom.kind == "Completion" else atom


def _combine(atom: Atom, coeffs: Sequence[int], values: Sequence[Any]) -> Any:
    total = atom.zero()
    for c, x in zip(coeffs, values):
        if c:
            total = atom.add(total, atom.scale(c, x))
    return total


def _resolve_group(G: Union[FgGroup, StructuredGroup]) -> StructuredGroup:
    return to_structured(G) if isinstance(G, FgGroup) else G


def solve_finite(G: Union[FgGroup, StructuredGroup], system: LinearSystem) -> SolveOutcome:
    """
    Solve a finite system exactly.

    Returns:
        FiniteSolution whose assignment re-evaluates to zero residuals, or
        NoSolution with a modulus-obstruction certificate naming the
        coordinate, the multiplier row u and the modulus

    Raises:
        InvalidElementError: If the system lives over another group
    """
    G = _resolve_group(G)
    if system.group != G:
        raise InvalidElementError(f"system is over {system.group.label()}, not {G.label()}")
    C = system.coefficient_matrix()
    snf = smith_normal_form(C)
    k = snf.rank
    m, n = C.rows, C.cols
    solution: Dict[Tuple[int, int], List[Any]] = {}
    for s, j in G.coordinates():
        atom = _scalar_atom(G.summands[s])
        b = [atom.normalize(eq.constant.coordinate(s, j)) for eq in system.equations]
        c = [_combine(atom, snf.U.row(i), b) for i in range(m)]
        y = []
        for i in range(n):
            if i < k:
                yi = atom.divide(c[i], snf.invariant_factors[i])
                if yi is None:
                    return _obstruction(system, s, j, i, snf.U.row(i), snf.invariant_factors[i], atom, c[i])
                y.append(yi)
            else:
                y.append(atom.zero())
        for i in range(k, m):
            if not atom.is_zero(c[i]):
                return _obstruction(system, s, j, i, snf.U.row(i), 0, atom, c[i])
        solution[(s, j)] = [_combine(atom, snf.V.row(r), y) for r in range(n)]

    assignment = {}
    for r, name in enumerate(system.variables):
        comps = []
        for s, atom in enumerate(G.summands):
            if atom.kind == "Completion":
                comps.append(tuple(solution[(s, j)][r] for j in range(atom.w)))
            else:
                comps.append(solution[(s, 0)][r])
        assignment[name] = G.element(comps)
    if not system.is_solved_by(assignment):
        raise AssertionError("solution failed re-evaluation")
    logger.debug(f"Solved {m} equations in {n} unknowns over {G.label()}")
    return FiniteSolution(assignment)


def _obstruction(system, s, j, row, multiplier, modulus, atom, value) -> NoSolution:
    data = {
        "summand": s,
        "coordinate": j,
        "row": row,
        "multiplier": [str(u) for u in multiplier],
        "modulus": str(modulus),
        "value": atom.encode(value),
    }
    logger.debug(f"No solution: coordinate ({s},{j}) obstructed by modulus {modulus}")
    certificate = NonSolvabilityCertificate("modulus-obstruction", data, context={"system": system.to_json()})
    return NoSolution(certificate)


@dataclass(frozen=True)
class SystemStream:
    """
    Equation i as a function of i.

    shift-recurrence: x_i - p*x_{i+1} = c_i.
    height-ladder: x - p^(i+1)*y_i = c_{i+1} with c_n = sum_{k<n} p^k e_k,
        i.e. p^n divides x - c_n for every n.
    explicit: a finite list of equations; the stream ends with it.

    For the first two, `constants` is "units" (e_i is the i-th coordinate of
    the group) or a list of coordinate indices; e_i = 0 past the end.
    """

    family: str
    p: Optional[int] = None
    constants: Any = "units"
    equations: Tuple[Mapping[str, Any], ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown stream family {self.family!r}")
        if self.family != "explicit":
            require_prime(self.p)
        if isinstance(self.constants, list):
            object.__setattr__(self, "constants", tuple(int(i) for i in self.constants))
        elif self.constants != "units":
            raise PreconditionError(f"constants must be 'units' or a list of coordinate indices, got {self.constants!r}")
        object.__setattr__(self, "equations", tuple(self.equations))

    def constant_coordinates(self, G: StructuredGroup) -> List[Tuple[int, int]]:
        coords = G.coordinates()
        if self.constants == "units":
            return coords
        out = []
        for i in self.constants:
            if not 0 <= i < len(coords):
                raise PreconditionError(f"constant index {i} is outside the {len(coords)} coordinates of {G.label()}")
            out.append(coords[i])
        return out

    def basis_element(self, G: StructuredGroup, i: int) -> GroupElement:
        coords = self.constant_coordinates(G)
        if i >= len(coords):
            return G.zero()
        return G.unit_vector(*coords[i])

    def ladder_constant(self, G: StructuredGroup, n: int) -> GroupElement:
        total = G.zero()
        for k in range(n):
            total = add(total, scalar_mul(self.p ** k, self.basis_element(G, k)))
        return total

    def equation(self, G: StructuredGroup, i: int) -> Optional[Equation]:
        if self.family == "shift-recurrence":
            return Equation.of({f"x{i}": 1, f"x{i + 1}": -self.p}, self.basis_element(G, i))
        if self.family == "height-ladder":
            return Equation.of({"x": 1, f"y{i}": -(self.p ** (i + 1))}, self.ladder_constant(G, i + 1))
        if i >= len(self.equations):
            return None
        item = self.equations[i]
        return Equation.of(
            {v: int(c) for v, c in item["coefficients"].items()}, GroupElement.from_json(G, item["constant"])
        )

    def prefix(self, G: StructuredGroup, N: int) -> LinearSystem:
        equations = [eq for eq in (self.equation(G, i) for i in range(N)) if eq is not None]
        return LinearSystem(G, tuple(equations))

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"family": self.family}
        if self.family == "explicit":
            data["equations"] = [dict(e) for e in self.equations]
        else:
            data["p"] = self.p
            data["constants"] = self.constants if self.constants == "units" else list(self.constants)
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SystemStream":
        constants = data.get("constants", "units")
        return cls(
            family=data["family"],
            p=data.get("p"),
            constants=list(constants) if isinstance(constants, (list, tuple)) else constants,
            equations=tuple(data.get("equations", ())),
        )


def prefix_solvable(G: Union[FgGroup, StructuredGroup], s: SystemStream, N: int) -> SolveOutcome:
    """Solve the first N equations of the stream."""
    if N < 1:
        raise PreconditionError(f"prefix length must be at least 1, got {N}")
    G = _resolve_group(G)
    return solve_finite(G, s.prefix(G, N))


@dataclass(frozen=True)
class NotFinitelySolvable:
    N: int
    certificate: NonSolvabilityCertificate

    verdict = "not-finitely-solvable"

    def to_json(self) -> Dict[str, Any]:
        return {"verdict": self.verdict, "N": self.N, "certificate": self.certificate.to_dict()}


@dataclass(frozen=True)
class FullSolution:
    """An assignment checked on every generated equation, with the reason it extends."""

    assignment: Assignment
    checked_up_to: int
    argument: str

    verdict = "full-solution"

    def to_json(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "checked_up_to": self.checked_up_to,
            "argument": self.argument,
            "assignment": {v: x.to_json() for v, x in sorted(self.assignment.items())},
        }


@dataclass(frozen=True)
class NonCompactnessEvidence:
    certificate: NonSolvabilityCertificate

    verdict = "non-compactness-evidence"

    def to_json(self) -> Dict[str, Any]:
        return {"verdict": self.verdict, "certificate": self.certificate.to_dict()}


@dataclass(frozen=True)
class BoundedEvidence:
    checked_up_to: int
    note: str = "prefixes solvable; no family argument applies, so infinite solvability is not decided"

    verdict = "bounded-evidence"

    def to_json(self) -> Dict[str, Any]:
        return {"verdict": self.verdict, "checked_up_to": self.checked_up_to, "note": self.note}


def _distinct_support(s: SystemStream, G: StructuredGroup, N: int) -> Optional[List[Tuple[int, int]]]:
    coords = s.constant_coordinates(G)[:N]
    if len(coords) < N or len(set(coords)) != N:
        return None
    return coords


def _finite_support_atoms(G: StructuredGroup, coords, p: int) -> bool:
    """Every listed coordinate sits in Z or Z_(p): elements have finite support and finite p-height there."""
    return all(G.summands[s].kind == "Z" or (G.summands[s].kind == "Loc" and G.summands[s].p == p) for s, _ in coords)


def _is_completion_stream(G: StructuredGroup, coords, p: int) -> bool:
    return bool(coords) and all(G.summands[s].kind == "Completion" and G.summands[s].p == p for s, _ in coords)


def _closed_form(G: StructuredGroup, s: SystemStream, count: int) -> Assignment:
    """
    Solution of the whole stream once the constants run out after L terms.

    shift-recurrence: x_k = sum_{k<=n<L} p^(n-k) e_n.
    height-ladder: x = c_L and y_i = sum_{i<k<L} p^(k-i-1) e_k.
    """
    p = s.p
    L = len(s.constant_coordinates(G))
    assignment = {}
    if s.family == "shift-recurrence":
        for k in range(count + 1):
            x = G.zero()
            for n in range(k, L):
                x = add(x, scalar_mul(p ** (n - k), s.basis_element(G, n)))
            assignment[f"x{k}"] = x
        return assignment
    assignment["x"] = s.ladder_constant(G, L)
    for i in range(count):
        y = G.zero()
        for k in range(i + 1, L):
            y = add(y, scalar_mul(p ** (k - i - 1), s.basis_element(G, k)))
        assignment[f"y{i}"] = y
    return assignment


def _growth_certificate(G: StructuredGroup, s: SystemStream, bound: int, coords) -> NonSolvabilityCertificate:
    reason = "support-growth" if s.family == "shift-recurrence" else "height-demand"
    variable = "x0" if s.family == "shift-recurrence" else "x"
    forced = []
    for N in range(1, bound + 1):
        outcome = prefix_solvable(G, s, N)
        forced.append(outcome.assignment[variable].to_json())
    data = {
        "p": s.p,
        "bound": bound,
        "variable": variable,
        "coordinates": [[a, b] for a, b in coords],
        "structure": "finite-support",
        "prefix_solutions": forced,
    }
    return NonSolvabilityCertificate(reason, data, context={"group": G.to_json(), "stream": s.to_json()})


def compactness_probe(G: Union[FgGroup, StructuredGroup], s: SystemStream, N_max: int):
    """
    Probe whether a finitely solvable stream is solvable outright.

    Returns:
        NotFinitelySolvable at the first failing prefix. For the built-in
        families: NonCompactnessEvidence when the constants occupy N_max
        distinct coordinates of Z or Z_(p) atoms (any solution needs support
        growing with the prefix), otherwise a FullSolution from the closed
        form. Explicit streams only get BoundedEvidence.
    """
    if N_max < 2:
        raise PreconditionError(f"N_max must be at least 2, got {N_max}")
    G = _resolve_group(G)
    for N in range(1, N_max + 1):
        outcome = prefix_solvable(G, s, N)
        if not outcome.solvable:
            logger.info(f"Stream prefix {N} has no solution")
            return NotFinitelySolvable(N, outcome.certificate)
    if s.family == "explicit":
        return BoundedEvidence(N_max)

    coords = s.constant_coordinates(G)
    support = _distinct_support(s, G, N_max)
    if support is not None and _finite_support_atoms(G, support, s.p):
        certificate = _growth_certificate(G, s, N_max, support)
        logger.info(f"Stream needs support of size >= {N_max}: {certificate.reason} certificate")
        return NonCompactnessEvidence(certificate)

    checked = max(N_max, len(coords) + 1)
    assignment = _closed_form(G, s, checked)
    if not s.prefix(G, checked).is_solved_by(assignment):
        raise AssertionError("closed-form solution failed re-evaluation")
    if _is_completion_stream(G, coords, s.p):
        argument = "the p-adic series for the solution converges in the completion; coordinates are kept mod p^K"
    else:
        argument = f"constants vanish after {len(coords)} equations; the finite closed form solves every equation"
    return FullSolution(assignment, checked, argument)


def _verify_obstruction(certificate: NonSolvabilityCertificate) -> bool:
    system = LinearSystem.from_json(certificate.context["system"])
    data = certificate.data
    G = system.group
    s, j = int(data["summand"]), int(data["coordinate"])
    if not 0 <= s < len(G) or not 0 <= j < G.summands[s].coordinate_count():
        return False
    atom = _scalar_atom(G.summands[s])
    u = [int(x) for x in data["multiplier"]]
    modulus = int(data["modulus"])
    if len(u) != len(system.equations) or modulus < 0:
        return False
    C = system.coefficient_matrix()
    combo = C.left_apply(u) if C.rows else ()
    b = [atom.normalize(eq.constant.coordinate(s, j)) for eq in system.equations]
    target = _combine(atom, u, b)
    if modulus == 0:
        return not any(combo) and not atom.is_zero(target)
    return all(x % modulus == 0 for x in combo) and atom.divide(target, modulus) is None


def _coordinate_value(x: GroupElement, s: int, j: int) -> Fraction:
    return Fraction(x.coordinate(s, j))


def _verify_growth(certificate: NonSolvabilityCertificate) -> bool:
    G = StructuredGroup.from_json(certificate.context["group"])
    s = SystemStream.from_json(certificate.context["stream"])
    data = certificate.data
    expected_reason = "support-growth" if s.family == "shift-recurrence" else "height-demand"
    if s.family == "explicit" or certificate.reason != expected_reason or int(data["p"]) != s.p:
        return False
    bound = int(data["bound"])
    coords = [tuple(c) for c in data["coordinates"]]
    if bound < 1 or coords != _distinct_support(s, G, bound):
        return False
    if data.get("structure") != "finite-support" or not _finite_support_atoms(G, coords, s.p):
        return False
    stored = data["prefix_solutions"]
    if len(stored) != bound:
        return False
    p = s.p
    for N in range(1, bound + 1):
        outcome = prefix_solvable(G, s, N)
        if not outcome.solvable:
            return False
        x = outcome.assignment[data["variable"]]
        if x.to_json() != stored[N - 1]:
            return False
        # x0 = sum_{n<N} p^n e_n + p^N x_N, so coordinate n of x0 is p^n modulo p^N
        for n, (si, ji) in enumerate(coords[:N]):
            diff = _coordinate_value(x, si, ji) - p ** n
            if diff != 0 and frac_valuation(diff, p) < N:
                return False
        if s.family == "shift-recurrence":
            tail = outcome.assignment[f"x{N}"]
            head = s.ladder_constant(G, N)
            if add(head, scalar_mul(p ** N, tail)) != x:
                return False
    return True


def verify_certificate(certificate: NonSolvabilityCertificate) -> bool:
    """Re-check a non-solvability certificate from its context alone."""
    if certificate.reason == "modulus-obstruction":
        return _verify_obstruction(certificate)
    if certificate.reason in ("support-growth", "height-demand"):
        return _verify_growth(certificate)
    return False
