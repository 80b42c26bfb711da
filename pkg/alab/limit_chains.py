"""
Finite-stage chains of divisible and torsion-free groups.

Each step adjoins the summands that universality has to absorb: for the
divisible class the hull of the previous stage plus Q^m and m Prüfer copies
per prime, for the torsion-free class the previous stage plus Q^m and m
copies of Z_(p) per prime. The stages carry their embeddings with
certificates and an invariant log, and the chain can be probed for the
compactness dichotomy.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import pandas as pd

from utils.worker_pool import WorkerPoolSession

from .arith import prime_factors, primes_up_to, valuation
from .certificates import InjectivityCertificate, NonSolvabilityCertificate, PurityCertificate, verify_certificate
from .equation_systems import FullSolution, NonCompactnessEvidence, SystemStream, compactness_probe
from .errors import PreconditionError
from .exact_linalg import rank_mod_p
from .fg_groups import FgGroup
from .structured_groups import (
    Atom,
    Completion,
    DivisibleForm,
    Embedding,
    Loc,
    Pruefer,
    Q,
    StructuredGroup,
    SummandMap,
    canonical_divisible_form,
    dim_mod_p_structured,
    direct_sum,
    divisible_reduced_split,
    inclusion,
    injectivity_certificate,
    is_divisible_group,
    is_pure_embedding,
    mod_p_vector,
    ranks_structured,
    structured_divisible_hull,
    to_structured,
)

logger = logging.getLogger(__name__)

CLASS_TAGS = ("Kab", "Ktf")
COFINALITY_TAGS = ("omega", "uncountable-proxy")


def normalize_class_tag(tag: str) -> str:
    for known in CLASS_TAGS:
        if tag.lower() == known.lower():
            return known
    raise PreconditionError(f"class must be one of {', '.join(CLASS_TAGS)}, got {tag!r}")


@dataclass(frozen=True)
class ChainSpec:
    """
    Parameters of a chain.

    Attributes:
        class_tag: "Kab" (divisible stages) or "Ktf" (torsion-free stages)
        base: Stage 0
        steps: Number of steps k
        m: Copies of each adjoined atom per step
        prime_bound: Primes p <= prime_bound get Prüfer or Z_(p) copies
        cofinality: "omega" or "uncountable-proxy"
        precision: K for the completion comparison group
    """

    class_tag: str
    base: Union[FgGroup, StructuredGroup]
    steps: int
    m: int = 1
    prime_bound: int = 2
    cofinality: str = "omega"
    precision: int = 16

    def __post_init__(self):
        object.__setattr__(self, "class_tag", normalize_class_tag(self.class_tag))
        if isinstance(self.base, FgGroup):
            object.__setattr__(self, "base", to_structured(self.base))
        if self.steps < 1:
            raise PreconditionError(f"steps must be at least 1, got {self.steps}")
        if self.m < 1:
            raise PreconditionError(f"m must be at least 1, got {self.m}")
        if self.prime_bound < 2:
            raise PreconditionError(f"prime bound must be at least 2, got {self.prime_bound}")
        if self.cofinality not in COFINALITY_TAGS:
            raise PreconditionError(f"cofinality must be one of {', '.join(COFINALITY_TAGS)}, got {self.cofinality!r}")
        if self.precision < 1:
            raise PreconditionError(f"precision must be at least 1, got {self.precision}")

    @property
    def primes(self) -> List[int]:
        return primes_up_to(self.prime_bound)

    def to_json(self) -> Dict[str, Any]:
        return {
            "class": self.class_tag,
            "base": self.base.to_json(),
            "steps": self.steps,
            "m": self.m,
            "prime_bound": self.prime_bound,
            "cofinality": self.cofinality,
            "precision": self.precision,
        }


@dataclass(frozen=True)
class StageInvariants:
    stage: int
    atoms: str
    rk0: int
    rkp: Dict[int, int]
    dim_mod_p: Dict[int, int]

    def to_json(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "atoms": self.atoms,
            "rk0": self.rk0,
            "rkp": {str(p): c for p, c in sorted(self.rkp.items())},
            "dim_mod_p": {str(p): c for p, c in sorted(self.dim_mod_p.items())},
        }


@dataclass
class ChainState:
    """
    Stages G_0 <= ... <= G_k with the step embeddings.

    certificates[i] belongs to embeddings[i] (G_i -> G_{i+1}); fresh[i] lists
    the summand indices of G_{i+1} adjoined by that step.
    """

    spec: ChainSpec
    groups: List[StructuredGroup] = field(default_factory=list)
    embeddings: List[Embedding] = field(default_factory=list)
    certificates: List[Union[InjectivityCertificate, PurityCertificate]] = field(default_factory=list)
    fresh: List[Tuple[int, ...]] = field(default_factory=list)
    log: List[StageInvariants] = field(default_factory=list)

    @property
    def top(self) -> StructuredGroup:
        return self.groups[-1]

    def embedding_into(self, i: int, j: int) -> Embedding:
        """Composite G_i -> G_j for i <= j."""
        if not 0 <= i <= j < len(self.groups):
            raise PreconditionError(f"stages {i} -> {j} are out of range 0..{len(self.groups) - 1}")
        e = inclusion(self.groups[i], self.groups[i])
        for step in range(i, j):
            e = e.then(self.embeddings[step])
        return e

    def to_json(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_json(),
            "stages": [entry.to_json() for entry in self.log],
            "certificates": [cert.to_dict() for cert in self.certificates],
        }


def _stage_invariants(stage: int, G: StructuredGroup, primes: List[int]) -> StageInvariants:
    rk0, rkp = ranks_structured(G)
    return StageInvariants(stage, G.label(), rk0, rkp, {p: dim_mod_p_structured(G, p) for p in primes})


def _menu(spec: ChainSpec) -> List[Atom]:
    local = Pruefer if spec.class_tag == "Kab" else Loc
    atoms = [Q()] * spec.m
    for p in spec.primes:
        atoms.extend([local(p)] * spec.m)
    return atoms


def _kab_step(G: StructuredGroup, spec: ChainSpec):
    hull, e = structured_divisible_hull(G)
    menu = _menu(spec)
    nxt = direct_sum(hull, StructuredGroup(tuple(menu)))
    embedding = Embedding(G, nxt, e.parts)
    return nxt, embedding, injectivity_certificate(embedding), tuple(range(len(hull), len(nxt)))


def _ktf_step(G: StructuredGroup, spec: ChainSpec):
    nxt = direct_sum(G, StructuredGroup(tuple(_menu(spec))))
    embedding = inclusion(G, nxt)
    certificate = is_pure_embedding(embedding)
    if not isinstance(certificate, PurityCertificate) or not certificate.exact:
        raise AssertionError(f"stage inclusion into {nxt.label()} is not certified pure")
    return nxt, embedding, certificate, tuple(range(len(G), len(nxt)))


def build_chain(spec: ChainSpec, workers: int = 1) -> ChainState:
    """
    Build the k stages of the chain.

    Args:
        spec: Chain parameters
        workers: Threads for the per-stage invariant log

    Returns:
        ChainState: Stages, certified embeddings and the invariant log

    Raises:
        PreconditionError: If the base has torsion under Ktf, or has no
            divisible hull under Kab
    """
    base = spec.base
    if spec.class_tag == "Ktf" and not base.is_torsion_free:
        raise PreconditionError(f"Ktf chains need a torsion-free base, got {base.label()}")
    state = ChainState(spec, groups=[base])
    step = _kab_step if spec.class_tag == "Kab" else _ktf_step
    for i in range(spec.steps):
        nxt, embedding, certificate, fresh = step(state.top, spec)
        if not verify_certificate(certificate):
            raise AssertionError(f"certificate for step {i} -> {i + 1} did not verify")
        state.groups.append(nxt)
        state.embeddings.append(embedding)
        state.certificates.append(certificate)
        state.fresh.append(fresh)
        logger.debug(f"Stage {i + 1}: {nxt.label()} ({certificate.kind})")

    primes = spec.primes
    with WorkerPoolSession(workers=workers, name="alab-chain") as pool:
        state.log = pool.map_ordered(
            lambda item: _stage_invariants(item[0], item[1], primes), list(enumerate(state.groups))
        )
    logger.info(f"Built {spec.class_tag} chain with {spec.steps} steps; top stage has {len(state.top)} summands")
    return state


@dataclass(frozen=True)
class UnionReport:
    """
    Invariants of the top stage against their closed-form predictions.

    For Kab: divisibility, the divisible form and its prediction. For Ktf:
    dim G_k/pG_k with its prediction and the mod p independence of the
    adjoined Z_(p) basis vectors.
    """

    class_tag: str
    stage: int
    divisible: Optional[bool] = None
    form: Optional[DivisibleForm] = None
    predicted_form: Optional[DivisibleForm] = None
    dims: Dict[int, int] = field(default_factory=dict)
    predicted_dims: Dict[int, int] = field(default_factory=dict)
    independent: Dict[int, bool] = field(default_factory=dict)
    divisible_summands: Tuple[int, ...] = ()
    reduced_summands: Tuple[int, ...] = ()

    @property
    def matches(self) -> bool:
        if self.class_tag == "Kab":
            return bool(self.divisible) and self.form == self.predicted_form
        return self.dims == self.predicted_dims and all(self.independent.values())

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"class": self.class_tag, "stage": self.stage, "matches": self.matches}
        if self.class_tag == "Kab":
            data["divisible"] = self.divisible
            data["form"] = None if self.form is None else self.form.to_json()
            data["predicted_form"] = self.predicted_form.to_json()
        else:
            data["dim_mod_p"] = {str(p): c for p, c in sorted(self.dims.items())}
            data["predicted_dim_mod_p"] = {str(p): c for p, c in sorted(self.predicted_dims.items())}
            data["independent"] = {str(p): ok for p, ok in sorted(self.independent.items())}
        data["split"] = {"divisible": list(self.divisible_summands), "reduced": list(self.reduced_summands)}
        return data


def _adjoined_local_vectors(c: ChainState, p: int) -> List[List[int]]:
    """Images in G_k/pG_k of the unit vectors of every adjoined Z_(p) copy."""
    k = len(c.groups) - 1
    rows = []
    for i, fresh in enumerate(c.fresh):
        stage = c.groups[i + 1]
        to_top = c.embedding_into(i + 1, k)
        for s in fresh:
            atom = stage.summands[s]
            if atom.kind == "Loc" and atom.p == p:
                rows.append(mod_p_vector(to_top.apply(stage.unit_vector(s)), p))
    return rows


def union_invariants(c: ChainState, bound: int = 50) -> UnionReport:
    spec = c.spec
    k = len(c.groups) - 1
    top = c.top
    split = divisible_reduced_split(top)
    if spec.class_tag == "Kab":
        verdict = is_divisible_group(top, bound)
        form = canonical_divisible_form(top) if verdict.divisible else None
        hull_form = canonical_divisible_form(structured_divisible_hull(c.groups[0])[0])
        growth = spec.m * k
        rkp = dict(hull_form.rkp)
        for p in spec.primes:
            rkp[p] = rkp.get(p, 0) + growth
        predicted = DivisibleForm(hull_form.rk0 + growth, dict(sorted(rkp.items())))
        report = UnionReport(
            "Kab", k, verdict.divisible, form, predicted,
            divisible_summands=split.divisible, reduced_summands=split.reduced,
        )
    else:
        dims, predicted_dims, independent = {}, {}, {}
        for p in spec.primes:
            dims[p] = dim_mod_p_structured(top, p)
            predicted_dims[p] = dim_mod_p_structured(c.groups[0], p) + spec.m * k
            rows = _adjoined_local_vectors(c, p)
            independent[p] = rank_mod_p(rows, p) == len(rows)
        report = UnionReport(
            "Ktf", k, dims=dims, predicted_dims=predicted_dims, independent=independent,
            divisible_summands=split.divisible, reduced_summands=split.reduced,
        )
    logger.info(f"Union invariants at stage {k}: matches={report.matches}")
    return report


@dataclass(frozen=True)
class UniversalityResult:
    embedding: Embedding
    certificate: Union[InjectivityCertificate, PurityCertificate]

    representable = True

    def to_json(self) -> Dict[str, Any]:
        return {"representable": True, "embedding": self.embedding.to_json(), "certificate": self.certificate.to_dict()}


@dataclass(frozen=True)
class NotRepresentable:
    demands: Tuple[str, ...]

    representable = False

    def to_json(self) -> Dict[str, Any]:
        return {"representable": False, "demands": list(self.demands)}


def _atom_demands(atom: Atom, spec: ChainSpec) -> Tuple[List[Tuple[Atom, Any]], Optional[str]]:
    """Fresh atoms needed by one atom of A, with the map factor into each; or an unmet demand."""
    P = spec.prime_bound
    kab = spec.class_tag == "Kab"
    if atom.kind == "Q":
        return [(Q(), 1)], None
    if atom.kind == "Loc":
        if atom.p > P:
            return [], f"{atom.label()}, p > prime_bound"
        return ([(Q(), 1)] if kab else [(Loc(atom.p), 1)]), None
    if atom.kind == "Z":
        if kab:
            return [(Q(), 1)], None
        return [], "Z, no fresh Z summand in a Ktf step"
    if kab and atom.kind == "Pruefer":
        if atom.p > P:
            return [], f"{atom.label()}, p > prime_bound"
        return [(Pruefer(atom.p), 1)], None
    if kab and atom.kind == "Zmod":
        needs = []
        for p in prime_factors(atom.n):
            if p > P:
                return [], f"{atom.label()}, Pruefer({p}) with p > prime_bound"
            needs.append((Pruefer(p), Fraction(1, p ** valuation(atom.n, p))))
        return needs, None
    return [], f"{atom.label()}, not in the {spec.class_tag} atom menu"


def universality_probe(c: ChainState, i: int, A: StructuredGroup) -> Union[UniversalityResult, NotRepresentable]:
    """
    Embed G_i + A into G_{i+1} over G_i, using only the summands adjoined by step i.

    Raises:
        PreconditionError: If i is not a stage with a successor
    """
    if not 0 <= i < len(c.embeddings):
        raise PreconditionError(f"stage {i} is out of range 0..{len(c.embeddings) - 1}")
    target = c.groups[i + 1]
    available = list(c.fresh[i])
    parts = list(c.embeddings[i].parts)
    offset = len(c.groups[i])
    demands: List[str] = []
    for a_index, atom in enumerate(A.summands):
        needs, unmet = _atom_demands(atom, c.spec)
        if unmet:
            demands.append(unmet)
            continue
        for want, factor in needs:
            slot = next((s for s in available if target.summands[s] == want), None)
            if slot is None:
                demands.append(f"{atom.label()}, no fresh {want.label()} left at stage {i + 1}")
                continue
            available.remove(slot)
            parts.append(SummandMap(offset + a_index, slot, Fraction(factor)))
    if demands:
        logger.info(f"Universality probe at stage {i}: not representable ({len(demands)} demands)")
        return NotRepresentable(tuple(demands))

    embedding = Embedding(direct_sum(c.groups[i], A), target, tuple(parts))
    if c.spec.class_tag == "Kab":
        certificate = injectivity_certificate(embedding)
    else:
        certificate = is_pure_embedding(embedding)
        if not isinstance(certificate, PurityCertificate):
            raise AssertionError("extension over a pure stage is not pure")
    return UniversalityResult(embedding, certificate)


def _first_local_coordinates(c: ChainState, p: int) -> List[int]:
    """Index in the top stage's coordinate list of the first Z_(p) copy adjoined by each step."""
    k = len(c.groups) - 1
    top_coords = c.top.coordinates()
    indices = []
    for i, fresh in enumerate(c.fresh):
        stage = c.groups[i + 1]
        s = next(s for s in fresh if stage.summands[s].kind == "Loc" and stage.summands[s].p == p)
        image = c.embedding_into(i + 1, k).apply(stage.unit_vector(s))
        target = next(t for t, comp in enumerate(image.components) if comp != 0)
        indices.append(top_coords.index((target, 0)))
    return indices


def omega_stream(c: ChainState, p: int = 2) -> SystemStream:
    """x_n - p x_{n+1} = e_n with e_n from the Z_(p) copy adjoined at step n."""
    return SystemStream("shift-recurrence", p, constants=_first_local_coordinates(c, p))


def omega_noncompactness_demo(c: ChainState, p: int = 2) -> NonSolvabilityCertificate:
    """
    Certificate that the shift recurrence along an omega chain has no
    solution of finite support although prefixes 1..k-1 are solvable.

    Raises:
        PreconditionError: For Kab chains, chains not tagged omega, p > prime_bound,
            or fewer than 3 steps
    """
    spec = c.spec
    if spec.class_tag != "Ktf":
        raise PreconditionError("the noncompactness demo needs a Ktf chain")
    if spec.cofinality != "omega":
        raise PreconditionError(f"the noncompactness demo needs an omega chain, got {spec.cofinality!r}")
    if p not in spec.primes:
        raise PreconditionError(f"p={p} is not a prime <= prime bound {spec.prime_bound}")
    k = len(c.groups) - 1
    if k < 3:
        raise PreconditionError(f"chain too short: {k} step(s), need at least 3")
    verdict = compactness_probe(c.top, omega_stream(c, p), k - 1)
    if not isinstance(verdict, NonCompactnessEvidence):
        raise AssertionError(f"expected non-compactness evidence, got {verdict.verdict}")
    if not verify_certificate(verdict.certificate):
        raise AssertionError("support-growth certificate did not verify")
    logger.info(f"Omega demo: prefixes 1..{k - 1} solvable, no finite-support solution")
    return verdict.certificate


def completion_contrast(c: ChainState, p: int = 2, precision: Optional[int] = None) -> FullSolution:
    """
    The same recurrence over Completion(p, K, w = steps) is solved outright.

    Raises:
        PreconditionError: For chains with fewer than 2 steps
    """
    K = precision if precision is not None else c.spec.precision
    k = len(c.groups) - 1
    if k < 2:
        raise PreconditionError(f"chain too short: {k} step(s), need at least 2")
    G = StructuredGroup((Completion(p, K, k),))
    verdict = compactness_probe(G, SystemStream("shift-recurrence", p), k)
    if not isinstance(verdict, FullSolution):
        raise AssertionError(f"expected a full solution over the completion, got {verdict.verdict}")
    return verdict


@dataclass(frozen=True)
class CofinalityReport:
    tag: str
    outcome: Dict[str, Any]

    def to_json(self) -> Dict[str, Any]:
        return {"cofinality": self.tag, **self.outcome}


def cofinality_report(c: ChainState, p: int = 2) -> CofinalityReport:
    """
    Omega-tagged Ktf chains get the noncompactness certificate; the
    uncountable proxy gets the completion comparison. Kab unions are
    divisible either way.
    """
    tag = c.spec.cofinality
    if c.spec.class_tag == "Kab":
        report = union_invariants(c)
        return CofinalityReport(tag, {"divisible": bool(report.divisible), "form": report.form.to_json()})
    if tag == "omega":
        return CofinalityReport(tag, {"algebraically_compact": False, "certificate": omega_noncompactness_demo(c, p).to_dict()})
    solution = completion_contrast(c, p)
    return CofinalityReport(tag, {"algebraically_compact": True, "completion_solution": solution.to_json()})


def invariant_table(c: ChainState) -> pd.DataFrame:
    """One row per stage: atoms, rk0, rk_p and dim G/pG for p <= prime bound."""
    rows = []
    for entry in c.log:
        row = {
            "stage": entry.stage,
            "atoms": len(c.groups[entry.stage]),
            "rk0": entry.rk0,
            "rk_p": ", ".join(f"{p}:{n}" for p, n in sorted(entry.rkp.items())) or "-",
        }
        for p, d in sorted(entry.dim_mod_p.items()):
            row[f"dim_mod_{p}"] = d
        rows.append(row)
    return pd.DataFrame(rows)


def chain_spec_from_json(data: Mapping[str, Any], base: Union[FgGroup, StructuredGroup]) -> ChainSpec:
    return ChainSpec(
        class_tag=data["class"],
        base=base,
        steps=int(data["steps"]),
        m=int(data.get("m", 1)),
        prime_bound=int(data.get("prime_bound", 2)),
        cofinality=data.get("cofinality", "omega"),
        precision=int(data.get("precision", 16)),
    )
