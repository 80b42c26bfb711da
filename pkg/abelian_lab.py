#!/usr/bin/env python3
"""
Abelian Lab - command-line tool

Exact computations on abelian groups: Smith normal forms, purity and pure
closures, heights and types, Galois-type comparisons, divisible hulls, linear
systems over structured groups, finite-stage limit chains and pushouts. Every
verdict comes with a certificate that the verify subcommand re-checks.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from dotenv import load_dotenv

from alab.arith import INFINITY, format_height, format_rational, primes_up_to
from alab.butler import as_completely_decomposable, amalgamation_pushout, instability_demo
from alab.certificates import verify_certificate
from alab.characteristics import characteristic_of, p_height
from alab.codec import (
    at_path,
    decode_certificate,
    decode_element,
    decode_fg_group,
    decode_group,
    decode_int_rows,
    decode_int_vector,
    decode_matrix,
    decode_rational_rows,
    decode_stream,
    decode_structured_group,
    decode_system,
)
from alab.equation_systems import compactness_probe, solve_finite
from alab.errors import AlabError, ScenarioError
from alab.exact_linalg import smith_normal_form
from alab.fg_groups import FgGroup, closure_stages, dim_mod_p, generated_subgroup, is_pure, purify, ranks
from alab.galois_types import gtype_ab, gtype_ab_brute_force, gtype_ab_equal, gtype_eq_tf
from alab.limit_chains import (
    ChainSpec,
    build_chain,
    cofinality_report,
    invariant_table,
    union_invariants,
    universality_probe,
)
from alab.scenario import OPERATIONS, ScenarioFile, load_json, load_scenario, validate_inputs
from alab.structured_groups import (
    StructuredGroup,
    canonical_divisible_form,
    compact_invariants,
    dim_mod_p_structured,
    divisible_reduced_split,
    injectivity_certificate,
    is_divisible_group,
    ranks_structured,
    structured_divisible_hull,
)
from utils.config import LabSettings, load_settings
from utils.logger import setup_logger
from utils.tracing import get_tracer, initialize_tracing

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv(override=True)

EXIT_OK = 0
EXIT_NO = 1
EXIT_INPUT = 2


@dataclass
class LabReport:
    """Result of one subcommand: exit code, JSON payload and text sections."""

    exit_code: int
    data: Dict[str, Any]
    sections: List[Tuple[str, List[str]]] = field(default_factory=list)

    def add(self, title: str, lines: Sequence[str]) -> "LabReport":
        self.sections.append((title, list(lines)))
        return self

    def render_text(self) -> str:
        blocks = []
        for title, lines in self.sections:
            blocks.append(f"=== {title} ===\n" + "\n".join(lines))
        return "\n\n".join(blocks)

    def render_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)


def _vector_text(v: Any) -> str:
    if hasattr(v, "label"):
        return v.label()
    return "(" + ", ".join(format_rational(c) if not isinstance(c, int) else str(c) for c in v) + ")"


def _table_lines(df: pd.DataFrame) -> List[str]:
    return df.to_string(index=False).splitlines() if not df.empty else ["(empty)"]


class AbelianLab:
    """
    Runs one subcommand on validated inputs.

    Each run_<operation> method takes a ScenarioFile and returns a LabReport;
    `run` wraps it in a span named after the operation.
    """

    def __init__(
        self,
        settings: LabSettings,
        seed: Optional[int] = None,
        prime_bound: Optional[int] = None,
        precision: Optional[int] = None,
        bound: Optional[int] = None,
    ):
        """
        Initialize the lab.

        Args:
            settings: Settings from the environment
            seed, prime_bound, precision, bound: Command-line overrides
        """
        self.settings = settings
        self.seed = settings.seed if seed is None else seed
        self.prime_bound = settings.prime_bound if prime_bound is None else prime_bound
        self.precision = settings.precision if precision is None else precision
        self.bound = settings.purity_bound if bound is None else bound
        self.workers = settings.threads
        self.tracer = get_tracer(__name__)

    def run(self, scenario: ScenarioFile) -> LabReport:
        operation = scenario.operation
        handler = getattr(self, f"run_{operation.replace('-', '_')}")
        with self.tracer.start_as_current_span(f"alab.{operation}") as span:
            span.set_attribute("alab.operation", operation)
            span.set_attribute("alab.seed", self.seed)
            span.set_attribute("alab.prime_bound", self.prime_bound)
            span.set_attribute("alab.bound", self.bound)
            span.set_attribute("alab.inputs.fields", len(scenario.inputs))
            report = handler(scenario)
            span.set_attribute("alab.exit_code", report.exit_code)
            if "verdict" in report.data:
                span.set_attribute("alab.verdict", str(report.data["verdict"]))
        logger.info(f"{operation} finished with exit code {report.exit_code}")
        return report

    # exact linear algebra and finitely generated groups

    def run_snf(self, scenario: ScenarioFile) -> LabReport:
        A = decode_matrix(scenario.get("matrix"), scenario.path("matrix"))
        snf = smith_normal_form(A)
        data = {
            "invariant_factors": [str(d) for d in snf.invariant_factors],
            "rank": snf.rank,
            "U": snf.U.to_json(),
            "D": snf.D.to_json(),
            "V": snf.V.to_json(),
            "reconstructs": snf.reconstructs(A),
        }
        report = LabReport(EXIT_OK, data)
        report.add("SMITH NORMAL FORM", [
            f"Shape: {A.rows}x{A.cols}",
            f"Invariant factors: ({', '.join(str(d) for d in snf.invariant_factors)})",
            f"Rank: {snf.rank}",
            f"U*A*V = D: {'yes' if data['reconstructs'] else 'no'}",
        ])
        for name, M in (("U", snf.U), ("D", snf.D), ("V", snf.V)):
            report.add(name, [" ".join(f"{x:>4}" for x in M.row(i)) for i in range(M.rows)] or ["(empty)"])
        return report

    def run_group(self, scenario: ScenarioFile) -> LabReport:
        G = decode_group(scenario.get("group"), scenario.path("group"))
        primes = primes_up_to(self.prime_bound)
        if isinstance(G, FgGroup):
            rk0, rkp = ranks(G)
            data = {
                "kind": "finitely-generated",
                "label": G.label(),
                "group": G.to_json(),
                "rk0": rk0,
                "rkp": {str(p): c for p, c in rkp.items()},
                "dim_mod_p": {str(p): dim_mod_p(G, p) for p in primes},
            }
        elif isinstance(G, StructuredGroup):
            rk0, rkp = ranks_structured(G)
            split = divisible_reduced_split(G)
            data = {
                "kind": "structured",
                "label": G.label(),
                "group": G.to_json(),
                "rk0": rk0,
                "rkp": {str(p): c for p, c in rkp.items()},
                "dim_mod_p": {str(p): dim_mod_p_structured(G, p) for p in primes},
                "divisible": is_divisible_group(G, self.bound).divisible,
                "split": {"divisible": list(split.divisible), "reduced": list(split.reduced)},
            }
            if all(a.kind in ("Q", "Loc", "Completion") for a in G.summands):
                data["compact_invariants"] = compact_invariants(G).to_json()
        else:
            data = {
                "kind": "completely-decomposable",
                "label": G.label(),
                "group": G.to_json(),
                "rk0": G.rank,
                "types": [S.chi.label() for S in G.summands],
            }
        lines = [f"Group: {data['label']}", f"rk0: {data['rk0']}"]
        if "rkp" in data:
            lines.append("rk_p: " + (", ".join(f"{p}:{c}" for p, c in data["rkp"].items()) or "-"))
        if "dim_mod_p" in data:
            lines.append("dim G/pG: " + ", ".join(f"{p}:{c}" for p, c in data["dim_mod_p"].items()))
        if "divisible" in data:
            lines.append(f"Divisible: {'yes' if data['divisible'] else 'no'}")
        if "types" in data:
            lines.append("Summand types: " + ", ".join(data["types"]))
        if scenario.get("element") is not None:
            x = decode_element(G, scenario.get("element"), scenario.path("element"))
            chi = self._characteristic(x, G)
            data["characteristic"] = None if chi is None else chi.to_json()
            lines.append(f"Element {_vector_text(x)}: characteristic {'undefined (zero)' if chi is None else chi.label()}")
        return LabReport(EXIT_OK, data).add("GROUP", lines)

    def _characteristic(self, x: Any, G: Any):
        try:
            return characteristic_of(x, G)
        except AlabError:
            return None

    def _fg_subgroup(self, scenario: ScenarioFile):
        G = decode_fg_group(scenario.get("ambient"), scenario.path("ambient"))
        gens = decode_int_rows(scenario.get("generators"), scenario.path("generators"))
        with at_path(scenario.path("generators")):
            return G, generated_subgroup(gens, G)

    def run_purity(self, scenario: ScenarioFile) -> LabReport:
        G, H = self._fg_subgroup(scenario)
        verdict = is_pure(H)
        data = {"ambient": G.to_json(), "pure": verdict.is_pure, "verdict": "pure" if verdict.is_pure else "not-pure",
                "certificate": verdict.to_dict()}
        lines = [f"Ambient: {G.label()}", f"Generators: {', '.join(_vector_text(g) for g in H.generators) or '-'}"]
        if verdict.is_pure:
            lines.append(f"Pure: yes ({verdict.method})")
            return LabReport(EXIT_OK, data).add("PURITY", lines)
        lines.append("Pure: no")
        lines.append(f"Witness: n={verdict.n}, h={_vector_text(verdict.h)}, h = n*{_vector_text(verdict.divisor)}")
        return LabReport(EXIT_NO, data).add("PURITY", lines)

    def run_closure(self, scenario: ScenarioFile) -> LabReport:
        G, H = self._fg_subgroup(scenario)
        if G.is_torsion_free:
            stages = closure_stages(H.generators, G)
            closure = stages[-1].generators
            data = {
                "method": "stages",
                "stages": [{"index": s.index, "step": s.step, "generators": [list(g) for g in s.generators]} for s in stages],
                "closure": [list(g) for g in closure],
            }
            lines = [f"{s.index:>3} {s.step:<9} {', '.join(_vector_text(g) for g in s.generators) or '-'}" for s in stages]
        else:
            closed, witnesses = purify(H)
            closure = closed.generators
            data = {
                "method": "purify",
                "adjoined": [w.to_dict() for w in witnesses],
                "closure": [list(g) for g in closure],
            }
            lines = [f"Adjoined divisor of {_vector_text(w.h)} by n={w.n}" for w in witnesses] or ["Already pure"]
        report = LabReport(EXIT_OK, data).add("CONSTRUCTION", lines)
        return report.add("PURE CLOSURE", [f"Ambient: {G.label()}", f"Generators: {', '.join(_vector_text(g) for g in closure) or '-'}"])

    def run_heights(self, scenario: ScenarioFile) -> LabReport:
        G = decode_group(scenario.get("group"), scenario.path("group"))
        x = decode_element(G, scenario.get("element"), scenario.path("element"))
        primes = sorted(set(scenario.get("primes") or primes_up_to(self.prime_bound)))
        with at_path(scenario.path("primes")):
            heights = {p: p_height(x, G, p) for p in primes}
        chi = self._characteristic(x, G)
        data = {
            "heights": {str(p): format_height(h) for p, h in heights.items()},
            "characteristic": None if chi is None else chi.to_json(),
        }
        lines = [f"h_{p} = {'inf' if h == INFINITY else h}" for p, h in heights.items()]
        lines.append(f"Characteristic: {'undefined (zero element)' if chi is None else chi.label()}")
        return LabReport(EXIT_OK, data).add("HEIGHTS", lines)

    # Galois types

    def run_type_eq(self, scenario: ScenarioFile) -> LabReport:
        H = decode_group(scenario.get("ambient"), scenario.path("ambient"))
        a = decode_element(H, scenario.get("a"), scenario.path("a"))
        b = decode_element(H, scenario.get("b"), scenario.path("b"))
        base = [decode_element(H, g, scenario.path("base", i)) for i, g in enumerate(scenario.get("base"))]
        result = gtype_eq_tf(a, b, base, H, rank_bound=int(scenario.get("rank_bound", 8)))
        data = result.to_json()
        lines = [f"Ambient: {H.label()}", f"a = {_vector_text(a)}", f"b = {_vector_text(b)}", f"Verdict: {result.verdict}"]
        if result.witness is not None:
            lines.append(f"Witness: {result.witness.reason}")
        if result.primes:
            lines.append(f"Local comparison at primes: {', '.join(str(p) for p in result.primes)}")
        code = EXIT_NO if result.verdict == "not-equal" else EXIT_OK
        return LabReport(code, data).add("GALOIS TYPE", lines)

    def run_gtype(self, scenario: ScenarioFile) -> LabReport:
        H = decode_fg_group(scenario.get("ambient"), scenario.path("ambient"))
        gens = decode_int_rows(scenario.get("subgroup"), scenario.path("subgroup"))
        with at_path(scenario.path("subgroup")):
            G = generated_subgroup(gens, H)
        a = decode_int_vector(scenario.get("a"), scenario.path("a"))
        b = decode_int_vector(scenario.get("b"), scenario.path("b"))
        with at_path(scenario.path("a")):
            ta = gtype_ab(a, G, H)
        with at_path(scenario.path("b")):
            tb = gtype_ab(b, G, H)
        equal = gtype_ab_equal(a, b, G)
        data = {"a": ta.to_json(), "b": tb.to_json(), "equal": equal, "verdict": "equal" if equal else "not-equal"}
        lines = [f"Ambient: {H.label()}", f"gtp(a) = {ta.label()}", f"gtp(b) = {tb.label()}", f"Equal: {'yes' if equal else 'no'}"]
        if scenario.get("brute_force"):
            oracle = gtype_ab_brute_force(a, b, G)
            data["brute_force"] = oracle
            lines.append(f"Brute force agrees: {'yes' if oracle == equal else 'no'}")
        return LabReport(EXIT_OK if equal else EXIT_NO, data).add("GALOIS TYPE", lines)

    # divisible hulls, systems and chains

    def run_divhull(self, scenario: ScenarioFile) -> LabReport:
        G = decode_structured_group(scenario.get("group"), scenario.path("group"))
        with at_path(scenario.path("group")):
            D, e = structured_divisible_hull(G)
        certificate = injectivity_certificate(e)
        form = canonical_divisible_form(D)
        data = {"hull": D.to_json(), "embedding": e.to_json(), "form": form.to_json(), "certificate": certificate.to_dict()}
        lines = [
            f"Group: {G.label()}",
            f"Hull: {D.label()}",
            f"rk0: {form.rk0}",
            "rk_p: " + (", ".join(f"{p}:{c}" for p, c in form.rkp.items()) or "-"),
            f"Embedding certified injective ({certificate.method})",
        ]
        return LabReport(EXIT_OK, data).add("DIVISIBLE HULL", lines)

    def run_solve(self, scenario: ScenarioFile) -> LabReport:
        G = decode_structured_group(scenario.get("group"), scenario.path("group"))
        system = decode_system(G, scenario.get("equations"), scenario.path("equations"))
        outcome = solve_finite(G, system)
        data = outcome.to_json()
        data["verdict"] = "solvable" if outcome.solvable else "not-solvable"
        lines = [f"Group: {G.label()}", f"Equations: {len(system.equations)}", f"Variables: {', '.join(system.variables) or '-'}"]
        if outcome.solvable:
            lines.append("Solvable: yes")
            lines.extend(f"  {v} = {x.label()}" for v, x in sorted(outcome.assignment.items()))
            return LabReport(EXIT_OK, data).add("SOLUTION", lines)
        lines.append(f"Solvable: no ({outcome.certificate.reason})")
        return LabReport(EXIT_NO, data).add("SOLUTION", lines)

    def run_probe(self, scenario: ScenarioFile) -> LabReport:
        G = decode_structured_group(scenario.get("group"), scenario.path("group"))
        stream = decode_stream(scenario.get("stream"), scenario.path("stream"))
        with at_path(scenario.path("stream")):
            verdict = compactness_probe(G, stream, int(scenario.get("N_max")))
        data = verdict.to_json()
        lines = [f"Group: {G.label()}", f"Stream: {stream.family}", f"Verdict: {verdict.verdict}"]
        if hasattr(verdict, "argument"):
            lines.append(f"Argument: {verdict.argument}")
        code = EXIT_NO if verdict.verdict in ("not-finitely-solvable", "non-compactness-evidence") else EXIT_OK
        return LabReport(code, data).add("COMPACTNESS PROBE", lines)

    def run_chain(self, scenario: ScenarioFile) -> LabReport:
        base = decode_group(scenario.get("base"), scenario.path("base"))
        with at_path(scenario.prefix):
            spec = ChainSpec(
                class_tag=scenario.get("class"),
                base=base,
                steps=int(scenario.get("steps")),
                m=int(scenario.get("m", 1)),
                prime_bound=int(scenario.get("prime_bound", self.prime_bound)),
                cofinality=scenario.get("cofinality", "omega"),
                precision=int(scenario.get("precision", self.precision)),
            )
            state = build_chain(spec, workers=self.workers)
        union = union_invariants(state, self.bound)
        data = {"chain": state.to_json(), "union": union.to_json()}
        report = LabReport(EXIT_OK, data)
        report.add("STAGES", _table_lines(invariant_table(state)))

        lines = [f"Class: {spec.class_tag}", f"Top stage: {state.top.label()}"]
        if spec.class_tag == "Kab":
            lines.append(f"Divisible: {'yes' if union.divisible else 'no'}")
            lines.append(f"Form: {json.dumps(union.form.to_json(), sort_keys=True)}")
            lines.append(f"Predicted: {json.dumps(union.predicted_form.to_json(), sort_keys=True)}")
        else:
            for p in spec.primes:
                log = ", ".join(str(entry.dim_mod_p[p]) for entry in state.log)
                lines.append(f"dim_mod_{p} log: ({log}); predicted {union.predicted_dims[p]}; "
                             f"adjoined basis independent: {'yes' if union.independent[p] else 'no'}")
        lines.append(f"Matches prediction: {'yes' if union.matches else 'no'}")
        report.add("UNION INVARIANTS", lines)

        p = int(scenario.get("p", 2))
        min_steps = 3 if spec.cofinality == "omega" else 2
        if spec.class_tag == "Ktf" and (spec.steps < min_steps or p not in spec.primes):
            report.add("COFINALITY", [f"{spec.cofinality} comparison skipped: needs at least {min_steps} steps "
                                      f"and p <= {spec.prime_bound}"])
        else:
            with at_path(scenario.path("p")):
                cof = cofinality_report(state, p)
            data["cofinality"] = cof.to_json()
            compact = cof.outcome.get("algebraically_compact")
            report.add("COFINALITY", [
                f"Tag: {cof.tag}",
                "Algebraically compact: " + ("n/a (divisible union)" if compact is None else ("yes" if compact else "no")),
            ])

        probe = scenario.get("probe")
        if probe is not None:
            extension = decode_structured_group(probe["extension"], scenario.path("probe", "extension"))
            with at_path(scenario.path("probe", "stage")):
                result = universality_probe(state, int(probe["stage"]), extension)
            data["probe"] = result.to_json()
            if result.representable:
                report.add("UNIVERSALITY PROBE", [f"{extension.label()} embeds over stage {probe['stage']} ({result.certificate.kind})"])
            else:
                report.add("UNIVERSALITY PROBE", ["Not representable:"] + [f"  {d}" for d in result.demands])
                report.exit_code = EXIT_NO
        if not union.matches:
            report.exit_code = EXIT_NO
        return report

    # amalgamation and instability

    def run_amalgamate(self, scenario: ScenarioFile) -> LabReport:
        G = decode_structured_group(scenario.get("base"), scenario.path("base"))
        H1 = decode_group(scenario.get("left"), scenario.path("left"))
        H2 = decode_group(scenario.get("right"), scenario.path("right"))
        f1 = decode_rational_rows(scenario.get("f1"), scenario.path("f1"))
        f2 = decode_rational_rows(scenario.get("f2"), scenario.path("f2"))
        with at_path(scenario.prefix):
            result = amalgamation_pushout(
                G, H1, H2, f1, f2,
                bound=self.bound, samples=int(scenario.get("samples", 20)), seed=self.seed,
            )
        data = {
            "rank": result.group.rank,
            "checks": result.checks,
            "ok": result.ok,
            "verdict": "amalgamated" if result.ok else "failed-checks",
            "pushout": result.group.to_json(),
            "certificates": [c.to_dict() for c in result.certificates],
        }
        lines = [f"Base: {G.label()}", f"Rank: {result.group.rank}"]
        lines.extend(f"  {name}: {'pass' if ok else 'FAIL'}" for name, ok in sorted(result.checks.items()))
        return LabReport(EXIT_OK if result.ok else EXIT_NO, data).add("PUSHOUT", lines)

    def run_instability(self, scenario: ScenarioFile) -> LabReport:
        group = scenario.get("group") or {"free_rank": 1}
        G = decode_group(group, scenario.path("group"))
        with at_path(scenario.path("group")):
            C = as_completely_decomposable(G)
        with at_path(scenario.path("n")):
            result = instability_demo(C, int(scenario.get("n")), seed=self.seed, workers=self.workers)
        data = result.to_json()
        summary = pd.DataFrame(
            [{"pairs": len(result.verdicts), "not-equal": result.not_equal, "equal": result.equal,
              "inconclusive": result.inconclusive}]
        )
        lines = [f"Base: {C.label()}", f"Family: {', '.join(chi.label() for chi in result.family) or '-'}"]
        return LabReport(EXIT_OK, data).add("INSTABILITY", lines).add("VERDICTS", _table_lines(summary))

    def run_verify(self, scenario: ScenarioFile) -> LabReport:
        certificate = decode_certificate(scenario.get("certificate"), scenario.path("certificate"))
        ok = verify_certificate(certificate)
        data = {"kind": certificate.kind, "verified": ok, "verdict": "verified" if ok else "rejected"}
        lines = [f"Kind: {certificate.kind}", f"Verified: {'yes' if ok else 'no'}"]
        return LabReport(EXIT_OK if ok else EXIT_NO, data).add("VERIFY", lines)


def _flag_inputs(operation: str, args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    """Inputs given as flags instead of a scenario file (purity and chain only)."""
    if operation == "purity" and args.ambient is not None:
        inputs: Dict[str, Any] = {"ambient": load_json(args.ambient)}
        if args.gens is not None:
            try:
                inputs["generators"] = json.loads(args.gens)
            except json.JSONDecodeError as e:
                raise ScenarioError("$.generators", f"--gens is not JSON: {e.msg}", e) from e
        return inputs
    if operation == "chain" and args.base is not None:
        inputs = {"base": load_json(args.base)}
        for key, value in (("class", args.chain_class), ("steps", args.steps), ("m", args.m),
                           ("prime_bound", args.prime_bound), ("cofinality", args.cofinality),
                           ("precision", args.precision)):
            if value is not None:
                inputs[key] = value
        return inputs
    return None


def build_scenario(operation: str, args: argparse.Namespace) -> ScenarioFile:
    """
    Raises:
        ScenarioError: If no inputs are given or they fail validation
    """
    if args.input is not None:
        scenario = load_scenario(args.input, operation)
        if operation == "chain":
            overrides = {k: v for k, v in (("class", args.chain_class), ("steps", args.steps), ("m", args.m),
                                           ("cofinality", args.cofinality)) if v is not None}
            if args.prime_bound is not None:
                overrides["prime_bound"] = args.prime_bound
            if overrides:
                scenario = validate_inputs(operation, {**scenario.inputs, **overrides}, scenario.prefix)
        return scenario
    inputs = _flag_inputs(operation, args)
    if inputs is None:
        raise ScenarioError("$", f"{operation} needs --in <scenario.json>")
    return validate_inputs(operation, inputs, "$")


def create_cli_parser():
    """Create command line argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--in', dest='input', type=str, metavar='PATH', help='Scenario or input JSON file')
    common.add_argument('--json', action='store_true', help='Print the report as JSON')
    common.add_argument('--seed', type=int, help='Seed for sampled checks and generated families (default: ALAB_SEED or 0)')
    common.add_argument('--prime-bound', dest='prime_bound', type=int, help='Largest prime considered (default: ALAB_PRIME_BOUND or 7)')
    common.add_argument('--precision', type=int, help='K for the completion proxy (default: ALAB_PRECISION or 16)')
    common.add_argument('--bound', type=int, help='Largest n for bounded purity checks (default: ALAB_PURITY_BOUND or 50)')
    common.add_argument('--log-level', dest='log_level', type=str, help='Logging level (default: ALAB_LOG_LEVEL or WARNING)')
    common.add_argument('--log-file', dest='log_file', type=str, metavar='PATH', help='Write logs to this file instead of stderr')

    parser = argparse.ArgumentParser(
        description="Abelian Lab - exact computations and certificates for abelian groups",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""Examples:
  # Smith normal form
  python abelian_lab.py snf --in matrix.json

  # Purity of a subgroup of Z^2
  python abelian_lab.py purity --ambient Z2.json --gens "[[2,0]]"

  # Torsion-free chain with its invariant log
  python abelian_lab.py chain --class ktf --base Z.json --steps 3 --m 1 --P 2

  # Re-check a certificate from a JSON report
  python abelian_lab.py verify --in certificate.json --json"""
    )
    subparsers = parser.add_subparsers(dest='operation', metavar='SUBCOMMAND')
    subparsers.required = True
    helps = {
        "snf": "Smith normal form with transforms",
        "group": "Invariants of a group",
        "purity": "Decide purity of a finitely generated subgroup",
        "closure": "Pure closure with its construction stages",
        "heights": "p-heights and characteristic of an element",
        "type-eq": "Galois types over a pure base (torsion-free)",
        "gtype": "Galois types over a subgroup (with torsion)",
        "divhull": "Divisible hull with certified embedding",
        "solve": "Solve a finite linear system",
        "probe": "Compactness probe for an equation stream",
        "chain": "Build a finite-stage limit chain",
        "amalgamate": "Pushout over a divisible base",
        "instability": "Pairwise type comparison over a base",
        "verify": "Re-check a serialized certificate",
    }
    for operation in OPERATIONS:
        sub = subparsers.add_parser(operation, parents=[common], help=helps[operation])
        if operation == "purity":
            sub.add_argument('--ambient', type=str, metavar='PATH', help='Ambient group JSON file')
            sub.add_argument('--gens', type=str, help='Generators as a JSON list of integer rows')
        if operation == "chain":
            sub.add_argument('--class', dest='chain_class', type=str, choices=['kab', 'ktf', 'Kab', 'Ktf'], help='Chain class')
            sub.add_argument('--base', type=str, metavar='PATH', help='Base group JSON file')
            sub.add_argument('--steps', type=int, help='Number of steps k')
            sub.add_argument('--m', type=int, help='Copies of each adjoined atom per step (default: 1)')
            sub.add_argument('--P', dest='prime_bound', type=int, help='Prime bound for the adjoined atoms')
            sub.add_argument('--cofinality', type=str, choices=['omega', 'uncountable-proxy'], help='Cofinality tag (default: omega)')
    return parser


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point."""
    parser = create_cli_parser()
    args = parser.parse_args(argv)
    for name in ("ambient", "gens", "chain_class", "base", "steps", "m", "cofinality"):
        if not hasattr(args, name):
            setattr(args, name, None)

    try:
        settings = load_settings(load_env_file=False)
        setup_logger(args.log_level or settings.log_level, args.log_file or settings.log_file)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_INPUT)
    initialize_tracing(settings.trace_console)

    try:
        scenario = build_scenario(args.operation, args)
        lab = AbelianLab(settings, seed=args.seed, prime_bound=args.prime_bound,
                         precision=args.precision, bound=args.bound)
        report = lab.run(scenario)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        sys.exit(EXIT_NO)
    except ValueError as e:
        # AlabError and ScenarioError are ValueErrors
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_INPUT)

    print(report.render_json() if args.json else report.render_text())
    sys.exit(report.exit_code)


if __name__ == "__main__":
    main()
