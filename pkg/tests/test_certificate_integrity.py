#!/usr/bin/env python3
"""
Tampering sweep over every certificate kind the library emits.

Each certificate is serialized, changed in exactly one field and read back;
the changed copy must either fail to decode or fail verification.
"""

import copy
import json
import os
import sys
import unittest
from fractions import Fraction

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from alab.butler import amalgamation_pushout, as_completely_decomposable, instability_demo, purify_in_cd
from alab.certificates import certificate_from_dict, verify_certificate
from alab.equation_systems import Equation, LinearSystem, SystemStream, compactness_probe, solve_finite
from alab.fg_groups import FgGroup, generated_subgroup, is_pure
from alab.galois_types import gtype_eq_tf
from alab.limit_chains import ChainSpec, build_chain
from alab.structured_groups import (
    Embedding,
    Loc,
    Q,
    StructuredGroup,
    SummandMap,
    Z,
    Zmod,
    inclusion,
    injectivity_certificate,
    is_pure_embedding,
    structured_divisible_hull,
)


def single_map(source, target, factor=1):
    return Embedding(StructuredGroup((source,)), StructuredGroup((target,)), (SummandMap(0, 0, Fraction(factor)),))


def emitted_certificates():
    """One certificate per kind and context shape, keyed by a short name."""
    corpus = {}
    fg = FgGroup(2)
    corpus["fg-pure"] = is_pure(generated_subgroup([[1, 0]], fg))
    corpus["fg-witness"] = is_pure(generated_subgroup([[2, 0]], fg))

    corpus["embedding-pure"] = is_pure_embedding(
        inclusion(StructuredGroup((Z(), Loc(2))), StructuredGroup((Z(), Loc(2), Q())))
    )
    corpus["embedding-unit-factor"] = is_pure_embedding(single_map(Loc(2), Loc(2), 3))
    corpus["embedding-witness"] = is_pure_embedding(single_map(Z(), Z(), 2))
    _, hull = structured_divisible_hull(StructuredGroup((Z(), Zmod(12), Loc(3))))
    corpus["injectivity"] = injectivity_certificate(hull)
    corpus["chain-step"] = build_chain(ChainSpec("Ktf", FgGroup(1), 2, m=1, prime_bound=2)).certificates[0]

    pushout = amalgamation_pushout(
        StructuredGroup((Q(),)),
        StructuredGroup((Q(), Z())),
        StructuredGroup((Q(), Loc(2))),
        [["1", "0"]],
        [["1", "0"]],
        bound=12,
        samples=8,
    )
    for certificate in pushout.certificates:
        corpus[f"pushout-{certificate.context['side']}-{certificate.method}"] = certificate

    corpus["cd-closure"] = purify_in_cd([(2, 4)], as_completely_decomposable(FgGroup(2))).certificate

    G = StructuredGroup((Z(),))
    system = LinearSystem(G, (Equation.of({"x": 2}, G.element([3])),))
    corpus["obstruction"] = solve_finite(G, system).certificate
    corpus["support-growth"] = compactness_probe(
        StructuredGroup((Z(),) * 4), SystemStream("shift-recurrence", 2), 4
    ).certificate
    corpus["height-demand"] = compactness_probe(
        StructuredGroup((Z(),) * 3), SystemStream("height-ladder", 2), 3
    ).certificate

    corpus["type-height"] = gtype_eq_tf((0, 1), (0, 2), [(1, 0)], FgGroup(2)).witness
    corpus["type-span"] = gtype_eq_tf((2, 0), (0, 1), [(1, 0)], FgGroup(2)).witness
    corpus["type-family"] = instability_demo(as_completely_decomposable(FgGroup(1)), 3, seed=4).verdicts[0].witness
    corpus["closure-iso"] = gtype_eq_tf((1, 1), (0, 1), [(1, 0)], FgGroup(2)).certificate
    return corpus


def rejected(data):
    try:
        certificate = certificate_from_dict(data)
    except ValueError:
        return True
    return not verify_certificate(certificate)


def setter(path, value):
    """Mutation that replaces data[path[0]][path[1]]... with value."""
    def mutate(data):
        target = data
        for key in path[:-1]:
            target = target[key]
        target[path[-1]] = value
    return mutate


def structural_mutations(name, data):
    mutations = [
        (f"{name}: context list", setter(["context"], [1, 2])),
        (f"{name}: context emptied", setter(["context"], {})),
        (f"{name}: unknown kind", setter(["kind"], "bogus")),
        (f"{name}: context dropped", lambda d: d.pop("context")),
    ]
    for key, value in data["context"].items():
        if isinstance(value, dict):
            mutations.append((f"{name}: {key} as list", setter(["context", key], [1, 2])))
            mutations.append((f"{name}: {key} as number", setter(["context", key], 7)))
    return mutations


def targeted_mutations(corpus):
    mutations = []

    def add(name, label, mutate):
        mutations.append((name, f"{name}: {label}", mutate))

    for name in ("fg-pure", "embedding-pure", "embedding-unit-factor", "chain-step", "cd-closure",
                 "pushout-left-height-preservation", "pushout-right-height-preservation"):
        add(name, "exact flipped", lambda d: d.update(exact=not d["exact"]))
    for name in [n for n, c in corpus.items() if c.kind in ("purity", "injectivity")]:
        add(name, "method renamed", setter(["method"], "bogus"))
    for name in ("fg-pure", "embedding-pure", "embedding-unit-factor", "chain-step",
                 "pushout-left-bounded-sample", "pushout-right-bounded-sample"):
        add(name, "extra multiplier checked", lambda d: d["checked"].append("97"))

    add("fg-pure", "subgroup generator doubled", setter(["context", "subgroup", "generators"], [["2", "0"]]))
    for name in ("fg-witness", "embedding-witness"):
        for n in range(3, 33):
            add(name, f"n={n}", setter(["n"], str(n)))
        add(name, "n=1", setter(["n"], "1"))
        add(name, "n not a number", setter(["n"], "two"))
    add("fg-witness", "divisor doubled", lambda d: d.update(divisor=[str(2 * int(c)) for c in d["divisor"]]))
    add("fg-witness", "h moved", lambda d: d.update(h=[str(2 * int(c)) for c in d["h"]]))
    add("fg-witness", "subgroup made pure", setter(["context", "subgroup", "generators"], [["1", "0"]]))

    add("cd-closure", "span replaced", setter(["context", "cd_closure", "span"], [["1", "0"]]))
    add("cd-closure", "generator outside ambient", setter(["context", "cd_closure", "generators"], [["1/2", "0"]]))

    for name in [n for n in corpus if n.startswith("pushout-")]:
        add(name, "side renamed", setter(["context", "side"], "middle"))
    add("pushout-left-height-preservation", "f1 onto Z", setter(["context", "pushout", "f1"], [["0", "1"]]))
    add("pushout-right-height-preservation", "f2 onto Loc(2)", setter(["context", "pushout", "f2"], [["0", "1"]]))
    for name in ("pushout-left-bounded-sample", "pushout-right-bounded-sample"):
        add(name, "bound lowered", setter(["bound"], "3"))
        add(name, "last multiplier dropped", lambda d: d["checked"].pop())

    for modulus in [0, 1] + list(range(3, 31)):
        add("obstruction", f"modulus={modulus}", setter(["data", "modulus"], str(modulus)))
    add("obstruction", "negative modulus", setter(["data", "modulus"], "-2"))
    add("obstruction", "extra multiplier", lambda d: d["data"]["multiplier"].append("1"))
    add("obstruction", "summand out of range", setter(["data", "summand"], "5"))
    add("obstruction", "coordinate out of range", setter(["data", "coordinate"], "9"))
    add("obstruction", "reason renamed", setter(["reason"], "bogus"))

    for name, other in (("support-growth", "height-demand"), ("height-demand", "support-growth")):
        add(name, "bound raised", lambda d: d["data"].update(bound=str(int(d["data"]["bound"]) + 1)))
        add(name, "bound lowered", lambda d: d["data"].update(bound=str(int(d["data"]["bound"]) - 1)))
        add(name, "bound zero", setter(["data", "bound"], "0"))
        add(name, "prime changed", lambda d: d["data"].update(p=str(int(d["data"]["p"]) + 1)))
        add(name, "variable renamed", setter(["data", "variable"], "zz"))
        add(name, "structure renamed", setter(["data", "structure"], "dense"))
        add(name, "first prefix solution replaced", lambda d: d["data"]["prefix_solutions"].__setitem__(0, "tampered"))
        add(name, "prefix solution dropped", lambda d: d["data"]["prefix_solutions"].pop())
        add(name, "coordinate appended", lambda d: d["data"]["coordinates"].append([0, 0]))
        add(name, f"reason {other}", setter(["reason"], other))

    for name in ("type-height", "type-family"):
        add(name, "height_a replaced", setter(["height_a"], "99"))
        add(name, "heights swapped", lambda d: d.update(height_a=d["height_b"], height_b=d["height_a"]))
        add(name, "composite prime", setter(["prime"], "4"))
        add(name, "test point index out of range", setter(["probe"], 99))
        add(name, "negative test point index", setter(["probe"], -1))
        add(name, "a and b swapped", lambda d: d["context"].update(a=d["context"]["b"], b=d["context"]["a"]))
        add(name, "reason renamed", setter(["reason"], "bogus"))
    add("type-span", "direction b", setter(["direction"], "b"))
    add("type-span", "direction both", setter(["direction"], "both"))
    add("type-span", "reason height", setter(["reason"], "height"))
    add("closure-iso", "extra prime", lambda d: d["primes"].append("97"))
    add("closure-iso", "primes emptied", setter(["primes"], []))
    return mutations


class TestCertificateIntegrity(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.corpus = emitted_certificates()

    def serialized(self, name):
        return json.loads(json.dumps(self.corpus[name].to_dict()))

    def test_every_certificate_survives_serialization(self):
        kinds = set()
        for name, certificate in self.corpus.items():
            with self.subTest(name=name):
                kinds.add(certificate.kind)
                self.assertTrue(verify_certificate(certificate_from_dict(self.serialized(name))))
        self.assertEqual(
            kinds,
            {"purity", "non-purity", "injectivity", "non-solvability", "type-inequality", "closure-iso"},
        )

    def test_corpus_covers_every_context_shape(self):
        self.assertEqual(len([n for n in self.corpus if n.startswith("pushout-")]), 4)
        reasons = {self.corpus[n].reason for n in ("obstruction", "support-growth", "height-demand")}
        self.assertEqual(reasons, {"modulus-obstruction", "support-growth", "height-demand"})
        self.assertEqual(self.corpus["type-height"].reason, "height")
        self.assertEqual(self.corpus["type-family"].reason, "height")
        self.assertEqual(self.corpus["type-span"].reason, "span")

    def test_structural_tampering_is_rejected(self):
        count = 0
        for name in self.corpus:
            data = self.serialized(name)
            for label, mutate in structural_mutations(name, data):
                changed = copy.deepcopy(data)
                mutate(changed)
                count += 1
                with self.subTest(mutation=label):
                    self.assertTrue(rejected(changed))
        self.assertGreaterEqual(count, 4 * len(self.corpus))

    def test_field_tampering_is_rejected(self):
        mutations = targeted_mutations(self.corpus)
        for name, label, mutate in mutations:
            changed = self.serialized(name)
            mutate(changed)
            with self.subTest(mutation=label):
                self.assertTrue(rejected(changed))
        self.assertGreaterEqual(len(mutations), 100)

    def test_list_valued_subgroup_is_rejected_without_raising(self):
        certificate = is_pure(generated_subgroup([[1, 0]], FgGroup(2)))
        data = certificate.to_dict()
        data["context"] = dict(data["context"], subgroup=[1, 2])
        self.assertFalse(verify_certificate(certificate_from_dict(data)))

    def test_non_object_context_is_rejected(self):
        certificate = is_pure(generated_subgroup([[1, 0]], FgGroup(2)))
        data = certificate.to_dict()
        data["context"] = [1, 2]
        with self.assertRaisesRegex(ValueError, "non-object context"):
            certificate_from_dict(data)


if __name__ == '__main__':
    unittest.main(verbosity=2)
