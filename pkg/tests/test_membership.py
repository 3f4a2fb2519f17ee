from fractions import Fraction

import numpy as np
import pytest

from boxlab import membership as mb
from boxlab.model import Box, BoxError, Partition, Scenario, mix, rationalize

from conftest import pr_box

PART = Partition((0,), (1, 2))


def test_local_member_with_decomposition():
    box = Box.uniform(Scenario((2, 2), (2, 2)), "rational")
    res = mb.check_local(box)
    assert res.is_member
    decomp = res.certificate
    assert sum(decomp.weights()) == 1
    assert mb.reconstruction_residual(decomp, box) == 0


def test_local_nonmember_pr_with_farkas():
    res = mb.check_local(pr_box())
    assert res.verdict == mb.NON_MEMBER
    cert = res.certificate
    assert cert is not None
    # Farkas multipliers on the box rows form a separating functional:
    # nonpositive on every deterministic vertex, strictly positive on the box
    box = pr_box()
    sc = box.scenario
    coeffs = {lbl[1:]: m for lbl, m in zip(cert.row_labels, cert.multipliers)
              if lbl[0] == "box"}
    norm = [m for lbl, m in zip(cert.row_labels, cert.multipliers) if lbl[0] == "norm"]
    for _, vert in mb.local_vertices(sc):
        val = sum(coeffs.get(x + a, 0) * int(vert[x + a])
                  for x in sc.joint_inputs() for a in sc.joint_outputs())
        assert val + sum(norm) <= 0
    box_val = sum(coeffs.get(x + a, 0) * box.prob(a, x)
                  for x in sc.joint_inputs() for a in sc.joint_outputs())
    assert box_val + sum(norm) > 0


def test_ghz_membership_chain_float(ghz):
    chain = mb.inclusion_chain(ghz, PART, mode="float")
    assert chain[mb.LOCAL].verdict == mb.NON_MEMBER
    assert chain[mb.NSBL].verdict == mb.NON_MEMBER
    assert chain[mb.TOBL].verdict == mb.NON_MEMBER
    assert chain[mb.BL].verdict == mb.MEMBER


def test_ghz_bl_certificate_reconstructs(ghz):
    res = mb.check_bl(ghz, PART, mode="float")
    assert res.is_member
    assert mb.reconstruction_residual(res.certificate, ghz) <= 1e-9
    audit = mb.classify_bl_certificate(res.certificate)
    assert audit.requires_two_way


def test_tobl_member_has_consistent_tables():
    # a local box is TOBL; both time-order families must reconstruct it
    sc = Scenario((2, 2, 2), (2, 2, 2))
    rng = np.random.default_rng(3)
    verts = [t for _, t in mb.local_vertices(sc)]
    picks = rng.choice(len(verts), size=6, replace=False)
    w = rng.dirichlet(np.ones(6))
    tab = sum(wi * verts[p].astype(float) for wi, p in zip(w, picks))
    box = Box(sc, tab, "float")
    res = mb.check_tobl(box, PART, mode="float")
    assert res.is_member
    boxes = mb.reconstruct(res.certificate)
    for label, rec in boxes.items():
        assert np.allclose(rec.float_table(), box.float_table(), atol=1e-8)


def test_nsbl_subset_of_tobl_on_examples(corpus):
    _, boxes = corpus
    for box in boxes[:6]:
        nsbl = mb.check_nsbl(box, PART, mode="float")
        if nsbl.is_member:
            assert mb.check_tobl(box, PART, mode="float").is_member


def test_exact_tobl_on_rational_box():
    # rational local mixture: exact TOBL membership with exact certificate
    sc = Scenario((2, 2, 2), (2, 2, 2))
    verts = [t for _, t in mb.local_vertices(sc)]
    tab = (
        Fraction(1, 2) * verts[0].astype(object)
        + Fraction(1, 3) * verts[10].astype(object)
        + Fraction(1, 6) * verts[33].astype(object)
    )
    box = Box(sc, tab, "rational")
    res = mb.check_tobl(box, PART, mode="rational")
    assert res.is_member
    assert mb.reconstruction_residual(res.certificate, box) == 0


def test_exact_nonmember_farkas_verified(ghz):
    rbox, _ = rationalize(ghz, 1e-8)
    res = mb.check_nsbl(rbox, PART, mode="rational")
    assert res.verdict == mb.NON_MEMBER
    assert res.certificate is not None
    assert len(res.certificate.multipliers) > 0


def test_tobl_general_singleton_agrees(ghz, corpus):
    _, boxes = corpus
    for box in boxes[:4] + [ghz]:
        a = mb.check_tobl(box, PART, mode="float")
        b = mb.check_tobl_general(box, PART, mode="float")
        assert a.verdict == b.verdict


def test_tobl_needs_group_of_two():
    box = Box.uniform(Scenario((2, 2), (2, 2))).as_float()
    res = mb.check_tobl(box, Partition((0,), (1,)), mode="float")
    assert res.verdict == mb.UNDECIDED


def test_bl_any_partition_on_bipartite():
    res = mb.check_bl(pr_box().as_float(), Partition((0,), (1,)), mode="float")
    # BL with a singleton group on each side is just shared randomness over
    # one-party strategies times an unconstrained one-party term: any
    # bipartite no-signalling box with uniform marginals need not be a member
    assert res.verdict in (mb.MEMBER, mb.NON_MEMBER)


def test_grouped_tobl_both_sides_grouped_float():
    # uniform noise is grouped-TOBL across any cut; trimmed input counts keep
    # the enumerated side small enough for the dense LP path
    sc = Scenario((2, 1, 2, 1), (2, 2, 2, 2))
    u = Box.uniform(sc).as_float()
    res = mb.check_tobl_general(u, Partition((0, 1), (2, 3)), mode="float")
    assert res.is_member


def test_grouped_tobl_exact_refused_at_scale():
    u = Box.uniform(Scenario((2, 2), (2, 2)), "rational")
    from boxlab.model import tensor

    four = tensor(u, u)
    res = mb.check_tobl_general(four, Partition((0, 1), (2, 3)), mode="rational")
    assert res.verdict == mb.UNDECIDED
