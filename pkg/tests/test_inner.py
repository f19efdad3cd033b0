import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inexact_dr.certify import criterion_I, criterion_II, delta_I, delta_II, rho
from inexact_dr.inner import (CertificateStream, InnerExhausted,
                              RefinementSchedule, certificate_stream,
                              find_acceptable_B_II, find_acceptable_pair_I)
from inexact_dr.operators import (AffinePD, GradQuadratic, NormalCone,
                                  SubdiffL1, enlargement_gap, exact_resolvent,
                                  identity)

RO = RefinementSchedule("ResidualOnly")
TR = RefinementSchedule("Transported")
EX = RefinementSchedule("Exact")
IT = RefinementSchedule("Iterative")


def ops(rng, n=4):
    G = rng.standard_normal((n, n))
    lo = rng.uniform(-2, 0, n)
    return [AffinePD(G @ G.T + 0.1 * np.eye(n), None, rng.standard_normal(n)),
            GradQuadratic(rng.standard_normal((n + 1, n)), rng.standard_normal(n + 1)),
            SubdiffL1(rng.uniform(0.2, 1.5), n),
            NormalCone(lo, lo + rng.uniform(0.5, 2.0, n))]


def test_schedule_validation():
    with pytest.raises(ValueError, match="mode"):
        RefinementSchedule("Bogus")
    with pytest.raises(ValueError):
        RefinementSchedule(j_max=0)
    with pytest.raises(ValueError):
        RefinementSchedule(damping_base=1.0)


def test_identity_damping_hand_values():
    certs = list(certificate_stream(identity(1), 1.0, np.array([1.0]),
                                    RefinementSchedule("ResidualOnly", j_max=2)))
    c = certs[1]
    assert c.point[0] == pytest.approx(0.75)
    assert c.value[0] == pytest.approx(0.75)
    assert c.eps == 0.0
    assert c.residual[0] == pytest.approx(0.5)
    assert certs[0].point[0] == pytest.approx(1.0)  # j = 1 is the start point


def test_l1_transported_j4():
    stream = CertificateStream(SubdiffL1(1.0, 1), 1.0, np.array([2.0]), TR)
    for _ in range(4):
        c = stream.next()
    assert c.point[0] != 1.0
    assert 0.0 <= c.eps <= 1.0 / 32
    assert enlargement_gap(SubdiffL1(1.0, 1), c.point, c.value) <= c.eps + 1e-12


def test_stream_exhaustion():
    s = CertificateStream(identity(1), 1.0, np.ones(1), RefinementSchedule(j_max=1))
    s.next()
    with pytest.raises(InnerExhausted):
        s.next()


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 4.0),
       st.sampled_from(["ResidualOnly", "Transported", "Iterative", "Exact"]))
def test_envelopes_validity_and_error_bound(seed, lam, mode):
    rng = np.random.default_rng(seed)
    sched = RefinementSchedule(mode)
    for op in ops(rng):
        zeta = 3 * rng.standard_normal(op.dim)
        z_star, v_star = exact_resolvent(op, lam, zeta)
        stream = CertificateStream(op, lam, zeta, sched,
                                   start=rng.standard_normal(op.dim))
        for j in range(1, 16):
            c = stream.next()
            r = np.linalg.norm(c.residual)
            assert r <= (1 + 1e-9) / j
            assert c.eps <= (1 + 1e-9) / (2 * lam * j * j)
            assert enlargement_gap(op, c.point, c.value) <= c.eps + 1e-9
            dist = math.sqrt(np.sum((lam * (v_star - c.value)) ** 2)
                             + np.sum((z_star - c.point) ** 2))
            assert dist <= math.sqrt(r * r + 2 * lam * c.eps) + 1e-9


def test_pair_short_circuit_at_extended_solution():
    A = B = identity(1)
    certA, certB, led = find_acceptable_pair_I(A, B, 1.0, 0.3, np.zeros(1),
                                               np.zeros(1), RO)
    assert led.index == 0 and led.delta == 0.0 and led.rho == 0.0
    assert certA.point[0] == 0.0 and certB.value[0] == 0.0


def test_pair_exact_mode_hand_values():
    I = identity(1)
    certA, certB, led = find_acceptable_pair_I(I, I, 1.0, 0.5, np.ones(1),
                                               np.zeros(1), EX)
    assert certA.point[0] == pytest.approx(0.5) and certA.value[0] == pytest.approx(0.5)
    assert certB.point[0] == pytest.approx(0.25) and certB.value[0] == pytest.approx(0.25)
    assert led.delta == 0.0 and led.rho == pytest.approx(0.625)


def test_pair_damped_accepts_at_first_valid_index():
    I = identity(1)
    certA, certB, led = find_acceptable_pair_I(I, I, 1.0, 0.5, np.ones(1),
                                               np.zeros(1), RO)
    assert 1 <= led.index < 10**6
    assert led.r_norm ** 2 + led.s_norm ** 2 <= 0.0625 * led.rho


def _sequential_pair(A, B, lam, sigma, z, w, sched, start_A, start_B):
    # reference search written directly against the stream protocol
    sA = CertificateStream(A, lam, z - lam * w, sched, start=start_A)
    sB = CertificateStream(B, lam, z + lam * w, sched, start=start_B)
    for j in range(1, 100000):
        a = sA.next()
        b = sB.next(zeta=a.point + lam * w)
        if criterion_I(delta_I(a, b), rho(a.value, b.value, b.point, a.point, lam), sigma):
            return j, a, b
    raise AssertionError("no acceptance")


@pytest.mark.parametrize("mode", ["ResidualOnly", "Transported"])
@pytest.mark.parametrize("seed", range(6))
def test_batched_pair_search_matches_sequential(mode, seed):
    rng = np.random.default_rng(seed)
    A, _, L1, box = ops(rng)
    B = L1 if seed % 2 else box
    sched = RefinementSchedule(mode)
    z, w = rng.standard_normal(4), 0.3 * rng.standard_normal(4)
    sa, sb = rng.standard_normal(4), B.project_domain(rng.standard_normal(4))
    j, a, b = _sequential_pair(A, B, 1.3, 0.2, z, w, sched, sa, sb)
    certA, certB, led = find_acceptable_pair_I(A, B, 1.3, 0.2, z, w, sched, sa, sb)
    assert led.index == j
    assert np.allclose(certA.point, a.point, atol=1e-12)
    assert np.allclose(certB.value, b.value, atol=1e-12)
    assert led.delta <= 0.25 * 0.2 ** 2 * led.rho


@pytest.mark.parametrize("mode", ["ResidualOnly", "Transported"])
@pytest.mark.parametrize("seed", range(4))
def test_batched_B_search_matches_sequential(mode, seed):
    rng = np.random.default_rng(seed + 100)
    A, _, B, _ = ops(rng)
    sched = RefinementSchedule(mode)
    z, w = rng.standard_normal(4), 0.2 * rng.standard_normal(4)
    y, a = exact_resolvent(A, 0.8, z - 0.8 * w)
    start = rng.standard_normal(4)
    s = CertificateStream(B, 0.8, y + 0.8 * w, sched, start=start)
    for j in range(1, 100000):
        c = s.next()
        if criterion_II(delta_II(c), rho(a, c.value, c.point, y, 0.8), 0.3):
            break
    certB, led = find_acceptable_B_II(B, 0.8, 0.3, y, a, w, sched, start=start)
    assert led.index == j and np.allclose(certB.point, c.point, atol=1e-12)


def test_B_II_exact_accepts_immediately():
    I = identity(1)
    y, a = exact_resolvent(I, 1.0, np.ones(1))
    certB, led = find_acceptable_B_II(I, 1.0, 0.5, y, a, np.zeros(1), EX)
    assert led.index == 1 and led.delta == 0.0


def test_B_II_damped_identity_step():
    I = identity(1)
    y, a = exact_resolvent(I, 1.0, np.ones(1))
    certB, led = find_acceptable_B_II(I, 1.0, 0.5, y, a, np.zeros(1), RO)
    assert 1 <= led.index < 10**6
    assert led.delta <= 0.25 * led.rho


def test_B_II_short_circuit_at_solution():
    I = identity(1)
    y, a = exact_resolvent(I, 1.0, np.zeros(1))
    certB, led = find_acceptable_B_II(I, 1.0, 0.5, y, a, np.zeros(1), RO)
    assert led.index == 0 and led.delta == 0.0 and led.rho == 0.0


def test_exhaustion_carries_ledger():
    I = identity(1)
    sched = RefinementSchedule("ResidualOnly", j_max=1)
    # a small sigma needs more than one refinement from a far start
    with pytest.raises(InnerExhausted) as info:
        find_acceptable_pair_I(I, I, 1.0, 0.01, np.ones(1), np.zeros(1), sched,
                               start_A=np.array([50.0]), start_B=np.array([-50.0]))
    assert info.value.ledger is not None and info.value.ledger.index == 1


def test_iterative_mode_on_smooth_operator():
    op = GradQuadratic([[2.0, 0.0], [0.0, 1.0]], [1.0, 1.0])
    stream = CertificateStream(op, 1.0, np.array([3.0, -1.0]), IT)
    for j in range(1, 30):
        c = stream.next()
        assert np.linalg.norm(c.residual) <= (1 + 1e-12) / j
        assert c.eps == 0.0
