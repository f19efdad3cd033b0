import math
from dataclasses import replace

import numpy as np
import pytest

from inexact_dr.diagnostics import (bound_cascade_check, check_extended_solution,
                                    extended_solution_residual, fejer_gap_I,
                                    fejer_gap_II, replay, telescoped_sums)
from inexact_dr.drsolve import IterationRecord, SolverConfig, run
from inexact_dr.operators import ExtendedSolution, identity
from inexact_dr.problems import (box_from, default_start, gen_box_feasibility,
                                 gen_lasso)
from inexact_dr.space import PairPoint

ORIGIN = PairPoint.from_zw([0.0], [0.0], 1.0)


def _identity_run(variant, **kw):
    cfg = SolverConfig(variant=variant, **kw)
    return run(identity(), identity(), [1.0], [0.0], cfg,
               reference=ExtendedSolution(np.zeros(1), np.zeros(1)))


def _record(**kw):
    base = dict(k=1, delta=0.0, rho=1.0, t=0.0, r_norm=0.0, s_norm=0.0,
                eps=0.0, mu=0.0, aw_sq=0.0, xz_norm=0.0, bw_norm=0.0,
                inner_index=1)
    base.update(kw)
    return IterationRecord(**base)


class TestFejer:
    def test_identity_first_step_hand_values(self):
        rec = _identity_run("Exact", max_iter=1).records[0]
        p0 = PairPoint.from_zw([1.0], [0.0], 1.0)
        fr = fejer_gap_I(ORIGIN, p0, rec, sigma=0.5, nu=0.75)
        assert fr.lhs == 1.0
        assert fr.rhs - 0.0625 == pytest.approx(0.125)
        assert fr.slack == pytest.approx(0.8125)
        assert fr.ok

    def test_fixed_point_slack_zero(self):
        z = np.array([0.3])
        p = PairPoint.from_zw(z, [0.2], 1.0)
        rec = _record(rho=0.0, z=z, w=np.array([0.2]))
        assert fejer_gap_I(ORIGIN, p, rec, 0.3, 0.6).slack == 0.0
        assert fejer_gap_II(ORIGIN, p, rec, 0.3, 0.6).slack == 0.0

    def test_exact_second_variant_reduces(self):
        rec = _identity_run("Exact", max_iter=1).records[0]
        p0 = PairPoint.from_zw([1.0], [0.0], 1.0)
        fr = fejer_gap_II(ORIGIN, p0, rec, 0.5, 0.75)
        assert fr.rhs == pytest.approx(0.125 + (1 - 0.75 ** 2) * rec.aw_sq)

    def test_semi_inexact_identity_run(self):
        res = _identity_run("SemiInexact")
        prev = PairPoint.from_zw([1.0], [0.0], 1.0)
        for rec in res.records:
            assert fejer_gap_II(ORIGIN, prev, rec, 0.3, 0.6).ok
            prev = rec

    def test_distances_fallback(self):
        rec = _record(dist_z=0.5, dist_w=0.5)
        fr = fejer_gap_I(ORIGIN, PairPoint.from_zw([1.0], [0.0], 1.0), rec, 0.3, 0.6)
        assert fr.rhs == pytest.approx(0.5)

    def test_missing_data_raises(self):
        with pytest.raises(ValueError):
            fejer_gap_I(ORIGIN, _record(), _record(k=2), 0.3, 0.6)

    @pytest.mark.parametrize("variant", ["FullyInexact", "SemiInexact"])
    def test_lasso_trace_slack(self, variant):
        inst = gen_lasso(10, 14, 4)
        z0, w0 = default_start(inst)
        res = run(inst.A, inst.B, z0, w0, SolverConfig(variant=variant),
                  reference=inst.oracle)
        rep = replay(res.records, variant, 0.3, 0.6, 1.0, z0, w0, inst.oracle,
                     inst.A, inst.B, final=(res.z, res.w), membership_tol=1e-6)
        assert rep.passed, rep.to_text()

    def test_telescoped_partial_sums(self):
        res = _identity_run("FullyInexact")
        p0 = PairPoint.from_zw([1.0], [0.0], 1.0)
        sums = list(telescoped_sums("FullyInexact", ORIGIN, p0, res.records, 0.3, 0.6))
        assert len(sums) == res.iterations
        assert all(rhs <= lhs + 1e-12 for _, lhs, rhs in sums)
        assert [k for k, _, _ in sums] == [r.k for r in res.records]


class TestMembership:
    def test_identity(self):
        A = B = identity()
        assert check_extended_solution(A, B, [0.0], [0.0], 1e-8)
        assert not check_extended_solution(A, B, [1.0], [1.0], 1e-8)

    def test_box_interior(self):
        inst = box_from([0.0, 0.0], [2.0, 2.0], [1.0, 1.0], [3.0, 3.0])
        assert check_extended_solution(inst.A, inst.B, [1.5, 1.2], [0.0, 0.0], 1e-8)

    def test_lasso_oracle(self):
        inst = gen_lasso(12, 20, 6)
        assert check_extended_solution(inst.A, inst.B, inst.oracle.z_star,
                                       inst.oracle.w_star, 1e-8)

    def test_tol_positive(self):
        with pytest.raises(ValueError):
            check_extended_solution(identity(), identity(), [0.0], [0.0], 0.0)

    def test_residual(self):
        assert extended_solution_residual(identity(), identity(), [0.0], [0.0]) == 0.0
        assert extended_solution_residual(identity(), identity(), [1.0], [0.0]) == 0.5


class TestCascade:
    def test_zero_error(self):
        assert bound_cascade_check(_record(), "FullyInexact", 0.3, 0.6)
        assert bound_cascade_check(_record(), "SemiInexact", 0.3, 0.6)

    def test_boundary_record_tight(self):
        sigma, nu = 0.5, 0.8
        rec = _record(delta=sigma ** 2 / 4, t=nu)
        assert bound_cascade_check(rec, "FullyInexact", sigma, nu)
        lower = nu / sigma * math.sqrt(4 * rec.delta * rec.rho) - nu * rec.aw_sq
        assert lower == pytest.approx(rec.t * rec.rho)

    def test_violations(self):
        bad = [_record(t=0.7), _record(delta=0.01, t=0.0),
               _record(delta=1e-6, t=0.5)]
        for rec in bad:
            assert not bound_cascade_check(rec, "FullyInexact", 0.3, 0.6)
        assert not bound_cascade_check(_record(t=0.37), "SemiInexact", 0.3, 0.6)


class TestReplay:
    def test_empty_warns(self):
        rep = replay([], "FullyInexact", 0.3, 0.6, 1.0, [0.0], [0.0])
        assert rep.passed and rep.warnings

    def test_no_oracle_warns(self):
        res = _identity_run("FullyInexact")
        rep = replay(res.records, "FullyInexact", 0.3, 0.6, 1.0, [1.0], [0.0])
        assert rep.passed and any("oracle" in w for w in rep.warnings)

    def test_corruption_detected(self):
        inst = gen_box_feasibility(5, 3)
        z0, w0 = default_start(inst)
        res = run(inst.A, inst.B, z0, w0, SolverConfig(), reference=inst.oracle)
        recs = list(res.records)
        i = len(recs) // 2
        recs[i] = replace(recs[i], z=recs[i].z + 1.0)
        rep = replay(recs, "FullyInexact", 0.3, 0.6, 1.0, z0, w0, inst.oracle)
        assert not rep.passed
        assert recs[i].k in rep.failing_iterations
        assert "FAIL" in rep.to_text()

    def test_membership_failure(self):
        res = _identity_run("FullyInexact", max_iter=2)
        rep = replay(res.records, "FullyInexact", 0.3, 0.6, 1.0, [1.0], [0.0],
                     A=identity(), B=identity(), final=(res.z, res.w),
                     membership_tol=1e-8)
        assert [f.check for f in rep.failures] == ["membership"]
