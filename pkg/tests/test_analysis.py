import math

import numpy as np
import pytest

from spinpulse import (
    EseemRatioSpec,
    bb1_fidelity,
    bb1_phases,
    echo_train,
    ensemble_mean_fidelity,
    eseem_ratio,
    estimate_rotation_error,
    magic_refocus_angle,
    phase_sensitivity_prediction,
    scan_order,
    verify_eq5_coefficients,
)
from spinpulse.analysis import FidelityScan

# True values of the corrected-pulse figures of merit at eps = 0.1,
# frozen from the matrix-composition oracle (cross-checked against the
# scipy matrix exponential in test_su2).  The leading infidelity
# coefficient is about 4.69 * eps**6 for a pi rotation.
BB1_PI_INFIDELITY_AT_10PCT = 4.622436554191367e-06
BB1_MEASURED_PHASE_FIDELITY = 0.9999460011510224


class TestBb1Fidelity:
    def test_exact_at_zero_error(self):
        for theta in (0.2, math.pi / 2, math.pi, 2.5):
            assert 1.0 - bb1_fidelity(theta, 0.0) < 1e-12

    def test_peak_correction_true_value(self):
        infid = 1.0 - bb1_fidelity(math.pi, 0.1)
        assert infid == pytest.approx(BB1_PI_INFIDELITY_AT_10PCT, rel=1e-6)

    def test_peak_correction_against_expm_route(self):
        # fully independent route: matrix exponentials composed with raw
        # numpy products, no package algebra involved
        from oracles import rotation_expm

        phi1 = math.acos(-0.25)
        net = rotation_expm(math.pi, 0.0, 0.1)
        for th, ph in [(math.pi, phi1), (2 * math.pi, 3 * phi1), (math.pi, phi1)]:
            net = rotation_expm(th, ph, 0.1) @ net
        target = rotation_expm(math.pi, 0.0, 0.0)
        f_oracle = abs(np.trace(target @ net.conj().T)) / 2.0
        assert bb1_fidelity(math.pi, 0.1) == pytest.approx(f_oracle, abs=1e-12)

    def test_measured_phase_scenario(self):
        f = bb1_fidelity(math.pi, 0.1, (0.007 * math.pi, 0.001 * math.pi))
        assert f == pytest.approx(BB1_MEASURED_PHASE_FIDELITY, rel=1e-9)
        assert f == pytest.approx(0.9999, abs=1e-4)

    def test_never_worse_than_uncorrected(self):
        for theta in (0.3, 1.0, math.pi / 2, math.pi):
            for eps in (0.01, 0.05, 0.1, 0.2):
                uncorrected = abs(math.cos(eps * theta / 2.0))
                assert bb1_fidelity(theta, eps) >= uncorrected - 1e-12

    def test_offset_placement_symmetric_in_pi_pulses(self):
        # both pi pulses share one channel, so one offset moves both
        f1 = bb1_fidelity(math.pi, 0.1, (0.01, 0.0))
        phi1, phi2 = bb1_phases(math.pi)
        assert f1 < 1.0 - 1e-6  # the offset visibly degrades
        assert phi2 == pytest.approx(3 * phi1)

    def test_target_pulse_placement_equivalent(self):
        # correction block before or after the target pulse: identical
        # fidelity at the corrected order (checked, not assumed)
        from spinpulse import RotationSpec, compose, fidelity, rotation

        for theta in (0.3 * math.pi, math.pi):
            for eps in (0.05, 0.1, 0.2):
                phi1, phi2 = bb1_phases(theta)
                block = [(math.pi, phi1), (2 * math.pi, phi2), (math.pi, phi1)]
                first = rotation(RotationSpec(theta, 0.0, eps))
                for th, ph in block:
                    first = compose(first, rotation(RotationSpec(th, ph, eps)))
                last = rotation(RotationSpec(0.0, 0.0, 0.0))
                for th, ph in block:
                    last = compose(last, rotation(RotationSpec(th, ph, eps)))
                last = compose(last, rotation(RotationSpec(theta, 0.0, eps)))
                target = rotation(RotationSpec(theta, 0.0, 0.0))
                assert fidelity(target, first) == pytest.approx(
                    fidelity(target, last), abs=1e-12
                )


class TestScanOrder:
    def test_bb1_slope_is_six(self):
        _, slope = scan_order(math.pi, (1e-2, 1e-1), 9)
        assert 5.7 <= slope <= 6.3

    def test_simple_slope_is_two(self):
        _, slope = scan_order(math.pi, (1e-2, 1e-1), 9, use_bb1=False)
        assert 1.9 <= slope <= 2.1

    def test_zero_angle_is_degenerate(self):
        scan, slope = scan_order(0.0, (1e-2, 1e-1), 9)
        assert slope is None
        assert all(infid < 1e-15 for _, infid in scan.points)

    def test_scan_points_increase(self):
        scan, _ = scan_order(math.pi, (1e-2, 1e-1), 7)
        eps = [e for e, _ in scan.points]
        assert eps == sorted(eps)
        assert len(eps) == 7

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            scan_order(math.pi, (0.0, 0.1), 9)
        with pytest.raises(ValueError):
            scan_order(math.pi, (0.01, 0.4), 9)
        with pytest.raises(ValueError):
            scan_order(math.pi, (0.01, 0.1), 4)

    def test_fidelity_scan_validation(self):
        with pytest.raises(ValueError):
            FidelityScan(1.0, ((0.1, 0.0), (0.1, 0.0)))
        with pytest.raises(ValueError):
            FidelityScan(1.0, ((0.1, -1e-9),))


class TestPhaseSensitivity:
    def test_zero_offsets_give_unity(self):
        for eps in (0.0, 0.05, 0.2):
            assert phase_sensitivity_prediction((0.0, 0.0), eps) == 1.0

    def test_measured_scenario_consistent_with_quoted_value(self):
        pred = phase_sensitivity_prediction((0.007 * math.pi, 0.001 * math.pi), 0.1)
        assert pred == pytest.approx(0.9999, abs=1e-4)
        # and close to the direct computation
        direct = bb1_fidelity(math.pi, 0.1, (0.007 * math.pi, 0.001 * math.pi))
        assert pred == pytest.approx(direct, abs=5e-6)

    def test_agreement_with_direct_computation_small_errors(self):
        # Where the truncated expansion is valid (eps <= 0.05) agreement
        # is better than 5e-6 across the offset grid; at eps = 0.1 the
        # omitted eps^6 and higher offset terms reach about 1.2e-5.
        worst_small = 0.0
        worst_full = 0.0
        for d1 in np.linspace(-0.01 * math.pi, 0.01 * math.pi, 5):
            for d2 in np.linspace(-0.01 * math.pi, 0.01 * math.pi, 5):
                for eps in (0.02, 0.05, 0.1):
                    dev = abs(
                        bb1_fidelity(math.pi, eps, (d1, d2))
                        - phase_sensitivity_prediction((d1, d2), eps)
                    )
                    worst_full = max(worst_full, dev)
                    if eps <= 0.05:
                        worst_small = max(worst_small, dev)
        assert worst_small < 5e-6
        assert worst_full == pytest.approx(1.164e-5, rel=1e-2)

    def test_large_offsets_warn(self):
        with pytest.warns(UserWarning):
            phase_sensitivity_prediction((0.06 * math.pi, 0.0), 0.1)


class TestVerifyEq5:
    def test_quadratic_coefficients_within_two_percent(self):
        report = verify_eq5_coefficients()
        fitted = {term: fit for term, _, fit in report.rows}
        assert fitted["dphi1^2"] == pytest.approx(0.75, rel=0.02)
        assert fitted["dphi1*dphi2"] == pytest.approx(-1.125, rel=0.02)
        assert fitted["dphi2^2"] == pytest.approx(0.5, rel=0.02)
        assert report.max_rel_deviation < 0.02


class TestEnsembleMeanFidelity:
    def test_zero_width(self):
        assert ensemble_mean_fidelity(0.0) == 1.0

    def test_wide_spread_reproduces_quoted_value(self):
        f = ensemble_mean_fidelity(0.1 * math.pi)
        assert f == pytest.approx(0.988, abs=0.001)

    def test_small_spread_closed_form(self):
        # for spreads far from the |cos| kink the average is exactly exp(-sigma^2/8)
        sigma = 0.02
        assert ensemble_mean_fidelity(sigma) == pytest.approx(math.exp(-sigma**2 / 8), abs=1e-12)

    def test_deterministic_small_error(self):
        # a fixed absolute angle error t gives F = cos(t/2)
        assert math.cos(0.005 * math.pi) >= 0.9993
        assert math.cos(0.005 * math.pi) == pytest.approx(0.999877, abs=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            ensemble_mean_fidelity(-0.1)


class TestEstimator:
    def test_identical_signals_give_zero(self):
        sig = echo_train("cp", 8, 0.07)
        eps_hat, _ = estimate_rotation_error(sig, sig)
        assert abs(eps_hat) < 1e-4

    @pytest.mark.parametrize("eps_true", [0.05, 0.1])
    def test_round_trip(self, eps_true):
        cp = echo_train("cp", 16, eps_true)
        cpmg = echo_train("cpmg", 16, eps_true)
        eps_hat, residual = estimate_rotation_error(cp, cpmg)
        assert abs(eps_hat - eps_true) <= 0.1 * eps_true
        assert residual < 1e-3

    def test_round_trip_with_shared_envelope(self):
        cp = echo_train("cp", 16, 0.1, t2_envelope=64.0)
        cpmg = echo_train("cpmg", 16, 0.1, t2_envelope=64.0)
        eps_hat, _ = estimate_rotation_error(cp, cpmg)
        assert abs(eps_hat - 0.1) <= 0.01

    def test_mismatched_lengths_rejected(self):
        cp = echo_train("cp", 8, 0.1)
        cpmg = echo_train("cpmg", 6, 0.1)
        with pytest.raises(ValueError):
            estimate_rotation_error(cp, cpmg)

    def test_nonpositive_cpmg_rejected(self):
        cp = echo_train("cp", 4, 0.1)
        bad = echo_train("cpmg", 4, 0.1)
        bad.samples[1] = (bad.samples[1][0], 0.0)
        with pytest.raises(ValueError):
            estimate_rotation_error(cp, bad)


class TestEseem:
    def test_pi_refocus_perfect_pulse(self):
        assert eseem_ratio(EseemRatioSpec("pi", 0.0)) == 0.0

    def test_pi_refocus_small_error(self):
        ratio = eseem_ratio(EseemRatioSpec("pi", 0.1))
        assert ratio == 2.0 * 0.1 * 0.1
        assert ratio == pytest.approx(0.02, abs=1e-15)

    def test_magic_refocus_value(self):
        assert eseem_ratio(EseemRatioSpec("magic", 0.1)) == pytest.approx(14.142, abs=1e-3)

    def test_magic_refocus_diverges_at_zero(self):
        with pytest.raises(ValueError):
            eseem_ratio(EseemRatioSpec("magic", 0.0))

    def test_parity(self):
        for t in (0.03, 0.1, 0.2):
            assert eseem_ratio(EseemRatioSpec("pi", -t)) == eseem_ratio(EseemRatioSpec("pi", t))
            assert eseem_ratio(EseemRatioSpec("magic", -t)) == -eseem_ratio(
                EseemRatioSpec("magic", t)
            )

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            EseemRatioSpec("hahn", 0.1)


class TestMagicAngle:
    def test_value_in_quoted_window(self):
        assert 0.607 <= magic_refocus_angle() / math.pi <= 0.609

    def test_defining_identity(self):
        assert math.cos(magic_refocus_angle() / 2.0) == pytest.approx(
            math.sqrt(1.0 / 3.0), abs=1e-12
        )

    def test_bb1_phases_at_magic_angle(self):
        phi1, phi2 = bb1_phases(magic_refocus_angle())
        assert phi1 / math.pi == pytest.approx(0.549, abs=1e-3)
        assert phi2 / math.pi == pytest.approx(1.646, abs=1e-3)
