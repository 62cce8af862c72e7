import math
import random

import numpy as np
import pytest

from spinpulse import (
    Acquire,
    Delay,
    Discrete,
    EnsembleSpec,
    ErrorModel,
    Gaussian,
    Pulse,
    PulseProgram,
    Repeat,
    SpinState,
    Signal,
    Uniform,
    bloch,
    echo_train,
    propagate,
    rabi_trace,
)
from spinpulse.simulator import _apply_elements, _propagate_nodes
from oracles import echo_train_oracle, gaussian_rabi_closed_form

ZERO_WIDTH = EnsembleSpec(Discrete(((0.0, 1.0),)), nodes=1)
GAUSS5 = EnsembleSpec(Gaussian(0.0, 0.05), nodes=41)


def random_elements(rng, n):
    out = []
    for _ in range(n):
        r = rng.random()
        if r < 0.7:
            out.append(Pulse(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)))
        elif r < 0.9:
            out.append(Delay(rng.uniform(0, 1)))
        else:
            out.append(Acquire())
    return tuple(out)


class TestPropagate:
    def test_empty_program_returns_initial(self):
        s = propagate(PulseProgram(()))
        assert np.allclose(s.vector, [1, 0])

    def test_pi_pulse_inverts(self):
        s = propagate(PulseProgram((Pulse(math.pi, 0.0),)))
        assert bloch(s)[2] == pytest.approx(-1.0, abs=1e-12)

    def test_delay_rotates_about_z(self):
        plus_x = SpinState(1 / math.sqrt(2), 1 / math.sqrt(2))
        s = propagate(PulseProgram((Delay(1.0),)), delta=math.pi, initial=plus_x)
        assert bloch(s)[0] == pytest.approx(-1.0, abs=1e-12)

    def test_repeat_unrolls(self):
        quarter = PulseProgram((Repeat(2, (Pulse(math.pi / 2, 0.0),)),))
        straight = PulseProgram((Pulse(math.pi, 0.0),))
        a = propagate(quarter)
        b = propagate(straight)
        assert np.allclose(a.vector, b.vector, atol=1e-12)

    def test_error_model_applies(self):
        s = propagate(PulseProgram((Pulse(math.pi, 0.0),)), ErrorModel(epsilon=0.1))
        assert bloch(s)[2] == pytest.approx(-math.cos(0.1 * math.pi), abs=1e-12)

    def test_norm_preserved_through_long_program(self):
        rng = random.Random(99)
        elements = random_elements(rng, 1000)
        v = _apply_elements(elements, ErrorModel(epsilon=0.2), 0.7, SpinState.spin_up().vector)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-10

    def test_vectorized_path_matches_scalar_path(self):
        rng = random.Random(5)
        elements = random_elements(rng, 60)
        model = ErrorModel(epsilon=0.13)
        scalar = _apply_elements(elements, model, 0.4, SpinState.spin_up().vector)
        batch, _ = _propagate_nodes(
            elements, model, np.array([0.13]), np.array([0.4]), SpinState.spin_up().vector
        )
        assert np.max(np.abs(batch[0] - scalar)) < 1e-12


class TestBloch:
    @pytest.mark.parametrize(
        "state,expected",
        [
            (SpinState(1, 0), [0, 0, 1]),
            (SpinState(1 / math.sqrt(2), 1 / math.sqrt(2)), [1, 0, 0]),
            (SpinState(1 / math.sqrt(2), 1j / math.sqrt(2)), [0, 1, 0]),
        ],
    )
    def test_cardinal_states(self, state, expected):
        assert np.allclose(bloch(state), expected, atol=1e-12)

    def test_norm_bounded(self):
        s = SpinState(math.cos(0.3), math.sin(0.3) * np.exp(1j * 0.9))
        assert np.linalg.norm(bloch(s)) <= 1 + 1e-12

    def test_state_validation(self):
        with pytest.raises(ValueError):
            SpinState(1.0, 1.0)
        with pytest.raises(ValueError):
            SpinState(math.nan, 0.0)


class TestRabi:
    def test_ideal_trace_is_minus_cos(self):
        sig = rabi_trace(4 * math.pi, 0.25 * math.pi, ZERO_WIDTH)
        for x, y in sig.samples:
            assert y == pytest.approx(-math.cos(x), abs=1e-12)

    def test_trace_starts_at_minus_one_and_x_increases(self):
        sig = rabi_trace(2 * math.pi, 0.5 * math.pi, GAUSS5)
        assert sig.samples[0] == (0.0, pytest.approx(-1.0, abs=1e-12))
        xs = sig.x
        assert np.all(np.diff(xs) > 0)

    def test_gaussian_envelope_matches_closed_form(self):
        sig = rabi_trace(40 * math.pi, 0.25 * math.pi, GAUSS5)
        worst = max(
            abs(y - gaussian_rabi_closed_form(x, 0.05)) for x, y in sig.samples
        )
        assert worst < 1e-3  # contract tolerance
        assert worst < 1e-9  # actual quadrature accuracy

    def test_bb1_equals_simple_at_zero_error(self):
        simple = rabi_trace(6 * math.pi, 0.25 * math.pi, ZERO_WIDTH)
        corrected = rabi_trace(6 * math.pi, 0.25 * math.pi, ZERO_WIDTH, use_bb1=True)
        diffs = np.abs(simple.values - corrected.values)
        assert np.max(diffs) < 1e-9

    def test_bb1_removes_inhomogeneity_decay(self):
        sig = rabi_trace(20 * math.pi, 0.5 * math.pi, GAUSS5, use_bb1=True)
        value_20pi = dict(sig.samples)[20 * math.pi]
        assert abs(value_20pi) >= 0.98
        # simple pulses have lost nearly all contrast by then
        simple = rabi_trace(20 * math.pi, 0.5 * math.pi, GAUSS5)
        assert abs(dict(simple.samples)[20 * math.pi]) < 0.1

    def test_monte_carlo_cross_check(self):
        quad = rabi_trace(4 * math.pi, 0.5 * math.pi, GAUSS5)
        mc = rabi_trace(4 * math.pi, 0.5 * math.pi, GAUSS5, mc_samples=20000, mc_seed=3)
        assert np.max(np.abs(quad.values - mc.values)) < 0.02

    def test_step_validation(self):
        with pytest.raises(ValueError):
            rabi_trace(1.0, 0.0, GAUSS5)
        with pytest.raises(ValueError):
            rabi_trace(-1.0, 0.1, GAUSS5)


# Frozen values computed with the brute-force oracle before wiring the
# simulator: CP/CPMG at eps=0.1, n=32, default detuning ensemble.
CP_FINAL_EVEN = 0.2468429436416173
CPMG_MIN_EVEN = 0.9860587675952664


class TestEchoTrain:
    def test_perfect_pulses_give_unit_echoes(self):
        for mode in ("cp", "cpmg"):
            sig = echo_train(mode, 8, 0.0)
            assert np.max(np.abs(sig.values - 1.0)) < 1e-10

    def test_matches_brute_force_oracle(self):
        for mode, use_bb1 in (("cp", False), ("cpmg", False), ("cp", True)):
            sim = echo_train(mode, 8, 0.1, use_bb1=use_bb1)
            ref = echo_train_oracle(mode, 8, 0.1, use_bb1=use_bb1)
            assert np.max(np.abs(sim.values - ref)) < 1e-9

    def test_cp_frozen_values(self):
        sig = echo_train("cp", 32, 0.1)
        assert sig.values[-1] == pytest.approx(CP_FINAL_EVEN, abs=1e-9)
        even = sig.values[1::2]
        # decays below 0.5 by echo 6 and stays there (with beating, not
        # monotonically)
        assert all(v < 0.5 for v in even[2:])
        assert even[0] > 0.85

    def test_cpmg_frozen_values(self):
        sig = echo_train("cpmg", 32, 0.1)
        even = sig.values[1::2]
        assert min(even) == pytest.approx(CPMG_MIN_EVEN, abs=1e-9)
        assert all(v > 0.98 for v in even)

    def test_bb1_refocusing_restores_cp(self):
        cp = echo_train("cp", 32, 0.1, use_bb1=True)
        cpmg = echo_train("cpmg", 32, 0.1)
        rel = abs(cp.values[-1] - cpmg.values[-1]) / cpmg.values[-1]
        assert rel < 0.01

    def test_t2_envelope_multiplies(self):
        bare = echo_train("cpmg", 8, 0.05)
        damped = echo_train("cpmg", 8, 0.05, t2_envelope=40.0)
        expected = bare.values * np.exp(-bare.x / 40.0)
        assert np.max(np.abs(damped.values - expected)) < 1e-12

    def test_quadrature_converged_beyond_default(self):
        def run(nodes):
            spec = EnsembleSpec(
                Discrete(((0.0, 1.0),)),
                detuning_dist=Uniform(-4 * math.pi, 4 * math.pi),
                nodes=nodes,
            )
            return echo_train("cp", 32, 0.1, ensemble_detuning=spec).values

        base = run(256)
        doubled = run(512)
        assert np.max(np.abs(base - doubled)) < 1e-6

    def test_echo_times_are_2k_tau(self):
        sig = echo_train("cp", 4, 0.0, tau=0.5)
        assert sig.x.tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_monte_carlo_cross_check(self):
        quad = echo_train("cpmg", 4, 0.1)
        mc = echo_train("cpmg", 4, 0.1, mc_samples=20000, mc_seed=11)
        assert np.max(np.abs(quad.values - mc.values)) < 0.02

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            echo_train("hahn", 4, 0.0)
        with pytest.raises(ValueError):
            echo_train("cp", 0, 0.0)
        with pytest.raises(ValueError):
            echo_train("cp", 4, 1.5)
        with pytest.raises(ValueError):
            echo_train("cp", 4, 0.1, t2_envelope=-1.0)


class TestSignal:
    def test_rejects_non_increasing_x(self):
        with pytest.raises(ValueError):
            Signal("x", "s", "y", [(0.0, 1.0), (0.0, 2.0)])

    def test_provenance_present(self):
        sig = echo_train("cp", 2, 0.05)
        assert sig.provenance["mode"] == "cp"
        assert sig.provenance["epsilon"] == 0.05
        assert sig.provenance["ensemble"]["detuning"]["kind"] == "uniform"
