import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_q
from dexlink.glove import (
    DEFAULT_VCC_CODE,
    GloveChannelMap,
    InteractivePose,
    InvalidRate,
    OutOfRange,
    PoseScript,
    ServoState,
    SimulatedGlove,
    SinusoidalNonlinearity,
    SourceDisconnected,
    ZeroReference,
    angle_to_code,
    angle_to_ticks,
    apply_calibration,
    assemble_glove_state,
    build_calibration,
    default_zero_offsets,
    identity_table,
    identity_tables,
    raw_to_angle,
    servo_ticks_to_angle,
    tables_from_json,
    tables_to_json,
)
from dexlink.wire import N_CHANNELS, EncoderFrame

# ---------------------------------------------------------------------------
# voltage-ratio conversion
# ---------------------------------------------------------------------------


def test_half_scale_is_180():
    assert raw_to_angle(DEFAULT_VCC_CODE // 2, DEFAULT_VCC_CODE) == 180.0


def test_ground_is_zero():
    assert raw_to_angle(0, DEFAULT_VCC_CODE) == 0.0


def test_full_scale_is_360():
    assert raw_to_angle(DEFAULT_VCC_CODE, DEFAULT_VCC_CODE) == 360.0


def test_zero_reference_raises():
    with pytest.raises(ZeroReference):
        raw_to_angle(100, 0)


def test_overrange_code_clamps_to_full_scale():
    assert raw_to_angle(DEFAULT_VCC_CODE + 5, DEFAULT_VCC_CODE) == 360.0


@settings(max_examples=300)
@given(vcc=st.integers(1, 2**24 - 1), data=st.data())
def test_conversion_strictly_increasing(vcc, data):
    a = data.draw(st.integers(0, vcc - 1))
    b = data.draw(st.integers(a + 1, vcc))
    assert raw_to_angle(a, vcc) < raw_to_angle(b, vcc)


# ---------------------------------------------------------------------------
# servo ticks
# ---------------------------------------------------------------------------


def test_servo_origin():
    assert servo_ticks_to_angle(0) == 0.0


def test_servo_midpoint():
    assert servo_ticks_to_angle(2048) == 180.0


def test_servo_top_tick():
    assert abs(servo_ticks_to_angle(4095) - 1474200.0 / 4096.0) < 1e-9


def test_servo_out_of_range():
    with pytest.raises(OutOfRange):
        servo_ticks_to_angle(4096)
    with pytest.raises(OutOfRange):
        servo_ticks_to_angle(-1)


# ---------------------------------------------------------------------------
# calibration tables
# ---------------------------------------------------------------------------


def test_identity_table_passthrough():
    assert apply_calibration(identity_table(), 123.4) == pytest.approx(123.4, abs=1e-12)


def test_knot_value_exact():
    table = build_calibration(lambda t: t + 3.0, spacing_deg=5.0)
    # raw exactly at a knot returns that knot's true value
    assert apply_calibration(table, 128.0) == pytest.approx(125.0, abs=1e-12)


def test_extrapolation_past_ends():
    table = identity_table()
    assert apply_calibration(table, -5.0) == pytest.approx(-5.0)
    assert apply_calibration(table, 370.0) == pytest.approx(370.0)


def test_sinusoidal_distortion_corrected_within_one_degree():
    noise = SinusoidalNonlinearity.sample(np.random.default_rng(7), amplitude_frac=0.02)
    for ch in range(N_CHANNELS):
        table = build_calibration(lambda t: noise.distort(ch, t), spacing_deg=5.0)
        worst = 0.0
        for true in np.arange(0.0, 360.0 + 1e-9, 0.25):
            corrected = apply_calibration(table, noise.distort(ch, true))
            worst = max(worst, abs(corrected - true))
        assert worst <= 1.0


def test_uncalibrated_distortion_reaches_several_degrees():
    noise = SinusoidalNonlinearity.sample(np.random.default_rng(7), amplitude_frac=0.02)
    sweep = np.arange(0.0, 360.0, 0.5)
    worst = max(abs(noise.distort(0, t) - t) for t in sweep)
    assert 5.0 <= worst <= 7.2 + 1e-9


def test_tables_json_round_trip():
    noise = SinusoidalNonlinearity.sample(np.random.default_rng(3), amplitude_frac=0.02)
    tables = {ch: build_calibration(lambda t: noise.distort(ch, t)) for ch in range(N_CHANNELS)}
    restored = tables_from_json(tables_to_json(tables))
    assert set(restored) == set(tables)
    for ch in tables:
        assert np.allclose(restored[ch].raw, tables[ch].raw)
        assert np.allclose(restored[ch].true, tables[ch].true)


# ---------------------------------------------------------------------------
# state assembly
# ---------------------------------------------------------------------------


def flat_frame(vcc=DEFAULT_VCC_CODE, overrides=None):
    codes = [angle_to_code(180.0, vcc)] * N_CHANNELS
    for ch, deg in (overrides or {}).items():
        codes[ch] = angle_to_code(deg, vcc)
    return EncoderFrame(seq=0, adc_codes=tuple(codes), vcc_code=vcc)


def test_assemble_zero_pose(glove_model):
    state = assemble_glove_state(
        flat_frame(),
        ServoState(positions=(2048,) * 5),
        identity_tables(),
        default_zero_offsets(glove_model),
        glove_model,
    )
    assert np.allclose(state.q, 0.0, atol=1e-12)
    assert state.clamped_joints == ()


def test_assemble_single_channel_offset(glove_model):
    cmap = GloveChannelMap()
    ch = cmap.encoder_joints.index("index_pip")
    state = assemble_glove_state(
        flat_frame(overrides={ch: 270.0}),
        ServoState(positions=(2048,) * 5),
        identity_tables(),
        default_zero_offsets(glove_model),
        glove_model,
    )
    j = glove_model.joint_index("index_pip")
    assert state.q[j] == pytest.approx(math.pi / 2, abs=1e-9)


def test_assemble_clamps_and_flags_overrun(glove_model):
    cmap = GloveChannelMap()
    ch = cmap.encoder_joints.index("index_pip")
    state = assemble_glove_state(
        flat_frame(overrides={ch: 330.0}),  # 150 deg, beyond the 1.92 rad limit
        ServoState(positions=(2048,) * 5),
        identity_tables(),
        default_zero_offsets(glove_model),
        glove_model,
    )
    j = glove_model.joint_index("index_pip")
    assert state.q[j] == glove_model.upper[j]
    assert j in state.clamped_joints


# ---------------------------------------------------------------------------
# simulated glove
# ---------------------------------------------------------------------------


def representable_pose(glove_model):
    """Pose whose channel angles quantize exactly (servo tick multiples)."""
    tick = 360.0 / 4096.0
    q_deg = np.zeros(21)
    cmap = GloveChannelMap()
    for name in cmap.servo_joints:
        q_deg[glove_model.joint_index(name)] = 128 * tick  # 11.25 deg
    for name in cmap.encoder_joints:
        q_deg[glove_model.joint_index(name)] = 12.34  # exact hundredth of a degree
    return np.radians(q_deg)


def test_zero_noise_round_trip_exact(glove_model):
    q = representable_pose(glove_model)
    glove = SimulatedGlove(glove_model, PoseScript.constant(q), SinusoidalNonlinearity.none())
    frame, servo = glove.sample_at(0.0)
    state = assemble_glove_state(
        frame, servo, identity_tables(), default_zero_offsets(glove_model), glove_model
    )
    assert np.max(np.abs(state.q - q)) <= 1e-9


def test_zero_noise_round_trip_quantization_bound(glove_model, rng):
    # arbitrary poses are reproduced to within half a servo tick
    half_tick_rad = math.radians(360.0 / 4096.0 / 2.0)
    for _ in range(20):
        q = random_q(glove_model, rng, margin=0.05)
        glove = SimulatedGlove(glove_model, PoseScript.constant(q), SinusoidalNonlinearity.none())
        frame, servo = glove.sample_at(0.0)
        state = assemble_glove_state(
            frame, servo, identity_tables(), default_zero_offsets(glove_model), glove_model
        )
        assert np.max(np.abs(state.q - q)) <= half_tick_rad + 1e-9


def test_two_percent_noise_bounded_by_seven_point_two_degrees(glove_model, rng):
    noise = SinusoidalNonlinearity.sample(np.random.default_rng(11), amplitude_frac=0.02)
    worst = 0.0
    for _ in range(30):
        q = random_q(glove_model, rng, margin=0.05)
        glove = SimulatedGlove(glove_model, PoseScript.constant(q), noise)
        frame, servo = glove.sample_at(0.0)
        state = assemble_glove_state(
            frame, servo, identity_tables(), default_zero_offsets(glove_model), glove_model
        )
        worst = max(worst, np.max(np.abs(np.degrees(state.q - q))))
    assert worst <= 7.2 + 1e-6


def test_calibrated_noise_within_one_degree(glove_model, rng):
    noise = SinusoidalNonlinearity.sample(np.random.default_rng(11), amplitude_frac=0.02)
    tables = {ch: build_calibration(lambda t: noise.distort(ch, t)) for ch in range(N_CHANNELS)}
    worst = 0.0
    for _ in range(30):
        q = random_q(glove_model, rng, margin=0.05)
        glove = SimulatedGlove(glove_model, PoseScript.constant(q), noise)
        frame, servo = glove.sample_at(0.0)
        state = assemble_glove_state(
            frame, servo, tables, default_zero_offsets(glove_model), glove_model
        )
        worst = max(worst, np.max(np.abs(np.degrees(state.q - q))))
    assert worst <= 1.0


def test_stream_rate_and_seq(glove_model):
    glove = SimulatedGlove(glove_model, PoseScript.constant(np.zeros(21)), rate_hz=120.0)
    items = list(glove.stream(0.5))
    assert len(items) == 60
    times = [t for t, _, _ in items]
    assert times[0] == pytest.approx(1.0 / 120.0)
    assert np.allclose(np.diff(times), 1.0 / 120.0)
    seqs = [f.seq for _, f, _ in items]
    assert seqs == [i % 256 for i in range(60)]


def test_invalid_rate_rejected(glove_model):
    with pytest.raises(InvalidRate):
        SimulatedGlove(glove_model, PoseScript.constant(np.zeros(21)), rate_hz=121.0)
    with pytest.raises(InvalidRate):
        SimulatedGlove(glove_model, PoseScript.constant(np.zeros(21)), rate_hz=0.0)


def test_stop_script_disconnects(glove_model):
    script = PoseScript(np.array([0.0, 0.2]), np.zeros((2, 21)), end_behavior="stop")
    glove = SimulatedGlove(glove_model, script)
    with pytest.raises(SourceDisconnected):
        for _ in glove.stream(1.0):
            pass


# ---------------------------------------------------------------------------
# pose sources
# ---------------------------------------------------------------------------


def test_pose_script_csv_and_interpolation():
    text = "t_seconds,q0,q1\n0.0,0.0,1.0\n1.0,2.0,3.0\n"
    script = PoseScript.from_csv(text)
    assert np.allclose(script.sample(0.5), [1.0, 2.0])
    assert np.allclose(script.sample(-1.0), [0.0, 1.0])
    assert np.allclose(script.sample(9.0), [2.0, 3.0])
    assert script.duration == 1.0


def test_interactive_pose_set_and_sample():
    pose = InteractivePose(np.zeros(3))
    pose.set([1.0, 2.0, 3.0])
    assert np.allclose(pose.sample(0.0), [1.0, 2.0, 3.0])


def test_angle_helpers_invert():
    for deg in [0.0, 11.25, 180.0, 359.0]:
        assert servo_ticks_to_angle(angle_to_ticks(deg)) == pytest.approx(deg, abs=0.05)
        assert raw_to_angle(angle_to_code(deg), DEFAULT_VCC_CODE) == pytest.approx(deg, abs=1e-4)
