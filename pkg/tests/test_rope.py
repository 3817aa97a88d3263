import math

import pytest
import torch
from hypothesis import given, settings
import hypothesis.strategies as st

from core.worker.exceptions import ConfigError
from core.worker.rope import RopeConfig, apply_rotation, mrope_rotate, rope_rotate_1d, rotation_angles


def _vector(seed: int, *shape) -> torch.Tensor:
    return torch.randn(*shape, generator=torch.Generator().manual_seed(seed), dtype=torch.float64)


def test_zero_position_is_identity():
    v = _vector(0, 16)
    torch.testing.assert_close(rope_rotate_1d(v, 0.0), v)
    torch.testing.assert_close(mrope_rotate(v, (0.0, 0.0, 0.0), RopeConfig(16)), v)


def test_planar_rotation_by_pi():
    out = rope_rotate_1d(torch.tensor([1.0, 0.0], dtype=torch.float64), math.pi)
    torch.testing.assert_close(out, torch.tensor([-1.0, 0.0], dtype=torch.float64), atol=1e-12, rtol=0)


def test_odd_head_dim_is_rejected():
    with pytest.raises(ConfigError):
        rope_rotate_1d(torch.zeros(5), 1.0)
    with pytest.raises(ConfigError):
        RopeConfig(7)


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 16), st.floats(-1e4, 1e4))
def test_rotation_preserves_norm(seed, pos):
    v = _vector(seed, 32)
    assert torch.linalg.norm(rope_rotate_1d(v, pos)).item() == pytest.approx(torch.linalg.norm(v).item(), abs=1e-9)


@given(st.floats(-1e3, 1e3))
def test_negative_position_inverts(pos):
    v = _vector(1, 8)
    torch.testing.assert_close(rope_rotate_1d(rope_rotate_1d(v, pos), -pos), v, atol=1e-9, rtol=0)


def test_default_sections():
    assert RopeConfig(32).sections == (8, 4, 4)
    assert RopeConfig(8).sections == (2, 1, 1)
    with pytest.raises(ConfigError):
        RopeConfig(16, sections=(4, 4, 4))


def test_degenerate_sections_match_1d():
    v = _vector(2, 16)
    cfg = RopeConfig(16, sections=(8, 0, 0))
    torch.testing.assert_close(mrope_rotate(v, (3.5, -7.0, 11.0), cfg), rope_rotate_1d(v, 3.5))


def test_sections_use_their_own_axis():
    cfg = RopeConfig(16)
    angles = rotation_angles(torch.tensor([0.0, 0.0, 2.0], dtype=torch.float64), cfg)
    nT, nH, _ = cfg.sections
    assert torch.all(angles[:nT + nH] == 0)
    assert torch.all(angles[nT + nH:] != 0)


@settings(max_examples=30)
@given(st.integers(0, 2 ** 16), st.lists(st.floats(-200, 200), min_size=9, max_size=9))
def test_scores_depend_on_relative_positions(seed, values):
    cfg = RopeConfig(16)
    q, k = _vector(seed, 16), _vector(seed + 1, 16)
    p, p2, delta = (torch.tensor(values[i:i + 3], dtype=torch.float64) for i in (0, 3, 6))
    base = torch.dot(mrope_rotate(q, p, cfg), mrope_rotate(k, p2, cfg))
    shifted = torch.dot(mrope_rotate(q, p + delta, cfg), mrope_rotate(k, p2 + delta, cfg))
    assert shifted.item() == pytest.approx(base.item(), abs=1e-6)


def test_section_frequency_restart():
    restarted = RopeConfig(16, per_section_freq_restart=True)
    angles = rotation_angles(torch.ones(3, dtype=torch.float64), restarted)
    nT, nH, _ = restarted.sections
    # the first pair of every section turns at frequency 1
    assert angles[0].item() == angles[nT].item() == angles[nT + nH].item() == 1.0


def test_batched_rotation_matches_single():
    cfg = RopeConfig(8)
    v = _vector(3, 2, 5, 8)
    positions = _vector(4, 5, 3) * 50
    batched = apply_rotation(v, rotation_angles(positions, cfg))
    for i in range(5):
        torch.testing.assert_close(batched[1, i], mrope_rotate(v[1, i], positions[i], cfg))


def test_positions_need_three_axes():
    with pytest.raises(ConfigError):
        rotation_angles(torch.zeros(4, 2), RopeConfig(8))


def test_relative_shift_identity_over_many_draws():
    cfg = RopeConfig(32)
    n = 10_000
    q, k = _vector(10, n, 32), _vector(11, n, 32)
    p, p2 = (_vector(12, n, 3) * 3000).round(), (_vector(13, n, 3) * 3000).round()
    delta = (_vector(14, n, 3) * 3000).round()

    def scores(a, b):
        rq = apply_rotation(q, rotation_angles(a, cfg))
        rk = apply_rotation(k, rotation_angles(b, cfg))
        return (rq * rk).sum(dim=-1)

    torch.testing.assert_close(scores(p + delta, p2 + delta), scores(p, p2), rtol=0, atol=1e-6)
