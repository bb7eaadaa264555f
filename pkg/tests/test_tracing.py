import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from braidflow.braids import SphericalBraidWord, braid_permutation, braids_equal, is_pure, linking_matrix
from braidflow.flow_sim import autonomous, catalog_entry, disc_rotation, make_composite
from braidflow.quasimorphisms.surface import dehn_reduce
from braidflow.tracing import (
    COLLISION,
    ConfigurationSample,
    TracingError,
    default_basepoints,
    events_csv,
    trace_braid,
    trace_braids,
    trace_loop_class,
    trace_loop_classes,
    winding_decomposition,
)
from braidflow.words import GroupWord

PAIR = np.array([[-0.5, 0.01], [0.5, 0.0]])


def _letters(w):
    return tuple(w.word.letters)


# --- braids --------------------------------------------------------------------------

def test_full_counterclockwise_turn_is_sigma_squared():
    w = trace_braid(autonomous(disc_rotation(), 2 * math.pi), ConfigurationSample(PAIR))
    assert _letters(w) == (1, 1)


def test_two_turns_give_sigma_fourth():
    w = trace_braid(autonomous(disc_rotation(), 4 * math.pi), ConfigurationSample(PAIR))
    assert _letters(w) == (1, 1, 1, 1)


def test_reversed_rotation_gives_inverse():
    iso = autonomous(disc_rotation(), 2 * math.pi).reversed()
    assert _letters(trace_braid(iso, ConfigurationSample(PAIR))) == (-1, -1)


def test_sphere_height_turn_in_the_tracing_chart():
    # the tracing chart sees the height rotation clockwise
    w = trace_braid(autonomous(catalog_entry("sphere_height"), 2 * math.pi), ConfigurationSample(PAIR))
    assert _letters(w) == (-1, -1)
    assert isinstance(w, SphericalBraidWord)


def test_points_outside_support_give_identity():
    sys = catalog_entry("disc_offcenter_bump")
    pts = np.array([[-0.9, 0.1], [0.1, 0.92], [-0.3, -0.88]])
    assert _letters(trace_braid(autonomous(sys, 3.0), ConfigurationSample(pts))) == ()


def test_rotation_linking_counts_half_turns():
    # three full turns of a rigid rotation: every pair links three times
    pts = np.array([[-0.6, 0.02], [0.1, -0.05], [0.45, 0.03]])
    w = trace_braid(autonomous(disc_rotation(), 6 * math.pi), ConfigurationSample(pts))
    lk = linking_matrix(w)
    assert np.array_equal(lk[np.triu_indices(3, 1)], [3, 3, 3])
    assert braids_equal(w, w.__class__(3, GroupWord(2, (1, 2, 1) * 6)))


def test_crossing_events_and_csv():
    w, ev = trace_braid(autonomous(disc_rotation(), 2 * math.pi), ConfigurationSample(PAIR),
                        keep_events=True)
    assert [e.generator for e in ev] == [1, 1]
    # crossings at a quarter and three quarters of the turn (basepoint y offset)
    assert ev[0].time == pytest.approx(math.pi / 2, abs=0.02)
    assert ev[1].time == pytest.approx(3 * math.pi / 2, abs=0.02)
    text = events_csv(ev).splitlines()
    assert text[0] == "time,strand_a,strand_b,sign,generator"
    assert [row.split(",")[1:] for row in text[1:]] == [["1", "2", "1", "1"]] * 2


def test_simultaneous_swap_is_a_collision():
    sample = ConfigurationSample(np.array([[0.5, 0.0], [-0.5, 0.0]]),
                                 basepoints=np.array([[-0.5, 0.0], [0.5, 0.0]]))
    with pytest.raises(TracingError):
        trace_braid(autonomous(disc_rotation(), 1.0), sample)
    res = trace_braids(autonomous(disc_rotation(), 1.0), sample.points[None], basepoints=sample.basepoints)
    assert res.rejected[0] == COLLISION and res.words[0][0] is None


def test_tracing_rejects_octagon():
    with pytest.raises(ValueError):
        trace_braids(autonomous(catalog_entry("polygon_center_bump"), 1.0), np.zeros((1, 2, 2)))


def _random_configs(seed, S, n):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0, 0.8, size=(S, n)))
    a = rng.uniform(0, 2 * np.pi, size=(S, n))
    return np.stack([r * np.cos(a), r * np.sin(a)], -1)


def test_words_are_pure_braids_when_closing_to_basepoints():
    iso = autonomous(catalog_entry("disc_double_bump"), 4.0)
    res = trace_braids(iso, _random_configs(0, 40, 3), basepoints=default_basepoints(3))
    for w in res.words[-1]:
        if w is not None:
            assert is_pure(w)
            assert braid_permutation(w) == (0, 1, 2)


def test_words_stable_under_halving_dt():
    iso = autonomous(catalog_entry("disc_double_bump"), 3.0)
    pts = _random_configs(1, 30, 3)
    a = trace_braids(iso, pts, basepoints=default_basepoints(3))
    b = trace_braids(iso.refined(2), pts, basepoints=default_basepoints(3))
    for wa, wb in zip(a.words[-1], b.words[-1]):
        if wa is not None and wb is not None:
            assert braids_equal(wa, wb)


def test_checkpoints_match_separate_runs():
    sys = catalog_entry("disc_radial_bump")
    iso = autonomous(sys, 2.0)
    pts = _random_configs(2, 10, 3)
    z = default_basepoints(3)
    both = trace_braids(iso.power(2), pts, basepoints=z, checkpoints=[iso.steps, 2 * iso.steps])
    once = trace_braids(iso, pts, basepoints=z)
    twice = trace_braids(iso.power(2), pts, basepoints=z)
    for s in range(10):
        assert braids_equal(both.words[0][s], once.words[0][s])
        assert braids_equal(both.words[1][s], twice.words[0][s])


@settings(max_examples=20)
@given(turns=st.integers(1, 4), y=st.floats(0.02, 0.3), x=st.floats(0.1, 0.8))
def test_rotation_pair_linking_property(turns, y, x):
    pts = np.array([[-x, y], [x, -y]])
    w = trace_braid(autonomous(disc_rotation(), 2 * math.pi * turns), ConfigurationSample(pts))
    assert _letters(w) == (1,) * (2 * turns)


# --- loops on the octagon -------------------------------------------------------------

@pytest.fixture(scope="module")
def multi_well():
    return catalog_entry("polygon_multi_well")


def test_loop_class_crossing_then_back_is_trivial(multi_well):
    iso = autonomous(multi_well, 20.0)
    pts = multi_well.probe_points[0][:60]
    res = trace_loop_classes(iso * iso.reversed(), pts)
    words = [w for w in res.words[-1] if w is not None]
    assert words and all(w.letters == () for w in words)
    # and some of these points did leave through an edge on the way out
    out = trace_loop_classes(iso, pts)
    assert any(w is not None and w.letters for w in out.words[-1])


def test_loop_class_cocycle(multi_well):
    a = autonomous(multi_well, 15.0)
    b = autonomous(catalog_entry("polygon_center_bump"), 6.0)
    pts = multi_well.probe_points[0][:40]
    from braidflow.flow_sim import flow_map

    mid, _ = flow_map(a, pts)
    ab = trace_loop_classes(make_composite([a, b]), pts).words[-1]
    wa = trace_loop_classes(a, pts).words[-1]
    wb = trace_loop_classes(b, mid).words[-1]
    for x, y, z in zip(ab, wa, wb):
        if x is None or y is None or z is None:
            continue
        joined = dehn_reduce(GroupWord(4, y.letters + z.letters), 2)
        assert dehn_reduce(GroupWord(4, x.letters + tuple(-t for t in reversed(joined.letters))), 2).letters == ()


def test_single_loop_class_agrees_with_batch(multi_well):
    iso = autonomous(multi_well, 10.0)
    pts = multi_well.probe_points[0][:8]
    batch = trace_loop_classes(iso, pts).words[-1]
    for p, w in zip(pts, batch):
        if w is not None:
            assert trace_loop_class(iso, p).letters == w.letters


def test_loop_tracing_rejects_disc():
    with pytest.raises(ValueError):
        trace_loop_classes(autonomous(disc_rotation(), 1.0), np.zeros((1, 2)))


# --- winding decomposition ----------------------------------------------------------------

def test_winding_decomposition_examples():
    L = GroupWord(4, (1, 2, -1, -2))
    h = GroupWord(4, (3,) + (1, 2, -1, -2) * 3 + (4, 4))
    assert winding_decomposition(h, L) == (3, 3)
    hinv = GroupWord(4, (2, 1, -2, -1) * 2)
    assert winding_decomposition(hinv, L) == (-2, 0)
    # a cyclic rotation of the level word counts too
    assert winding_decomposition(GroupWord(4, (2, -1, -2, 1) * 4), L) == (4, 0)
    assert winding_decomposition(GroupWord(4, (3, 4)), L) == (0, 2)


def test_winding_decomposition_needs_level_word():
    with pytest.raises(ValueError):
        winding_decomposition(GroupWord(4, (1,)), GroupWord(4, ()))


@settings(max_examples=50)
@given(m=st.integers(0, 6), pre=st.lists(st.sampled_from([3, 4, -3]), max_size=3),
       post=st.lists(st.sampled_from([3, -4]), max_size=3))
def test_winding_decomposition_recovers_power(m, pre, post):
    L = (1, 2, -1, -2)
    h = GroupWord(4, tuple(pre) + L * m + tuple(post))
    assert winding_decomposition(h, GroupWord(4, L)) == (m, len(pre) + len(post))
