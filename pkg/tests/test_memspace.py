import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gridpar import launch
from gridpar.errors import BoundsError, ContractViolation, FreedBufferError, InvalidArgumentError, LaunchError
from gridpar.kernels import kernel_scale
from gridpar.layout import AOS, AoSoA, make_layout
from gridpar.memspace import (
    Coherence,
    ConstantTable,
    FieldPair,
    copy_const_to_target,
    copy_from_target,
    copy_subset_from_target,
    copy_subset_to_target,
    copy_to_target,
    target_calloc,
    target_free,
    target_malloc,
)


def test_calloc_is_zero():
    buf = target_calloc(5, "f64")
    host = np.full(5, 7.0)
    copy_from_target(host, buf)
    assert host.tolist() == [0.0] * 5


def test_malloc_for_fig2_field():
    lay = make_layout(4, 3, AOS)
    buf = target_malloc(lay.total, "f64", lay)
    assert buf.count == 12 and len(buf.data) == 12
    # fresh storage is poisoned, not zero
    assert np.isnan(buf.data).all()


@pytest.mark.parametrize("dtype", ["i32", "i64"])
def test_integer_buffers(dtype):
    buf = target_calloc(3, dtype)
    src = np.array([1, -2, 3], dtype=buf.dtype)
    copy_to_target(buf, src)
    out = np.zeros(3, dtype=buf.dtype)
    copy_from_target(out, buf)
    assert out.tolist() == [1, -2, 3]


def test_free_then_access_fails():
    buf = target_malloc(4)
    target_free(buf)
    with pytest.raises(FreedBufferError):
        buf.data
    with pytest.raises(FreedBufferError):
        copy_to_target(buf, np.zeros(4))
    with pytest.raises(FreedBufferError):
        target_free(buf)


def test_free_pair_then_launch_fails():
    pair = FieldPair(make_layout(4, 3, AOS))
    pair.free()
    with pytest.raises(FreedBufferError):
        kernel_scale(pair, ConstantTable(a=1.0))


@pytest.mark.parametrize("count", [0, -1, 2.5])
def test_bad_counts(count):
    with pytest.raises(InvalidArgumentError):
        target_malloc(count)


def test_bad_dtype():
    with pytest.raises(InvalidArgumentError):
        target_malloc(3, "f32")


def test_copy_mismatch():
    buf = target_malloc(4)
    with pytest.raises(InvalidArgumentError):
        copy_to_target(buf, np.zeros(5))
    with pytest.raises(InvalidArgumentError):
        copy_to_target(buf, np.zeros(4, dtype=np.int64))
    with pytest.raises(InvalidArgumentError):
        copy_from_target(np.zeros(3), buf)


@settings(max_examples=1000, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 64), elements=st.floats(allow_nan=True, allow_infinity=True)))
def test_round_trip_is_bitwise(values):
    buf = target_malloc(values.size)
    copy_to_target(buf, values)
    back = np.empty_like(values)
    copy_from_target(back, buf)
    assert back.tobytes() == values.tobytes()


def test_identity_scale_round_trip():
    pair = FieldPair.from_logical(make_layout(1, 3, AOS), [[1.5], [-2.0], [0.0]])
    copy_to_target(pair)
    kernel_scale(pair, ConstantTable(a=1.0))
    copy_from_target(pair)
    assert pair.logical().ravel().tolist() == [1.5, -2.0, 0.0]


@pytest.mark.parametrize("a,expected", [(2.0, [2.0, 4.0, 6.0]), (0.0, [0.0, 0.0, 0.0]), (1.0, [1.0, 2.0, 3.0])])
def test_constant_reaches_kernel(a, expected):
    pair = FieldPair.from_logical(make_layout(1, 3, AOS), [[1.0], [2.0], [3.0]])
    copy_to_target(pair)
    consts = ConstantTable()
    copy_const_to_target(consts, "a", a)
    kernel_scale(pair, consts)
    copy_from_target(pair)
    assert pair.logical().ravel().tolist() == expected


def test_constant_write_during_launch_is_rejected():
    pair = FieldPair(make_layout(4, 1, AOS))
    consts = ConstantTable(a=1.0)

    def sneaky(chunk, c, field):
        copy_const_to_target(consts, "a", 5.0)

    with pytest.raises(LaunchError) as info:
        launch(sneaky, 4, pair, consts=consts)
    assert isinstance(info.value.__cause__, ContractViolation)
    assert consts["a"] == 1.0
    # table is writable again once the launch is over
    copy_const_to_target(consts, "a", 3.0)
    assert consts["a"] == 3.0


def test_host_and_target_are_distinct():
    pair = FieldPair.from_logical(make_layout(4, 3, AOS), np.ones((3, 4)))
    copy_to_target(pair)
    pair.host[:] = 100.0
    kernel_scale(pair, ConstantTable(a=2.0))
    copy_from_target(pair)
    assert np.all(pair.logical() == 2.0)


def test_coherence_transitions():
    pair = FieldPair(make_layout(4, 3, AOS))
    assert pair.coherence is Coherence.HOST_DIRTY
    copy_to_target(pair)
    assert pair.coherence is Coherence.COHERENT
    kernel_scale(pair, ConstantTable(a=1.0))
    assert pair.coherence is Coherence.TARGET_DIRTY
    copy_from_target(pair)
    assert pair.coherence is Coherence.COHERENT


def _poisoned_pair(nsites=16, ncomp=3, scheme=AoSoA(4)):
    pair = FieldPair(make_layout(nsites, ncomp, scheme))
    rng = np.random.default_rng(1)
    pair.set_logical(rng.uniform(size=(ncomp, nsites)))
    return pair


def test_subset_copy_touches_exactly_listed_sites():
    pair = _poisoned_pair()
    before = pair.target.data.copy()
    copy_subset_to_target(pair, [0, 5, 7])
    after = pair.target.data
    changed = np.flatnonzero(before.view(np.uint64) != after.view(np.uint64))
    assert changed.size == 9
    # oracle: full copy, then restore everything outside the subset
    oracle = before.copy()
    full = pair.host.copy()
    mask = np.zeros(pair.layout.total, bool)
    mask[pair.layout.indices(np.arange(3)[:, None], np.array([[0, 5, 7]])).ravel()] = True
    oracle[mask] = full[mask]
    assert after.tobytes() == oracle.tobytes()


def test_subset_all_sites_equals_full_copy():
    pair = _poisoned_pair()
    copy_subset_to_target(pair, range(16))
    logical = pair.layout.unpack(pair.target.data)
    assert np.array_equal(logical, pair.logical())


def test_empty_subset_changes_nothing():
    pair = _poisoned_pair()
    before = pair.target.data.tobytes()
    copy_subset_to_target(pair, [])
    assert pair.target.data.tobytes() == before


def test_subset_from_target():
    pair = _poisoned_pair()
    copy_to_target(pair)
    pair.target.data[:] = -1.0
    host_before = pair.host.copy()
    copy_subset_from_target(pair, [3])
    changed = np.flatnonzero(host_before != pair.host)
    assert changed.size == 3
    assert np.all(pair.logical()[:, 3] == -1.0)


@pytest.mark.parametrize("sites,err", [([16], BoundsError), ([-1], BoundsError), ([2, 2], InvalidArgumentError)])
def test_subset_errors(sites, err):
    with pytest.raises(err):
        copy_subset_to_target(_poisoned_pair(), sites)
