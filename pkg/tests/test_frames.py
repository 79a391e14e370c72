import pytest

from platoonsim.frames import (
    ALLOCATION_BASE_SIZE,
    ANNOUNCE_SIZE,
    Frame,
    FrameKind,
    NodeType,
    allocation_size,
    decode_control,
    encode_control,
    make_allocation,
    make_announce,
)


def test_announce_roundtrip():
    frame = make_announce(sender=7, generated_at=123_456_789, slots_requested=2,
                          node_type=NodeType.EMERGENCY)
    wire = encode_control(frame)
    assert len(wire) == ANNOUNCE_SIZE
    back = decode_control(wire)
    assert back.kind is FrameKind.CONTROL_ANNOUNCE
    assert back.sender == 7
    assert back.generated_at == 123_456_789
    assert back.slots_requested == 2
    assert back.node_type is NodeType.EMERGENCY
    assert back.size == ANNOUNCE_SIZE


def test_allocation_roundtrip_and_size():
    allocs = {3: (2, 1), 5: (3, 2), 9: (5, 1)}
    frame = make_allocation(sender=3, generated_at=42, allocations=allocs)
    assert frame.size == allocation_size(3) == ALLOCATION_BASE_SIZE + 24
    wire = encode_control(frame)
    assert len(wire) == frame.size
    back = decode_control(wire)
    assert back.kind is FrameKind.CONTROL_ALLOCATION
    assert back.allocations == allocs


def test_allocation_padding_is_zeroed():
    frame = make_announce(sender=1, generated_at=0)
    wire = encode_control(frame)
    assert wire[15:] == b"\x00" * (ANNOUNCE_SIZE - 15)


def test_data_frames_have_no_control_encoding():
    frame = Frame(kind=FrameKind.DATA, sender=0, size=800, generated_at=0)
    with pytest.raises(ValueError):
        encode_control(frame)


def test_payload_larger_than_declared_size_rejected():
    allocs = {vid: (2 + vid, 1) for vid in range(40)}
    frame = make_allocation(sender=0, generated_at=0, allocations=allocs)
    frame.size = 50  # smaller than the 17 + 8*40 content
    with pytest.raises(ValueError):
        encode_control(frame)


def test_decode_rejects_short_buffer():
    with pytest.raises(ValueError):
        decode_control(b"\x01\x02")


def test_kind_labels():
    assert FrameKind.DATA.label == "data"
    assert FrameKind.CONTROL_ANNOUNCE.label == "control-announce"
    assert FrameKind.CONTROL_ALLOCATION.label == "control-allocation"
