import pytest
from hypothesis import given, strategies as st

from reviewchain.encoding import DecodeError, Reader, digest, enc_bool, enc_bytes, enc_int, enc_str


def test_int_is_big_endian_u64():
    assert enc_int(1) == b"\x00" * 7 + b"\x01"
    assert enc_int(2**64 - 1) == b"\xff" * 8


@pytest.mark.parametrize("bad", [-1, 2**64])
def test_int_range(bad):
    with pytest.raises(ValueError):
        enc_int(bad)


def test_digest_is_sha256():
    assert digest(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@given(st.integers(0, 2**64 - 1), st.binary(max_size=300), st.text(max_size=50), st.booleans())
def test_round_trip(n, b, s, flag):
    r = Reader(enc_int(n) + enc_bytes(b) + enc_str(s) + enc_bool(flag))
    assert (r.int(), r.bytes(), r.str(), r.bool()) == (n, b, s, flag)
    r.finish()
    assert r.exhausted


def test_truncated_input():
    with pytest.raises(DecodeError):
        Reader(enc_bytes(b"hello")[:-1]).bytes()


def test_trailing_bytes_rejected():
    r = Reader(enc_int(3) + b"x")
    r.int()
    with pytest.raises(DecodeError):
        r.finish()


def test_bad_bool():
    with pytest.raises(DecodeError):
        Reader(b"\x02").bool()
