"""
Runtime values of the contract DSL.

A value is one of the Python types below, tagged by the DSL primitive type
it inhabits:

    address -> str (opaque identity)
    bool    -> bool
    uint    -> int in [0, 2**256)
    bytes32 -> bytes of length 32
    string  -> str

`msg.data` entries carry values whose static type is unknown; they are
typed as `dynamic` and checked when they reach a typed location.
"""

import hashlib
import re
from typing import Any, Union

Value = Union[bool, int, bytes, str]

PRIMITIVE_TYPES = ("address", "bool", "uint", "bytes32", "string")
DYNAMIC = "dynamic"

UINT_MAX = 2**256 - 1
ZERO_ADDRESS = "0x0"

_BYTES32_RE = re.compile(r"^0x[0-9a-fA-F]{64}$")


def default_value(type_name: str) -> Value:
    """Return the zero value an attribute of `type_name` starts with."""
    if type_name == "address":
        return ZERO_ADDRESS
    if type_name == "bool":
        return False
    if type_name == "uint":
        return 0
    if type_name == "bytes32":
        return bytes(32)
    if type_name == "string":
        return ""
    raise ValueError(f"unknown primitive type '{type_name}'")


def value_matches(type_name: str, value: Any) -> bool:
    """Check that a runtime value inhabits a primitive (or dynamic) type."""
    if type_name == DYNAMIC:
        return isinstance(value, (bool, int, bytes, str))
    if type_name == "bool":
        return isinstance(value, bool)
    if type_name == "uint":
        return isinstance(value, int) and not isinstance(value, bool) and 0 <= value <= UINT_MAX
    if type_name == "bytes32":
        return isinstance(value, bytes) and len(value) == 32
    if type_name in ("address", "string"):
        return isinstance(value, str)
    return False


def bytes32_from_hex(text: str) -> bytes:
    """Decode a `0x` hex literal into a left-padded bytes32 value."""
    digits = text[2:]
    if len(digits) > 64:
        raise ValueError(f"hex literal wider than 32 bytes: {text}")
    if len(digits) % 2:
        digits = "0" + digits
    return bytes.fromhex(digits).rjust(32, b"\x00")


def canonical_encoding(value: Value) -> bytes:
    """Encode a value into the byte string hashed by `sha256`."""
    if isinstance(value, bool):
        return b"\x01" if value else b"\x00"
    if isinstance(value, int):
        return value.to_bytes(32, "big")
    if isinstance(value, bytes):
        return value
    return value.encode("utf-8")


def sha256_value(value: Value) -> bytes:
    return hashlib.sha256(canonical_encoding(value)).digest()


def encode_value(value: Value) -> Union[bool, int, str]:
    """Convert a runtime value into its JSON form (bytes32 as 0x hex)."""
    if isinstance(value, bytes):
        return "0x" + value.hex()
    return value


def decode_value(raw: Any) -> Value:
    """
    Convert a JSON or TOML scalar back into a runtime value.

    Strings of exactly `0x` plus 64 hex digits are bytes32; every other
    string stays a string.
    """
    if isinstance(raw, (bool, int, bytes)):
        return raw
    if isinstance(raw, str):
        if _BYTES32_RE.match(raw):
            return bytes.fromhex(raw[2:])
        return raw
    raise ValueError(f"unsupported value {raw!r}")


def encode_mapping(values: dict) -> dict:
    return {key: encode_value(value) for key, value in values.items()}


def decode_mapping(values: dict) -> dict:
    return {key: decode_value(value) for key, value in values.items()}
