"""Clean-room software model of an Ethernet MAC as a deep pipeline.

Frames are marshalled to 4-bit MII nibbles (low nibble of each octet
first, 25 MHz clock) and de-marshalled by a clocked state machine that
lands one nibble per clock in one pipeline slot. Header fields become
readable the instant their last nibble arrives, which gives cut-through
access to the destination address long before the frame ends; the frame
check sequence verdict is only available at end of stream. A transmission
can be aborted mid-stream by completing it with a deliberately corrupted
FCS, which any compliant receiver will discard.

No CSMA/CD, duplex, inter-frame gap, or VLAN handling: one frame per
stream, ethertype is two opaque octets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import FrameError

MIN_FRAME = 64
MAX_FRAME = 1518
MIN_PAYLOAD = 46
MAX_PAYLOAD = 1500
HEADER_LEN = 14
FCS_LEN = 4
PREAMBLE_OCTETS = b"\x55" * 7
SFD_OCTET = 0xD5
MII_CLOCK_PERIOD = 40e-9  # 25 MHz

#: Fixed pipeline window; a maximum-size frame needs 3052 slots.
SLOT_WINDOW = 4096


def _make_crc_table() -> tuple[int, ...]:
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ 0xEDB88320 if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _make_crc_table()


def crc32_fcs(octets: bytes) -> bytes:
    """Ethernet frame check sequence over the given octets.

    Reflected CRC-32, register initialised to all ones, final complement;
    returned least-significant octet first as transmitted on the wire.
    """
    crc = 0xFFFFFFFF
    table = _CRC_TABLE
    for b in octets:
        crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8)
    return (crc ^ 0xFFFFFFFF).to_bytes(4, "little")


def mac_address(value: bytes | str) -> bytes:
    """Normalise a MAC address given as 6 raw octets or colon-separated hex."""
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 6:
            raise FrameError(f"bad MAC address {value!r}")
        value = bytes(int(p, 16) for p in parts)
    value = bytes(value)
    if len(value) != 6:
        raise FrameError(f"MAC address must be 6 octets, got {len(value)}")
    return value


def ethertype_bytes(value: bytes | int) -> bytes:
    if isinstance(value, int):
        return value.to_bytes(2, "big")
    value = bytes(value)
    if len(value) != 2:
        raise FrameError(f"ethertype must be 2 octets, got {len(value)}")
    return value


@dataclass(frozen=True)
class EthernetFrame:
    """Octet-level 802.3 frame, FCS included."""

    dst: bytes
    src: bytes
    ethertype: bytes
    payload: bytes
    pad: bytes
    fcs: bytes
    fcs_corrupted: bool = False

    def __post_init__(self) -> None:
        if len(self.dst) != 6 or len(self.src) != 6:
            raise FrameError("dst and src must each be 6 octets")
        if len(self.ethertype) != 2:
            raise FrameError("ethertype must be 2 octets")
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameError(f"payload {len(self.payload)} exceeds {MAX_PAYLOAD} octets")
        if len(self.fcs) != FCS_LEN:
            raise FrameError("fcs must be 4 octets")
        total = self.wire_length
        if not MIN_FRAME <= total <= MAX_FRAME:
            raise FrameError(f"frame length {total} outside [{MIN_FRAME}, {MAX_FRAME}]")
        good = crc32_fcs(self.dst + self.src + self.ethertype + self.payload + self.pad)
        if not self.fcs_corrupted and self.fcs != good:
            raise FrameError("fcs does not match frame contents")

    @property
    def wire_length(self) -> int:
        return HEADER_LEN + len(self.payload) + len(self.pad) + FCS_LEN

    def serialize(self) -> bytes:
        return self.dst + self.src + self.ethertype + self.payload + self.pad + self.fcs


def build_frame(dst: bytes | str, src: bytes | str, ethertype: bytes | int,
                payload: bytes = b"") -> EthernetFrame:
    """Assemble a frame: pad the payload to the 46-octet minimum, append FCS."""
    dst = mac_address(dst)
    src = mac_address(src)
    ethertype = ethertype_bytes(ethertype)
    payload = bytes(payload)
    if len(payload) > MAX_PAYLOAD:
        raise FrameError(f"payload {len(payload)} exceeds {MAX_PAYLOAD} octets")
    pad = bytes(max(0, MIN_PAYLOAD - len(payload)))
    fcs = crc32_fcs(dst + src + ethertype + payload + pad)
    return EthernetFrame(dst, src, ethertype, payload, pad, fcs)


@dataclass(frozen=True)
class MiiNibbleStream:
    """Sequence of 4-bit MII values, one per clock."""

    nibbles: bytes
    clock_period: float = MII_CLOCK_PERIOD

    def __post_init__(self) -> None:
        object.__setattr__(self, "nibbles", bytes(self.nibbles))
        if self.nibbles and max(self.nibbles) > 15:
            raise ValueError("nibble values must be in [0, 15]")
        if not self.clock_period > 0:
            raise ValueError("clock_period must be positive")

    def __len__(self) -> int:
        return len(self.nibbles)

    def to_string(self) -> str:
        """Contiguous hex-digit form, one digit per nibble."""
        return "".join(f"{n:x}" for n in self.nibbles)

    @classmethod
    def from_string(cls, text: str, clock_period: float = MII_CLOCK_PERIOD) -> "MiiNibbleStream":
        return cls(bytes(int(c, 16) for c in text.strip()), clock_period)


def octets_to_nibbles(octets: bytes) -> bytes:
    """Split octets into MII nibbles, low nibble first."""
    out = bytearray()
    for b in octets:
        out.append(b & 0xF)
        out.append(b >> 4)
    return bytes(out)


def stream_from_wire_octets(octets: bytes) -> MiiNibbleStream:
    """Nibble stream for raw wire octets (dst..fcs), preamble and SFD prepended."""
    return MiiNibbleStream(octets_to_nibbles(PREAMBLE_OCTETS + bytes([SFD_OCTET]) + octets))


def mii_marshal(frame: EthernetFrame) -> MiiNibbleStream:
    """Marshal a frame onto the MII: 7x55 preamble, D5 SFD, then the frame."""
    return stream_from_wire_octets(frame.serialize())


_HUNT, _HEADER, _DATA, _DONE = range(4)

#: Slot field tags, in arrival order.
_TAGS = ("noise", "preamble", "sfd", "dst", "src", "ethertype", "data")


class PipelineState:
    """De-marshalling pipeline for one frame reception.

    Each :meth:`step` consumes exactly one nibble, writes one slot record
    ``(field, nibble, recognised)`` and advances the cursor by one. Fields
    appear in ``fields_valid`` at the earliest clock at which their last
    nibble has arrived; payload, length, and the FCS verdict can only be
    known once the stream ends, signalled by :meth:`finish`.

    Stepping mutates the state in place and returns it; a state must not be
    stepped concurrently from multiple threads.
    """

    __slots__ = (
        "slots", "cursor", "phase", "fields_valid", "sfd_found",
        "_prev_preamble", "_have_lo", "_lo", "_header", "_data",
        "dst", "src", "ethertype", "frame_length", "payload", "fcs", "fcs_ok",
    )

    def __init__(self) -> None:
        self.slots: list[tuple[str, int, bool] | None] = [None] * SLOT_WINDOW
        self.cursor = 0
        self.phase = _HUNT
        self.fields_valid: dict[str, int] = {}
        self.sfd_found = False
        self._prev_preamble = False
        self._have_lo = False
        self._lo = 0
        self._header = bytearray()
        self._data = bytearray()
        self.dst: bytes | None = None
        self.src: bytes | None = None
        self.ethertype: bytes | None = None
        self.frame_length: int | None = None
        self.payload: bytes | None = None
        self.fcs: bytes | None = None
        self.fcs_ok: bool | None = None

    def step(self, nibble: int) -> "PipelineState":
        if not 0 <= nibble <= 15:
            raise ValueError(f"nibble value {nibble} out of range [0, 15]")
        phase = self.phase
        if phase == _DONE:
            raise RuntimeError("pipeline already finished")
        cur = self.cursor + 1
        self.cursor = cur
        if phase == _DATA:
            if self._have_lo:
                self._data.append(self._lo | (nibble << 4))
                self._have_lo = False
            else:
                self._lo = nibble
                self._have_lo = True
            tag, ok = "data", True
        elif phase == _HEADER:
            if self._have_lo:
                self._header.append(self._lo | (nibble << 4))
                self._have_lo = False
                n = len(self._header)
                if n == 6:
                    self.dst = bytes(self._header[:6])
                    self.fields_valid["dst"] = cur
                elif n == 12:
                    self.src = bytes(self._header[6:12])
                    self.fields_valid["src"] = cur
                elif n == 14:
                    self.ethertype = bytes(self._header[12:14])
                    self.fields_valid["ethertype"] = cur
                    self.phase = _DATA
            else:
                self._lo = nibble
                self._have_lo = True
            n = len(self._header) + self._have_lo
            tag = "dst" if n <= 6 else ("src" if n <= 12 else "ethertype")
            ok = True
        else:  # _HUNT
            if nibble == 0x5:
                self._prev_preamble = True
                tag, ok = "preamble", True
            elif nibble == 0xD and self._prev_preamble:
                self.sfd_found = True
                self.fields_valid["sfd"] = cur
                self.phase = _HEADER
                self._have_lo = False
                tag, ok = "sfd", True
            else:
                # Preamble violation: drop back to hunting, not fatal.
                self._prev_preamble = False
                tag, ok = "noise", False
        self.slots[(cur - 1) % SLOT_WINDOW] = (tag, nibble, ok)
        return self

    def feed(self, nibbles: bytes) -> "PipelineState":
        """Step once per nibble, in order."""
        step = self.step
        for n in nibbles:
            step(n)
        return self

    def finish(self) -> "PipelineState":
        """Signal end of stream (MII data-valid deassertion).

        Length, payload and the FCS verdict become valid here: a dangling
        half octet never completed and is dropped.
        """
        if self.phase == _DONE:
            return self
        cur = self.cursor
        if self.sfd_found:
            data = bytes(self._data)
            self.frame_length = len(self._header) + len(data)
            self.fields_valid["length"] = cur
            if len(data) >= FCS_LEN and len(self._header) == HEADER_LEN:
                self.payload = data[:-FCS_LEN]
                self.fcs = data[-FCS_LEN:]
                self.fcs_ok = crc32_fcs(
                    self.dst + self.src + self.ethertype + self.payload
                ) == self.fcs
                self.fields_valid["payload"] = cur
            else:
                self.fcs_ok = False
            self.fields_valid["fcs_ok"] = cur
        self.phase = _DONE
        return self

    def field_values(self) -> dict:
        values = {
            "dst": self.dst,
            "src": self.src,
            "ethertype": self.ethertype,
            "length": self.frame_length,
            "payload": self.payload,
            "fcs_ok": self.fcs_ok,
        }
        return {name: values[name] for name in self.fields_valid if name in values}


def pipeline_step(state: PipelineState, nibble: int) -> PipelineState:
    """Clock one nibble into the pipeline. Mutates and returns ``state``."""
    return state.step(nibble)


def cut_through_peek(state: PipelineState) -> dict:
    """Fields readable right now, ahead of frame completion.

    The destination address is available 12 header nibbles after the SFD,
    before any payload nibble has arrived.
    """
    return state.field_values()


@dataclass(frozen=True)
class ValidationResult:
    """Accepted frame or a rejection reason: no_sfd, runt, oversize, fcs_mismatch."""

    accepted: bool
    frame: EthernetFrame | None
    reason: str | None

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "reason": self.reason,
            "frame": self.frame.serialize().hex() if self.frame else None,
        }


def validate_frame(stream: MiiNibbleStream) -> ValidationResult:
    """Run the pipeline over a whole stream and accept or reject the frame."""
    state = PipelineState()
    state.feed(stream.nibbles)
    state.finish()
    if not state.sfd_found:
        return ValidationResult(False, None, "no_sfd")
    if state.frame_length < MIN_FRAME:
        return ValidationResult(False, None, "runt")
    if state.frame_length > MAX_FRAME:
        return ValidationResult(False, None, "oversize")
    if not state.fcs_ok:
        return ValidationResult(False, None, "fcs_mismatch")
    frame = EthernetFrame(state.dst, state.src, state.ethertype,
                          state.payload, b"", state.fcs)
    return ValidationResult(True, frame, None)


def abort_transmission(stream: MiiNibbleStream, abort_at: int) -> MiiNibbleStream:
    """Abort a transmission already under way by corrupting its checksum.

    The stream is completed to full length but its 8 FCS nibbles are
    replaced with the bitwise complement of the correct FCS, so a compliant
    receiver is guaranteed to discard the frame; a random value could
    collide with the true FCS. Nothing before the FCS changes, so the abort
    is undetectable until the stream ends.

    ``abort_at`` is the nibble index at which the abort decision takes
    effect; it must lie beyond the preamble/SFD and at least 8 nibbles
    before the end of the stream.
    """
    nibbles = stream.nibbles
    n = len(nibbles)
    if not 16 <= abort_at <= n - 8:
        raise ValueError(f"abort_at {abort_at} outside legal range [16, {n - 8}]")
    sfd = None
    for i in range(1, n):
        if nibbles[i] == 0xD and nibbles[i - 1] == 0x5:
            sfd = i
            break
    if sfd is None:
        raise ValueError("stream carries no SFD; nothing to abort")
    body = nibbles[sfd + 1:n - 8]
    octets = bytes(body[i] | (body[i + 1] << 4) for i in range(0, len(body) - len(body) % 2, 2))
    good = crc32_fcs(octets)
    bad = bytearray()
    for b in good:
        bad.append((b & 0xF) ^ 0xF)
        bad.append((b >> 4) ^ 0xF)
    return MiiNibbleStream(nibbles[:n - 8] + bytes(bad), stream.clock_period)


@dataclass(frozen=True)
class SignatureHook:
    """Pluggable signer: a tag function and its verifier.

    ``sign`` maps octets to a fixed-length tag; ``verify`` accepts exactly
    the (message, tag) pairs that ``sign`` produces.
    """

    signer_id: str
    tag_length: int
    sign: Callable[[bytes], bytes]
    verify: Callable[[bytes, bytes], bool]


def keyed_checksum_hook(signer_id: str) -> SignatureHook:
    """Bundled test signer: an 8-octet keyed double CRC-32 tag.

    NOT cryptographically secure; it exists so the signing path can be
    exercised deterministically. Real deployments provide their own hook.
    """
    key = signer_id.encode()

    def sign(message: bytes) -> bytes:
        first = crc32_fcs(key + message)
        return first + crc32_fcs(key + message + first)

    def verify(message: bytes, tag: bytes) -> bool:
        return sign(message) == tag

    return SignatureHook(signer_id, 8, sign, verify)


@dataclass(frozen=True)
class SignatureCheck:
    accepted: bool
    reason: str | None


def sign_frame(frame: EthernetFrame, hook: SignatureHook) -> EthernetFrame:
    """Append a tag over dst|src|ethertype|payload to the payload, re-FCS."""
    message = frame.dst + frame.src + frame.ethertype + frame.payload
    tag = hook.sign(message)
    if len(frame.payload) + len(tag) > MAX_PAYLOAD:
        raise FrameError(
            f"payload {len(frame.payload)} plus {len(tag)}-octet tag exceeds {MAX_PAYLOAD}"
        )
    return build_frame(frame.dst, frame.src, frame.ethertype, frame.payload + tag)


def verify_frame(frame: EthernetFrame, hook: SignatureHook) -> SignatureCheck:
    """Check the trailing payload tag; dual of :func:`sign_frame`."""
    tag_len = hook.tag_length
    if len(frame.payload) < tag_len:
        return SignatureCheck(False, "signature_invalid")
    message = frame.dst + frame.src + frame.ethertype + frame.payload[:-tag_len]
    if hook.verify(message, frame.payload[-tag_len:]):
        return SignatureCheck(True, None)
    return SignatureCheck(False, "signature_invalid")
