"""Key exchange protocols over a public channel, a broadcast stream, and a
teleportation side channel.

Three protocols, each producing a full transcript with an explicit
eavesdropper view:

* `classic_dh` - textbook discrete-log key exchange; everything Eve needs for
  a discrete-log attack is public.
* `pq_dh` - the generator is pulled out of the timed broadcast stream (never
  transmitted), then one of its bits is flipped at a position conveyed only
  by teleportation; only the start time, the modulus, and the two blinded
  shares go over the public channel.
* `private_exchange` - no arithmetic at all: the shared key is a broadcast
  window whose start slot is conveyed by teleportation against a public
  coarse slot schedule.

Both broadcast-based protocols begin with a ticking-qubit clock sync and
start counting bits mid-bit-period, so they tolerate sync residue up to half
a bit period. Derived keys are one-shot: reading them a second time raises.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .broadcast import (
    BroadcastSource,
    KeyWindow,
    Receiver,
    aligned_start_time,
    bits_to_int,
    extract_key,
    reception_index,
)
from .clocksync import ticking_qubit_sync
from .errors import DomainError, ProtocolError
from .numtheory import is_probable_prime, random_below, random_prime
from .teleport import teleport_index
from .transcript import SharedKey, Transcript, int_payload, text_payload

_MAX_WINDOW_RETRIES = 16
_MAX_FLIP_RETRIES = 80


@dataclass(frozen=True)
class DhParams:
    p: int
    g: int

    def __post_init__(self):
        if self.p < 3 or not is_probable_prime(self.p):
            raise DomainError(f"modulus {self.p} is not an odd prime")
        if not 1 <= self.g <= self.p - 1:
            raise DomainError(f"base {self.g} outside [1, {self.p - 1}]")


@dataclass(frozen=True)
class PartySecret:
    """A private exponent. Never serialized into any transcript."""

    exponent: int

    def __repr__(self):
        return "PartySecret(<hidden>)"


def _check_secret(secret: PartySecret, p: int):
    if not 1 <= secret.exponent <= p - 1:
        raise DomainError(f"secret exponent outside [1, {p - 1}]")


def random_secret(p: int, rng: np.random.Generator) -> PartySecret:
    """Uniform secret exponent in [1, p-1]; p may exceed 64 bits."""
    if p < 3:
        raise DomainError(f"modulus too small: {p}")
    return PartySecret(1 + random_below(p - 1, rng))


def flip_bit(value: int, index: int) -> int:
    """Flip bit `index` of `value`, counting from the least significant bit."""
    if index < 0:
        raise DomainError(f"bit index must be >= 0, got {index}")
    return value ^ (1 << index)


def modexp(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus by repeated squaring (O(log exponent) steps)."""
    if modulus < 2:
        raise DomainError(f"modulus must be >= 2, got {modulus}")
    if exponent < 0:
        raise DomainError(f"exponent must be >= 0, got {exponent}")
    result = 1
    base %= modulus
    while exponent:
        if exponent & 1:
            result = result * base % modulus
        base = base * base % modulus
        exponent >>= 1
    return result


# -- classic discrete-log exchange -------------------------------------------


@dataclass(frozen=True)
class DhResult:
    params: DhParams
    share_a: int
    share_b: int
    key_a: SharedKey
    key_b: SharedKey
    agreed: bool
    transcript: Transcript


def classic_dh(params: DhParams, a: PartySecret, b: PartySecret) -> DhResult:
    """Plain public-channel exchange: Eve sees p, g and both shares."""
    _check_secret(a, params.p)
    _check_secret(b, params.p)
    t = Transcript()
    t.add("params.p", "alice", "bob", "public", int_payload(params.p))
    t.add("params.g", "alice", "bob", "public", int_payload(params.g))
    share_a = modexp(params.g, a.exponent, params.p)
    share_b = modexp(params.g, b.exponent, params.p)
    t.add("share.alice", "alice", "bob", "public", int_payload(share_a))
    t.add("share.bob", "bob", "alice", "public", int_payload(share_b))
    k_a = modexp(share_b, a.exponent, params.p)
    k_b = modexp(share_a, b.exponent, params.p)
    return DhResult(
        params, share_a, share_b, SharedKey(k_a), SharedKey(k_b), k_a == k_b, t
    )


# -- broadcast-generator exchange --------------------------------------------


@dataclass(frozen=True)
class SyncContext:
    """Clock-sync outcome threaded through the broadcast protocols."""

    estimate_ns: float
    error_ns: float
    qubits_used: int


def run_clock_sync(
    alice: Receiver,
    bob: Receiver,
    rng: np.random.Generator,
    transcript: Transcript,
    n_bits: int,
    t_max_ns: float,
    shots_per_bit: int,
) -> SyncContext:
    true_delta = bob.clock.offset_ns - alice.clock.offset_ns
    result = ticking_qubit_sync(true_delta, n_bits, t_max_ns, shots_per_bit, rng)
    transcript.add(
        "sync.qubits", "alice", "bob", "quantum", int_payload(result.qubits_used)
    )
    transcript.add(
        "sync.estimate",
        "bob",
        "alice",
        "public",
        text_payload(f"{result.delta_estimate_ns:.3f}"),
    )
    return SyncContext(
        estimate_ns=result.delta_estimate_ns,
        error_ns=result.delta_estimate_ns - true_delta,
        qubits_used=result.qubits_used,
    )


def teleport_secret_int(
    value: int,
    bit_width: int,
    rng: np.random.Generator,
    transcript: Transcript,
    step: str,
) -> int:
    """Send an integer over the teleportation channel, logging what Eve sees.

    The joint-measurement outcome bits travel on the public classical channel
    (they are useless without the entangled half); the value itself never
    appears in any record.
    """
    runs: list = []
    received = teleport_index(value, bit_width, rng, sink=runs)
    transcript.add(f"{step}.epr", "alice", "bob", "quantum", int_payload(bit_width))
    for k, run in enumerate(runs):
        transcript.add(
            f"{step}.outcome[{k}]",
            "alice",
            "bob",
            "public",
            bytes((run.outcome.bit_z, run.outcome.bit_x)),
        )
    return received


@dataclass(frozen=True)
class PqDhResult:
    """Outcome of a broadcast-generator exchange run.

    Fields below `transcript` are simulator-side diagnostics (the secret
    values, for analysis); none of them appears in the transcript.
    """

    key_alice: SharedKey
    key_bob: SharedKey
    agreed: bool
    transcript: Transcript
    p: int
    generator_alice: int
    generator_bob: int
    tweaked_alice: int
    tweaked_bob: int
    flip_index: int
    share_alice: int
    share_bob: int
    sync_error_ns: float
    window_retries: int
    flip_retries: int
    start_index_alice: int


def pq_dh(
    source: BroadcastSource,
    alice: Receiver,
    bob: Receiver,
    window: KeyWindow,
    p: int,
    a: PartySecret,
    b: PartySecret,
    rng: np.random.Generator,
    sync_n_bits: int = 14,
    sync_t_max_ns: float = 1.6384e6,
    sync_shots_per_bit: int = 100,
) -> PqDhResult:
    """Exchange with a broadcast-extracted, teleport-tweaked generator.

    Steps: sync clocks; publicly announce the start time t; both parties
    read `window.length` bits from the stream (their generator g, never
    transmitted); teleport the index of one bit of g to flip, giving g1;
    exchange g1^a and g1^b publicly; both sides derive g1^(a*b) mod p.
    Mismatched derivations are reported via `agreed=False`, never silently.
    """
    if p < 3 or not is_probable_prime(p):
        raise DomainError(f"modulus {p} is not an odd prime")
    _check_secret(a, p)
    _check_secret(b, p)
    width = window.length
    transcript = Transcript()
    sync = run_clock_sync(
        alice, bob, rng, transcript, sync_n_bits, sync_t_max_ns, sync_shots_per_bit
    )
    delay_gap_ns = bob.propagation_delay_ns - alice.propagation_delay_ns

    t_alice = aligned_start_time(source, alice, window.start_local_time_ns)
    window_retries = 0
    while True:
        transcript.add(
            "start-time", "alice", "bob", "public", text_payload(f"{t_alice:.3f}")
        )
        t_bob = t_alice + delay_gap_ns + sync.estimate_ns
        g_alice = bits_to_int(extract_key(source, alice, KeyWindow(t_alice, width))) % p
        g_bob = bits_to_int(extract_key(source, bob, KeyWindow(t_bob, width))) % p
        transcript.add("generator.read", "satellite", "alice", "broadcast", b"")
        transcript.add("generator.read", "satellite", "bob", "broadcast", b"")
        if g_alice != 0 and g_bob != 0:
            break
        window_retries += 1
        if window_retries > _MAX_WINDOW_RETRIES:
            raise ProtocolError("no usable generator window found")
        transcript.add("window.retry", "bob", "alice", "public", b"")
        t_alice = aligned_start_time(
            source, alice, t_alice + (width + 1) * source.bit_period_ns
        )

    flip_retries = 0
    while True:
        flip_index = int(rng.integers(width))
        received_index = teleport_secret_int(
            flip_index, width, rng, transcript, "flip-index"
        )
        g1_alice = flip_bit(g_alice, flip_index)
        g1_bob = flip_bit(g_bob, received_index)
        if g1_alice % p != 0 and g1_bob % p != 0:
            break
        flip_retries += 1
        if flip_retries > _MAX_FLIP_RETRIES:
            raise ProtocolError("no usable flipped generator found")
        transcript.add("flip.retry", "alice", "bob", "public", b"")

    transcript.add("params.p", "alice", "bob", "public", int_payload(p))
    share_alice = modexp(g1_alice, a.exponent, p)
    share_bob = modexp(g1_bob, b.exponent, p)
    transcript.add("share.alice", "alice", "bob", "public", int_payload(share_alice))
    transcript.add("share.bob", "bob", "alice", "public", int_payload(share_bob))
    k_alice = modexp(share_bob, a.exponent, p)
    k_bob = modexp(share_alice, b.exponent, p)
    agreed = k_alice == k_bob
    if not agreed:
        transcript.add("key.mismatch", "bob", "alice", "public", b"")
    return PqDhResult(
        key_alice=SharedKey(k_alice),
        key_bob=SharedKey(k_bob),
        agreed=agreed,
        transcript=transcript,
        p=p,
        generator_alice=g_alice,
        generator_bob=g_bob,
        tweaked_alice=g1_alice,
        tweaked_bob=g1_bob,
        flip_index=flip_index,
        share_alice=share_alice,
        share_bob=share_bob,
        sync_error_ns=sync.error_ns,
        window_retries=window_retries,
        flip_retries=flip_retries,
        start_index_alice=reception_index(source, alice, t_alice),
    )


# -- private exchange (key straight from the stream) --------------------------


@dataclass(frozen=True)
class PrivateExchangeResult:
    key_alice: SharedKey
    key_bob: SharedKey
    agreed: bool
    transcript: Transcript
    slot_index: int
    sync_error_ns: float
    start_index_alice: int
    window_length: int


def private_exchange(
    source: BroadcastSource,
    alice: Receiver,
    bob: Receiver,
    window: KeyWindow,
    rng: np.random.Generator,
    slot_bits: int = 8,
    sync_n_bits: int = 14,
    sync_t_max_ns: float = 1.6384e6,
    sync_shots_per_bit: int = 100,
) -> PrivateExchangeResult:
    """Key = a broadcast window; only its slot index is secret (teleported).

    A coarse schedule of 2**slot_bits non-overlapping slots hanging off a
    public base time is announced; the chosen slot rides the teleportation
    channel. Eve sees the schedule but not which slot carries the key, and the
    stream itself is too voluminous for her to store.
    """
    if slot_bits < 1:
        raise DomainError(f"need slot_bits >= 1, got {slot_bits}")
    transcript = Transcript()
    sync = run_clock_sync(
        alice, bob, rng, transcript, sync_n_bits, sync_t_max_ns, sync_shots_per_bit
    )
    delay_gap_ns = bob.propagation_delay_ns - alice.propagation_delay_ns

    base_local = aligned_start_time(source, alice, window.start_local_time_ns)
    slot_period_ns = (window.length + 1) * source.bit_period_ns
    n_slots = 1 << slot_bits
    transcript.add(
        "slot-schedule",
        "alice",
        "bob",
        "public",
        text_payload(f"{base_local:.3f},{slot_period_ns:.3f},{n_slots}"),
    )
    slot = int(rng.integers(n_slots))
    received_slot = teleport_secret_int(slot, slot_bits, rng, transcript, "slot-index")

    start_alice = base_local + slot * slot_period_ns
    start_bob = base_local + received_slot * slot_period_ns + delay_gap_ns + sync.estimate_ns
    key_a = extract_key(source, alice, KeyWindow(start_alice, window.length))
    key_b = extract_key(source, bob, KeyWindow(start_bob, window.length))
    transcript.add("key.read", "satellite", "alice", "broadcast", b"")
    transcript.add("key.read", "satellite", "bob", "broadcast", b"")
    agreed = bool(np.array_equal(key_a, key_b))
    if not agreed:
        transcript.add("key.mismatch", "bob", "alice", "public", b"")
    return PrivateExchangeResult(
        key_alice=SharedKey(key_a),
        key_bob=SharedKey(key_b),
        agreed=agreed,
        transcript=transcript,
        slot_index=slot,
        sync_error_ns=sync.error_ns,
        start_index_alice=reception_index(source, alice, start_alice),
        window_length=window.length,
    )


# -- desk-scale eavesdropper with unlimited classical compute -----------------


def brute_force_dlog(p: int, g: int, target: int) -> int | None:
    """Smallest e with g^e == target mod p, or None if target is outside <g>."""
    value = 1
    for e in range(p - 1):
        if value == target:
            return e
        value = value * g % p
    return None


def crack_classic_dh(p: int, g: int, share_a: int, share_b: int) -> int:
    """Recover the classic-exchange key from its public view (O(p) work)."""
    a = brute_force_dlog(p, g, share_a)
    if a is None:
        raise DomainError("share is not a power of the announced base")
    return modexp(share_b, a, p)


def pq_candidate_keys(p: int, share_a: int, share_b: int, width: int) -> list[int]:
    """Every key consistent with the public view of a `pq_dh` run.

    Without the tweaked generator, Eve must try all 2**width candidates and
    solve a discrete log for each; different candidates generally produce
    different keys, so the public view alone does not determine the key.
    """
    keys = set()
    for g1 in range(1, 1 << width):
        if g1 % p == 0:
            continue
        e = brute_force_dlog(p, g1 % p, share_a)
        if e is None:
            continue
        keys.add(modexp(share_b, e, p))
    return sorted(keys)
