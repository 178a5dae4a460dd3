"""Coin flipping over a telephone line, committed through curve coefficients.

One party (Alice) commits to a secret curve by publishing the first m
coefficients of its multiplicative trace sequence; the other (Bob) challenges
with primes beyond the committed range. The parity pair at the challenge
primes decides the toss: (odd, even) is heads, (even, odd) is tails, anything
else is retried. After the verdict Alice reveals the curve and Bob recomputes
everything she ever sent.

For a degree-6 curve parities are odd with asymptotic frequency 1/3, so each
trial decides with probability about 2/9 + 2/9 = 4/9 and, when it decides,
heads and tails are equally likely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ecurve import Curve, ZetaCoeffs, prime_coefficient, splitting_degree, zeta_coefficients
from .errors import DomainError, ResourceError
from .numtheory import is_probable_prime, primes_up_to
from .transcript import Transcript, text_payload

HEADS = "heads"
TAILS = "tails"
RETRY = "retry"
UNDECIDED = "undecided"

_SETUP_BUDGET = 200_000


@dataclass(frozen=True)
class Trial:
    p: int
    p_prime: int
    parities: tuple[int, int] | None
    verdict: str
    bad_prime: bool = False


@dataclass
class CoinFlipSession:
    """State of one protocol run; `curve` is Alice-private until reveal."""

    B: int
    k: int
    m: int
    curve: Curve
    commitment: ZetaCoeffs
    rounds: list[Trial] = field(default_factory=list)
    challenge_factor: int = 10
    _trace_cache: dict[int, int] = field(default_factory=dict)

    def trace_parity(self, p: int) -> int:
        if p not in self._trace_cache:
            self._trace_cache[p] = prime_coefficient(self.curve, p)
        return self._trace_cache[p] & 1


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    failure: str | None = None
    first_mismatch: int | None = None


@dataclass(frozen=True)
class SessionResult:
    verdict: str
    n_trials: int
    session: CoinFlipSession
    verified: VerifyResult
    transcript: Transcript


def commitment_length(B: int, k: int) -> int:
    """m = floor(log2(B)^k)."""
    return int(math.floor(math.log2(B) ** k))


def alice_setup(B: int, k: int, rng: np.random.Generator, challenge_factor: int = 10) -> CoinFlipSession:
    """Pick a degree-6 curve with discriminant in [B, 2B] and commit to it."""
    if B < 16:
        raise DomainError(f"need B >= 16, got {B}")
    if k < 3:
        raise DomainError(f"need k >= 3, got {k}")
    a_cap = int((B / 2) ** (1 / 3)) + 1
    b_cap = math.isqrt(2 * B // 27) + 1
    for _ in range(_SETUP_BUDGET):
        a = int(rng.integers(-a_cap, a_cap + 1))
        b = int(rng.integers(-b_cap, b_cap + 1))
        disc = 4 * a**3 + 27 * b**2
        if not B <= disc <= 2 * B:
            continue
        if splitting_degree(a, b) != 6:
            continue
        curve = Curve(a, b)
        m = commitment_length(B, k)
        return CoinFlipSession(
            B=B,
            k=k,
            m=m,
            curve=curve,
            commitment=zeta_coefficients(curve, m),
            challenge_factor=challenge_factor,
        )
    raise ResourceError(f"no qualifying curve with discriminant in [{B}, {2 * B}]; enlarge B")


def bob_choose_primes(
    m: int, rng: np.random.Generator, challenge_factor: int = 10
) -> tuple[int, int]:
    """Two random primes m < p < p' drawn from (m, challenge_factor * m]."""
    if m < 1:
        raise DomainError(f"need m >= 1, got {m}")
    pool = primes_up_to(challenge_factor * m)
    pool = pool[pool > m]
    if len(pool) < 2:
        raise DomainError(f"fewer than two primes in ({m}, {challenge_factor * m}]")
    picks = rng.choice(len(pool), size=2, replace=False)
    p, p_prime = sorted(int(pool[i]) for i in picks)
    return p, p_prime


def run_trial(session: CoinFlipSession, p: int, p_prime: int) -> Trial:
    """Alice evaluates the parity pair at (p, p') and maps it to a verdict."""
    if not session.m < p < p_prime:
        raise DomainError(f"need m < p < p', got m={session.m}, p={p}, p'={p_prime}")
    if not (is_probable_prime(p) and is_probable_prime(p_prime)):
        raise DomainError("challenge values must be prime")
    disc = session.curve.discriminant
    if disc % p == 0 or disc % p_prime == 0:
        trial = Trial(p, p_prime, None, RETRY, bad_prime=True)
    else:
        parities = (session.trace_parity(p), session.trace_parity(p_prime))
        if parities == (1, 0):
            verdict = HEADS
        elif parities == (0, 1):
            verdict = TAILS
        else:
            verdict = RETRY
        trial = Trial(p, p_prime, parities, verdict)
    session.rounds.append(trial)
    return trial


def bob_verify(session: CoinFlipSession) -> VerifyResult:
    """Recompute everything from the revealed curve and check it matches.

    Covers the setup constraints (discriminant interval, degree 6, commitment
    length), every committed coefficient, and every trial's parities and
    verdict. On a commitment mismatch, `first_mismatch` is the first index n
    whose coefficient disagrees.
    """
    curve = session.curve
    disc = curve.discriminant
    if not session.B <= disc <= 2 * session.B:
        return VerifyResult(False, "discriminant outside [B, 2B]")
    if splitting_degree(curve.a, curve.b) != 6:
        return VerifyResult(False, "curve is not splitting degree 6")
    if session.m != commitment_length(session.B, session.k):
        return VerifyResult(False, "commitment length mismatch")
    recomputed = zeta_coefficients(curve, session.m)
    diff = np.nonzero(recomputed.values != session.commitment.values)[0]
    if len(diff):
        return VerifyResult(False, "commitment coefficient mismatch", int(diff[0]) + 1)
    for i, trial in enumerate(session.rounds):
        bad = disc % trial.p == 0 or disc % trial.p_prime == 0
        if bad != trial.bad_prime:
            return VerifyResult(False, f"trial {i}: bad-prime flag mismatch", i)
        if bad:
            expected = Trial(trial.p, trial.p_prime, None, RETRY, bad_prime=True)
        else:
            parities = (
                prime_coefficient(curve, trial.p) & 1,
                prime_coefficient(curve, trial.p_prime) & 1,
            )
            verdict = {(1, 0): HEADS, (0, 1): TAILS}.get(parities, RETRY)
            expected = Trial(trial.p, trial.p_prime, parities, verdict)
        if expected != trial:
            return VerifyResult(False, f"trial {i}: parity or verdict mismatch", i)
    return VerifyResult(True)


def run_session(
    B: int,
    k: int,
    max_rounds: int,
    rng: np.random.Generator,
    challenge_factor: int = 10,
) -> SessionResult:
    """Drive a full session: commit, challenge until decided, reveal, verify."""
    if max_rounds < 1:
        raise DomainError(f"need max_rounds >= 1, got {max_rounds}")
    session = alice_setup(B, k, rng, challenge_factor)
    transcript = Transcript()
    transcript.add(
        "commit",
        "alice",
        "bob",
        "public",
        text_payload(",".join(str(v) for v in session.commitment.values.tolist())),
    )
    verdict = UNDECIDED
    for _ in range(max_rounds):
        p, p_prime = bob_choose_primes(session.m, rng, challenge_factor)
        transcript.add("challenge", "bob", "alice", "public", text_payload(f"{p},{p_prime}"))
        trial = run_trial(session, p, p_prime)
        shown = "-" if trial.parities is None else f"{trial.parities[0]}{trial.parities[1]}"
        transcript.add(
            "trial", "alice", "bob", "public", text_payload(f"{shown},{trial.verdict}")
        )
        if trial.verdict in (HEADS, TAILS):
            verdict = trial.verdict
            break
    transcript.add(
        "reveal", "alice", "bob", "public", text_payload(f"{session.curve.a},{session.curve.b}")
    )
    verified = bob_verify(session)
    transcript.add(
        "verify", "bob", "alice", "public", text_payload("ok" if verified.ok else "fail")
    )
    return SessionResult(
        verdict=verdict,
        n_trials=len(session.rounds),
        session=session,
        verified=verified,
        transcript=transcript,
    )
