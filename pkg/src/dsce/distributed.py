"""Cooperative support-set estimation over a user network: synchronized
support exchange, simple and adaptively weighted majority voting, the full
three-stage distributed recovery drivers, and transmission-cost accounting.
"""

import json
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ProtocolError
from .recovery import (RecoveryResult, _fit_batch, _greedy_select,
                       _validate_omp_args)

WEIGHT_FLOOR = 1e-12

TRANSMISSION_SCHEMES = ("centralized_somp", "diomp_family")


@dataclass(frozen=True)
class NetworkTopology:
    """Directed cooperation graph: per-user in- and out-neighbor sets.

    Consistency (l in in_neighbors[k] iff k in out_neighbors[l]) is checked
    on construction. A self-loop means the user's own current estimate
    participates in its vote.
    """

    num_users: int
    in_neighbors: tuple
    out_neighbors: tuple

    def __post_init__(self):
        if len(self.in_neighbors) != self.num_users or \
                len(self.out_neighbors) != self.num_users:
            raise ProtocolError("neighbor lists must cover every user")
        for sets in (self.in_neighbors, self.out_neighbors):
            for s in sets:
                if any(l < 0 or l >= self.num_users for l in s):
                    raise ProtocolError("neighbor index out of range")
        for k in range(self.num_users):
            for l in self.in_neighbors[k]:
                if k not in self.out_neighbors[l]:
                    raise ProtocolError(
                        f"user {l} feeds user {k} but lacks the out-edge")
            for l in self.out_neighbors[k]:
                if k not in self.in_neighbors[l]:
                    raise ProtocolError(
                        f"user {k} targets user {l} but {l} lacks the in-edge")

    @classmethod
    def complete(cls, num_users: int, include_self: bool = True) -> "NetworkTopology":
        """Fully connected network; by default every user also hears itself."""
        everyone = frozenset(range(num_users))
        rows = tuple(
            everyone if include_self else everyone - {k}
            for k in range(num_users)
        )
        return cls(num_users=num_users, in_neighbors=rows, out_neighbors=rows)

    @classmethod
    def from_out_neighbors(cls, out_neighbors: Sequence[Sequence[int]]) -> "NetworkTopology":
        num_users = len(out_neighbors)
        outs = tuple(frozenset(int(l) for l in s) for s in out_neighbors)
        ins = tuple(
            frozenset(l for l in range(num_users) if k in outs[l])
            for k in range(num_users)
        )
        return cls(num_users=num_users, in_neighbors=ins, out_neighbors=outs)

    def physical_out_degree(self, user: int) -> int:
        """Out-edges that require an actual transmission (no self-loop)."""
        return len(self.out_neighbors[user] - {user})


@dataclass(frozen=True)
class WeightTable:
    """Per-receiver voting weights with their reliability accumulators.

    ``b[k][l]`` accumulates the exponentially smoothed count of indices the
    neighbor l reported that user k did not already hold; ``a[k][l]`` is the
    normalized inverse, so each user's incoming weights sum to one.
    """

    forgetting_factor: float
    b: tuple
    a: tuple

    @classmethod
    def uniform(cls, topology: NetworkTopology, forgetting_factor: float,
                initial_b: float = 1.0) -> "WeightTable":
        if not 0.0 < forgetting_factor < 1.0:
            raise ProtocolError("forgetting factor must lie in (0, 1)")
        if initial_b <= 0.0:
            raise ProtocolError("initial reliability must be positive")
        b_rows = []
        a_rows = []
        for k in range(topology.num_users):
            senders = sorted(topology.in_neighbors[k])
            if not senders:
                raise ProtocolError(f"user {k} has no in-neighbors")
            b_rows.append({l: initial_b for l in senders})
            a_rows.append({l: 1.0 / len(senders) for l in senders})
        return cls(forgetting_factor=forgetting_factor,
                   b=tuple(b_rows), a=tuple(a_rows))

    def weights_row(self, user: int) -> Dict[int, float]:
        return dict(self.a[user])


def update_weights(table: WeightTable, user: int,
                   received: Mapping[int, Sequence[int]],
                   previous_own: Sequence[int]) -> WeightTable:
    """Adapt one user's weights from the supports received this round.

    The reliability of sender l is smoothed toward the number of indices in
    its report that the user's own previous estimate lacked; weights are the
    normalized reciprocals, so senders reporting familiar supports gain
    influence. Reliabilities are floored at a tiny positive constant to keep
    the normalization finite.
    """
    if not received:
        raise ProtocolError("received map is empty")
    row_b = dict(table.b[user])
    missing = [l for l in received if l not in row_b]
    if missing:
        raise ProtocolError(f"no weight entry for senders {missing}")
    v = table.forgetting_factor
    own = set(previous_own)
    for l, support in received.items():
        novelty = len(set(support) - own)
        row_b[l] = max((1.0 - v) * row_b[l] + v * novelty, WEIGHT_FLOOR)
    inverse = {l: 1.0 / row_b[l] for l in row_b}
    total = sum(inverse.values())
    row_a = {l: inverse[l] / total for l in row_b}
    b = tuple(row_b if k == user else table.b[k] for k in range(len(table.b)))
    a = tuple(row_a if k == user else table.a[k] for k in range(len(table.a)))
    return WeightTable(forgetting_factor=v, b=b, a=a)


def vote_scores(received: Mapping[int, Sequence[int]],
                weights: Mapping[int, float], num_atoms: int) -> np.ndarray:
    """Accumulate each sender's weight onto the atoms of its support."""
    if not received:
        raise ProtocolError("received map is empty")
    z = np.zeros(num_atoms)
    for l in sorted(received):
        if l not in weights:
            raise ProtocolError(f"no weight available for sender {l}")
        z[list(received[l])] += weights[l]
    return z


def _top_indices(scores: np.ndarray, count: int) -> Tuple[int, ...]:
    # stable sort on the negated scores: ties resolve to the lowest index
    order = np.argsort(-scores, kind="stable")[:count]
    return tuple(sorted(int(i) for i in order))


def weighted_vote(received: Mapping[int, Sequence[int]],
                  weights: Mapping[int, float], count: int,
                  num_atoms: int) -> Tuple[int, ...]:
    """Select the ``count`` atoms with the largest accumulated weight.

    Ties break toward the lowest atom index; the result is returned in
    ascending order. With uniform weights this reduces exactly to simple
    majority voting.
    """
    if count < 1:
        raise ProtocolError("vote must select at least one index")
    return _top_indices(vote_scores(received, weights, num_atoms), count)


def majority_vote(received: Mapping[int, Sequence[int]], count: int,
                  num_atoms: int) -> Tuple[int, ...]:
    """Unweighted vote: every received support contributes one count per atom."""
    if not received:
        raise ProtocolError("received map is empty")
    if count < 1:
        raise ProtocolError("vote must select at least one index")
    z = np.zeros(num_atoms)
    for l in sorted(received):
        z[list(received[l])] += 1.0
    return _top_indices(z, count)


@dataclass(frozen=True)
class RoundRecord:
    """State captured after one cooperation round (1-based index)."""

    round_index: int
    exchanged: tuple            # per user: the support broadcast this round
    weights: Optional[tuple]    # per user: incoming weight row, None for DiOMP
    consensus: tuple            # per user: the voted index set (size = round)


@dataclass(frozen=True)
class ProtocolTrace:
    """Full observability record of one distributed run."""

    algorithm: str
    num_rounds: int
    index_bits: int
    total_bits: int
    rounds: tuple

    def to_records(self, **context):
        """One flat dict per (round, user), e.g. for JSON-lines dumps."""
        for record in self.rounds:
            for k in range(len(record.exchanged)):
                row = dict(context)
                row.update({
                    "algorithm": self.algorithm,
                    "round": record.round_index,
                    "user": k,
                    "exchanged": list(record.exchanged[k]),
                    "weights": (
                        {str(l): w for l, w in sorted(record.weights[k].items())}
                        if record.weights is not None else None),
                    "consensus": list(record.consensus[k]),
                })
                yield row


def write_trace_records(records, path) -> None:
    """Write protocol records as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in records:
            fh.write(json.dumps(row) + "\n")


def index_bits(dict_size: int) -> int:
    """Bits needed to address one atom: ceil(log2(dict_size))."""
    if dict_size < 1:
        raise ValueError("dict_size must be >= 1")
    return (dict_size - 1).bit_length()


def transmission_cost(scheme: str, q: int, num_users: int, num_slots: int,
                      dict_size: int, sparsity: int,
                      out_degree: Optional[int] = None) -> int:
    """Closed-form bit cost of one estimation run.

    "centralized_somp": every user feeds back its complex measurements with
    ``q`` bits per real component and the recovered support indices are
    returned, 2*K*T*q + L*ceil(log2(dict_size)) bits in total.

    "diomp_family": each user broadcasts its cardinality-L support to its
    ``out_degree`` neighbors on each of the L cooperation rounds,
    K*out_degree*ceil(log2(dict_size))*L^2 bits in total.
    """
    if scheme == "centralized_somp":
        return 2 * num_users * num_slots * q + sparsity * index_bits(dict_size)
    if scheme == "diomp_family":
        if out_degree is None:
            raise ValueError("diomp_family cost needs the out-degree")
        return num_users * out_degree * index_bits(dict_size) * sparsity ** 2
    raise ValueError(f"unknown scheme {scheme!r}")


def _run_protocol(topology, A, ys, sparsity, rounds, weighted,
                  forgetting_factor=None, adapt_weights=True):
    num_users = topology.num_users
    if len(ys) != num_users:
        raise ProtocolError("one measurement vector per user required")
    for k in range(num_users):
        if not topology.in_neighbors[k]:
            raise ProtocolError(f"user {k} has no in-neighbors")
    if sparsity < 1:
        raise ProtocolError("the protocol needs sparsity >= 1")
    if rounds is None:
        rounds = sparsity
    if not 1 <= rounds <= sparsity:
        raise ProtocolError("rounds must lie in [1, sparsity]")
    _validate_omp_args(A, sparsity, [()])
    if weighted and not 0.0 < forgetting_factor < 1.0:
        raise ProtocolError("forgetting factor must lie in (0, 1)")

    Y = np.column_stack(ys)
    Ah = np.ascontiguousarray(A.conj().T)
    num_atoms = A.shape[1]
    bits_per_index = index_bits(num_atoms)
    out_degrees = [topology.physical_out_degree(k) for k in range(num_users)]

    # edge mask and its column-normalized uniform weights; entry [l, k]
    # refers to sender l feeding receiver k
    mask = np.zeros((num_users, num_users), dtype=bool)
    for k in range(num_users):
        mask[list(topology.in_neighbors[k]), k] = True
    mask_f = mask.astype(float)
    weights = mask_f / mask_f.sum(axis=0)
    reliability = np.where(mask, 1.0, np.nan)

    # first stage: independent cold OMP at every user
    supports, padded, degenerate = _greedy_select(
        A, Ah, Y, sparsity, [()] * num_users, require_full_support=True)
    padded = list(padded)
    degenerate = list(degenerate)

    round_records = []
    total_bits = 0
    for i in range(1, rounds + 1):
        exchanged = tuple(supports)
        total_bits += sum(
            out_degrees[k] * len(exchanged[k]) * bits_per_index
            for k in range(num_users)
        )
        indicator = np.zeros((num_atoms, num_users), dtype=float)
        for k in range(num_users):
            indicator[list(exchanged[k]), k] = 1.0
        if weighted and adapt_weights:
            # smoothed novelty counts: |support_l \ support_k| per edge
            overlap = indicator.T @ indicator
            sizes = indicator.sum(axis=0)
            novelty = sizes[:, None] - overlap
            v = forgetting_factor
            reliability = np.where(
                mask,
                np.maximum((1.0 - v) * reliability + v * novelty,
                           WEIGHT_FLOOR),
                np.nan)
            inverse = np.where(mask, 1.0 / reliability, 0.0)
            weights = inverse / inverse.sum(axis=0)
        if weighted:
            # accumulate sender by sender in ascending order so that score
            # ties match weighted_vote() bit for bit
            scores = np.zeros((num_atoms, num_users))
            for l in range(num_users):
                scores += indicator[:, l:l + 1] * weights[l:l + 1, :]
        else:
            scores = indicator @ mask_f  # integer-valued vote counts
        order = np.argsort(-scores, axis=0, kind="stable")
        consensus = tuple(
            tuple(sorted(int(idx) for idx in order[:i, k]))
            for k in range(num_users)
        )
        # Complete every user back to full cardinality. An estimate that
        # already contains its consensus set is itself a completion of it
        # and is kept; anything else is re-derived by warm-started OMP.
        # (Keeping makes a lone user's round a no-op, so the degenerate
        # single-user run reduces exactly to local OMP.)
        redo = [k for k in range(num_users)
                if not set(consensus[k]) <= set(supports[k])]
        if redo:
            new_supports, new_padded, new_degenerate = _greedy_select(
                A, Ah, Y[:, redo], sparsity, [consensus[k] for k in redo],
                require_full_support=True)
            for pos, k in enumerate(redo):
                supports[k] = new_supports[pos]
                padded[k] = bool(new_padded[pos])
                degenerate[k] = bool(new_degenerate[pos])
        round_records.append(RoundRecord(
            round_index=i,
            exchanged=exchanged,
            weights=tuple(
                {l: float(weights[l, k])
                 for l in sorted(topology.in_neighbors[k])}
                for k in range(num_users)
            ) if weighted else None,
            consensus=consensus,
        ))

    results = []
    for k, fit in enumerate(_fit_batch(A, Y, supports)):
        results.append(replace(
            fit,
            padded=padded[k],
            rank_deficient=fit.rank_deficient or degenerate[k],
        ))
    trace = ProtocolTrace(
        algorithm="wdiomp" if weighted else "diomp",
        num_rounds=rounds,
        index_bits=bits_per_index,
        total_bits=total_bits,
        rounds=tuple(round_records),
    )
    return results, trace


def run_wdiomp(topology: NetworkTopology, A: np.ndarray,
               ys: Sequence[np.ndarray], sparsity: int,
               forgetting_factor: float = 0.1, rounds: Optional[int] = None,
               adapt_weights: bool = True):
    """Distributed recovery with adaptive weighted majority voting.

    Stage one runs cold OMP independently at every user. Stage two iterates
    ``rounds`` times (default: the sparsity level): users broadcast their
    current supports, adapt their neighbor weights from the received
    reports, vote a growing consensus set (round i fixes i indices), and
    complete it back to full cardinality -- an estimate already containing
    the consensus is kept, anything else is re-derived by OMP warm-started
    with the consensus set. Stage three fits coefficients by least squares
    on each final support.

    Parameters
    ----------
    topology : NetworkTopology
        Cooperation graph; every user needs at least one in-neighbor.
    A : ndarray, shape (T, num_atoms)
        Shared sensing matrix (broadcast pilots times dictionary).
    ys : sequence of ndarray
        One measurement vector per user.
    sparsity : int
        Total support cardinality known to every user.
    forgetting_factor : float
        Smoothing factor of the weight adaptation, in (0, 1).
    rounds : int, optional
        Number of cooperation rounds, defaults to ``sparsity``.
    adapt_weights : bool, optional
        When False the weights stay frozen at their uniform initial values,
        which makes the run equivalent to simple majority voting.

    Returns
    -------
    (results, trace) : (list of RecoveryResult, ProtocolTrace)
    """
    return _run_protocol(topology, A, ys, sparsity, rounds, weighted=True,
                         forgetting_factor=forgetting_factor,
                         adapt_weights=adapt_weights)


def run_diomp(topology: NetworkTopology, A: np.ndarray,
              ys: Sequence[np.ndarray], sparsity: int,
              rounds: Optional[int] = None):
    """Distributed recovery with simple (unweighted) majority voting.

    Identical to :func:`run_wdiomp` except that each received support
    contributes one unweighted count per atom in the voting step.
    """
    return _run_protocol(topology, A, ys, sparsity, rounds, weighted=False)
