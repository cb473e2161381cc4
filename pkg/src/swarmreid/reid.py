"""Per-robot cluster databases and the pairwise exchange protocol.

Each robot keeps an online clustering of the descriptions it has produced or
received. Assignment prefers track continuity, then falls back to cosine
similarity against cluster summary embeddings. When two robots meet they
swap snapshots and each side folds the other's clusters into its own.

Cluster identity is the pair (origin robot id, origin-local counter). A
received cluster keeps its uid, so later meetings recognize already-imported
clusters by uid (directly or through the tombstone map of absorbed uids)
instead of re-running similarity matching.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import language
from .errors import ContractError, EmptyDescriptionError
from .language import EMBEDDING_DIM, cosine, embed, summarize, tokenize
from .perception import DescriptionRecord

ClusterUid = tuple[int, int]

SCHEMA_VERSION = 1
DEFAULT_TOMBSTONE_CAP = 1024


@dataclass(frozen=True)
class LanguageOps:
    """Embedding/summarization implementations a database should use.

    The reference functions are the default; remote providers plug in here.
    """

    embed: Callable[[Sequence[str]], np.ndarray] = embed
    summarize: Callable[[Iterable], str] = summarize


REFERENCE_OPS = LanguageOps()


@dataclass
class Cluster:
    uid: ClusterUid
    members: list[DescriptionRecord]
    summary_text: str
    summary_embedding: np.ndarray
    centroid_embedding: np.ndarray
    track_ids: set[tuple[int, int]]

    @property
    def contributors(self) -> set[int]:
        return {m.robot_id for m in self.members}

    def matching_embedding(self, mode: str) -> np.ndarray:
        return self.summary_embedding if mode == "text" else self.centroid_embedding

    def last_member_tick(self) -> int:
        return max(m.tick for m in self.members)


@dataclass(frozen=True)
class QueryHit:
    uid: ClusterUid
    score: float
    summary_text: str
    samples: tuple[DescriptionRecord, ...]


@dataclass(frozen=True)
class ExchangeStats:
    merged_into_a: int
    copied_to_a: int
    records_added_to_a: int
    merged_into_b: int
    copied_to_b: int
    records_added_to_b: int

    def to_dict(self) -> dict:
        return {
            "merged_into_a": self.merged_into_a,
            "copied_to_a": self.copied_to_a,
            "records_added_to_a": self.records_added_to_a,
            "merged_into_b": self.merged_into_b,
            "copied_to_b": self.copied_to_b,
            "records_added_to_b": self.records_added_to_b,
        }


class _SimilarityIndex:
    """Growable row matrix of cluster embeddings for fast argmax queries."""

    def __init__(self, dim: int = EMBEDDING_DIM) -> None:
        self._mat = np.zeros((16, dim), dtype=np.float64)
        self._uids: list[ClusterUid] = []
        self._rows: dict[ClusterUid, int] = {}

    def set(self, uid: ClusterUid, vec: np.ndarray) -> None:
        row = self._rows.get(uid)
        if row is None:
            row = len(self._uids)
            if row == self._mat.shape[0]:
                self._mat = np.vstack([self._mat, np.zeros_like(self._mat)])
            self._uids.append(uid)
            self._rows[uid] = row
        self._mat[row] = vec

    def best(self, vec: np.ndarray) -> tuple[ClusterUid, float] | None:
        n = len(self._uids)
        if n == 0:
            return None
        sims = self._mat[:n] @ vec
        top = sims.max()
        tied = np.flatnonzero(sims == top)
        uid = min(self._uids[i] for i in tied)
        return uid, min(1.0, max(-1.0, float(top)))


class ClusterDatabase:
    """One robot's evolving clustering of description records."""

    def __init__(self, owner: int, mode: str = "text",
                 tombstone_cap: int = DEFAULT_TOMBSTONE_CAP,
                 ops: LanguageOps = REFERENCE_OPS) -> None:
        if mode not in ("text", "vector-baseline"):
            raise ContractError(f"unknown matching mode {mode!r}")
        if tombstone_cap < 0:
            raise ContractError("tombstone_cap must be non-negative")
        self.owner = owner
        self.mode = mode
        self.clusters: dict[ClusterUid, Cluster] = {}
        self.uid_counter = 0
        self.tombstones: OrderedDict[ClusterUid, ClusterUid] = OrderedDict()
        self.tombstone_cap = tombstone_cap
        self.ops = ops
        self._keys: dict[tuple[int, int, int], ClusterUid] = {}
        self._index = _SimilarityIndex()

    # ---------- internals ----------

    def _match_mode(self) -> str:
        return "text" if self.mode == "text" else "vector"

    def _refresh(self, cluster: Cluster) -> None:
        """Recompute derived state after the member list changed."""
        cluster.summary_text = self.ops.summarize(cluster.members)
        cluster.summary_embedding = self.ops.embed(tokenize(cluster.summary_text))
        vecs = np.stack([self.ops.embed(m.tokens) for m in cluster.members])
        centroid = vecs.mean(axis=0)
        norm = float(np.linalg.norm(centroid))
        if norm > 1e-12:
            cluster.centroid_embedding = centroid / norm
        else:
            cluster.centroid_embedding = cluster.summary_embedding
        self._index.set(cluster.uid, cluster.matching_embedding(self.mode))

    def _remember_tombstone(self, absorbed: ClusterUid, survivor: ClusterUid) -> None:
        if self.tombstone_cap == 0:
            return
        self.tombstones[absorbed] = survivor
        self.tombstones.move_to_end(absorbed)
        while len(self.tombstones) > self.tombstone_cap:
            self.tombstones.popitem(last=False)

    def _resolve_uid(self, uid: ClusterUid) -> ClusterUid | None:
        """Follow tombstone redirects to a live cluster, if any."""
        seen = set()
        while uid in self.tombstones and uid not in seen:
            seen.add(uid)
            uid = self.tombstones[uid]
        return uid if uid in self.clusters else None

    def _add_members(self, cluster: Cluster,
                     records: Iterable[DescriptionRecord]) -> int:
        # Track pairs follow only the members actually appended; records that
        # deduplicate away live in some other cluster and their tracks belong
        # there, else a repeated exchange could keep mutating track_ids.
        added = 0
        for m in records:
            if m.key in self._keys:
                continue
            cluster.members.append(m)
            self._keys[m.key] = cluster.uid
            cluster.track_ids.add((m.robot_id, m.track_id))
            added += 1
        if added:
            self._refresh(cluster)
        return added

    # ---------- operations ----------

    def assign_description(self, record: DescriptionRecord,
                           theta_local: float) -> tuple[ClusterUid, bool]:
        """Place one record; returns (cluster uid, whether it was created).

        Track continuity wins first: a record whose (robot_id, track_id) is
        already present joins that cluster regardless of similarity. Otherwise
        the record joins the most similar cluster if its summary similarity
        reaches ``theta_local`` (inclusive, ties toward the lowest uid), else
        it founds a new singleton cluster.
        """
        if not (0.0 <= theta_local <= 1.0):
            raise ContractError(f"theta_local={theta_local} outside [0, 1]")
        if not record.tokens:
            raise EmptyDescriptionError("record has no tokens")
        if record.key in self._keys:
            raise ContractError(f"record {record.key} already assigned")

        track_key = (record.robot_id, record.track_id)
        target = min(
            (uid for uid, c in self.clusters.items() if track_key in c.track_ids),
            default=None,
        )
        if target is None:
            vec = self.ops.embed(record.tokens)
            best = self._index.best(vec)
            if best is not None and best[1] >= theta_local:
                target = best[0]
        if target is not None:
            self._add_members(self.clusters[target], [record])
            return target, False

        uid = (self.owner, self.uid_counter)
        self.uid_counter += 1
        cluster = Cluster(
            uid=uid, members=[record], summary_text="",
            summary_embedding=np.zeros(EMBEDDING_DIM),
            centroid_embedding=np.zeros(EMBEDDING_DIM),
            track_ids={track_key},
        )
        self.clusters[uid] = cluster
        self._keys[record.key] = uid
        self._refresh(cluster)
        return uid, True

    def query(self, text: str, k: int) -> list[QueryHit]:
        """Rank clusters against a free-text query.

        Raises EmptyDescriptionError when the query tokenizes to nothing.
        An empty database yields an empty list. Each hit carries up to three
        sample records, most recent first.
        """
        if k < 1:
            raise ContractError(f"k={k} must be at least 1")
        vec = self.ops.embed(tokenize(text))
        scored = sorted(
            ((c, cosine(vec, c.matching_embedding(self.mode))) for c in self.clusters.values()),
            key=lambda pair: (-pair[1], pair[0].uid),
        )
        hits = []
        for cluster, score in scored[:k]:
            samples = tuple(sorted(
                cluster.members, key=lambda m: (-m.tick, m.robot_id, m.track_id)
            )[:3])
            hits.append(QueryHit(uid=cluster.uid, score=score,
                                 summary_text=cluster.summary_text, samples=samples))
        return hits

    def record_count(self) -> int:
        return len(self._keys)

    def record_keys(self) -> set[tuple[int, int, int]]:
        return set(self._keys)

    def snapshot(self) -> list[Cluster]:
        """Value copies of all clusters, ascending uid."""
        out = []
        for uid in sorted(self.clusters):
            c = self.clusters[uid]
            out.append(Cluster(
                uid=c.uid, members=list(c.members), summary_text=c.summary_text,
                summary_embedding=c.summary_embedding,
                centroid_embedding=c.centroid_embedding,
                track_ids=set(c.track_ids),
            ))
        return out

    def _absorb(self, received: list[Cluster], theta_merge: float) -> tuple[int, int, int]:
        merged = copied = added_total = 0
        for rc in received:
            target = self._resolve_uid(rc.uid)
            if target is None:
                best = self._index.best(rc.matching_embedding(self.mode))
                if best is not None and best[1] >= theta_merge:
                    target = best[0]
                    self._remember_tombstone(rc.uid, target)
                else:
                    fresh = [m for m in rc.members if m.key not in self._keys]
                    if not fresh:
                        # Every record already lives in some local cluster.
                        continue
                    verbatim = len(fresh) == len(rc.members)
                    cluster = Cluster(
                        uid=rc.uid, members=[], summary_text=rc.summary_text,
                        summary_embedding=rc.summary_embedding,
                        centroid_embedding=rc.centroid_embedding,
                        track_ids=set(rc.track_ids) if verbatim else set(),
                    )
                    self.clusters[rc.uid] = cluster
                    if verbatim:
                        # Verbatim copy: keep the origin's summary as is.
                        cluster.members = list(rc.members)
                        for m in cluster.members:
                            self._keys[m.key] = rc.uid
                        self._index.set(rc.uid, cluster.matching_embedding(self.mode))
                    else:
                        self._add_members(cluster, fresh)
                    copied += 1
                    added_total += len(fresh)
                    continue
            added = self._add_members(self.clusters[target], rc.members)
            merged += 1
            added_total += added
        return merged, copied, added_total

    # ---------- serialization ----------

    def to_dict(self) -> dict:
        clusters = []
        for uid in sorted(self.clusters):
            c = self.clusters[uid]
            clusters.append({
                "uid": list(uid),
                "summary_text": c.summary_text,
                "track_ids": [list(t) for t in sorted(c.track_ids)],
                "members": [
                    {
                        "text": m.text,
                        "robot_id": m.robot_id,
                        "tick": m.tick,
                        "track_id": m.track_id,
                        "person_id": m.person_id,
                    }
                    for m in c.members
                ],
            })
        return {
            "schema_version": SCHEMA_VERSION,
            "owner": self.owner,
            "mode": self.mode,
            "uid_counter": self.uid_counter,
            "tombstone_cap": self.tombstone_cap,
            "tombstones": [[list(k), list(v)] for k, v in self.tombstones.items()],
            "clusters": clusters,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, ops: LanguageOps = REFERENCE_OPS) -> "ClusterDatabase":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ContractError(f"unsupported snapshot schema {d.get('schema_version')!r}")
        db = cls(owner=d["owner"], mode=d["mode"],
                 tombstone_cap=d.get("tombstone_cap", DEFAULT_TOMBSTONE_CAP), ops=ops)
        db.uid_counter = d["uid_counter"]
        for k, v in d.get("tombstones", []):
            db.tombstones[tuple(k)] = tuple(v)
        for cd in d["clusters"]:
            uid = tuple(cd["uid"])
            members = [
                DescriptionRecord.create(
                    text=m["text"], robot_id=m["robot_id"], tick=m["tick"],
                    track_id=m["track_id"], person_id=m["person_id"],
                )
                for m in cd["members"]
            ]
            cluster = Cluster(
                uid=uid, members=members, summary_text=cd["summary_text"],
                summary_embedding=db.ops.embed(tokenize(cd["summary_text"])),
                centroid_embedding=np.zeros(EMBEDDING_DIM),
                track_ids={tuple(t) for t in cd["track_ids"]},
            )
            vecs = np.stack([db.ops.embed(m.tokens) for m in members])
            centroid = vecs.mean(axis=0)
            norm = float(np.linalg.norm(centroid))
            cluster.centroid_embedding = (
                centroid / norm if norm > 1e-12 else cluster.summary_embedding
            )
            db.clusters[uid] = cluster
            for m in members:
                if m.key in db._keys:
                    raise ContractError(f"snapshot has duplicate record {m.key}")
                db._keys[m.key] = uid
            db._index.set(uid, cluster.matching_embedding(db.mode))
        return db

    @classmethod
    def from_json(cls, text: str, ops: LanguageOps = REFERENCE_OPS) -> "ClusterDatabase":
        return cls.from_dict(json.loads(text), ops=ops)

    # ---------- diagnostics ----------

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is violated."""
        seen_keys: dict = {}
        for uid, c in self.clusters.items():
            assert c.uid == uid
            assert c.members, f"cluster {uid} has no members"
            for m in c.members:
                assert m.key not in seen_keys, (
                    f"record {m.key} in both {seen_keys[m.key]} and {uid}"
                )
                seen_keys[m.key] = uid
            expected = self.ops.summarize(c.members)
            assert c.summary_text == expected, (
                f"stale summary in {uid}: {c.summary_text!r} != {expected!r}"
            )
            vec = self.ops.embed(tokenize(c.summary_text))
            assert float(np.abs(vec - c.summary_embedding).max()) < 1e-12
            assert c.contributors == {m.robot_id for m in c.members}
            for r, t in ((m.robot_id, m.track_id) for m in c.members):
                assert (r, t) in c.track_ids
            if uid[0] == self.owner:
                assert uid[1] < self.uid_counter, f"uid {uid} beyond counter"
        assert seen_keys == self._keys


def exchange(a: ClusterDatabase, b: ClusterDatabase,
             theta_merge: float) -> ExchangeStats:
    """Symmetric pairwise database exchange; mutates both sides.

    Both directions apply from pre-exchange snapshots, received clusters in
    ascending uid order. A received cluster recognized by uid (directly or
    via a tombstone) merges into its local twin; otherwise it merges into the
    most similar local cluster when similarity reaches ``theta_merge``, else
    it is copied in under its original uid. Member union deduplicates on
    (robot_id, track_id, tick) across the whole database.
    """
    if not (0.0 <= theta_merge <= 1.0):
        raise ContractError(f"theta_merge={theta_merge} outside [0, 1]")
    if a.owner == b.owner:
        raise ContractError(f"exchange requires distinct owners, got {a.owner}")
    snap_a = a.snapshot()
    snap_b = b.snapshot()
    merged_a, copied_a, added_a = a._absorb(snap_b, theta_merge)
    merged_b, copied_b, added_b = b._absorb(snap_a, theta_merge)
    return ExchangeStats(
        merged_into_a=merged_a, copied_to_a=copied_a, records_added_to_a=added_a,
        merged_into_b=merged_b, copied_to_b=copied_b, records_added_to_b=added_b,
    )


def canonical_json(obj) -> str:
    """Stable, compact JSON used for snapshots, logs, and fingerprints."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
