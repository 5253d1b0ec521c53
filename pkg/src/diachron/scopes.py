"""Scope resolution: which versions and change sets a pattern ranges over.

A scope carries two candidate pools: data versions for triple/RECORD
patterns and change sets for CHANGE patterns.  With no FROM clause the
root scope covers every dataset and every stored change set; FROM
clauses narrow it.  DATASET/CHANGES blocks inside the body derive child
scopes, inheriting whichever pool they do not redefine.

Version ranges are inclusive on both ends and compare ingest ordinals:
BEFORE keeps what ends at or before the bound, AFTER what starts at or
after it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .archive import Archive, ChangeSetInfo, VersionInfo
from .archive import DELTA
from .terms import Term
from .ql.ast import AFTER, AT, BEFORE, BETWEEN, Query, VersionMod

DATA = "data"
CHANGES = "changes"


class ScopeError(ValueError):
    """A scope clause names something the archive does not have."""


@dataclass(frozen=True)
class Scope:
    """Candidate pools for one pattern context."""

    kind: str  # DATA or CHANGES: where plain triple patterns match
    data: Tuple[Tuple[Term, VersionInfo], ...]
    changes: Tuple[ChangeSetInfo, ...]

    def with_data(self, data: Tuple[Tuple[Term, VersionInfo], ...]) -> "Scope":
        return Scope(DATA, data, self.changes)

    def with_changes(self, changes: Tuple[ChangeSetInfo, ...]) -> "Scope":
        return Scope(CHANGES, self.data, changes)


def all_data(archive: Archive) -> Tuple[Tuple[Term, VersionInfo], ...]:
    pairs: List[Tuple[Term, VersionInfo]] = []
    for ds in archive.datasets():
        for vi in archive.versions(ds):
            pairs.append((ds, vi))
    return tuple(pairs)


def version_ordinal(archive: Archive, version: Term) -> int:
    if not isinstance(version, Term) or version.kind != "iri":
        raise ScopeError("version bounds must be IRIs")
    try:
        return archive.version_info(version).ordinal
    except Exception as exc:
        raise ScopeError(f"unknown version: {version.ntriples()}") from exc


def restrict_versions(
    archive: Archive,
    versions: List[VersionInfo],
    mod: Optional[VersionMod],
) -> List[VersionInfo]:
    """Apply an IRI-bounded range modifier to a version list.

    AT and variable endpoints are the evaluator's business (they bind
    rather than restrict) and must not reach this helper.
    """
    if mod is None:
        return list(versions)
    if mod.kind == BEFORE:
        bound = version_ordinal(archive, mod.first)
        return [vi for vi in versions if vi.ordinal <= bound]
    if mod.kind == AFTER:
        bound = version_ordinal(archive, mod.first)
        return [vi for vi in versions if vi.ordinal >= bound]
    if mod.kind == BETWEEN:
        lo = version_ordinal(archive, mod.first)
        hi = version_ordinal(archive, mod.second)
        if lo > hi:
            raise ScopeError("BETWEEN VERSIONS bounds are in the wrong order")
        return [vi for vi in versions if lo <= vi.ordinal <= hi]
    raise ScopeError(f"modifier {mod.kind} does not restrict versions")


def filter_change_sets(
    archive: Archive,
    pool: List[ChangeSetInfo],
    mod: Optional[VersionMod],
) -> List[ChangeSetInfo]:
    """Apply an IRI-bounded range modifier to a change-set list."""
    if mod is None or mod.kind == AT:
        # AT VERSION says nothing about a change span; ignored with a
        # validator warning rather than failing the whole query.
        return list(pool)
    if mod.kind == BEFORE:
        bound = version_ordinal(archive, mod.first)
        return [ci for ci in pool
                if version_ordinal(archive, ci.new) <= bound]
    if mod.kind == AFTER:
        bound = version_ordinal(archive, mod.first)
        return [ci for ci in pool
                if version_ordinal(archive, ci.old) >= bound]
    if mod.kind == BETWEEN:
        lo = version_ordinal(archive, mod.first)
        hi = version_ordinal(archive, mod.second)
        if lo > hi:
            raise ScopeError("BETWEEN VERSIONS bounds are in the wrong order")
        return [ci for ci in pool
                if version_ordinal(archive, ci.old) >= lo
                and version_ordinal(archive, ci.new) <= hi]
    raise ScopeError(f"modifier {mod.kind} does not restrict change sets")


def root_scope(q: Query, archive: Archive) -> Scope:
    """Scope implied by the FROM clauses (or their absence)."""
    from_ds = next((s for s in q.sources if s.kind == "dataset"), None)
    from_ch = next((s for s in q.sources if s.kind == "changes"), None)

    if from_ds is not None:
        d = _require_iri(from_ds.source, "FROM DATASET")
        if not archive.has_dataset(d):
            raise ScopeError(f"unknown dataset: <{d.value}>")
        versions = archive.versions(d)
        if from_ds.modifier is not None and from_ds.modifier.kind == AT:
            v = _require_iri(from_ds.modifier.first, "AT VERSION")
            versions = [vi for vi in versions if vi.iri == v]
            if not versions:
                raise ScopeError(
                    f"<{v.value}> is not a version of <{d.value}>"
                )
        elif from_ds.modifier is not None:
            versions = restrict_versions(archive, versions, from_ds.modifier)
        data = tuple((d, vi) for vi in versions)
        change_pool = archive.change_sets(d)
    else:
        data = all_data(archive)
        change_pool = archive.change_sets()

    kind = DATA
    if from_ch is not None:
        c = _require_iri(from_ch.source, "FROM CHANGES")
        if not archive.has_dataset(c):
            raise ScopeError(f"unknown dataset: <{c.value}>")
        changes = tuple(
            filter_change_sets(archive, archive.change_sets(c), from_ch.modifier)
        )
        if from_ds is None:
            # FROM CHANGES alone puts the whole body in changes mode and
            # pins the data pool to the same dataset for nested use.
            kind = CHANGES
            data = tuple((c, vi) for vi in archive.versions(c))
    else:
        changes = tuple(change_pool)
    return Scope(kind, data, changes)


def required_materializations(scope: Scope) -> Tuple[Term, ...]:
    """Versions in the data pool that are stored as deltas only."""
    found = {vi.iri for _, vi in scope.data if vi.policy == DELTA}
    return tuple(sorted(found, key=lambda t: t.value))


def _require_iri(t, what: str) -> Term:
    if isinstance(t, Term) and t.kind == "iri":
        return t
    raise ScopeError(f"{what} takes an IRI")
