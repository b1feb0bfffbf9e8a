from __future__ import annotations

import threading
from collections import defaultdict
from typing import Iterable, Iterator

from ..terms import RDF_TYPE, IRI, Literal, Term, Triple, term_key


def _index() -> defaultdict:
    return defaultdict(lambda: defaultdict(set))


class Graph:
    """Deduplicating in-memory triple set with SPO, POS and OSP indexes.

    Mutation is serialised by an internal lock (single writer); readers
    that need a stable view take :meth:`snapshot`.
    """

    def __init__(self, triples: Iterable[Triple] = (), name: IRI | None = None):
        self.name = IRI(name) if name is not None else None
        self._triples: set[Triple] = set()
        self._spo = _index()
        self._pos = _index()
        self._osp = _index()
        self._lock = threading.RLock()
        self.update(triples)

    # -- mutation -----------------------------------------------------------

    def insert(self, t: Triple) -> bool:
        """Add ``t``; return False when it was already present."""
        s, p, o = t
        if isinstance(s, Literal):
            raise ValueError("literal in subject position")
        if not isinstance(t, Triple):
            t = Triple(s, p, o)
        with self._lock:
            if t in self._triples:
                return False
            self._triples.add(t)
            self._spo[s][p].add(o)
            self._pos[p][o].add(s)
            self._osp[o][s].add(p)
            return True

    add = insert

    def update(self, triples: Iterable[Triple]) -> int:
        with self._lock:
            return sum(self.insert(t) for t in triples)

    def remove(self, t: Triple) -> bool:
        s, p, o = t
        with self._lock:
            if t not in self._triples:
                return False
            self._triples.discard(Triple(s, p, o))
            for idx, a, b, c in ((self._spo, s, p, o), (self._pos, p, o, s), (self._osp, o, s, p)):
                inner = idx[a]
                inner[b].discard(c)
                if not inner[b]:
                    del inner[b]
                if not inner:
                    del idx[a]
            return True

    # -- reading ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: object) -> bool:
        return t in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(list(self._triples))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self) -> str:
        return f"<Graph {self.name or ''} {len(self)} triples>"

    def snapshot(self) -> frozenset[Triple]:
        with self._lock:
            return frozenset(self._triples)

    def copy(self) -> Graph:
        return Graph(self.snapshot(), name=self.name)

    # indexes and the lock are rebuilt on unpickling (process pools ship graphs)
    def __reduce__(self):
        return (Graph, (list(self.snapshot()), self.name))

    def sorted(self) -> list[Triple]:
        return sorted(self.snapshot(), key=lambda t: (term_key(t[0]), term_key(t[1]), term_key(t[2])))

    def match(self, s: Term | None = None, p: Term | None = None,
              o: Term | None = None) -> Iterator[Triple]:
        """Yield triples matching the pattern; ``None`` is a wildcard."""
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in list(objs):
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in list(self._osp.get(o, {}).get(s, ())):
                    yield Triple(s, pred, o)
                return
            for pred, objs in list(by_p.items()):
                for obj in list(objs):
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in list(by_o.get(o, ())):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in list(by_o.items()):
                for subj in list(subjs):
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in list(self._osp.get(o, {}).items()):
                for pred in list(preds):
                    yield Triple(subj, pred, o)
            return
        yield from list(self._triples)

    def count(self, s: Term | None = None, p: Term | None = None,
              o: Term | None = None) -> int:
        """Number of triples matching the pattern, computed from the indexes."""
        if s is None and p is None and o is None:
            return len(self._triples)
        if s is not None and p is not None and o is not None:
            return int(Triple(s, p, o) in self._triples)
        if s is not None and p is not None:
            return len(self._spo.get(s, {}).get(p, ()))
        if p is not None and o is not None:
            return len(self._pos.get(p, {}).get(o, ()))
        if s is not None and o is not None:
            return len(self._osp.get(o, {}).get(s, ()))
        if s is not None:
            return sum(len(v) for v in self._spo.get(s, {}).values())
        if p is not None:
            return sum(len(v) for v in self._pos.get(p, {}).values())
        return sum(len(v) for v in self._osp.get(o, {}).values())

    def objects(self, s: Term, p: Term) -> set[Term]:
        return set(self._spo.get(s, {}).get(p, ()))

    def subjects(self, p: Term | None = None, o: Term | None = None) -> set[IRI]:
        return {t.subject for t in self.match(None, p, o)}

    def terms(self) -> set[Term]:
        out: set[Term] = set()
        for s, p, o in self._triples:
            out.update((s, p, o))
        return out

    def types_of(self, node: Term) -> set[Term]:
        return self.objects(node, RDF_TYPE)
