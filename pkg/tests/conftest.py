import random

import pytest

from cityometrics.delineation import MetroArea, Partition
from cityometrics.gazetteer import Gazetteer, Locality
from cityometrics.records import AffiliationEntry, Corpus, PublicationRecord


def registry_of(ids, country="Testland"):
    """Localities on a line, 1 degree of longitude apart (far beyond any test threshold)."""
    return Gazetteer([Locality(i, f"Place {i}", country, 0.0, float(k)) for k, i in enumerate(ids)])


def corpus_of(papers, year=2016):
    """Resolved corpus from lists of locality ids (one address instance per element)."""
    records = []
    for n, locs in enumerate(papers):
        affs = tuple(
            AffiliationEntry(f"Inst {j}, Place {l}, Testland", f"Inst {j}", f"Place {l}", None, "Testland", l)
            for j, l in enumerate(locs)
        )
        records.append(PublicationRecord(f"P{n:05d}", year, affs))
    return Corpus(tuple(records))


def partition_of(groups, all_ids):
    """{metro_id: [members]} plus singletons for everything else."""
    metros = tuple(MetroArea(mid, frozenset(m), "lookup", "tier=custom") for mid, m in groups.items())
    used = {l for m in groups.values() for l in m}
    return Partition(metros, frozenset(set(all_ids) - used))


def random_setup(seed, n_papers=200, n_locs=20, max_aff=6):
    rng = random.Random(seed)
    ids = [f"L{i:03d}" for i in range(n_locs)]
    papers = [[rng.choice(ids) for _ in range(rng.randint(1, max_aff))] for _ in range(n_papers)]
    groups = {}
    for lid in ids:
        r = rng.random()
        if r < 0.7:
            groups.setdefault(f"M{int(r * 10)}", []).append(lid)
    return ids, papers, partition_of(groups, ids)


@pytest.fixture
def rng():
    return random.Random(12345)
