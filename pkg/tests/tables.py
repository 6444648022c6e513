"""Reference contraction tables used by the unit and acceptance tests.

Each table lists (adjacency matrix, weight numerator) pairs in the order the
graphs appear when sorted row-wise lexicographically decreasing, plus the
common denominator.
"""

from fractions import Fraction


def _m(*rows):
    return tuple(tuple(r) for r in rows)


TABLE_33 = {
    "ranks": (3, 3),
    "denominator": 5,
    "pairs": [
        (_m((2, 1), (1, 2)), 3),
        (_m((0, 3), (3, 0)), 2),
    ],
}

TABLE_35 = {
    "ranks": (3, 5),
    "denominator": 7,
    "pairs": [
        (_m((2, 1), (1, 4)), 3),
        (_m((0, 3), (3, 2)), 4),
    ],
}

TABLE_44 = {
    "ranks": (4, 4),
    "denominator": 35,
    "pairs": [
        (_m((4, 0), (0, 4)), 3),
        (_m((2, 2), (2, 2)), 24),
        (_m((0, 4), (4, 0)), 8),
    ],
}

TABLE_334 = {
    "ranks": (3, 3, 4),
    "denominator": 105,
    "pairs": [
        (_m((2, 1, 0), (1, 2, 0), (0, 0, 4)), 3),
        (_m((2, 1, 0), (1, 0, 2), (0, 2, 2)), 12),
        (_m((2, 0, 1), (0, 2, 1), (1, 1, 2)), 12),
        (_m((2, 0, 1), (0, 0, 3), (1, 3, 0)), 8),
        (_m((0, 3, 0), (3, 0, 0), (0, 0, 4)), 2),
        (_m((0, 2, 1), (2, 0, 1), (1, 1, 2)), 24),
        (_m((0, 1, 2), (1, 2, 0), (2, 0, 2)), 12),
        (_m((0, 1, 2), (1, 0, 2), (2, 2, 0)), 24),
        (_m((0, 0, 3), (0, 2, 1), (3, 1, 0)), 8),
    ],
}

_RAW_3333 = [
    ("2100 1200 0021 0012", 9),
    ("2100 1200 0003 0030", 6),
    ("2100 1020 0201 0012", 18),
    ("2100 1011 0120 0102", 18),
    ("2100 1011 0102 0120", 36),
    ("2100 1002 0021 0210", 18),
    ("2010 0210 1101 0012", 18),
    ("2010 0201 1020 0102", 9),
    ("2010 0201 1002 0120", 18),
    ("2010 0021 1200 0102", 18),
    ("2010 0012 1101 0210", 36),
    ("2010 0003 1020 0300", 6),
    ("2001 0210 0120 1002", 9),
    ("2001 0210 0102 1020", 18),
    ("2001 0201 0021 1110", 18),
    ("2001 0030 0300 1002", 6),
    ("2001 0021 0201 1110", 36),
    ("2001 0012 0120 1200", 18),
    ("0300 3000 0021 0012", 6),
    ("0300 3000 0003 0030", 4),
    ("0210 2010 1101 0012", 36),
    ("0210 2001 1020 0102", 18),
    ("0210 2001 1002 0120", 36),
    ("0201 2010 0120 1002", 18),
    ("0201 2010 0102 1020", 36),
    ("0201 2001 0021 1110", 36),
    ("0120 1200 2001 0012", 18),
    ("0120 1011 2100 0102", 36),
    ("0120 1002 2001 0210", 36),
    ("0111 1200 1020 1002", 18),
    ("0111 1200 1002 1020", 36),
    ("0111 1020 1200 1002", 36),
    ("0111 1011 1101 1110", 144),
    ("0111 1002 1020 1200", 36),
    ("0102 1200 0021 2010", 18),
    ("0102 1020 0201 2010", 36),
    ("0102 1011 0120 2100", 36),
    ("0030 0201 3000 0102", 6),
    ("0030 0003 3000 0300", 4),
    ("0021 0210 2100 1002", 18),
    ("0021 0201 2001 1110", 36),
    ("0021 0012 2100 1200", 36),
    ("0012 0210 1101 2010", 36),
    ("0012 0201 1020 2100", 18),
    ("0012 0021 1200 2100", 36),
    ("0003 0210 0120 3000", 6),
    ("0003 0030 0300 3000", 4),
]

TABLE_3333 = {
    "ranks": (3, 3, 3, 3),
    "denominator": 1155,
    "pairs": [
        (tuple(tuple(int(c) for c in row) for row in s.split()), w)
        for s, w in _RAW_3333
    ],
}

# tau^6(A v A v A v A): orbit representatives are T_(i) of the 3333 table.
TABLE_3x4 = {
    "ranks": (3, 3, 3, 3),
    "denominator": 385,
    "pairs": [
        (TABLE_3333["pairs"][i - 1][0], w)
        for i, w in [(1, 9), (2, 12), (3, 72), (4, 24), (5, 144), (20, 4), (23, 72), (33, 48)]
    ],
}

# tau^5(A v A v B), A rank 3, B rank 4: representatives are T_(i) of the 334 table.
TABLE_3x24 = {
    "ranks": (3, 3, 4),
    "denominator": 105,
    "pairs": [
        (TABLE_334["pairs"][i - 1][0], w)
        for i, w in [(1, 3), (2, 24), (3, 12), (4, 16), (5, 2), (6, 24), (8, 24)]
    ],
}

ALL_TABLES = {
    "33": TABLE_33,
    "35": TABLE_35,
    "44": TABLE_44,
    "334": TABLE_334,
    "3333": TABLE_3333,
}


def as_weighted_pairs(table):
    d = table["denominator"]
    return [(m, Fraction(w, d)) for m, w in table["pairs"]]
