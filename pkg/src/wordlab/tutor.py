"""The tutor: a lexicon of masked prototypes and k-closest word production.

Each word holds a prototype in ``[0, 1]^n`` and a binary weight (sensitivity)
mask. For an object ``o`` the tutor computes

    wd(o) = sqrt(sum_i w_i * (o_i - p_i) ** 2)

for every word and utters the ``k`` words with the smallest distance. Ties
are broken by ascending word id.
"""
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .seeding import RNG_ALGORITHM, check_seed, make_rng


@dataclass(frozen=True)
class WordEntry:
    word_id: int
    prototype: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True, eq=False)
class Lexicon:
    """Immutable word inventory.

    ``prototypes`` and ``weights`` are ``(m, n)`` read-only arrays; row ``j``
    belongs to word id ``j``.
    """

    prototypes: np.ndarray
    weights: np.ndarray
    sensitivity_p: float
    rng_seed: int
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        protos = np.array(self.prototypes, dtype=np.float64)
        weights = np.array(self.weights, dtype=np.int8)
        if protos.ndim != 2 or protos.shape != weights.shape:
            raise ShapeError("prototypes and weights must be matching (m, n) arrays")
        if protos.size and (protos.min() < 0.0 or protos.max() > 1.0):
            raise ParameterError("prototype components must lie in [0, 1]")
        if not np.isin(weights, (0, 1)).all():
            raise ParameterError("weight components must be 0 or 1")
        if (weights.sum(axis=1) == 0).any():
            raise ParameterError("every word needs at least one nonzero weight")
        protos.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "prototypes", protos)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self):
        return self.prototypes.shape[0]

    @property
    def n(self):
        return self.prototypes.shape[1]

    @property
    def words(self):
        return [WordEntry(j, self.prototypes[j], self.weights[j]) for j in range(self.m)]

    def __eq__(self, other):
        if not isinstance(other, Lexicon):
            return NotImplemented
        return (
            np.array_equal(self.prototypes, other.prototypes)
            and np.array_equal(self.weights, other.weights)
            and self.sensitivity_p == other.sensitivity_p
            and self.rng_seed == other.rng_seed
            and self.rng_algorithm == other.rng_algorithm
        )

    __hash__ = None


def generate_lexicon(m, n, sensitivity_p, seed):
    """Draw ``m`` words over ``n`` dimensions.

    Prototypes are i.i.d. U(0, 1). Each weight component is an independent
    Bernoulli(``sensitivity_p``) draw. A word whose mask came out all zero gets
    one uniformly chosen component set to 1; each repair consumes one extra
    draw from the same stream, in word order.
    """
    if int(m) != m or m < 1:
        raise ParameterError(f"word count m must be >= 1, got {m}")
    if int(n) != n or n < 1:
        raise ParameterError(f"dimension count n must be >= 1, got {n}")
    if not 0.0 < sensitivity_p <= 1.0:
        raise ParameterError(f"sensitivity_p must lie in (0, 1], got {sensitivity_p}")
    m, n = int(m), int(n)
    seed = check_seed(seed)
    rng = make_rng(seed)
    prototypes = rng.random((m, n))
    weights = (rng.random((m, n)) < sensitivity_p).astype(np.int8)
    for j in range(m):
        if not weights[j].any():
            weights[j, rng.integers(n)] = 1
    return Lexicon(prototypes, weights, float(sensitivity_p), seed)


def weighted_distance(entry, o):
    o = np.asarray(o, dtype=np.float64)
    if o.shape != entry.prototype.shape:
        raise ShapeError(f"object has shape {o.shape}, word expects {entry.prototype.shape}")
    mask = entry.weight.astype(bool)
    diff = o[mask] - entry.prototype[mask]
    return math.sqrt(float(np.dot(diff, diff)))


def distances(lexicon, objects):
    """Weighted distance from every object row to every word, shape ``(rows, m)``."""
    objects = np.atleast_2d(np.asarray(objects, dtype=np.float64))
    if objects.shape[1] != lexicon.n:
        raise ShapeError(f"objects have {objects.shape[1]} dims, lexicon has {lexicon.n}")
    out = np.empty((objects.shape[0], lexicon.m))
    for j in range(lexicon.m):
        mask = lexicon.weights[j].astype(bool)
        diff = objects[:, mask] - lexicon.prototypes[j, mask]
        out[:, j] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def _check_k(lexicon, k):
    if int(k) != k or not 1 <= k <= lexicon.m:
        raise ParameterError(f"k must satisfy 1 <= k <= m={lexicon.m}, got {k}")
    return int(k)


def describe_many(lexicon, objects, k):
    """Word ids uttered for each object row, as a ``(rows, k)`` array sorted per row."""
    k = _check_k(lexicon, k)
    d = distances(lexicon, objects)
    # stable sort keeps ascending word id among equal distances
    chosen = np.argsort(d, axis=1, kind="stable")[:, :k]
    return np.sort(chosen, axis=1)


def describe(lexicon, o, k):
    """The ``k`` closest word ids for one object, as a sorted tuple."""
    o = np.asarray(o, dtype=np.float64)
    if o.ndim != 1:
        raise ShapeError("describe takes a single object vector")
    return tuple(int(j) for j in describe_many(lexicon, o[None, :], k)[0])


def chance_level(m, k):
    """Number of unordered k-subsets of m words and the chance of guessing one."""
    if int(m) != m or int(k) != k or not 1 <= k <= m:
        raise ParameterError(f"need 1 <= k <= m, got m={m}, k={k}")
    count = math.comb(int(m), int(k))
    try:
        probability = 1.0 / float(count)
    except OverflowError:
        raise OverflowError(f"C({m}, {k}) exceeds the floating-point range") from None
    return count, probability


_LEXICON_MAGIC = "# wordlab-lexicon v1"


def save_lexicon(lexicon, path):
    lines = [
        _LEXICON_MAGIC,
        f"m={lexicon.m}",
        f"n={lexicon.n}",
        f"sensitivity_p={lexicon.sensitivity_p!r}",
        f"seed={lexicon.rng_seed}",
        f"rng={lexicon.rng_algorithm}",
        "word_id\tprototype\tweight",
    ]
    for j in range(lexicon.m):
        proto = ",".join(repr(float(x)) for x in lexicon.prototypes[j])
        bits = "".join(str(int(b)) for b in lexicon.weights[j])
        lines.append(f"{j}\t{proto}\t{bits}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lexicon(path):
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != _LEXICON_MAGIC:
        raise DataError("not a lexicon file", path=path, row=1)
    header = {}
    for row, line in enumerate(text[1:6], start=2):
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"expected key=value header, got {line!r}", path=path, row=row)
        header[key] = value
    try:
        m, n = int(header["m"]), int(header["n"])
        p = float(header["sensitivity_p"])
        seed = int(header["seed"])
        algorithm = header["rng"]
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad lexicon header: {exc}", path=path) from None
    records = text[7:]
    if len(records) != m:
        raise DataError(f"expected {m} word records, found {len(records)}", path=path)
    protos = np.empty((m, n))
    weights = np.empty((m, n), dtype=np.int8)
    for j, line in enumerate(records):
        row = j + 8
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] != str(j):
            raise DataError("malformed word record", path=path, row=row)
        try:
            values = [float(x) for x in parts[1].split(",")]
            bits = [int(b) for b in parts[2]]
        except ValueError:
            raise DataError("non-numeric word record", path=path, row=row) from None
        if len(values) != n or len(bits) != n:
            raise DataError(f"word record must have {n} components", path=path, row=row)
        protos[j] = values
        weights[j] = bits
    return Lexicon(protos, weights, p, seed, algorithm)
