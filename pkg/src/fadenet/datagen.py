"""Labeled dataset construction for the two data regimes.

Amplitude regime: a square QAM constellation defines per-axis transmit
amplitudes; each axis is pushed through the amplitude-domain channel at its
own quantile and re-signed, giving (real, imag) target pairs conditioned on
the normalized constellation point and the two quantiles.

Power regime: a grid of distances (each with its own fading shape m) defines
the categories; each sample is a power-domain draw at one distance plus
optional noise, conditioned on the encoded distance and the quantile.

Targets are stored both raw (watts / volts) and scaled. Scaling is
log10(x * unit_scale) when noise is on, log10(x * unit_scale + 2) when off,
and identity for amplitude-domain data whose signed values a log cannot
represent. Samples whose scaled value would be undefined (noise pushing the
argument out of the log domain) are dropped and counted.

Generation is deterministic: each category owns an independent RNG stream
spawned from the dataset seed, samples are emitted category-major /
replicate-minor, and a dataset's meta block is sufficient to regenerate it
bit-for-bit.
"""

import enum
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import serialize
from .channel import Approach, ChannelParams, NoiseParams, ideal_mean, \
    ideal_var, path_loss, sample_noise, sample_received
from .errors import ChecksumError, DataFormatError, DomainError, \
    TruncationError, ValidationError, VersionError

DEFAULT_QAM_LEVELS = (-3.0, -1.0, 1.0, 3.0)

TEXT_FORMAT_VERSION = 1
_TEXT_MAGIC = "#fadenet-dataset"

_SPLIT_STREAM_TAG = 0x53504C54  # distinguishes the split shuffle stream


class ScalingVariant(enum.Enum):
    """Target transform applied before training."""

    IDENTITY = "identity"
    LOG10 = "log10"              # noise present: log10(x * unit_scale)
    LOG10_PLUS2 = "log10_plus2"  # no noise: log10(x * unit_scale + 2)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"identity": cls.IDENTITY, "raw": cls.IDENTITY,
                   "log10": cls.LOG10, "with_noise": cls.LOG10,
                   "log10_plus2": cls.LOG10_PLUS2,
                   "without_noise": cls.LOG10_PLUS2}
        key = str(value).strip().lower()
        if key not in aliases:
            raise ValidationError(f"unknown scaling variant {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class ScalingMode:
    variant: ScalingVariant
    unit_scale: float = 1e14

    def __post_init__(self):
        if not (np.isfinite(self.unit_scale) and self.unit_scale > 0):
            raise ValidationError("unit_scale must be finite and > 0")

    def to_dict(self):
        return {"variant": self.variant.value, "unit_scale": self.unit_scale}

    @classmethod
    def from_dict(cls, d):
        return cls(variant=ScalingVariant.parse(d["variant"]),
                   unit_scale=float(d["unit_scale"]))


def default_scaling(approach: Approach, noise: NoiseParams) -> ScalingMode:
    """The scaling a dataset uses unless configured otherwise."""
    if approach is Approach.AMPLITUDE:
        return ScalingMode(ScalingVariant.IDENTITY, unit_scale=1.0)
    variant = ScalingVariant.LOG10 if noise.enabled else ScalingVariant.LOG10_PLUS2
    return ScalingMode(variant, unit_scale=noise.unit_scale)


def scale(x, mode: ScalingMode):
    """Apply the scaling transform; raises DomainError outside the log domain."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if mode.variant is ScalingVariant.IDENTITY:
        out = arr * 1.0
    elif mode.variant is ScalingVariant.LOG10:
        shifted = arr * mode.unit_scale
        if np.any(shifted <= 0.0):
            raise DomainError("log10 scaling requires x * unit_scale > 0")
        out = np.log10(shifted)
    else:
        shifted = arr * mode.unit_scale + 2.0
        if np.any(shifted <= 0.0):
            raise DomainError("log10(x+2) scaling requires x * unit_scale > -2")
        out = np.log10(shifted)
    return float(out) if scalar else out


def unscale(y, mode: ScalingMode):
    """Invert scale(); exact to floating-point round-off."""
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    if mode.variant is ScalingVariant.IDENTITY:
        out = arr * 1.0
    elif mode.variant is ScalingVariant.LOG10:
        out = 10.0 ** arr / mode.unit_scale
    else:
        out = (10.0 ** arr - 2.0) / mode.unit_scale
    return float(out) if scalar else out


def _scale_valid_mask(raw, mode: ScalingMode):
    """Rows of raw (n, k) whose every component lies in the scale domain."""
    if mode.variant is ScalingVariant.IDENTITY:
        return np.ones(raw.shape[0], dtype=bool)
    shifted = raw * mode.unit_scale
    if mode.variant is ScalingVariant.LOG10_PLUS2:
        shifted = shifted + 2.0
    return np.all(shifted > 0.0, axis=1)


# --- constellation ----------------------------------------------------------

@dataclass(frozen=True)
class QamConstellation:
    levels: tuple
    points: tuple  # (in-phase, quadrature) pairs, row-major by level index

    @property
    def max_level(self):
        return max(abs(l) for l in self.levels)


def build_constellation(levels=DEFAULT_QAM_LEVELS) -> QamConstellation:
    """Square constellation: the Cartesian product of per-axis amplitudes."""
    levels = tuple(float(l) for l in levels)
    if not levels:
        raise ValidationError("levels must be non-empty")
    if len(set(levels)) != len(levels):
        raise ValidationError(f"duplicate amplitude levels in {levels}")
    if any(l == 0.0 for l in levels):
        raise ValidationError("zero amplitude level unsupported "
                              "(per-axis transmit power would vanish)")
    points = tuple((i, q) for i in levels for q in levels)
    return QamConstellation(levels=levels, points=points)


# --- samples / dataset ------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    condition: np.ndarray
    target: np.ndarray
    category: int
    raw_target: np.ndarray


@dataclass(frozen=True)
class DatasetMeta:
    """Everything needed to regenerate a dataset bit-for-bit from its seed."""

    approach: Approach
    scaling: ScalingMode
    channel: ChannelParams
    noise: NoiseParams
    seed: int
    n_per_category: int
    levels: tuple = None        # amplitude regime: constellation levels
    distance: float = None      # amplitude regime: fixed link distance
    d_values: tuple = None      # power regime: distance per category
    m_values: tuple = None      # power regime: fading shape per category
    encoding: str = "onehot"    # power regime: "onehot" or "index"
    split: dict = None          # present on datasets produced by split()

    def n_categories(self):
        if self.approach is Approach.AMPLITUDE:
            return len(self.levels) ** 2
        return len(self.d_values)

    def to_dict(self):
        d = {"approach": self.approach.value,
             "scaling": self.scaling.to_dict(),
             "channel": self.channel.to_dict(),
             "noise": self.noise.to_dict(),
             "seed": self.seed,
             "n_per_category": self.n_per_category,
             "encoding": self.encoding}
        if self.approach is Approach.AMPLITUDE:
            d["levels"] = list(self.levels)
            d["distance"] = self.distance
        else:
            d["d_values"] = list(self.d_values)
            d["m_values"] = list(self.m_values)
        if self.split is not None:
            d["split"] = self.split
        return d

    @classmethod
    def from_dict(cls, d):
        approach = Approach.parse(d["approach"])
        kwargs = dict(
            approach=approach,
            scaling=ScalingMode.from_dict(d["scaling"]),
            channel=ChannelParams.from_dict(d["channel"]),
            noise=NoiseParams.from_dict(d["noise"]),
            seed=int(d["seed"]),
            n_per_category=int(d["n_per_category"]),
            encoding=d.get("encoding", "onehot"),
            split=d.get("split"))
        if approach is Approach.AMPLITUDE:
            kwargs["levels"] = tuple(float(v) for v in d["levels"])
            kwargs["distance"] = float(d["distance"])
        else:
            kwargs["d_values"] = tuple(float(v) for v in d["d_values"])
            kwargs["m_values"] = tuple(float(v) for v in d["m_values"])
        return cls(**kwargs)


class Dataset:
    """Ordered sample collection with regeneration metadata.

    Rows are stored as parallel arrays (float64 conditions/targets, int64
    category labels) in canonical category-major order.
    """

    def __init__(self, meta: DatasetMeta, conditions, targets, raw_targets,
                 categories):
        self.meta = meta
        self.conditions = np.ascontiguousarray(conditions, dtype=float)
        self.targets = np.ascontiguousarray(targets, dtype=float)
        self.raw_targets = np.ascontiguousarray(raw_targets, dtype=float)
        self.categories = np.ascontiguousarray(categories, dtype=np.int64)
        n = len(self.categories)
        if not (self.conditions.shape[0] == self.targets.shape[0]
                == self.raw_targets.shape[0] == n):
            raise ValidationError("dataset arrays disagree on row count")
        if not np.all(np.isfinite(self.conditions)):
            raise ValidationError("dataset conditions must be finite")
        if n and (self.categories.min() < 0
                  or self.categories.max() >= meta.n_categories()):
            raise ValidationError("category label out of range")

    def __len__(self):
        return self.conditions.shape[0]

    def __getitem__(self, i) -> Sample:
        return Sample(condition=self.conditions[i], target=self.targets[i],
                      category=int(self.categories[i]),
                      raw_target=self.raw_targets[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.meta.to_dict() == other.meta.to_dict()
                and np.array_equal(self.conditions, other.conditions)
                and np.array_equal(self.targets, other.targets)
                and np.array_equal(self.raw_targets, other.raw_targets)
                and np.array_equal(self.categories, other.categories))

    @property
    def condition_dim(self):
        return self.conditions.shape[1]

    @property
    def target_dim(self):
        return self.targets.shape[1]

    def rows_for_category(self, category):
        return np.flatnonzero(self.categories == category)

    def fingerprint(self) -> str:
        buf = io.BytesIO()
        buf.write(serialize.canonical_json(self.meta.to_dict()).encode())
        for arr in (self.conditions, self.targets, self.raw_targets,
                    self.categories):
            buf.write(arr.tobytes())
        return serialize.sha256_hex(buf.getvalue())


# --- generation stats -------------------------------------------------------

@dataclass
class CategoryGenStats:
    category: int
    n_requested: int
    n_kept: int
    n_dropped: int
    raw_mean: tuple
    raw_var: tuple
    ideal_mean: tuple
    ideal_var: tuple


@dataclass
class GenerationStats:
    """Per-category accounting emitted alongside a generated dataset."""

    rows: list = field(default_factory=list)

    @property
    def total_dropped(self):
        return sum(r.n_dropped for r in self.rows)

    @property
    def total_kept(self):
        return sum(r.n_kept for r in self.rows)

    def to_text(self) -> str:
        out = ["category\tn_requested\tn_kept\tn_dropped\traw_mean\traw_var"
               "\tideal_mean\tideal_var"]
        for r in self.rows:
            fmt = lambda t: ";".join(repr(v) for v in t)
            out.append(f"{r.category}\t{r.n_requested}\t{r.n_kept}"
                       f"\t{r.n_dropped}\t{fmt(r.raw_mean)}\t{fmt(r.raw_var)}"
                       f"\t{fmt(r.ideal_mean)}\t{fmt(r.ideal_var)}")
        out.append(f"#total kept={self.total_kept} dropped={self.total_dropped}")
        return "\n".join(out) + "\n"


def _category_streams(seed, n_categories):
    return [np.random.default_rng(s)
            for s in np.random.SeedSequence(seed).spawn(n_categories)]


def _gen_stats_row(category, n_requested, raw_kept, ideal_m, ideal_v):
    n_kept = raw_kept.shape[0]
    if n_kept >= 2:
        raw_mean = tuple(float(v) for v in raw_kept.mean(axis=0))
        raw_var = tuple(float(v) for v in raw_kept.var(axis=0, ddof=1))
    else:
        raw_mean = tuple(float(v) for v in raw_kept.mean(axis=0)) \
            if n_kept else (float("nan"),) * len(ideal_m)
        raw_var = (float("nan"),) * len(ideal_m)
    return CategoryGenStats(
        category=category, n_requested=n_requested, n_kept=n_kept,
        n_dropped=n_requested - n_kept, raw_mean=raw_mean, raw_var=raw_var,
        ideal_mean=tuple(float(v) for v in ideal_m),
        ideal_var=tuple(float(v) for v in ideal_v))


# --- condition encodings ----------------------------------------------------

def encode_condition_approach1(pt_point, r_pair, max_level):
    """(normalized I, normalized Q, r_real, r_imag)."""
    return np.array([pt_point[0] / max_level, pt_point[1] / max_level,
                     r_pair[0], r_pair[1]], dtype=float)


def encode_condition_approach2(d_index, r, n_categories, encoding="onehot"):
    """One-hot indicator of the distance category followed by r, or the bare
    (index, r) pair when the embedding is left to the network's first layer."""
    if not 0 <= d_index < n_categories:
        raise ValidationError(
            f"distance index {d_index} out of range [0, {n_categories})")
    if encoding == "onehot":
        vec = np.zeros(n_categories + 1, dtype=float)
        vec[d_index] = 1.0
        vec[-1] = r
        return vec
    if encoding == "index":
        return np.array([float(d_index), r], dtype=float)
    raise ValidationError(f"unknown condition encoding {encoding!r}")


def _encode_categories_approach2(indices, r_values, n_categories, encoding):
    n = len(indices)
    if encoding == "onehot":
        cond = np.zeros((n, n_categories + 1), dtype=float)
        cond[np.arange(n), indices] = 1.0
        cond[:, -1] = r_values
        return cond
    return np.column_stack([indices.astype(float), r_values])


# --- generators -------------------------------------------------------------

def generate_approach1(n_per_point, constellation: QamConstellation,
                       params: ChannelParams, noise: NoiseParams, seed,
                       distance, scaling: ScalingMode = None):
    """Amplitude-regime dataset: one category per constellation point.

    Each axis amplitude a is sent through the amplitude-domain channel with
    per-axis transmit power a**2 at an independent quantile, then re-signed;
    noise (if any) is added per axis afterwards.
    """
    if n_per_point < 1:
        raise ValidationError("n_per_point must be >= 1")
    if scaling is None:
        scaling = default_scaling(Approach.AMPLITUDE, noise)
    meta = DatasetMeta(
        approach=Approach.AMPLITUDE, scaling=scaling, channel=params,
        noise=noise, seed=int(seed), n_per_category=int(n_per_point),
        levels=constellation.levels, distance=float(distance))
    return _generate_from_meta_amplitude(meta)


def _generate_from_meta_amplitude(meta: DatasetMeta):
    constellation = build_constellation(meta.levels)
    params, noise = meta.channel, meta.noise
    n = meta.n_per_category
    max_level = constellation.max_level
    streams = _category_streams(meta.seed, len(constellation.points))

    conds, targets, raws, cats = [], [], [], []
    stats = GenerationStats()
    for ci, point in enumerate(constellation.points):
        rng = streams[ci]
        r = rng.random((n, 2))
        raw = np.empty((n, 2))
        ideal_m, ideal_v = [], []
        for axis in range(2):
            amp = point[axis]
            axis_params = params.with_pt(amp * amp)
            mag = sample_received(axis_params, Approach.AMPLITUDE,
                                  meta.distance, r[:, axis])
            raw[:, axis] = np.sign(amp) * mag
            mu = np.sign(amp) * ideal_mean(axis_params, Approach.AMPLITUDE,
                                           meta.distance)
            var = ideal_var(axis_params, Approach.AMPLITUDE, meta.distance)
            if noise.enabled:
                mu += noise.mean
                var += noise.watt_std ** 2
            ideal_m.append(mu)
            ideal_v.append(var)
        if noise.enabled:
            raw = raw + sample_noise(noise, rng, size=(n, 2))
        keep = _scale_valid_mask(raw, meta.scaling)
        raw_kept = raw[keep]
        cond = np.empty((raw_kept.shape[0], 4))
        cond[:, 0] = point[0] / max_level
        cond[:, 1] = point[1] / max_level
        cond[:, 2:] = r[keep]
        conds.append(cond)
        raws.append(raw_kept)
        targets.append(scale(raw_kept, meta.scaling))
        cats.append(np.full(raw_kept.shape[0], ci, dtype=np.int64))
        stats.rows.append(_gen_stats_row(ci, n, raw_kept, ideal_m, ideal_v))

    dataset = Dataset(meta, np.concatenate(conds), np.concatenate(targets),
                      np.concatenate(raws), np.concatenate(cats))
    return dataset, stats


def generate_approach2(n_per_distance, params: ChannelParams,
                       noise: NoiseParams, d_values, m_rule, seed,
                       scaling: ScalingMode = None, encoding="onehot"):
    """Power-regime dataset: one category per distance.

    m_rule maps a distance to its fading shape; it may be a callable or a
    sequence aligned with d_values (the resolved per-distance shapes are what
    gets persisted).
    """
    if n_per_distance < 1:
        raise ValidationError("n_per_distance must be >= 1")
    d_values = tuple(float(d) for d in d_values)
    if not d_values:
        raise ValidationError("d_values must be non-empty")
    if any(d <= 0 for d in d_values):
        raise ValidationError("all distances must be > 0")
    if callable(m_rule):
        m_values = tuple(float(m_rule(d)) for d in d_values)
    else:
        m_values = tuple(float(m) for m in m_rule)
        if len(m_values) != len(d_values):
            raise ValidationError("m_rule sequence must align with d_values")
    if scaling is None:
        scaling = default_scaling(Approach.POWER, noise)
    meta = DatasetMeta(
        approach=Approach.POWER, scaling=scaling, channel=params, noise=noise,
        seed=int(seed), n_per_category=int(n_per_distance),
        d_values=d_values, m_values=m_values, encoding=encoding)
    return _generate_from_meta_power(meta)


def _generate_from_meta_power(meta: DatasetMeta):
    params, noise = meta.channel, meta.noise
    n = meta.n_per_category
    n_cat = len(meta.d_values)
    streams = _category_streams(meta.seed, n_cat)

    conds, targets, raws, cats = [], [], [], []
    stats = GenerationStats()
    for ci, (d, m) in enumerate(zip(meta.d_values, meta.m_values)):
        rng = streams[ci]
        cat_params = params.with_m(m)
        r = rng.random(n)
        raw = sample_received(cat_params, Approach.POWER, d, r)
        mu = ideal_mean(cat_params, Approach.POWER, d)
        var = ideal_var(cat_params, Approach.POWER, d)
        if noise.enabled:
            raw = raw + sample_noise(noise, rng, size=n)
            mu += noise.mean
            var += noise.watt_std ** 2
        raw = raw.reshape(-1, 1)
        keep = _scale_valid_mask(raw, meta.scaling)
        raw_kept = raw[keep]
        r_kept = r[keep]
        idx = np.full(raw_kept.shape[0], ci, dtype=np.int64)
        conds.append(_encode_categories_approach2(idx, r_kept, n_cat,
                                                  meta.encoding))
        raws.append(raw_kept)
        targets.append(scale(raw_kept, meta.scaling))
        cats.append(idx)
        stats.rows.append(_gen_stats_row(ci, n, raw_kept, (mu,), (var,)))

    dataset = Dataset(meta, np.concatenate(conds), np.concatenate(targets),
                      np.concatenate(raws), np.concatenate(cats))
    return dataset, stats


def regenerate(meta: DatasetMeta):
    """Rebuild the exact dataset described by a meta block (splits included)."""
    base = replace(meta, split=None)
    if meta.approach is Approach.AMPLITUDE:
        dataset, _ = _generate_from_meta_amplitude(base)
    else:
        dataset, _ = _generate_from_meta_power(base)
    if meta.split is not None:
        train, val = split(dataset, meta.split["ratio"],
                           seed=meta.split.get("seed"))
        return train if meta.split["part"] == "train" else val
    return dataset


# --- split ------------------------------------------------------------------

def split(dataset: Dataset, ratio, seed=None):
    """Stratified train/validation split, deterministic in the dataset seed.

    Per-category sizes land within one sample of the exact ratio; row order
    inside each part stays canonical (ascending original index).
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must lie in (0, 1), got {ratio}")
    if dataset.meta.split is not None:
        raise ValidationError("dataset is already a split part")
    if seed is None:
        seed = int(np.random.SeedSequence(
            [dataset.meta.seed, _SPLIT_STREAM_TAG]).generate_state(1)[0])
    rng = np.random.default_rng(seed)

    train_idx, val_idx = [], []
    for ci in range(dataset.meta.n_categories()):
        rows = dataset.rows_for_category(ci)
        if len(rows) < 2:
            raise ValidationError(
                f"category {ci} has {len(rows)} samples; need >= 2 to split")
        perm = rng.permutation(rows)
        n_train = int(round(ratio * len(rows)))
        n_train = min(max(n_train, 1), len(rows) - 1)
        train_idx.append(perm[:n_train])
        val_idx.append(perm[n_train:])

    def _part(indices, part_name):
        idx = np.sort(np.concatenate(indices))
        meta = replace(dataset.meta,
                       split={"ratio": float(ratio), "part": part_name,
                              "seed": int(seed)})
        return Dataset(meta, dataset.conditions[idx], dataset.targets[idx],
                       dataset.raw_targets[idx], dataset.categories[idx])

    return _part(train_idx, "train"), _part(val_idx, "val")


# --- persistence ------------------------------------------------------------

def save_dataset(dataset: Dataset, path):
    """Write a dataset; '.bin' selects the binary container, anything else
    the self-describing text format."""
    path = str(path)
    if path.endswith(".bin"):
        serialize.write_container(
            path, kind="dataset", meta=dataset.meta.to_dict(),
            arrays=[("conditions", dataset.conditions),
                    ("targets", dataset.targets),
                    ("raw_targets", dataset.raw_targets),
                    ("categories", dataset.categories)])
        return
    _save_dataset_text(dataset, path)


def _save_dataset_text(dataset, path):
    cond_dim, tgt_dim = dataset.condition_dim, dataset.target_dim
    cols = (["category"]
            + [f"cond{i}" for i in range(cond_dim)]
            + [f"target{i}" for i in range(tgt_dim)]
            + [f"raw{i}" for i in range(tgt_dim)])
    buf = io.StringIO()
    buf.write(f"{_TEXT_MAGIC}\tversion={TEXT_FORMAT_VERSION}\n")
    buf.write(f"#meta\t{serialize.canonical_json(dataset.meta.to_dict())}\n")
    buf.write("#columns\t" + "\t".join(cols) + "\n")
    buf.write(f"#rows\t{len(dataset)}\n")
    for i in range(len(dataset)):
        parts = [str(int(dataset.categories[i]))]
        parts += [repr(v) for v in dataset.conditions[i]]
        parts += [repr(v) for v in dataset.targets[i]]
        parts += [repr(v) for v in dataset.raw_targets[i]]
        buf.write("\t".join(parts) + "\n")
    payload = buf.getvalue().encode("utf-8")
    digest = serialize.sha256_hex(payload)
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(f"#sha256\t{digest}\n".encode())


def load_dataset(path) -> Dataset:
    """Read a dataset written by save_dataset, verifying version/checksum."""
    path = str(path)
    if path.endswith(".bin"):
        meta_dict, arrays = serialize.read_container(path, kind="dataset")
        return Dataset(DatasetMeta.from_dict(meta_dict), arrays["conditions"],
                       arrays["targets"], arrays["raw_targets"],
                       arrays["categories"])
    return _load_dataset_text(path)


def _load_dataset_text(path):
    import json as _json
    with open(path, "rb") as fh:
        data = fh.read()

    footer_pos = data.rfind(b"#sha256\t")
    if footer_pos < 0:
        raise TruncationError(f"{path}: missing checksum line")
    footer = data[footer_pos:].rstrip(b"\n")
    stored = footer.split(b"\t", 1)[1].decode("ascii", "replace")
    actual = serialize.sha256_hex(data[:footer_pos])
    payload = data[:footer_pos]

    lines = payload.split(b"\n")
    if not lines or not lines[0].decode("utf-8", "replace").startswith(_TEXT_MAGIC):
        raise DataFormatError(f"{path}: not a fadenet dataset file")
    try:
        version = int(lines[0].split(b"version=")[1])
    except (IndexError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed magic line") from exc
    if not 1 <= version <= TEXT_FORMAT_VERSION:
        raise VersionError(f"{path}: dataset format version {version} "
                           f"not supported (this build reads <= "
                           f"{TEXT_FORMAT_VERSION})")
    if len(lines) < 4:
        raise TruncationError(f"{path}: incomplete header")
    header = {}
    for line in lines[1:4]:
        header[line.split(b"\t", 1)[0].decode("utf-8", "replace")] = line
    if "#meta" not in header or "#columns" not in header or "#rows" not in header:
        raise TruncationError(f"{path}: incomplete header")
    meta = DatasetMeta.from_dict(
        _json.loads(header["#meta"].split(b"\t", 1)[1].decode("utf-8")))
    cols = header["#columns"].decode("utf-8").split("\t")[1:]
    n_rows = int(header["#rows"].split(b"\t", 1)[1])
    cond_dim = sum(1 for c in cols if c.startswith("cond"))
    tgt_dim = sum(1 for c in cols if c.startswith("target"))

    body = [ln for ln in lines[4:] if ln]
    if len(body) != n_rows:
        raise TruncationError(
            f"{path}: expected {n_rows} rows, found {len(body)}")
    if stored != actual:
        raise ChecksumError(f"{path}: checksum mismatch")

    categories = np.empty(n_rows, dtype=np.int64)
    conditions = np.empty((n_rows, cond_dim))
    targets = np.empty((n_rows, tgt_dim))
    raws = np.empty((n_rows, tgt_dim))
    for i, line in enumerate(body):
        parts = line.decode("utf-8").split("\t")
        if len(parts) != 1 + cond_dim + 2 * tgt_dim:
            raise TruncationError(f"{path}: row {i} has {len(parts)} fields")
        categories[i] = int(parts[0])
        conditions[i] = [float(v) for v in parts[1:1 + cond_dim]]
        targets[i] = [float(v) for v in parts[1 + cond_dim:1 + cond_dim + tgt_dim]]
        raws[i] = [float(v) for v in parts[1 + cond_dim + tgt_dim:]]
    return Dataset(meta, conditions, targets, raws, categories)
