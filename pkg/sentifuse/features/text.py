"""
Text Pipeline - Transcript normalization, TF-IDF and feature selection.

Raw transcripts go through lowercasing, punctuation stripping, stopword
removal and rule-table lemmatization, are vectorized with smoothed-idf
TF-IDF, reduced by one-vs-rest LASSO and recursive feature elimination,
and zero-padded to a fixed width.
"""

import logging
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from sentifuse.core.config_schemas import TextSettings
from sentifuse.core.exceptions import DataError, ModelStateError, ValidationError
from sentifuse.core.models import FeatureMatrix
from sentifuse.core.tables import pad_columns
from sentifuse.core.utils import PathLike


logger = logging.getLogger(__name__)

MIN_LEMMA_LENGTH = 3
LASSO_TOLERANCE = 1e-6
RIDGE_LAMBDA = 1e-3
TEXT_SCHEMA = "sentifuse-text"
TEXT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TextNormConfig:
    """Stopwords plus the lemmatizer's suffix rules and exception map."""

    stopwords: FrozenSet[str] = frozenset()
    rules: Tuple[Tuple[str, str], ...] = ()
    exceptions: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for suffix, replacement in self.rules:
            if not suffix:
                raise ValidationError("lemma rule with an empty suffix", field_name="rules")
            if len(replacement) > len(suffix):
                raise ValidationError(
                    f"lemma rule '{suffix}' -> '{replacement}' lengthens words",
                    field_name="rules",
                    invalid_value=suffix,
                )
        # Longest suffix first; file order among equal lengths.
        ordered = sorted(self.rules, key=lambda rule: -len(rule[0]))
        object.__setattr__(self, "rules", tuple(ordered))
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stopwords": sorted(self.stopwords),
            "rules": [list(rule) for rule in self.rules],
            "exceptions": dict(sorted(self.exceptions.items())),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TextNormConfig":
        return cls(
            frozenset(data["stopwords"]),
            tuple((str(s), str(r)) for s, r in data["rules"]),
            dict(data["exceptions"]),
        )


def _data_lines(text: str) -> List[str]:
    lines = []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        lines.append(line.rstrip("\r\n"))
    return lines


def _read_asset(path: Optional[PathLike], packaged: str) -> Tuple[str, str]:
    if path is None:
        return resources.files("sentifuse.assets").joinpath(packaged).read_text(encoding="utf-8"), packaged
    source = Path(path)
    if not source.exists():
        raise DataError(f"file not found: {source}", path=str(source))
    return source.read_text(encoding="utf-8"), str(source)


def _parse_pairs(text: str, origin: str) -> List[Tuple[str, str]]:
    pairs = []
    for number, line in enumerate(_data_lines(text), start=1):
        if "\t" not in line:
            raise DataError(f"line {number}: expected '<key><TAB><value>'", path=origin, row=number)
        key, value = line.split("\t", 1)
        pairs.append((key.strip().lower(), value.strip().lower()))
    return pairs


def load_text_norm_config(
    stopwords: Optional[PathLike] = None,
    rules: Optional[PathLike] = None,
    exceptions: Optional[PathLike] = None,
) -> TextNormConfig:
    """
    Read the stopword list and lemmatizer tables.

    Args:
        stopwords: One word per line; the packaged list when None
        rules: ``suffix<TAB>replacement`` lines; packaged rules when None
        exceptions: ``word<TAB>lemma`` lines; packaged exceptions when None

    Returns:
        The normalization configuration
    """
    stop_text, _ = _read_asset(stopwords, "stopwords.txt")
    rule_text, rule_origin = _read_asset(rules, "lemma_rules.tsv")
    exc_text, exc_origin = _read_asset(exceptions, "lemma_exceptions.tsv")
    return TextNormConfig(
        frozenset(word.strip().lower() for word in _data_lines(stop_text)),
        tuple(_parse_pairs(rule_text, rule_origin)),
        dict(_parse_pairs(exc_text, exc_origin)),
    )


def _lemma_step(token: str, cfg: TextNormConfig) -> str:
    if token in cfg.exceptions:
        return cfg.exceptions[token]
    for suffix, replacement in cfg.rules:
        if token.endswith(suffix):
            candidate = token[: len(token) - len(suffix)] + replacement
            return candidate if len(candidate) >= MIN_LEMMA_LENGTH else token
    return token


def lemmatize(token: str, cfg: TextNormConfig) -> str:
    """
    Apply the rule table until the token stops changing.

    A cyclic table resolves to the lexicographically smallest word on the
    cycle, so the result is still a fixed point of this function.
    """
    seen: List[str] = [token]
    current = token
    while True:
        following = _lemma_step(current, cfg)
        if following == current:
            return current
        if following in seen:
            cycle = seen[seen.index(following):]
            return min(cycle)
        seen.append(following)
        current = following


def _strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def normalize_text(raw: str, cfg: TextNormConfig) -> List[str]:
    """
    Lowercase, strip Unicode punctuation, split on whitespace, drop
    stopwords and lemmatize what is left.
    """
    tokens = _strip_punctuation(raw.lower()).split()
    return [lemmatize(token, cfg) for token in tokens if token not in cfg.stopwords]


@dataclass(frozen=True)
class Vocabulary:
    """Term -> column index with document frequencies."""

    terms: Tuple[str, ...]
    df: Tuple[int, ...]
    n_docs: int

    def __post_init__(self) -> None:
        if len(self.terms) != len(self.df):
            raise ValidationError("terms and document frequencies differ in length")
        if any(d < 1 for d in self.df):
            raise ValidationError("every retained term needs df >= 1", field_name="df")
        object.__setattr__(self, "_index", {term: i for i, term in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def index(self, term: str) -> Optional[int]:
        return self._index.get(term)  # type: ignore[attr-defined]

    @property
    def idf(self) -> np.ndarray:
        df = np.asarray(self.df, dtype=np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0

    @property
    def col_names(self) -> Tuple[str, ...]:
        return tuple(f"tok_{term}" for term in self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_docs": self.n_docs,
            "terms": [
                {"term": term, "index": i, "df": d} for i, (term, d) in enumerate(zip(self.terms, self.df))
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Vocabulary":
        entries = sorted(data["terms"], key=lambda entry: entry["index"])
        if [entry["index"] for entry in entries] != list(range(len(entries))):
            raise DataError("vocabulary indices are not dense")
        return cls(
            tuple(entry["term"] for entry in entries),
            tuple(int(entry["df"]) for entry in entries),
            int(data["n_docs"]),
        )


def tfidf_fit(corpus: Sequence[Sequence[str]], max_vocab: int) -> Vocabulary:
    """
    Keep the ``max_vocab`` most frequent terms of the corpus.

    Frequency is the total token count over all documents; ties go to the
    lexicographically smaller term. Column indices follow sorted term order.

    Raises:
        ValidationError: Empty corpus or non-positive ``max_vocab``
    """
    if len(corpus) == 0:
        raise ValidationError("empty corpus", field_name="corpus")
    if max_vocab < 1:
        raise ValidationError("max_vocab must be positive", field_name="max_vocab", invalid_value=max_vocab)

    frequency: Counter = Counter()
    document_frequency: Counter = Counter()
    for doc in corpus:
        frequency.update(doc)
        document_frequency.update(set(doc))

    ranked = sorted(frequency, key=lambda term: (-frequency[term], term))[:max_vocab]
    terms = tuple(sorted(ranked))
    if not terms:
        logger.warning("Corpus contains no tokens; vocabulary is empty")
    logger.debug(f"Vocabulary: {len(terms)} of {len(frequency)} distinct terms kept")
    return Vocabulary(terms, tuple(document_frequency[t] for t in terms), len(corpus))


def tfidf_transform(doc: Sequence[str], v: Vocabulary) -> np.ndarray:
    """TF-IDF row for one document, L2-normalized; OOV tokens are ignored."""
    row = np.zeros(len(v), dtype=np.float64)
    for term, count in Counter(doc).items():
        index = v.index(term)
        if index is not None:
            row[index] = count
    row *= v.idf
    norm = math.sqrt(float(np.dot(row, row)))
    if norm > 0.0:
        row /= norm
    return row


def tfidf_matrix(corpus: Sequence[Sequence[str]], v: Vocabulary) -> FeatureMatrix:
    values = np.zeros((len(corpus), len(v)), dtype=np.float64)
    for i, doc in enumerate(corpus):
        values[i] = tfidf_transform(doc, v)
    return FeatureMatrix(values, v.col_names)


@dataclass(frozen=True)
class SelectionMask:
    """Retained column indices, in increasing order, and how they were chosen."""

    indices: Tuple[int, ...]
    provenance: str
    source_width: int
    schedule: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("selection indices must be strictly increasing", field_name="indices")
        if idx and (idx[0] < 0 or idx[-1] >= self.source_width):
            raise ValidationError("selection index outside the source width", field_name="indices")
        if self.provenance not in ("lasso", "rfe", "all"):
            raise ValidationError(f"unknown provenance '{self.provenance}'", field_name="provenance")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        if m.cols != self.source_width:
            raise ValidationError(
                f"column mismatch: mask built for {self.source_width} columns, got {m.cols}",
                field_name="m",
            )
        return m.select_columns(self.indices)

    def compose(self, inner: "SelectionMask") -> "SelectionMask":
        """Mask over this mask's source picking ``inner``'s subset of our columns."""
        if inner.source_width != len(self):
            raise ValidationError("masks do not compose", field_name="inner")
        return SelectionMask(
            tuple(self.indices[i] for i in inner.indices), inner.provenance, self.source_width, inner.schedule
        )

    @classmethod
    def everything(cls, width: int) -> "SelectionMask":
        return cls(tuple(range(width)), "all", width)


def _one_vs_rest_targets(y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    return np.where(y[:, None] == classes[None, :], 1.0, -1.0)


def lasso_coefficients(
    X: np.ndarray, t: np.ndarray, lam: float, max_iter: int, tol: float = LASSO_TOLERANCE
) -> np.ndarray:
    """
    Minimize ``0.5 * ||t - X b||^2 + lam * ||b||_1`` by cyclic coordinate descent.

    Works on the Gram matrix, so one sweep costs O(p^2) regardless of rows.
    Stops when the largest coefficient change of a sweep is below ``tol``.
    """
    gram = X.T @ X
    corr = X.T @ t
    diag = np.diag(gram).copy()
    beta = np.zeros(X.shape[1], dtype=np.float64)
    for _ in range(max_iter):
        max_change = 0.0
        for j in range(beta.shape[0]):
            if diag[j] == 0.0:
                continue
            rho = corr[j] - gram[j] @ beta + diag[j] * beta[j]
            updated = np.sign(rho) * max(abs(rho) - lam, 0.0) / diag[j]
            change = abs(updated - beta[j])
            if change > max_change:
                max_change = change
            beta[j] = updated
        if max_change < tol:
            break
    return beta


def lasso_select(X: FeatureMatrix, y: Sequence[int], lam: float, max_iter: int = 1000) -> SelectionMask:
    """
    Union of features with a nonzero one-vs-rest LASSO coefficient.

    Raises:
        ValidationError: Negative ``lam`` or label/row mismatch
    """
    if lam < 0:
        raise ValidationError("lambda must be non-negative", field_name="lam", invalid_value=lam)
    labels = np.asarray(y)
    if labels.shape[0] != X.rows:
        raise ValidationError(f"{labels.shape[0]} labels for {X.rows} rows", field_name="y")

    targets = _one_vs_rest_targets(labels)
    keep = np.zeros(X.cols, dtype=bool)
    for k in range(targets.shape[1]):
        beta = lasso_coefficients(X.values, targets[:, k], lam, max_iter)
        keep |= beta != 0.0
    indices = tuple(int(i) for i in np.flatnonzero(keep))
    if not indices:
        logger.warning(f"LASSO with lambda={lam} removed every feature")
    else:
        logger.debug(f"LASSO kept {len(indices)} of {X.cols} features")
    return SelectionMask(indices, "lasso", X.cols)


def _ridge_importance(X: np.ndarray, targets: np.ndarray) -> np.ndarray:
    gram = X.T @ X + RIDGE_LAMBDA * np.eye(X.shape[1])
    coefficients = np.linalg.solve(gram, X.T @ targets)
    return np.abs(coefficients).sum(axis=1)


def rfe_select(X: FeatureMatrix, y: Sequence[int], keep: int, step_fraction: float = 0.2) -> SelectionMask:
    """
    Recursive feature elimination under a one-vs-rest ridge scorer.

    Each round refits the scorer on the surviving columns and drops the
    ceil(step_fraction * remaining) least important ones (never going
    below ``keep``); equal importances drop the lower column index first.
    The width of every scorer fit is recorded in the mask's schedule.

    Raises:
        ValidationError: ``keep`` outside [1, X.cols] or step outside (0, 0.5]
    """
    if not 1 <= keep <= X.cols:
        raise ValidationError(
            f"keep must lie in [1, {X.cols}], got {keep}", field_name="keep", invalid_value=keep
        )
    if not 0.0 < step_fraction <= 0.5:
        raise ValidationError(
            "step_fraction must lie in (0, 0.5]", field_name="step_fraction", invalid_value=step_fraction
        )
    targets = _one_vs_rest_targets(np.asarray(y))
    remaining = np.arange(X.cols)
    schedule: List[int] = []
    while True:
        importance = _ridge_importance(X.values[:, remaining], targets)
        schedule.append(int(remaining.shape[0]))
        if remaining.shape[0] <= keep:
            break
        n_drop = min(math.ceil(step_fraction * remaining.shape[0]), remaining.shape[0] - keep)
        order = np.argsort(importance, kind="stable")
        remaining = np.sort(np.delete(remaining, order[:n_drop]))
    logger.debug(f"RFE schedule: {schedule}")
    return SelectionMask(tuple(int(i) for i in remaining), "rfe", X.cols, tuple(schedule))


class TextFeaturizer:
    """
    Fitted text transformer: normalize -> TF-IDF -> LASSO -> RFE -> pad.

    In ``plain`` mode only the TF-IDF stage runs and the output width is
    the vocabulary size.
    """

    def __init__(self, settings: Optional[TextSettings] = None, norm: Optional[TextNormConfig] = None, plain: bool = False):
        self.settings = settings or TextSettings()
        if self.settings.rfe_keep > self.settings.pad_width and not plain:
            raise ValidationError(
                "cannot truncate: rfe_keep exceeds pad_width", field_name="rfe_keep", invalid_value=self.settings.rfe_keep
            )
        self.norm = norm or load_text_norm_config(
            self.settings.stopwords_file, self.settings.lemma_rules_file, self.settings.lemma_exceptions_file
        )
        self.plain = plain
        self.vocabulary: Optional[Vocabulary] = None
        self.mask: Optional[SelectionMask] = None

    @property
    def is_fitted(self) -> bool:
        return self.vocabulary is not None and self.mask is not None

    @property
    def output_width(self) -> int:
        self._require_fitted()
        return len(self.vocabulary) if self.plain else self.settings.pad_width  # type: ignore[arg-type]

    def _require_fitted(self) -> None:
        if not self.is_fitted:
            raise ModelStateError("text featurizer is not fitted")

    def tokenize(self, transcripts: Sequence[str]) -> List[List[str]]:
        return [normalize_text(text, self.norm) for text in transcripts]

    def fit(self, transcripts: Sequence[str], labels: Sequence[int]) -> "TextFeaturizer":
        corpus = self.tokenize(transcripts)
        self.vocabulary = tfidf_fit(corpus, self.settings.max_vocab)
        if len(self.vocabulary) == 0:
            raise DataError("no transcript contains a token after normalization")
        tfidf = tfidf_matrix(corpus, self.vocabulary)
        if self.plain:
            self.mask = SelectionMask.everything(tfidf.cols)
            return self

        lasso = lasso_select(tfidf, labels, self.settings.lasso_alpha, self.settings.lasso_max_iter)
        if len(lasso) == 0:
            logger.warning("Falling back to the full vocabulary before RFE")
            lasso = SelectionMask.everything(tfidf.cols)
        survivors = lasso.apply(tfidf)
        keep = min(self.settings.rfe_keep, survivors.cols)
        rfe = rfe_select(survivors, labels, keep, self.settings.rfe_step)
        self.mask = lasso.compose(rfe)
        logger.info(
            f"Text features: vocabulary {len(self.vocabulary)}, LASSO {len(lasso)}, "
            f"RFE {len(self.mask)}, padded to {self.settings.pad_width}"
        )
        return self

    def transform(self, transcripts: Sequence[str]) -> FeatureMatrix:
        self._require_fitted()
        tfidf = tfidf_matrix(self.tokenize(transcripts), self.vocabulary)  # type: ignore[arg-type]
        selected = self.mask.apply(tfidf)  # type: ignore[union-attr]
        return selected if self.plain else pad_columns(selected, self.settings.pad_width)

    def to_dict(self) -> Dict[str, Any]:
        self._require_fitted()
        return {
            "schema": TEXT_SCHEMA,
            "version": TEXT_SCHEMA_VERSION,
            "plain": self.plain,
            "settings": self.settings.model_dump(mode="json"),
            "norm": self.norm.to_dict(),
            "vocabulary": self.vocabulary.to_dict(),  # type: ignore[union-attr]
            "mask": {
                "indices": list(self.mask.indices),  # type: ignore[union-attr]
                "provenance": self.mask.provenance,  # type: ignore[union-attr]
                "source_width": self.mask.source_width,  # type: ignore[union-attr]
                "schedule": list(self.mask.schedule),  # type: ignore[union-attr]
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TextFeaturizer":
        if data.get("schema") != TEXT_SCHEMA or data.get("version") != TEXT_SCHEMA_VERSION:
            raise DataError(f"not a {TEXT_SCHEMA} v{TEXT_SCHEMA_VERSION} document")
        featurizer = cls(TextSettings.model_validate(data["settings"]), TextNormConfig.from_dict(data["norm"]), data["plain"])
        featurizer.vocabulary = Vocabulary.from_dict(data["vocabulary"])
        mask = data["mask"]
        featurizer.mask = SelectionMask(
            tuple(mask["indices"]), mask["provenance"], mask["source_width"], tuple(mask["schedule"])
        )
        return featurizer


__all__ = [
    "TextNormConfig",
    "load_text_norm_config",
    "lemmatize",
    "normalize_text",
    "Vocabulary",
    "tfidf_fit",
    "tfidf_transform",
    "tfidf_matrix",
    "SelectionMask",
    "lasso_coefficients",
    "lasso_select",
    "rfe_select",
    "TextFeaturizer",
]
