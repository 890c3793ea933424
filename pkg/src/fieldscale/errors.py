"""Exception classes shared across the toolkit.

Every error raised by fieldscale derives from FieldscaleError so callers
(and the CLI) can report a single-line error class without chasing
module-specific hierarchies.
"""


class FieldscaleError(Exception):
    """Base class for all toolkit errors."""


# corpus
class MalformedFilename(FieldscaleError):
    """File name does not follow the <id>_<YYYYMMDD>_<initials> convention."""


class InvalidDate(FieldscaleError):
    """Date component does not parse as YYYYMMDD."""


class EncodingError(FieldscaleError):
    """Input file is not valid UTF-8."""


class SeparatorCollision(FieldscaleError):
    """A code name contains the chosen code separator."""


class SchemaError(FieldscaleError):
    """Table is missing a required column or violates the row schema."""


class DuplicateUnit(FieldscaleError):
    """Two rows share the same (document, reference) key."""


class NotFound(FieldscaleError):
    """Requested document, unit, word, or attribute does not exist."""


class InvariantViolation(FieldscaleError):
    """Corpus construction violated a structural invariant."""


# textprep
class AlignmentError(FieldscaleError):
    """Annotation sidecar row does not align with any corpus token."""


# topics
class EmptyVocabulary(FieldscaleError):
    """No terms left to model after preprocessing."""


class InvalidK(FieldscaleError):
    """Requested cluster/topic count is out of range."""


# embeddings
class InsufficientVocabulary(FieldscaleError):
    """Too few distinct words to train embeddings."""


class CoverageWarning(UserWarning):
    """Loaded vectors cover less than 90% of the corpus vocabulary."""


class FormatError(FieldscaleError):
    """Vector file rows disagree with the declared dimension."""


class RankDeficient(FieldscaleError):
    """Matrix rank is below the requested projection dimension."""


# semnet
class SeedsAbsent(FieldscaleError):
    """None of the seed words occur in the corpus."""


class InvalidPartition(FieldscaleError):
    """Cluster assignment does not cover every node."""


# heatmap
class TooFew(FieldscaleError):
    """Fewer than two items on the clustering axis."""


class InvalidOrder(FieldscaleError):
    """Row/column order is not a permutation of the matrix axes."""


# coder
class TooFewExamples(FieldscaleError):
    """Not enough positive or negative examples for a split."""


class MissingEmbedding(FieldscaleError):
    """No sidecar embedding for a requested unit."""


class DegenerateLabels(FieldscaleError):
    """Training labels contain a single class."""


class NoPositives(FieldscaleError):
    """Evaluation set has no positive examples."""


class EmptyEval(FieldscaleError):
    """Evaluation set is empty."""


class LengthMismatch(FieldscaleError):
    """Label sequences have different lengths."""


class UndefinedAlpha(FieldscaleError):
    """Expected disagreement is zero; agreement coefficient undefined."""


# review
class IncompleteReview(FieldscaleError):
    """Review queue still has pending items."""


class LeaseHeld(FieldscaleError):
    """Another reviewer holds the lease for this project/code."""
