"""Neural transliteration: epsilon-insertion CTC models and attentional seq2seq."""
from .checkpoint import ModelCheckpoint
from .dataset import CodepointVocabulary, TransliterationPair, load_pairs, normalize_english
from .ei import EpsilonModel
from .evaluation import cer, edit_distance, error_report, wer
from .kernels import BACKEND
from .seq2seq import DecodeLimits, Seq2SeqModel
from .training import Hyperparameters, random_search, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CodepointVocabulary", "DecodeLimits", "EpsilonModel", "Hyperparameters",
    "ModelCheckpoint", "Seq2SeqModel", "TransliterationPair", "cer", "edit_distance",
    "error_report", "load_pairs", "normalize_english", "random_search", "train", "wer",
]
