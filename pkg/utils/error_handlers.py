import logging
import traceback
from typing import Dict, Any, List, Optional
from functools import wraps

logger = logging.getLogger('attnseg.errors')


class AttnSegError(Exception):
    """Base class for toolkit errors"""
    def __init__(self, message: str, exit_code: int = 1, error_code: str = None):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code or self.__class__.__name__
        super().__init__(self.message)


class ValidationError(AttnSegError):
    """A configuration or argument value violates its invariant"""
    def __init__(self, message: str, field: str = None, value: Any = None):
        self.field = field
        self.value = value
        super().__init__(message, 2, 'VALIDATION_ERROR')


class UsageError(AttnSegError):
    """Bad command-line usage"""
    def __init__(self, message: str):
        super().__init__(message, 2, 'USAGE_ERROR')


class DatasetError(AttnSegError):
    """Corpus ingestion or manifest error"""
    def __init__(self, message: str, record_id: str = None, path: str = None):
        self.record_id = record_id
        self.path = path
        super().__init__(message, 1, 'DATASET_ERROR')


class ShapeError(AttnSegError):
    """Array or tensor shapes do not agree"""
    def __init__(self, message: str, expected: Any = None, actual: Any = None):
        self.expected = expected
        self.actual = actual
        super().__init__(message, 1, 'SHAPE_ERROR')


class CheckpointError(AttnSegError):
    """Checkpoint or weight file cannot be used"""
    def __init__(self, message: str, tensor_names: List[str] = None):
        self.tensor_names = tensor_names or []
        super().__init__(message, 1, 'CHECKPOINT_ERROR')


class DivergenceError(AttnSegError):
    """Training produced a non-finite loss"""
    def __init__(self, epoch: int, batch_index: int, value: float = None):
        self.epoch = epoch
        self.batch_index = batch_index
        self.value = value
        super().__init__(
            f"Non-finite loss ({value}) at epoch {epoch}, batch {batch_index}",
            1, 'DIVERGENCE_ERROR'
        )


class PartialFailureError(AttnSegError):
    """Some items of a batch command failed; the rest were produced"""
    def __init__(self, message: str, failures: List[Dict[str, Any]] = None):
        self.failures = failures or []
        super().__init__(message, 1, 'PARTIAL_FAILURE')


def handle_cli_error(error: AttnSegError) -> int:
    """Log a toolkit error and return the process exit code"""
    logger.error(f"❌ {error.error_code}: {error.message}")

    if isinstance(error, ValidationError) and error.field:
        logger.error(f"   field: {error.field} = {error.value!r}")
    if isinstance(error, CheckpointError) and error.tensor_names:
        logger.error(f"   tensors: {', '.join(error.tensor_names)}")
    if isinstance(error, PartialFailureError):
        for failure in error.failures:
            logger.error(f"   failed: {failure}")

    return error.exit_code


def handle_unexpected_error(error: Exception) -> int:
    """Anything outside the AttnSegError hierarchy is a bug; log the traceback"""
    logger.error(f"💥 {type(error).__name__}: {error}")
    logger.debug(traceback.format_exc())
    logger.error("Re-run with --log-level DEBUG for the traceback")
    return 1


def cli_error_handler(f):
    """Decorator turning command exceptions into exit codes"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            result = f(*args, **kwargs)
            return 0 if result is None else result
        except AttnSegError as e:
            return handle_cli_error(e)
        except Exception as e:
            return handle_unexpected_error(e)

    return decorated_function


class ErrorCollector:
    """Per-item failures of a batch command (predict files, ablation variants)"""

    def __init__(self):
        self.errors: List[Dict[str, Any]] = []

    def add_error(self, error: Exception, context: Optional[Dict[str, Any]] = None):
        entry = {
            'error_type': type(error).__name__,
            'error_code': getattr(error, 'error_code', None),
            'message': str(error),
            'context': dict(context or {}),
        }
        logger.warning(f"⚠️ {entry['error_type']}: {entry['message']} {entry['context'] or ''}")
        self.errors.append(entry)

    def get_errors(self) -> List[Dict[str, Any]]:
        return list(self.errors)

    def counts_by_type(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for entry in self.errors:
            counts[entry['error_type']] = counts.get(entry['error_type'], 0) + 1
        return counts

    def __len__(self) -> int:
        return len(self.errors)

    def __bool__(self) -> bool:
        return bool(self.errors)
