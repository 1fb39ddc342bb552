import os
from dotenv import load_dotenv

load_dotenv()

CODE_VERSION = '1.0.0'


def _env_float(name: str, default: float) -> float:
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


class Config:
    # Optimizer and loss (ADAM, lr 5e-4, decay 1e-5, lambda .6)
    LEARNING_RATE = _env_float('ATTNSEG_LR', 5e-4)
    WEIGHT_DECAY = _env_float('ATTNSEG_WEIGHT_DECAY', 1e-5)
    LOSS_LAMBDA = _env_float('ATTNSEG_LAMBDA', 0.6)
    OPTIMIZER = os.environ.get('ATTNSEG_OPTIMIZER', 'adam')
    SCHEDULE = os.environ.get('ATTNSEG_SCHEDULE', 'constant')
    SCHEDULE_STEP_SIZE = _env_int('ATTNSEG_SCHEDULE_STEP', 20)

    # Classification branch init
    CLASSIFIER_INIT_STD = 0.05

    # Dataset
    SPLIT_FRACTIONS = {'train': 0.6, 'val': 0.2, 'test': 0.2}
    MIN_CORPUS_SIZE = 5
    SEED = _env_int('ATTNSEG_SEED', 0)
    NUM_WORKERS = _env_int('ATTNSEG_NUM_WORKERS', 0)
    HORIZONTAL_FLIP = os.environ.get('ATTNSEG_HFLIP', 'false').lower() == 'true'

    # Metrics
    MASK_THRESHOLD = _env_float('ATTNSEG_MASK_THRESHOLD', 0.5)
    CLASS_THRESHOLD = _env_float('ATTNSEG_CLASS_THRESHOLD', 0.5)
    BCE_EPSILON = 1e-7

    # Checkpoints
    CHECKPOINT_MAGIC = 'attnseg-v1'
    CHECKPOINT_DIR = os.environ.get('ATTNSEG_CHECKPOINT_DIR', 'checkpoints')

    # Synthetic corpus defaults
    SYNTH_SETTINGS = {
        'n_images': 200,
        'image_size': 64,
        'fire_fraction': 0.5,
        'distractor_fraction': 0.5,
        'min_blob_area': 20,
        'max_blob_area': 300,
    }

    # Overlay rendering
    OVERLAY_SETTINGS = {
        'color': (255, 0, 255),
        'alpha': 0.5,
    }

    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')


class DeskConfig(Config):
    PRESET = 'desk'
    BACKBONE = 'desk_small'
    INPUT_SIZE = _env_int('ATTNSEG_INPUT_SIZE', 64)
    EPOCHS = _env_int('ATTNSEG_EPOCHS', 60)
    BATCH_SIZE = _env_int('ATTNSEG_BATCH_SIZE', 8)
    ENCODER_CHANNELS = [16, 32, 64, 128]
    DECODER_CHANNELS = 32


class RealDataConfig(Config):
    PRESET = 'real'
    BACKBONE = 'deeplabv3plus'
    INPUT_SIZE = _env_int('ATTNSEG_INPUT_SIZE', 512)
    EPOCHS = _env_int('ATTNSEG_EPOCHS', 100)
    BATCH_SIZE = _env_int('ATTNSEG_BATCH_SIZE', 4)
    # resnet-18 stage widths, last entry is the ASPP width
    ENCODER_CHANNELS = [64, 128, 256, 256]
    DECODER_CHANNELS = 256


# Environment-specific configuration loader
def get_config(preset=None):
    """
    Get configuration by preset name, falling back to the ATTNSEG_PRESET environment variable
    """
    preset = (preset or os.environ.get('ATTNSEG_PRESET', 'desk')).lower()

    if preset == 'real':
        return RealDataConfig
    else:
        return DeskConfig


# Validation helper
def validate_config(config_class):
    """
    Validate that all configured values satisfy their invariants
    """
    errors = []

    if not config_class.LEARNING_RATE > 0:
        errors.append(f"LEARNING_RATE must be > 0, got {config_class.LEARNING_RATE}")
    if config_class.WEIGHT_DECAY < 0:
        errors.append(f"WEIGHT_DECAY must be >= 0, got {config_class.WEIGHT_DECAY}")
    if not 0.0 <= config_class.LOSS_LAMBDA <= 1.0:
        errors.append(f"LOSS_LAMBDA must be in [0, 1], got {config_class.LOSS_LAMBDA}")
    for name in ('MASK_THRESHOLD', 'CLASS_THRESHOLD'):
        value = getattr(config_class, name)
        if not 0.0 < value < 1.0:
            errors.append(f"{name} must be in (0, 1), got {value}")
    if abs(sum(config_class.SPLIT_FRACTIONS.values()) - 1.0) > 1e-9:
        errors.append(f"SPLIT_FRACTIONS must sum to 1, got {config_class.SPLIT_FRACTIONS}")
    if config_class.OPTIMIZER not in ('adam',):
        errors.append(f"OPTIMIZER must be 'adam', got {config_class.OPTIMIZER}")
    if config_class.SCHEDULE not in ('constant', 'step'):
        errors.append(f"SCHEDULE must be 'constant' or 'step', got {config_class.SCHEDULE}")
    if getattr(config_class, 'EPOCHS', 1) < 1:
        errors.append(f"EPOCHS must be >= 1, got {config_class.EPOCHS}")
    if getattr(config_class, 'BATCH_SIZE', 1) < 1:
        errors.append(f"BATCH_SIZE must be >= 1, got {config_class.BATCH_SIZE}")

    if errors:
        raise ValueError("Configuration validation failed:\n" + "\n".join(errors))

    return True
