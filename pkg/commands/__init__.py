from . import ablate, evaluate, predict, synth, train

COMMANDS = [synth, train, evaluate, predict, ablate]

__all__ = ['COMMANDS', 'synth', 'train', 'evaluate', 'predict', 'ablate']
