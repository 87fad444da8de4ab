from netfactor.commands.evaluate import register as register_eval
from netfactor.commands.experiment import register as register_experiment
from netfactor.commands.factorize import register as register_factorize
from netfactor.commands.synth import register as register_synth

__all__ = [
    "register_factorize",
    "register_synth",
    "register_experiment",
    "register_eval",
]
