from voicestack.nn.activations import AntiAliasedSnake, Snake, snake, upsample2x_lowpass
from voicestack.nn.amp import AMPBlock, nn_upsample
from voicestack.nn.wavenet import WaveNet
from voicestack.nn.transformer import AdaLNZeroBlock, TransformerBlock
from voicestack.nn.flow import CouplingLayer, FlowStack
from voicestack.nn.style import StyleEncoder
from voicestack.nn.gaussian import GaussianLatent, gaussian_kl, rsample

__all__ = [
    "snake",
    "Snake",
    "AntiAliasedSnake",
    "upsample2x_lowpass",
    "AMPBlock",
    "nn_upsample",
    "WaveNet",
    "AdaLNZeroBlock",
    "TransformerBlock",
    "CouplingLayer",
    "FlowStack",
    "StyleEncoder",
    "GaussianLatent",
    "gaussian_kl",
    "rsample",
]
