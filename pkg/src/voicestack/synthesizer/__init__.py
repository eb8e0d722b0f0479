from voicestack.synthesizer.model import (
    HierarchicalSynthesizer,
    SynthLossReport,
    assemble_loss_report,
    null_style_dropout,
)

__all__ = [
    "HierarchicalSynthesizer",
    "SynthLossReport",
    "assemble_loss_report",
    "null_style_dropout",
]
