from voicestack.ttv.tokenizer import Tokenizer
from voicestack.ttv.mas import mas_align
from voicestack.ttv.ctc import ctc_loss
from voicestack.ttv.model import TextToVec, TTVLossReport

__all__ = ["Tokenizer", "mas_align", "ctc_loss", "TextToVec", "TTVLossReport"]
