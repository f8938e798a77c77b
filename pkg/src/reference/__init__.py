"""
Full-precision reference model: LIF layer, STDP training, label assignment
and quantization to engine codes.
"""
