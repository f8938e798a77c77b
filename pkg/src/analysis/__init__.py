"""
Design-space analysis: cost model, activity statistics, sweeps and batch evaluation.
"""
