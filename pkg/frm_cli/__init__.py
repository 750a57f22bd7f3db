"""
Command-line surface of the Faraday-Mirror Lab.

    frm-lab identities | six-state | qpt | compensate [flags]
"""
