"""Hybrid quantum-classical machine learning engine.

Subpackages and modules:

* ``qsim``     -- statevector simulator (H/X/RX/RY/RZ/CNOT/CRZ, exact <Z>)
* ``autodiff`` -- reverse-mode autodiff plus parameter-shift quantum nodes
* ``nn``       -- classical layers, LSTM cell, optimizers, baseline classifiers
* ``qml``      -- VQC layer, QLSTM cell, 2-qubit QNN, generic training loop
* ``smiles``   -- reaction-string tokenizer and preprocessing pipelines
* ``features`` -- exact t-SNE, max normalization, class balancing, splits
* ``harness``  -- seeded experiment runner with reproducible artifacts
* ``cli``      -- command line entry point (``hqml``)
"""

__version__ = "0.1.0"
