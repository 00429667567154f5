"""Open-system simulator for a parametrically amplified optomechanical cavity.

The mechanical oscillator is driven by a two-phonon parametric amplifier and
coupled to a squeezed reservoir. Submodules:

* :mod:`optomech_sim.fock` - truncated Fock spaces, operators and states
* :mod:`optomech_sim.model` - parameters, squeezed-frame quantities, Hamiltonians
* :mod:`optomech_sim.dynamics` - Lindblad generator, steady state, time evolution
* :mod:`optomech_sim.observables` - photon statistics, fidelity, Wigner functions
* :mod:`optomech_sim.conditional` - undriven evolution in displaced mechanical frames
* :mod:`optomech_sim.harness` - configuration, scenario runners and the CLI
"""

__version__ = "0.1.0"
