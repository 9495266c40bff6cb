"""Design, simulation and estimation tools for vacuum-gap capacitor optomechanics."""

__version__ = "0.1.0"
