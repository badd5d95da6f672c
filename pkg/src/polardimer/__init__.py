"""Field-dressed rovibrational states, photoassociation and radiative cascades of polar dimers."""

__version__ = "0.1.0"
