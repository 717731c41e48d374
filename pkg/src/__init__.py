# Radiación térmica no planckiana en cavidades metálicas: librería y CLI.

__version__ = "1.0.0"
