"""Feature modules of the lab.

Each module is a vertical slice with domain, application, infrastructure and
interface layers where it needs them.
"""
