"""
Utilities package for the abelian group lab.

Contains logging, settings, tracing and worker pool helpers shared by the
command-line tool and the alab package.
"""
