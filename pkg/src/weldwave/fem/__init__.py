"""Finite element machinery: meshes, PML, assembly, and direct solves."""
