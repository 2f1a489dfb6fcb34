"""Torus Lab: twisted geodesic flows on conformally flat tori"""
