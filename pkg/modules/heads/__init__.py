"""Decoding of BEV states into output modalities and their losses."""
