# Copyright 2026 The pifdecode Authors
# SPDX-License-Identifier: Apache-2.0

"""Composite field pose decoding and tracking.

Fields are float32 arrays of shape (channels, fields, height, width) wrapped
in :class:`Field`. Poses expose their keypoints as (K, 4) arrays of
x, y, score, size.
"""

try:
    from ._pifdecode import *  # noqa: F401,F403  (installed wheel)
except ImportError:
    # Build tree: the extension sits next to, not inside, this package.
    from _pifdecode import *  # noqa: F401,F403

__version__ = "0.1.0"


def decode_arrays(cif, caf, skeleton, stride, image_size, config=None):
    """Decodes raw CIF and CAF arrays without building Field objects first."""
    cif_field = Field(cif, FieldKind.cif, stride, image_size)  # noqa: F405
    caf_field = Field(caf, FieldKind.caf, stride, image_size)  # noqa: F405
    return decode(cif_field, caf_field, skeleton, config or DecoderConfig())  # noqa: F405
