"""
File tools shared by the worker: image files and their sidecars.
"""

from .images import SaveImage, LoadImage, SaveSidecar, LoadSidecar, SaveTrackImages, LoadTrackImages

__all__ = [
    'SaveImage',
    'LoadImage',
    'SaveSidecar',
    'LoadSidecar',
    'SaveTrackImages',
    'LoadTrackImages'
]
