from .build import Scene, build_scene
from .camera import Camera, Circle
from .config import (BandSpec, CameraSpec, FoldSpec, HandSpec, LightRig, OrbSpec, ReliefSpec,
                     SceneConfig, StrokeSpec)

__all__ = ["BandSpec", "Camera", "CameraSpec", "Circle", "FoldSpec", "HandSpec", "LightRig",
           "OrbSpec", "ReliefSpec", "Scene", "SceneConfig", "StrokeSpec", "build_scene"]
