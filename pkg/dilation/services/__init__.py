"""
Services package.
"""
from dilation.services.cascade_service import CascadeService
from dilation.services.correspond_service import CorrespondService
from dilation.services.export_service import ExportService
from dilation.services.mask_service import LoadedMask, MaskService
from dilation.services.refine_service import RefineService
from dilation.services.render_service import RasterSpec, RenderService
from dilation.services.transfer_service import TransferService
from dilation.services.verify_service import VerifyService

__all__ = [
    "CascadeService",
    "CorrespondService",
    "ExportService",
    "LoadedMask",
    "MaskService",
    "RefineService",
    "RasterSpec",
    "RenderService",
    "TransferService",
    "VerifyService",
]
