from .measures import router as MeasuresRouter
from .rate import router as RateRouter
from .harness import router as HarnessRouter
from .gallery import router as GalleryRouter
from .verify import router as VerifyRouter
from .router import CommandContext, CommandRouter

__all__ = [
    "CommandContext",
    "CommandRouter",
    "GalleryRouter",
    "HarnessRouter",
    "MeasuresRouter",
    "RateRouter",
    "VerifyRouter",
]
