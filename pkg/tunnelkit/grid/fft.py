"""
FFT backend initialization and factory
"""
from typing import Optional

import numpy as np
import scipy.fft

from tunnelkit.config.config import FFT_BACKEND, PYFFTW_AVAILABLE, THREADS, logger


class FFTBackend:
    """N-dimensional complex transforms over the last `ndim` axes"""

    name = 'scipy'

    def __init__(self, threads: int = THREADS):
        self.threads = max(1, int(threads))

    def forward(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(values, workers=self.threads)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.ifftn(values, workers=self.threads)


class PyFFTWBackend(FFTBackend):
    """pyfftw interfaces with the plan cache enabled"""

    name = 'pyfftw'

    def __init__(self, threads: int = THREADS):
        super().__init__(threads)
        import pyfftw
        import pyfftw.interfaces.numpy_fft as fftw_numpy
        pyfftw.interfaces.cache.enable()
        self._fft = fftw_numpy

    def forward(self, values: np.ndarray) -> np.ndarray:
        return self._fft.fftn(values, threads=self.threads)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return self._fft.ifftn(values, threads=self.threads)


def initialize_fft_backend(name: Optional[str] = None, threads: Optional[int] = None) -> FFTBackend:
    """Return the requested backend, falling back to scipy.fft"""
    name = name or FFT_BACKEND
    threads = THREADS if threads is None else threads

    if name == 'pyfftw':
        if PYFFTW_AVAILABLE:
            try:
                backend = PyFFTWBackend(threads)
                logger.info(f"FFT backend: pyfftw with {backend.threads} threads")
                return backend
            except Exception as e:
                logger.warning(f"Failed to initialize pyfftw backend: {e}")
        else:
            logger.warning("pyfftw not available, falling back to scipy.fft")
    elif name != 'scipy':
        logger.warning(f"Unknown FFT backend '{name}', using scipy.fft")

    return FFTBackend(threads)
