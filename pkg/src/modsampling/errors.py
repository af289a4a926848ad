class ModSamplingError(Exception):
    """ Base class of every error raised by the library"""


class ParameterError(ModSamplingError, ValueError):
    """ An argument or configuration value is outside its valid range"""


class DegenerateClusterError(ModSamplingError):
    """ A detected cluster starts on a zero filtered value, so its fold sign is undefined"""


class UnrecoverableTraceError(ModSamplingError):
    """ The low rate recovery found no anchor region of unfolded samples"""


class OutOfRegimeError(ModSamplingError):
    """ A bound was requested outside the regime where it holds"""


class EstimationError(ModSamplingError):
    """ The encoder parameters could not be estimated from the samples"""


class TraceFormatError(ModSamplingError):
    """ A trace or report file does not follow the expected format"""
    def __init__(self, message: str, line: int = None):
        """ Create a TraceFormatError object
        Args:
            message: what is wrong with the file
            line: the 1-based line number of the offending row, if known"""
        if line is not None:
            message = "line {}: {}".format(line, message)
        super().__init__(message)
        self.line = line
