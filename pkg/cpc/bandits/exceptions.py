class BanditsError(Exception):
    def __init__(self, *args, **kwargs):
        """
        Custom Exception for the cpc.bandits package

        ### Parameters

        - message (string): Exception message
        - any keyword arguments are stored as attributes of the exception
        """
        self.__dict__.update(kwargs)
        Exception.__init__(self, *args)


class ConfigError(BanditsError):
    def __init__(self, message, key=None, *args, **kwargs):
        """
        Custom Exception for invalid experiment, command-line or config-file settings

        ### Parameters

        - message (string): Exception message
        - key (string): name of the offending setting (if known)
        """
        self.key = key
        BanditsError.__init__(self, message, *args, **kwargs)


class ConsistencyError(BanditsError):
    def __init__(self, message, arm=None, *args, **kwargs):
        """
        Custom Exception raised when internal policy state breaks an invariant

        ### Parameters

        - message (string): Exception message
        - arm (int): arm whose state is inconsistent (if known)
        """
        self.arm = arm
        BanditsError.__init__(self, message, *args, **kwargs)
