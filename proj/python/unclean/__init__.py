"""Frequency-trigger backdoor research core (C++ bindings)."""

try:
    from unclean._unclean import *  # noqa: F401,F403  (installed layout)
    from unclean._unclean import (
        Classifier,
        ConfigError,
        DependencyError,
        Trigger,
    )
except ImportError:  # build-tree layout: extension next to the package on sys.path
    from _unclean import *  # noqa: F401,F403
    from _unclean import (
        Classifier,
        ConfigError,
        DependencyError,
        Trigger,
    )

__all__ = [
    "Classifier",
    "ConfigError",
    "DependencyError",
    "Trigger",
    "anomaly_scan",
    "architectures",
    "attack_success_rate",
    "build_plan",
    "dct2",
    "default_band",
    "evaluate",
    "frequency_mask",
    "idct2",
    "init_trigger",
    "load_dataset",
    "optimize_trigger",
    "poison_images",
    "random_trigger",
    "strategies",
    "unlearn",
]
