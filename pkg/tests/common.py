import os
import shutil
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np
from click.testing import CliRunner

from lpform import cli
from lpform.signal import SignalBuffer, SynthSpec, synthesize_vowel, write_wav

VOWEL_FORMANTS = ((500.0, 60.0), (1500.0, 90.0), (2500.0, 120.0))
OPEN_VOWEL_FORMANTS = ((700.0, 70.0), (1220.0, 90.0), (2600.0, 120.0))


class LpformCliRunner(CliRunner):
    """Invokes `cli` with a private `--config-dir`."""

    def __init__(self, cli, config_dir, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.cli = cli
        self.config_dir = config_dir

    def lpform_invoke(self, args=None, *pargs, **kwargs):
        lpform_args = ['--config-dir', self.config_dir]
        lpform_args.extend(str(arg) for arg in args or [])
        return self.invoke(self.cli, lpform_args, *pargs, **kwargs)


class LpformCase(TestCase):

    def setUp(self) -> None:
        super().setUp()
        self.orig_cwd = os.getcwd()
        self.tmp_dir = tempfile.mkdtemp()
        os.chdir(self.tmp_dir)
        self.tmp_config_dir = str(Path(self.tmp_dir) / 'config')
        self.runner = LpformCliRunner(cli.cli, self.tmp_config_dir)

    def tearDown(self) -> None:
        os.chdir(self.orig_cwd)
        try:
            shutil.rmtree(self.tmp_dir)
        except (OSError, IOError):
            pass
        super().tearDown()

    def path(self, name):
        return Path(self.tmp_dir) / name


def vowel(f0=100.0, duration_s=1.0, formants=VOWEL_FORMANTS, seed=0):
    return synthesize_vowel(SynthSpec(f0, formants, duration_s), seed=seed)


def silence(duration_s=0.5, sample_rate=8000):
    return SignalBuffer(np.zeros(int(duration_s * sample_rate)), sample_rate)


def save_wav(path, x):
    write_wav(path, x)
    return path
