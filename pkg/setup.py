from setuptools import setup
from lpform.__about__ import __version__

setup(
    name='lpform',
    version=__version__,
    packages=[
        'lpform',
    ],
    package_data={
        'lpform': ['data/*.txt'],
    },
    install_requires=[
        'Click',
        'numpy',
        'scipy',
        'soundfile',
        'tabulate',
    ],
    python_requires='>=3.8',
    entry_points='''
        [console_scripts]
        lpform=lpform.cli:cli
    ''',
)
